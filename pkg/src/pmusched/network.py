"""Power network model and the DC matrices built from it.

A network is read from a small YAML case document::

    buses: [1, 2, 3]
    branches:
      - {from: 1, to: 2, x: 0.5}
      - {from: 2, to: 3, x: 0.25, r: 0.01}

Bus ids must be exactly ``1..B``. Only the series reactance ``x`` enters the
lossless DC model; ``r`` and any shunt fields are accepted and ignored.
Branches are stored with ``from_bus > to_bus`` so the incidence matrix carries
its ``+1`` at the larger bus index.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

__all__ = [
    "Branch",
    "PowerNetwork",
    "CaseFormatError",
    "NetworkValidationError",
    "parse_case",
    "load_case",
    "case_path",
    "serialize_case",
    "write_case",
    "case_checksum",
    "build_incidence",
    "nominal_susceptance",
    "dc_laplacian",
    "topological_connectivity",
]

_IGNORED_BRANCH_FIELDS = {"r", "b", "g", "rateA", "tap", "shift", "status"}


class CaseFormatError(ValueError):
    """Case document is malformed (bad YAML, missing or mistyped fields)."""


class NetworkValidationError(ValueError):
    """Case document parses but does not describe a valid DC network."""


@dataclass(frozen=True)
class Branch:
    index: int  # 1-based, file order
    from_bus: int  # larger endpoint
    to_bus: int  # smaller endpoint
    x: float


@dataclass(frozen=True)
class PowerNetwork:
    bus_count: int
    branches: tuple[Branch, ...]
    name: str = ""

    def __post_init__(self):
        _validate(self.bus_count, self.branches)

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    @property
    def reactances(self) -> np.ndarray:
        return np.array([br.x for br in self.branches], dtype=float)

    def neighbors(self, bus: int) -> list[int]:
        """Buses sharing a branch with ``bus``, ascending."""
        out = set()
        for br in self.branches:
            if br.from_bus == bus:
                out.add(br.to_bus)
            elif br.to_bus == bus:
                out.add(br.from_bus)
        return sorted(out)

    def incident_branches(self, bus: int) -> list[int]:
        """0-based indices of the branches touching ``bus``."""
        return [k for k, br in enumerate(self.branches) if bus in (br.from_bus, br.to_bus)]

    @classmethod
    def from_edges(cls, bus_count: int, edges, name: str = "") -> PowerNetwork:
        """Build from ``(i, j, x)`` triples in any orientation."""
        branches = []
        for k, (i, j, x) in enumerate(edges, start=1):
            i, j = int(i), int(j)
            branches.append(Branch(k, max(i, j), min(i, j), float(x)))
        return cls(int(bus_count), tuple(branches), name)


def _validate(bus_count, branches):
    if bus_count < 1:
        raise NetworkValidationError("network needs at least one bus")
    seen = set()
    for br in branches:
        if br.from_bus == br.to_bus:
            raise NetworkValidationError(
                f"branch {br.index}: self-loop at bus {br.from_bus}")
        for b in (br.from_bus, br.to_bus):
            if not 1 <= b <= bus_count:
                raise NetworkValidationError(
                    f"branch {br.index}: bus {b} outside 1..{bus_count}")
        if br.from_bus < br.to_bus:
            raise NetworkValidationError(
                f"branch {br.index}: orientation must have from_bus > to_bus")
        if not (np.isfinite(br.x) and br.x > 0):
            raise NetworkValidationError(
                f"branch {br.index}: reactance must be positive, got {br.x}")
        pair = (br.from_bus, br.to_bus)
        if pair in seen:
            raise NetworkValidationError(
                f"branch {br.index}: duplicate branch between buses {pair[1]} and {pair[0]}")
        seen.add(pair)

    # connectivity by union-find
    parent = list(range(bus_count + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for br in branches:
        parent[find(br.from_bus)] = find(br.to_bus)
    roots = {find(b) for b in range(1, bus_count + 1)}
    if len(roots) > 1:
        isolated = sorted(b for b in range(1, bus_count + 1) if find(b) != find(1))
        raise NetworkValidationError(
            f"network is disconnected; buses not reachable from bus 1: {isolated}")


def _field_error(where, msg):
    return CaseFormatError(f"{where}: {msg}")


def _parse_document(doc, source) -> PowerNetwork:
    if not isinstance(doc, dict):
        raise CaseFormatError(f"{source}: top level must be a mapping")
    for key in ("buses", "branches"):
        if key not in doc:
            raise CaseFormatError(f"{source}: missing field '{key}'")
    buses = doc["buses"]
    if not isinstance(buses, list) or not all(isinstance(b, int) for b in buses):
        raise CaseFormatError(f"{source}: field 'buses' must be a list of integers")
    if sorted(buses) != list(range(1, len(buses) + 1)):
        raise NetworkValidationError(f"{source}: bus ids must be exactly 1..{len(buses)}")
    raw = doc["branches"]
    if not isinstance(raw, list):
        raise CaseFormatError(f"{source}: field 'branches' must be a list")

    edges = []
    for k, entry in enumerate(raw, start=1):
        where = f"{source}: branches[{k}]"
        if not isinstance(entry, dict):
            raise _field_error(where, "expected a mapping with from/to/x")
        for key in ("from", "to", "x"):
            if key not in entry:
                raise _field_error(where, f"missing field '{key}'")
        unknown = set(entry) - {"from", "to", "x"} - _IGNORED_BRANCH_FIELDS
        if unknown:
            raise _field_error(where, f"unknown field(s) {sorted(unknown)}")
        i, j, x = entry["from"], entry["to"], entry["x"]
        if not isinstance(i, int) or not isinstance(j, int):
            raise _field_error(where, "'from' and 'to' must be integers")
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise _field_error(where, "'x' must be a number")
        edges.append((i, j, float(x)))
    try:
        return PowerNetwork.from_edges(len(buses), edges, name=str(doc.get("name", "")))
    except NetworkValidationError as exc:
        raise NetworkValidationError(f"{source}: {exc}") from None


def parse_case(path) -> PowerNetwork:
    """Read and validate a case file."""
    path = Path(path)
    text = path.read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}" if mark is not None else "unknown position"
        raise CaseFormatError(f"{path}: YAML error at {loc}: {exc}") from None
    return _parse_document(doc, str(path))


def case_path(name_or_path) -> Path:
    """Resolve a shipped fixture name (``"case14"``) or a filesystem path."""
    p = Path(name_or_path)
    if p.exists():
        return p
    fixture = resources.files("pmusched.cases").joinpath(f"{name_or_path}.yaml")
    if fixture.is_file():
        return Path(str(fixture))
    raise FileNotFoundError(f"no case file or shipped fixture named {name_or_path!r}")


def load_case(name_or_path) -> PowerNetwork:
    return parse_case(case_path(name_or_path))


def case_checksum(name_or_path) -> str:
    return hashlib.sha256(case_path(name_or_path).read_bytes()).hexdigest()


def serialize_case(net: PowerNetwork) -> str:
    doc = {
        "buses": list(range(1, net.bus_count + 1)),
        "branches": [{"from": br.from_bus, "to": br.to_bus, "x": br.x} for br in net.branches],
    }
    if net.name:
        doc = {"name": net.name, **doc}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def write_case(net: PowerNetwork, path) -> None:
    Path(path).write_text(serialize_case(net))


def build_incidence(net: PowerNetwork) -> np.ndarray:
    """K x B branch-bus incidence: +1 at the larger bus, -1 at the smaller."""
    D = np.zeros((net.branch_count, net.bus_count))
    for k, br in enumerate(net.branches):
        D[k, br.from_bus - 1] = 1.0
        D[k, br.to_bus - 1] = -1.0
    return D


def nominal_susceptance(net: PowerNetwork) -> np.ndarray:
    """Lossless DC branch susceptances 1/x."""
    return 1.0 / net.reactances


def dc_laplacian(net: PowerNetwork, s) -> np.ndarray:
    """Weighted Laplacian D^T diag(s) D, i.e. dP/dtheta of the DC model."""
    s = np.asarray(s, dtype=float)
    if s.shape != (net.branch_count,):
        raise ValueError(f"susceptance vector must have length {net.branch_count}")
    L = np.zeros((net.bus_count, net.bus_count))
    for sk, br in zip(s, net.branches):
        i, j = br.from_bus - 1, br.to_bus - 1
        L[i, i] += sk
        L[j, j] += sk
        L[i, j] -= sk
        L[j, i] -= sk
    return L


def topological_connectivity(net: PowerNetwork) -> np.ndarray:
    """Binary B x B matrix: 1 on the diagonal and between branch endpoints."""
    C = np.eye(net.bus_count, dtype=int)
    for br in net.branches:
        i, j = br.from_bus - 1, br.to_bus - 1
        C[i, j] = C[j, i] = 1
    return C
