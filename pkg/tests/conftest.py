import numpy as np
import pytest

from pmusched.network import PowerNetwork, load_case

_ACCEPTANCE = []


def record_acceptance(name, ok, detail):
    _ACCEPTANCE.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def random_connected_network(rng, B, extra=None, xlo=0.05, xhi=0.5):
    """Random spanning tree plus a few extra branches, random reactances."""
    edges = set()
    perm = rng.permutation(B) + 1
    for n in range(1, B):
        a = int(perm[n])
        b = int(perm[rng.integers(n)])
        edges.add((max(a, b), min(a, b)))
    if extra is None:
        extra = int(rng.integers(0, B + 1))
    for _ in range(extra):
        a, b = rng.choice(B, size=2, replace=False) + 1
        edges.add((int(max(a, b)), int(min(a, b))))
    edges = sorted(edges)
    xs = rng.uniform(xlo, xhi, size=len(edges))
    return PowerNetwork.from_edges(B, [(i, j, x) for (i, j), x in zip(edges, xs)])


@pytest.fixture(scope="session")
def net14():
    return load_case("case14")


@pytest.fixture
def path3():
    return PowerNetwork.from_edges(3, [(2, 1, 0.5), (3, 2, 0.25)])


@pytest.fixture
def triangle():
    return PowerNetwork.from_edges(3, [(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
