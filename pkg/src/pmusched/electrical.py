"""Resistance distance and the electrical-structure connectivity matrix.

The resistance distance between buses i and j is the voltage difference seen
when a unit current is injected at i and withdrawn at j. It is obtained by
grounding one reference bus, inverting the remaining block of the Laplacian,
and combining diagonal and off-diagonal entries of that inverse.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularNetworkError",
    "TieError",
    "ResistanceDistanceMatrix",
    "ElectricalAdjacency",
    "grounded_inverse",
    "resistance_distance",
    "electrical_connectivity",
]

MAX_CONDITION = 1e12


class SingularNetworkError(np.linalg.LinAlgError):
    """Grounded Laplacian block is singular (disconnected or degenerate network)."""


class TieError(ValueError):
    """Equal distances straddle the K-th cut, so the K smallest pairs are ambiguous."""

    def __init__(self, msg, pairs):
        super().__init__(msg)
        self.pairs = pairs


@dataclass(frozen=True)
class ResistanceDistanceMatrix:
    entries: np.ndarray
    reference_bus: int


@dataclass(frozen=True)
class ElectricalAdjacency:
    matrix: np.ndarray
    lam: float


def _others(B, r):
    if not 1 <= r <= B:
        raise IndexError(f"reference bus {r} outside 1..{B}")
    return [i for i in range(B) if i != r - 1]


def grounded_inverse(G, r=1):
    """Inverse of ``G`` with row and column ``r`` (1-based) removed.

    Raises SingularNetworkError when the reduced block has condition number
    above ``MAX_CONDITION``.
    """
    G = np.asarray(G, dtype=float)
    keep = _others(G.shape[0], r)
    Gkk = G[np.ix_(keep, keep)]
    if Gkk.size == 0:
        return np.zeros((0, 0))
    cond = np.linalg.cond(Gkk)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularNetworkError(
            f"grounded Laplacian (reference bus {r}) has condition number {cond:.3g}; "
            "network is disconnected or degenerate")
    Ginv = np.linalg.solve(Gkk, np.eye(len(keep)))
    return 0.5 * (Ginv + Ginv.T)


def resistance_distance(G, r=1) -> ResistanceDistanceMatrix:
    """Full B x B resistance-distance matrix from the Laplacian ``G``.

    Rows and columns for non-reference buses combine the grounded inverse as
    ``g_ii + g_jj - g_ij - g_ji``; the reference row and column are the
    diagonal of that inverse (distance to a grounded bus).
    """
    G = np.asarray(G, dtype=float)
    B = G.shape[0]
    keep = _others(B, r)
    Ginv = grounded_inverse(G, r)
    gamma = np.diag(Ginv)
    E = np.zeros((B, B))
    E[np.ix_(keep, keep)] = gamma[None, :] + gamma[:, None] - Ginv - Ginv.T
    E[r - 1, keep] = gamma
    E[keep, r - 1] = gamma
    np.fill_diagonal(E, 0.0)
    return ResistanceDistanceMatrix(E, r)


def electrical_connectivity(E, K, resolve_ties=False) -> ElectricalAdjacency:
    """Connect the ``K`` bus pairs with the smallest resistance distance.

    ``lam`` is the midpoint between the K-th and (K+1)-th smallest distances,
    so every connected pair satisfies ``e < lam``. A unit diagonal is added so
    the matrix can be fed straight to the placement solver.

    Equal distances on both sides of the cut raise TieError unless
    ``resolve_ties`` is set, in which case lexicographically smaller pairs win.
    """
    if isinstance(E, ResistanceDistanceMatrix):
        E = E.entries
    E = np.asarray(E, dtype=float)
    B = E.shape[0]
    iu, ju = np.triu_indices(B, 1)
    m = len(iu)
    if not 0 <= K <= m:
        raise ValueError(f"K={K} outside 0..{m} for {B} buses")
    vals = E[iu, ju]
    # lexsort keys: last is primary
    order = np.lexsort((ju, iu, vals))
    svals = vals[order]

    if 0 < K < m:
        cut_lo, cut_hi = svals[K - 1], svals[K]
        if np.isclose(cut_lo, cut_hi, rtol=1e-12, atol=0.0) and not resolve_ties:
            tied = np.isclose(vals, cut_lo, rtol=1e-12, atol=0.0)
            pairs = [(int(i) + 1, int(j) + 1) for i, j in zip(iu[tied], ju[tied])]
            raise TieError(
                f"{len(pairs)} pairs share distance {cut_lo:.6g} across the K={K} cut: {pairs}",
                pairs)
        lam = 0.5 * (cut_lo + cut_hi)
    elif K == m:
        # no (K+1)-th value; any lam above the largest distance works
        lam = 2.0 * svals[-1] if m else 0.0
    else:
        lam = 0.5 * svals[0] if m else 0.0

    C = np.eye(B, dtype=int)
    chosen = order[:K]
    C[iu[chosen], ju[chosen]] = 1
    C[ju[chosen], iu[chosen]] = 1
    return ElectricalAdjacency(C, float(lam))
