"""Transmission order for placed PMUs from scaled singular vectors.

The B x B network matrix (DC Laplacian for topology placement, resistance
distance for electrical placement) is restricted to the placed buses. Slot n
goes to the bus with the largest entry of ``|sigma_n u_n|`` among buses that
have not yet been given a slot, taking singular vectors in decreasing order of
singular value.
"""

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SvdOrdering",
    "Schedule",
    "slot_boundaries",
    "scheduling_submatrix",
    "svd_ordering",
    "build_schedule",
    "truncate_schedule",
]

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SvdOrdering:
    singular_values: np.ndarray
    left_vectors: np.ndarray  # columns u_n
    right_vectors: np.ndarray  # columns v_n; kept for completeness, unused by the policy
    scaled_magnitudes: np.ndarray  # [i, n] = sigma_n * |u_n[i]|


@dataclass(frozen=True)
class Schedule:
    order: tuple[int, ...]
    source: str
    slot_boundaries: tuple[int, ...]

    @property
    def n_slots(self) -> int:
        return len(self.order)

    @property
    def frame_length(self) -> int:
        return self.slot_boundaries[-1]


def slot_boundaries(n_slots, T):
    """End time of each slot, ``round(n T / N)`` with halves rounded up."""
    if n_slots < 1 or T < n_slots:
        raise ValueError(f"need 1 <= N <= T, got N={n_slots}, T={T}")
    return tuple(int(np.floor(n * T / n_slots + 0.5)) for n in range(1, n_slots + 1))


def scheduling_submatrix(M, buses):
    """Rows and columns of ``M`` for ``buses`` (1-based), in ascending bus order."""
    M = np.asarray(M, dtype=float)
    idx = sorted(int(b) for b in buses)
    if not idx:
        raise ValueError("placement set is empty")
    bad = [b for b in idx if not 1 <= b <= M.shape[0]]
    if bad:
        raise IndexError(f"buses {bad} outside 1..{M.shape[0]}")
    sel = [b - 1 for b in idx]
    return M[np.ix_(sel, sel)]


def svd_ordering(sub) -> SvdOrdering:
    sub = np.asarray(sub, dtype=float)
    U, S, Vt = np.linalg.svd(sub)
    mags = np.abs(U) * S[None, :]
    # numpy already sorts S descending; settle exact-degenerate values by the
    # row of each column's largest entry so the result does not hinge on LAPACK
    scale = S[0] if S.size and S[0] > 0 else 1.0
    key_sigma = np.round(S / scale, 12)
    argmax_rows = np.argmax(np.abs(U), axis=0)
    perm = np.lexsort((argmax_rows, -key_sigma))
    return SvdOrdering(S[perm], U[:, perm], Vt.T[:, perm], mags[:, perm])


def build_schedule(ordering: SvdOrdering, buses, T, source="") -> Schedule:
    buses = sorted(int(b) for b in buses)
    N = len(buses)
    mags = ordering.scaled_magnitudes
    if mags.shape != (N, N):
        raise ValueError("ordering does not match the placement set")
    free = list(range(N))
    order = []
    for n in range(N):
        col = mags[free, n]
        best = col.max()
        # free is ascending, so the first near-maximal entry is the smallest bus id
        pick = free[int(np.flatnonzero(col >= best - _TIE_RTOL * max(best, 1e-300))[0])]
        order.append(buses[pick])
        free.remove(pick)
    return Schedule(tuple(order), source, slot_boundaries(N, T))


def truncate_schedule(schedule: Schedule, m) -> Schedule:
    """Keep the first ``m`` transmitters and re-split the frame into ``m`` slots."""
    if not 1 <= m <= schedule.n_slots:
        raise ValueError(f"m must be in 1..{schedule.n_slots}, got {m}")
    return replace(schedule, order=schedule.order[:m],
                   slot_boundaries=slot_boundaries(m, schedule.frame_length))
