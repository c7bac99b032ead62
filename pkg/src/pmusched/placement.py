"""Exact minimum PMU placement for complete observability.

Solves ``min sum(d)`` subject to ``C d >= 1`` with ``d`` binary, where
``C`` is a binary connectivity matrix with unit diagonal. The solver works on
bitmasks: first a branch-and-bound over uncovered rows finds the optimal
count, then an include-first depth-first pass with the same bounds returns the
lexicographically smallest cover of that size.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["InfeasiblePlacementError", "PlacementSolution", "solve_placement", "verify_coverage"]


class InfeasiblePlacementError(ValueError):
    pass


@dataclass(frozen=True)
class PlacementSolution:
    decision: np.ndarray
    pmu_buses: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.pmu_buses)


def verify_coverage(C, d) -> bool:
    """True when every bus is observed by at least one PMU (``C d >= 1``)."""
    C = np.asarray(C)
    d = np.asarray(d)
    if C.shape[1] != d.shape[0]:
        raise ValueError("dimension mismatch between C and d")
    return bool(np.all(C @ d >= 1))


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class _CoverProblem:
    def __init__(self, C):
        C = np.asarray(C)
        B = C.shape[0]
        self.B = B
        self.full = (1 << B) - 1
        # cols[j]: rows covered by a PMU at j; rows[i]: columns able to cover row i
        self.cols = [sum(1 << i for i in range(B) if C[i, j]) for j in range(B)]
        self.rows = [sum(1 << j for j in range(B) if C[i, j]) for i in range(B)]
        empty = [i + 1 for i in range(B) if self.rows[i] == 0]
        if empty:
            raise InfeasiblePlacementError(f"buses {empty} cannot be observed by any PMU")

    def lower_bound(self, uncovered, allowed):
        """Greedy set of uncovered rows with pairwise disjoint candidate columns."""
        bound = 0
        used = 0
        # rows with fewest candidates first make the packing larger
        cand = sorted(((self.rows[i] & allowed).bit_count(), i) for i in _bits(uncovered))
        for _, i in cand:
            c = self.rows[i] & allowed
            if c & used == 0:
                used |= c
                bound += 1
        return bound

    def greedy(self):
        covered, chosen = 0, []
        while covered != self.full:
            j = max(range(self.B), key=lambda j: ((self.cols[j] & ~covered).bit_count(), -j))
            chosen.append(j)
            covered |= self.cols[j]
        return chosen

    def min_count(self):
        best = [len(self.greedy())]

        def search(covered, depth):
            uncovered = self.full & ~covered
            if uncovered == 0:
                best[0] = min(best[0], depth)
                return
            if depth + self.lower_bound(uncovered, self.full) >= best[0]:
                return
            # branch on the hardest row: one of its candidates must be chosen
            i = min(_bits(uncovered), key=lambda i: self.rows[i].bit_count())
            opts = sorted(_bits(self.rows[i]),
                          key=lambda j: -(self.cols[j] & uncovered).bit_count())
            for j in opts:
                search(covered | self.cols[j], depth + 1)

        search(0, 0)
        return best[0]

    def lex_smallest(self, budget):
        B = self.B

        def search(j, covered, chosen):
            uncovered = self.full & ~covered
            if uncovered == 0:
                return chosen
            if j >= B or len(chosen) >= budget:
                return None
            allowed = self.full & ~((1 << j) - 1)
            for i in _bits(uncovered):
                if self.rows[i] & allowed == 0:
                    return None
            if len(chosen) + self.lower_bound(uncovered, allowed) > budget:
                return None
            found = search(j + 1, covered | self.cols[j], chosen + [j])
            if found is not None:
                return found
            return search(j + 1, covered, chosen)

        return search(0, 0, [])


def solve_placement(C) -> PlacementSolution:
    """Minimum-cardinality cover of ``C``; ties go to the smallest sorted bus list."""
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("connectivity matrix must be square")
    prob = _CoverProblem(C)
    n = prob.min_count()
    chosen = prob.lex_smallest(n)
    assert chosen is not None and len(chosen) == n
    d = np.zeros(prob.B, dtype=int)
    d[chosen] = 1
    return PlacementSolution(d, tuple(j + 1 for j in chosen))
