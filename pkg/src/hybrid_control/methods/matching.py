"""Optimal 1:1 matching on a scalar score."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..model import InsufficientExternals


@dataclass(frozen=True)
class MatchResult:
    pairs: list[tuple[int, int]]
    total_distance: float

    @property
    def matched_external(self) -> np.ndarray:
        return np.array(sorted(e for _, e in self.pairs), dtype=np.int64)


@numba.njit(cache=True)
def _sorted_dp(a, b):
    # cost[j] after row i: best cost of matching treated 0..i within externals 0..j-1.
    # Order preservation confines treated i to externals i..i+(m-n).
    n, m = a.size, b.size
    slack = m - n
    take = np.zeros((n, slack + 1), dtype=np.bool_)
    prev = np.zeros(m + 1)
    cur = np.empty(m + 1)
    for i in range(n):
        cur[:] = np.inf
        best = np.inf
        for j in range(i, i + slack + 1):
            cand = prev[j] + abs(a[i] - b[j])
            if cand <= best:
                best = cand
                take[i, j - i] = True
            cur[j + 1] = best
        prev, cur = cur, prev
    pairs = np.empty((n, 2), dtype=np.int64)
    i, j = n - 1, m - 1
    while i >= 0:
        if j - i <= slack and take[i, j - i]:
            pairs[i, 0] = i
            pairs[i, 1] = j
            i -= 1
        j -= 1
    return prev[m], pairs


def match_optimal(treated_scores, external_scores) -> MatchResult:
    """Pair every treated subject with a distinct external subject.

    Minimizes the total absolute score difference. With scalar scores some
    optimal matching preserves order between the two sorted lists, so the
    assignment problem reduces to a dynamic program over the sorted scores
    (O(n (m - n + 1)) time).

    Pairs are (treated index, external index) into the inputs, ordered by
    treated index.
    """
    a = np.asarray(treated_scores, dtype=float)
    b = np.asarray(external_scores, dtype=float)
    n, m = a.size, b.size
    if m < n:
        raise InsufficientExternals(f"{n} treated subjects but only {m} externals to match")
    if n == 0:
        return MatchResult([], 0.0)
    ia = np.argsort(a, kind="stable")
    ib = np.argsort(b, kind="stable")
    total, sorted_pairs = _sorted_dp(a[ia], b[ib])
    pairs = sorted((int(ia[p]), int(ib[q])) for p, q in sorted_pairs)
    return MatchResult(pairs, float(total))
