"""Linear assignment (Kuhn-Munkres) and the helpers built on it.

``solve_assignment`` handles rectangular matrices by zero-padding to a square
problem. Among all optimal matchings it returns the one whose row-sorted pair
list is lexicographically smallest, so results never depend on the internal
search order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numba
import numpy as np

from .geometry import SimilarityTransform, icp_register, normalize_axes

__all__ = [
    "AssignmentResult",
    "solve_assignment",
    "ignore_false_positives",
    "adaptive_ignore",
    "prune_to_player_count",
]


@dataclass
class AssignmentResult:
    pairs: list[tuple[int, int]]
    total_cost: float
    unassigned_rows: list[int]
    unassigned_cols: list[int]
    # rows/cols matched to dummy padding by ``adaptive_ignore``
    ignored: list[int] = field(default_factory=list)

    def row_to_col(self) -> dict[int, int]:
        return dict(self.pairs)


@numba.njit(cache=True)
def _hungarian_square(a):
    # Shortest augmenting path with potentials; 1-based bookkeeping, slot 0
    # is the virtual root column.
    n = a.shape[0]
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = -1
            for j in range(1, n + 1):
                if not used[j]:
                    cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


@numba.njit(cache=True)
def _lex_canonical(a, u, v, row_to_col, tol):
    # Every optimal matching uses only tight edges of an optimal dual, so the
    # lexicographically smallest optimal matching is the lexicographically
    # smallest perfect matching of the tight graph. Fix rows greedily.
    n = a.shape[0]
    tight = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            tight[i, j] = abs(a[i, j] - u[i] - v[j]) <= tol
    col_owner = np.empty(n, dtype=np.int64)
    for i in range(n):
        col_owner[row_to_col[i]] = i
    stack_rows = np.empty(n, dtype=np.int64)
    stack_next = np.empty(n, dtype=np.int64)
    parent_col = np.empty(n, dtype=np.int64)
    for i in range(n):
        old = row_to_col[i]
        for c in range(old):
            if not tight[i, c]:
                continue
            r = col_owner[c]
            if r < i:
                continue
            # Search an alternating path r -> ... -> old through rows > i,
            # never touching column c.
            visited = np.zeros(n, dtype=np.bool_)
            visited[c] = True
            depth = 0
            stack_rows[0] = r
            stack_next[0] = 0
            found = False
            while depth >= 0:
                row = stack_rows[depth]
                advanced = False
                while stack_next[depth] < n:
                    cc = stack_next[depth]
                    stack_next[depth] += 1
                    if visited[cc] or not tight[row, cc]:
                        continue
                    visited[cc] = True
                    parent_col[depth] = cc
                    if cc == old:
                        found = True
                        break
                    owner = col_owner[cc]
                    if owner <= i:
                        continue
                    depth += 1
                    stack_rows[depth] = owner
                    stack_next[depth] = 0
                    advanced = True
                    break
                if found:
                    break
                if not advanced:
                    depth -= 1
            if not found:
                continue
            for d in range(depth + 1):
                row = stack_rows[d]
                cc = parent_col[d]
                row_to_col[row] = cc
                col_owner[cc] = row
            row_to_col[i] = c
            col_owner[c] = i
            break
    return row_to_col


def _as_cost(c) -> np.ndarray:
    arr = np.asarray(c, dtype=np.float64)
    if arr.ndim != 2:
        if arr.size == 0:
            return arr.reshape(0, 0)
        raise ValueError(f"cost matrix must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("cost matrix entries must be finite")
    return arr


def solve_assignment(c) -> AssignmentResult:
    """Minimum-cost maximum matching of a (possibly rectangular) cost matrix."""
    cost = _as_cost(c)
    rows, cols = cost.shape
    if rows == 0 or cols == 0:
        return AssignmentResult([], 0.0, list(range(rows)), list(range(cols)))
    n = max(rows, cols)
    sq = np.zeros((n, n))
    sq[:rows, :cols] = cost
    row_to_col, u, v = _hungarian_square(sq)
    tol = 1e-9 * max(1.0, float(np.abs(sq).max()))
    row_to_col = _lex_canonical(sq, u, v, row_to_col, tol)
    pairs = [(i, int(row_to_col[i])) for i in range(rows) if row_to_col[i] < cols]
    total = 0.0
    for i, j in pairs:
        total += float(cost[i, j])
    used_cols = {j for _, j in pairs}
    used_rows = {i for i, _ in pairs}
    return AssignmentResult(
        pairs=pairs,
        total_cost=total,
        unassigned_rows=[i for i in range(rows) if i not in used_rows],
        unassigned_cols=[j for j in range(cols) if j not in used_cols],
    )


def ignore_false_positives(c, n_ignore: int, axis: int = 0) -> np.ndarray:
    """Append ``n_ignore`` all-zero dummy rows (axis=0) or columns (axis=1).

    With players as rows and detections as columns, each dummy row lets one
    detection be discarded at zero cost.
    """
    if n_ignore < 0:
        raise ValueError(f"n_ignore must be >= 0, got {n_ignore}")
    cost = _as_cost(c)
    if n_ignore == 0:
        return cost.copy()
    if axis == 0:
        return np.vstack([cost, np.zeros((n_ignore, cost.shape[1]))])
    if axis == 1:
        return np.hstack([cost, np.zeros((cost.shape[0], n_ignore))])
    raise ValueError(f"axis must be 0 or 1, got {axis}")


def _strip_dummies(res: AssignmentResult, rows: int, cols: int, axis: int) -> AssignmentResult:
    if axis == 0:
        real = [(i, j) for i, j in res.pairs if i < rows]
        ignored = sorted(j for i, j in res.pairs if i >= rows)
    else:
        real = [(i, j) for i, j in res.pairs if j < cols]
        ignored = sorted(i for i, j in res.pairs if j >= cols)
    used_r = {i for i, _ in real}
    used_c = {j for _, j in real}
    return AssignmentResult(
        pairs=real,
        total_cost=res.total_cost,
        unassigned_rows=[i for i in range(rows) if i not in used_r],
        unassigned_cols=[j for j in range(cols) if j not in used_c],
        ignored=ignored,
    )


def adaptive_ignore(
    c,
    improvement_threshold: float = 10.0,
    axis: int = 0,
    max_ignore: Optional[int] = None,
    costs_out: Optional[list] = None,
) -> tuple[AssignmentResult, int]:
    """Grow the dummy count while each extra dummy saves at least the threshold.

    Returns the assignment at the first count whose increment was rejected,
    with dummy matches stripped out and listed in ``ignored``.
    """
    if improvement_threshold <= 0:
        raise ValueError("improvement_threshold must be positive")
    cost = _as_cost(c)
    rows, cols = cost.shape
    limit = (cols if axis == 0 else rows) if max_ignore is None else max_ignore
    n = 0
    current = solve_assignment(cost)
    if costs_out is not None:
        costs_out.append(current.total_cost)
    while n < limit:
        nxt = solve_assignment(ignore_false_positives(cost, n + 1, axis))
        if costs_out is not None:
            costs_out.append(nxt.total_cost)
        if nxt.total_cost <= current.total_cost - improvement_threshold:
            n += 1
            current = nxt
        else:
            break
    return _strip_dummies(current, rows, cols, axis), n


def _extreme_indices(pts: np.ndarray, alive: Sequence[int]) -> list[int]:
    idx = np.asarray(alive)
    sub = pts[idx]
    picks = [
        idx[int(np.argmin(sub[:, 0]))],
        idx[int(np.argmax(sub[:, 0]))],
        idx[int(np.argmin(sub[:, 1]))],
        idx[int(np.argmax(sub[:, 1]))],
    ]
    out = []
    for p in picks:
        if int(p) not in out:
            out.append(int(p))
    return out


def removal_candidates(pts: np.ndarray, k: int) -> list[tuple[int, ...]]:
    """All index sets reachable by removing one directional extreme k times."""
    frontier = {tuple(range(len(pts)))}
    for _ in range(k):
        nxt = set()
        for alive in frontier:
            for e in _extreme_indices(pts, alive):
                nxt.add(tuple(i for i in alive if i != e))
        frontier = nxt
    return sorted(frontier)


def _default_candidate_cost(cand: np.ndarray, det: np.ndarray) -> float:
    a, _ = normalize_axes(cand)
    b, _ = normalize_axes(det)
    t, _, _ = icp_register(b, a, SimilarityTransform.identity())[:3]
    moved = t.apply(b)
    d = np.linalg.norm(moved[:, None, :] - a[None, :, :], axis=2)
    return solve_assignment(d).total_cost


def prune_to_player_count(
    track_points: Sequence[tuple[object, tuple[float, float]]],
    n_keep: int,
    det_points,
    cost_fn: Optional[Callable[[np.ndarray, np.ndarray], float]] = None,
    max_removals: int = 4,
) -> list:
    """Cut players off the four edges of the formation until ``n_keep`` remain.

    Every removal sequence taking one left/right/top/bottom extreme per step
    is a candidate; the candidate whose registered assignment cost against
    ``det_points`` is smallest wins (lowest candidate index on ties).
    """
    m = len(track_points)
    if n_keep > m:
        raise ValueError(f"n_keep={n_keep} exceeds the {m} available players")
    if n_keep < 1:
        raise ValueError("n_keep must be >= 1")
    if n_keep == m:
        return list(track_points)
    k = m - n_keep
    if k > max_removals:
        raise ValueError(f"{k} removals exceed max_removals={max_removals}")
    pts = np.array([p for _, p in track_points], dtype=float)
    det = np.asarray(det_points, dtype=float)
    score = cost_fn or _default_candidate_cost
    best, best_cost = None, np.inf
    for cand in removal_candidates(pts, k):
        cost = score(pts[list(cand)], det)
        if cost < best_cost:
            best, best_cost = cand, cost
    return [track_points[i] for i in best]

