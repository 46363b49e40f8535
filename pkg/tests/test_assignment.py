import itertools
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linear_sum_assignment

from helmetid.assignment import (
    adaptive_ignore,
    ignore_false_positives,
    prune_to_player_count,
    removal_candidates,
    solve_assignment,
)
from helmetid.assignment import _default_candidate_cost
from oracles import brute_force_assignment


def small_matrices(max_side=6, integer=False):
    shapes = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    elements = st.integers(0, 9).map(float) if integer else st.floats(-100, 100, allow_nan=False, width=32)
    return shapes.flatmap(lambda s: arrays(np.float64, s, elements=elements))


def _pairs_valid(res, shape):
    rows = [i for i, _ in res.pairs]
    cols = [j for _, j in res.pairs]
    assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
    assert len(res.pairs) == min(shape)


@given(small_matrices())
def test_matches_brute_force(c):
    res = solve_assignment(c)
    best, _ = brute_force_assignment(c)
    _pairs_valid(res, c.shape)
    assert res.total_cost == pytest.approx(best, abs=1e-9)


@given(small_matrices(integer=True))
def test_ties_resolve_lexicographically(c):
    # the smallest row-ordered pair list among all optimal matchings
    res = solve_assignment(c)
    rows, cols = c.shape
    best, best_pairs = None, None
    if rows <= cols:
        for perm in itertools.permutations(range(cols), rows):
            total = sum(c[i, perm[i]] for i in range(rows))
            pairs = [(i, perm[i]) for i in range(rows)]
            if best is None or total < best or (total == best and pairs < best_pairs):
                best, best_pairs = total, pairs
        assert res.pairs == best_pairs


@given(small_matrices(), st.data())
def test_row_shift_keeps_pairing(c, data):
    i = data.draw(st.integers(0, c.shape[0] - 1))
    k = data.draw(st.integers(-50, 50))
    if c.shape[0] > c.shape[1]:
        return  # a row may go unmatched, so a shift can change which one
    shifted = c.copy()
    shifted[i] += k
    assert solve_assignment(shifted).pairs == solve_assignment(c).pairs


@given(small_matrices(integer=True))
def test_transpose_transposes_pairing(c):
    a = solve_assignment(c)
    b = solve_assignment(c.T)
    assert a.total_cost == pytest.approx(b.total_cost)
    assert brute_force_assignment(c)[0] == pytest.approx(b.total_cost)
    # with distinct optimal matchings the transposed pairing is unique
    flat = np.random.default_rng(0).permutation(c.size).reshape(c.shape).astype(float)
    assert sorted((j, i) for i, j in solve_assignment(flat).pairs) == sorted(solve_assignment(flat.T).pairs)


def test_agrees_with_scipy_on_larger_matrices():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c = rng.uniform(0, 100, size=(rng.integers(5, 30), rng.integers(5, 30)))
        r, k = linear_sum_assignment(c)
        assert solve_assignment(c).total_cost == pytest.approx(c[r, k].sum(), rel=1e-12)


def test_empty_and_invalid():
    assert solve_assignment(np.zeros((0, 3))).pairs == []
    with pytest.raises(ValueError):
        solve_assignment([[1.0, np.inf]])
    with pytest.raises(ValueError):
        solve_assignment([1.0, 2.0])


def test_unassigned_bookkeeping():
    res = solve_assignment([[1, 2, 3], [3, 2, 1]])
    assert res.pairs == [(0, 0), (1, 2)]
    assert res.unassigned_cols == [1] and res.unassigned_rows == []


def test_ignore_false_positives_construction():
    c = np.arange(6, dtype=float).reshape(2, 3)
    assert np.array_equal(ignore_false_positives(c, 0), c)
    out = ignore_false_positives(c, 1)
    assert out.shape == (3, 3) and np.all(out[2] == 0) and np.array_equal(out[:2], c)
    assert ignore_false_positives(c, 2, axis=1).shape == (2, 5)
    with pytest.raises(ValueError):
        ignore_false_positives(c, -1)


# costs frozen from the brute-force oracle on the augmented matrices:
# n=0 -> 102, n=1 -> 2, n=2 -> 1
FAR_DET = np.array([[1, 5, 100], [5, 1, 100], [5, 5, 100.0]])


def test_far_detection_goes_to_dummy():
    res = solve_assignment(ignore_false_positives(FAR_DET, 1))
    assert (3, 2) in res.pairs
    assert brute_force_assignment(ignore_false_positives(FAR_DET, 1))[0] == 2.0


def test_adaptive_ignore_examples():
    costs = []
    res, n = adaptive_ignore(FAR_DET, 10, costs_out=costs)
    assert n == 1 and costs == [102.0, 2.0, 1.0]
    assert res.ignored == [2] and res.pairs == [(0, 0), (1, 1)]
    # drops of 12 then 3 with threshold 10
    costs = []
    _, n = adaptive_ignore(np.array([[12, 50], [50, 3.0]]), 10, costs_out=costs)
    assert n == 1 and costs == [15.0, 3.0, 0.0]
    _, n = adaptive_ignore(np.array([[1, 9], [9, 2.0]]), 10)
    assert n == 0


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(0, 50)))
def test_ignore_cost_sequence_non_increasing(c):
    costs = [solve_assignment(ignore_false_positives(c, n)).total_cost for n in range(c.shape[1] + 1)]
    assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))


def test_solver_speed_budget():
    rng = np.random.default_rng(2)
    mats = [rng.uniform(0, 1, size=(22, 23)) for _ in range(500)]
    solve_assignment(mats[0])
    t = time.perf_counter()
    for m in mats:
        solve_assignment(m)
    assert time.perf_counter() - t < 2.0


def test_prune_identity_when_nothing_to_remove():
    pts = [(i, (float(i), float(i % 3))) for i in range(5)]
    assert prune_to_player_count(pts, 5, [p for _, p in pts]) == pts
    with pytest.raises(ValueError):
        prune_to_player_count(pts, 6, [])


def test_prune_drops_far_stragglers():
    rng = np.random.default_rng(0)
    grid = [(float(x), float(y)) for x in range(0, 30, 5) for y in range(0, 20, 5)][:22]
    players = [(i, p) for i, p in enumerate(grid)] + [(22, (80.0, 10.0)), (23, (-50.0, 7.0))]
    dets = [(2 * x + 100 + rng.normal(0, 0.1), -2 * y + 300) for x, y in grid]
    kept = {lbl for lbl, _ in prune_to_player_count(players, 22, dets)}
    assert kept == set(range(22))


def test_prune_line_picks_cheaper_endpoint():
    xs = [float(i) ** 1.5 for i in range(23)]
    pts = [(i, (x, 0.0)) for i, x in enumerate(xs)]
    dets = [(3 * x + 5.0, 2.0) for x in xs[1:]]
    without_first = _default_candidate_cost(np.array([p for _, p in pts[1:]]), np.array(dets))
    without_last = _default_candidate_cost(np.array([p for _, p in pts[:-1]]), np.array(dets))
    assert without_first < 1e-9 < 0.29 < without_last
    kept = {lbl for lbl, _ in prune_to_player_count(pts, 22, dets)}
    assert kept == set(range(1, 23))


def test_removal_candidates_only_take_extremes():
    pts = np.array([[0, 0], [1, 5], [2, 2], [3, 3], [9, 1]], dtype=float)
    cands = removal_candidates(pts, 1)
    assert all(2 not in set(range(5)) - set(c) for c in cands)
    assert len(cands) == 3  # left and bottom coincide
