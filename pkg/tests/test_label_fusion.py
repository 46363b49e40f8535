import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helmetid.core import BoundingBox, PlayerLabel, Side
from helmetid.frame_assign import FrameAssignment
from helmetid.label_fusion import VoteMatrix, build_vote_costs, finalize_labels, track_boxes
from helmetid.tracker import KalmanState, Observation, Track, TrackStatus

A, B = PlayerLabel(Side.HOME, 1), PlayerLabel(Side.VISITOR, 2)
H23, H24 = PlayerLabel(Side.HOME, 23), PlayerLabel(Side.HOME, 24)


def _track(tid, frames, det_index=0, conf=0.9, cx=100.0, confirmed=True):
    obs = [Observation(f, det_index, BoundingBox.from_center(cx + f, 50, 20, 20), conf) for f in frames]
    t = Track(tid, KalmanState.from_box(obs[0].box), history=obs)
    t.ever_confirmed = confirmed
    t.status = TrackStatus.CONFIRMED if confirmed else TrackStatus.TENTATIVE
    return t


def _fa(frame, *pairs):
    return FrameAssignment(frame, list(pairs), None, 0.0)


def test_vote_frequencies():
    t = _track(1, [1, 2, 3])
    votes = build_vote_costs([t], [_fa(1, (0, H23)), _fa(2, (0, H23)), _fa(3, (0, H24))])
    assert votes.cost(1, H23) == pytest.approx(1 / 3)
    assert votes.cost(1, H24) == pytest.approx(2 / 3)


def test_single_label_and_unseen_labels():
    t = _track(1, [1, 2, 3])
    votes = build_vote_costs([t], [_fa(f, (0, A)) for f in (1, 2, 3)], labels=[B])
    assert votes.cost(1, A) == 0 and votes.cost(1, B) == 1


def test_unassigned_and_short_tracks_excluded():
    t1, t2, t3 = _track(1, [1, 2, 3], det_index=0), _track(2, [1, 2, 3], det_index=1), _track(3, [1, 2], det_index=2)
    per = [_fa(f, (0, A), (2, B)) for f in (1, 2, 3)]
    votes = build_vote_costs([t1, t2, t3], per)
    assert votes.track_ids == [1]


def test_shared_detection_rejected():
    with pytest.raises(ValueError):
        build_vote_costs([_track(1, [1, 2, 3]), _track(2, [1, 2, 3])], [])


def test_vote_matrix_bounds():
    with pytest.raises(ValueError):
        VoteMatrix([1], [A], [[1.5]])


def test_crossed_votes_take_cheaper_pairing():
    votes = VoteMatrix([1, 2], [A, B], [[0.2, 0.6], [0.3, 0.1]])
    # pairings: 1->A, 2->B costs 0.3; the swap costs 0.9
    t1, t2 = _track(1, [1, 2, 3], det_index=0), _track(2, [1, 2, 3], det_index=1, cx=300)
    out = finalize_labels(votes, [t1, t2])
    first = {b.label for b in out if b.box.center[0] < 200}
    assert first == {A}
    assert {b.label for b in out if b.box.center[0] > 200} == {B}


def test_single_track_labels_all_boxes():
    t = _track(1, [1, 2, 3])
    out = finalize_labels(VoteMatrix([1], [H23], [[0.0]]), [t])
    assert [b.label for b in out] == [H23] * 3 and [b.frame for b in out] == [1, 2, 3]


def test_cap_drops_lowest_confidence():
    labels = [PlayerLabel(Side.HOME, j) for j in range(23)]
    tracks = [_track(i + 1, [1, 2, 3], det_index=i, conf=0.5 + 0.01 * i, cx=40.0 * i) for i in range(23)]
    votes = VoteMatrix([t.id for t in tracks], labels, 1.0 - np.eye(23))
    out = finalize_labels(votes, tracks)
    for f in (1, 2, 3):
        frame = [b for b in out if b.frame == f]
        assert len(frame) == 22
        assert labels[0] not in {b.label for b in frame}


def test_unconfirmed_tracks_emit_nothing():
    t = _track(1, [1, 2, 3], confirmed=False)
    assert finalize_labels(VoteMatrix([1], [A], [[0.0]]), [t]) == []


def test_gaps_are_interpolated():
    t = _track(1, [1, 4])
    boxes = track_boxes(t)
    assert sorted(boxes) == [1, 2, 3, 4]
    assert boxes[2][0].center[0] == pytest.approx(102.0)


@given(st.integers(1, 5), st.integers(0, 10_000))
def test_zero_noise_reproduces_per_frame_labels(n, seed):
    rng = np.random.default_rng(seed)
    labels = [PlayerLabel(Side.VISITOR, int(j)) for j in rng.choice(100, size=n, replace=False)]
    tracks = [_track(i + 1, range(1, 6), det_index=i, cx=50.0 * i) for i in range(n)]
    per = [_fa(f, *[(i, labels[i]) for i in range(n)]) for f in range(1, 6)]
    out = finalize_labels(build_vote_costs(tracks, per), tracks, per)
    got = {(b.frame, b.box.center[0]): b.label for b in out}
    want = {(f, 50.0 * i + f): labels[i] for f in range(1, 6) for i in range(n)}
    assert got == want


@given(st.integers(2, 4), st.integers(0, 10_000))
def test_no_single_swap_improves_total(n, seed):
    rng = np.random.default_rng(seed)
    labels = [PlayerLabel(Side.HOME, j) for j in range(n)]
    votes = VoteMatrix(list(range(1, n + 1)), labels, rng.random((n, n)))
    tracks = [_track(i + 1, [1, 2, 3], det_index=i, cx=50.0 * i) for i in range(n)]
    out = finalize_labels(votes, tracks)
    chosen = {}
    for b in out:
        chosen[int(round((b.box.center[0] - b.frame) / 50.0))] = labels.index(b.label)
    total = sum(votes.costs[i, chosen[i]] for i in range(n))
    for i, k in itertools.combinations(range(n), 2):
        swapped = total - votes.costs[i, chosen[i]] - votes.costs[k, chosen[k]]
        swapped += votes.costs[i, chosen[k]] + votes.costs[k, chosen[i]]
        assert total <= swapped + 1e-12
