import numpy as np
import pytest
from hypothesis import given, strategies as st

from helmetid.core import BoundingBox, Detection
from helmetid.tracker import (
    KalmanState,
    NumericalError,
    Tracker,
    TrackerConfig,
    TrackStatus,
    kalman_predict,
    kalman_update,
    tracker_step,
)


def _state(cx=0.0, vx=0.0):
    s = KalmanState.from_box(BoundingBox.from_center(cx, 50, 20, 20))
    s.mean[4] = vx
    return s


def _det(frame, cx, cy=50.0, conf=0.9):
    return Detection(frame, BoundingBox.from_center(cx, cy, 20, 20), conf)


def test_predict_examples():
    s = _state(10)
    assert kalman_predict(s).mean[:4] == pytest.approx(s.mean[:4])
    assert kalman_predict(_state(0, 1)).mean[0] == pytest.approx(1)
    out = kalman_predict(s, motion_noise=0.1)
    assert np.trace(out.covariance) > np.trace(s.covariance)


def test_predict_rejects_bad_covariance():
    s = _state()
    s.covariance[0, 0] = -5
    with pytest.raises(NumericalError):
        kalman_predict(s)


def test_update_examples():
    s = kalman_predict(_state(10, 2))
    box = s.to_box()
    out = kalman_update(s, box)
    assert out.mean[:4] == pytest.approx(s.mean[:4])
    assert np.trace(out.covariance) < np.trace(s.covariance)
    far = BoundingBox.from_center(200, 80, 20, 20)
    assert np.abs(kalman_update(s, far, meas_noise=1e9).mean - s.mean).max() < 1e-6


def test_repeated_updates_converge_monotonically():
    s = _state(0)
    target = BoundingBox.from_center(30, 40, 20, 20)
    dist = []
    for _ in range(20):
        s = kalman_update(s, target)
        dist.append(np.hypot(s.mean[0] - 30, s.mean[1] - 40))
    assert all(b <= a + 1e-12 for a, b in zip(dist, dist[1:]))
    assert dist[-1] < 0.5


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(5, 40)), min_size=1, max_size=15))
def test_covariance_stays_symmetric_psd(measurements):
    s = _state()
    for dx, dy, h in measurements:
        s = kalman_predict(s, 1.0)
        s = kalman_update(s, BoundingBox.from_center(dx, dy, h, h))
        s.check()
        assert np.trace(s.covariance) > 0


def test_first_detection_spawns_tentative_track():
    tracks, ids = tracker_step([], [_det(1, 10)], TrackerConfig())
    assert ids == [1] and tracks[0].status == TrackStatus.TENTATIVE


def test_confirmed_track_deleted_after_max_age():
    cfg = TrackerConfig()
    tr = Tracker(cfg)
    for f in range(1, 5):
        tr.step([_det(f, 10)])
    assert tr.tracks[0].status == TrackStatus.CONFIRMED
    for f in range(5, 5 + cfg.max_age):
        tr.step([])
        assert tr.tracks[0].status == TrackStatus.CONFIRMED
    tr.step([])
    assert tr.tracks[0].status == TrackStatus.DELETED
    # a new detection at the same place gets a fresh id
    assert tr.step([_det(20, 10)]) == [2]


def test_time_since_update_counts():
    tr = Tracker()
    for f in range(1, 4):
        tr.step([_det(f, 10)])
        assert tr.tracks[0].time_since_update == 0
    tr.step([])
    tr.step([])
    assert tr.tracks[0].time_since_update == 2


def test_mixed_frames_rejected():
    with pytest.raises(ValueError):
        tracker_step([], [_det(1, 10), _det(2, 40)], TrackerConfig())


def test_low_confidence_detections_ignored():
    _, ids = tracker_step([], [_det(1, 10, conf=0.1)], TrackerConfig())
    assert ids == [None]


def test_config_validation():
    with pytest.raises(ValueError):
        TrackerConfig(max_age=0)
    with pytest.raises(ValueError):
        TrackerConfig(iou_gate=1.5)


def _run(play):
    frames = sorted({d.frame for d in play.bundle.detections})
    by_frame = {f: play.bundle.detections_at(f) for f in frames}
    tr = Tracker()
    ids = {f: tr.step(by_frame[f]) for f in frames}
    return tr, by_frame, ids


def test_noiseless_play_gives_one_stable_track_per_player(clean_play):
    tr, by_frame, ids = _run(clean_play)
    assert len(tr.confirmed) == len(clean_play.roster)
    gt = {(g.frame, g.box): g.label for g in clean_play.ground_truth}
    owner = {}
    for f, dets in by_frame.items():
        for d, tid in zip(dets, ids[f]):
            owner.setdefault(gt[(f, d.box)], set()).add(tid)
    assert all(len(v) == 1 for v in owner.values())


@given(st.integers(1, 6), st.integers(1, 10))
def test_ids_unique_and_increasing(n_tracks, n_frames):
    tr = Tracker()
    issued = []
    for f in range(1, n_frames + 1):
        dets = [_det(f, 100 * i + 3 * f * (i % 2)) for i in range(n_tracks)]
        ids = tr.step(dets)
        assert len(set(ids)) == len(ids)
        issued.extend(i for i in ids if i not in issued)
    assert issued == sorted(issued)
    assert [t.id for t in tr.tracks] == sorted({t.id for t in tr.tracks})
