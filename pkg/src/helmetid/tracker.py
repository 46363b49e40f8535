"""Tracking-by-detection: constant-velocity Kalman filter plus Hungarian IOU
association.

The state vector is ``(cx, cy, aspect, height)`` followed by their per-frame
velocities. Appearance comes from optional per-box mean colors rather than a
learned embedding.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .assignment import solve_assignment
from .core import BoundingBox, Detection
from .geometry import iou_matrix

_GATED = 1e6

# relative scale of each state component's process noise
_Q_SCALE = np.array([1.0, 1.0, 1e-2, 1.0, 0.5, 0.5, 1e-3, 0.5])
_P0_STD = np.array([2.0, 2.0, 1e-2, 2.0, 10.0, 10.0, 1e-3, 10.0])


class NumericalError(ArithmeticError):
    pass


@dataclass
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(8)
        self.covariance = np.asarray(self.covariance, dtype=float).reshape(8, 8)

    @classmethod
    def from_box(cls, box: BoundingBox) -> "KalmanState":
        cx, cy = box.center
        mean = np.array([cx, cy, box.width / box.height, box.height, 0, 0, 0, 0], dtype=float)
        return cls(mean, np.diag(_P0_STD**2))

    def to_box(self) -> BoundingBox:
        cx, cy, a, h = self.mean[:4]
        h = max(h, 1e-6)
        w = max(a * h, 1e-6)
        return BoundingBox.from_center(cx, cy, w, h)

    def check(self):
        cov = self.covariance
        if not np.allclose(cov, cov.T, atol=1e-9 * max(1.0, np.abs(cov).max())):
            raise NumericalError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-9:
            raise NumericalError("covariance is not positive semidefinite")


_F = np.eye(8)
_F[:4, 4:] = np.eye(4)
_H = np.hstack([np.eye(4), np.zeros((4, 4))])


def kalman_predict(state: KalmanState, motion_noise: float = 1.0) -> KalmanState:
    """Advance one frame under constant velocity."""
    state.check()
    q = np.diag((motion_noise * _Q_SCALE) ** 2)
    mean = _F @ state.mean
    cov = _F @ state.covariance @ _F.T + q
    return KalmanState(mean, 0.5 * (cov + cov.T))


def kalman_update(state: KalmanState, measurement: BoundingBox, meas_noise: float = 1.0) -> KalmanState:
    """Fuse one box measurement (center, aspect, height)."""
    state.check()
    cx, cy = measurement.center
    z = np.array([cx, cy, measurement.width / measurement.height, measurement.height])
    r = np.diag((meas_noise * np.array([1.0, 1.0, 1e-2, 1.0])) ** 2)
    p = state.covariance
    s = _H @ p @ _H.T + r
    try:
        gain = np.linalg.solve(s, _H @ p).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is singular") from exc
    mean = state.mean + gain @ (z - _H @ state.mean)
    ikh = np.eye(8) - gain @ _H
    # Joseph form keeps the covariance symmetric PSD
    cov = ikh @ p @ ikh.T + gain @ r @ gain.T
    return KalmanState(mean, 0.5 * (cov + cov.T))


class TrackStatus(enum.Enum):
    TENTATIVE = "Tentative"
    CONFIRMED = "Confirmed"
    DELETED = "Deleted"


@dataclass
class Observation:
    frame: int
    det_index: int
    box: BoundingBox
    confidence: float


@dataclass
class Track:
    id: int
    state: KalmanState
    hits: int = 1
    hit_streak: int = 1
    time_since_update: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    label_votes: Counter = field(default_factory=Counter)
    color_memory: Optional[np.ndarray] = None
    history: list[Observation] = field(default_factory=list)
    still_frames: int = 0
    ever_confirmed: bool = False

    @property
    def is_live(self) -> bool:
        return self.status != TrackStatus.DELETED

    def mean_confidence(self) -> float:
        if not self.history:
            return 0.0
        return float(np.mean([o.confidence for o in self.history]))


@dataclass
class TrackerConfig:
    max_age: int = 5
    min_hits: int = 3
    iou_gate: float = 0.3
    conf_floor: float = 0.25
    motion_noise: float = 1.0
    meas_noise: float = 2.0
    color_weight: float = 0.3
    # a track that moved less than stationary_px for stationary_frames
    # consecutive matches skips its measurement update while detections stay
    # within stationary_px of the stored state
    stationary_frames: int = 5
    stationary_px: float = 1.0
    color_momentum: float = 0.9

    def __post_init__(self):
        if self.max_age < 1:
            raise ValueError("max_age must be >= 1")
        if not 0.0 <= self.iou_gate <= 1.0:
            raise ValueError("iou_gate must be in [0, 1]")
        if self.min_hits < 1:
            raise ValueError("min_hits must be >= 1")


def _box_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    return np.array([[b.left, b.top, b.width, b.height] for b in boxes], dtype=float).reshape(-1, 4)


def _is_stationary(track: Track, cfg: TrackerConfig) -> bool:
    return track.still_frames >= cfg.stationary_frames


def association_cost(
    tracks: Sequence[Track], detections: Sequence[Detection], cfg: TrackerConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(cost, iou)`` between predicted track boxes and detections."""
    pred = _box_array([t.state.to_box() for t in tracks])
    det = _box_array([d.box for d in detections])
    iou = iou_matrix(pred, det)
    cost = 1.0 - iou
    if cfg.color_weight > 0:
        for i, t in enumerate(tracks):
            if t.color_memory is None:
                continue
            for j, d in enumerate(detections):
                if d.color is None:
                    continue
                dist = float(np.linalg.norm(t.color_memory - np.asarray(d.color))) / np.sqrt(3.0)
                cost[i, j] = (1.0 - cfg.color_weight) * (1.0 - iou[i, j]) + cfg.color_weight * dist
    cost[iou < cfg.iou_gate] = _GATED
    return cost, iou


def _spawn(track_id: int, det: Detection, det_index: int, cfg: TrackerConfig) -> Track:
    t = Track(id=track_id, state=KalmanState.from_box(det.box))
    t.history.append(Observation(det.frame, det_index, det.box, det.confidence))
    if det.color is not None:
        t.color_memory = np.asarray(det.color, dtype=float)
    if cfg.min_hits <= 1:
        t.status = TrackStatus.CONFIRMED
        t.ever_confirmed = True
    return t


def _absorb(track: Track, det: Detection, det_index: int, cfg: TrackerConfig) -> None:
    cx, cy = det.box.center
    px, py = track.history[-1].box.center
    moved = float(np.hypot(cx - px, cy - py))
    # a frozen state is only kept while the detection stays on it, so slow
    # drift cannot accumulate
    sx, sy = track.state.mean[:2]
    if _is_stationary(track, cfg) and np.hypot(cx - sx, cy - sy) < cfg.stationary_px:
        pass
    else:
        track.state = kalman_update(track.state, det.box, cfg.meas_noise)
    track.still_frames = track.still_frames + 1 if moved < cfg.stationary_px else 0
    track.hits += 1
    track.hit_streak += 1
    track.time_since_update = 0
    track.history.append(Observation(det.frame, det_index, det.box, det.confidence))
    if det.color is not None:
        c = np.asarray(det.color, dtype=float)
        if track.color_memory is None:
            track.color_memory = c
        else:
            track.color_memory = cfg.color_momentum * track.color_memory + (1 - cfg.color_momentum) * c
    if track.status == TrackStatus.TENTATIVE and track.hit_streak >= cfg.min_hits:
        track.status = TrackStatus.CONFIRMED
        track.ever_confirmed = True


def tracker_step(
    tracks: list[Track], detections: Sequence[Detection], cfg: TrackerConfig
) -> tuple[list[Track], list[Optional[int]]]:
    """Advance all tracks by one frame and associate this frame's detections.

    ``tracks`` is updated in place (deleted tracks stay in the list so ids are
    never reused) and returned together with the track id given to each
    detection, or None for detections below ``conf_floor``.
    """
    frames = {d.frame for d in detections}
    if len(frames) > 1:
        raise ValueError(f"detections span several frames: {sorted(frames)}")
    next_id = max((t.id for t in tracks), default=0) + 1

    live = [t for t in tracks if t.is_live]
    for t in live:
        t.state = kalman_predict(t.state, cfg.motion_noise)

    usable = [j for j, d in enumerate(detections) if d.confidence >= cfg.conf_floor]
    ids: list[Optional[int]] = [None] * len(detections)
    matched_t: set[int] = set()
    matched_d: set[int] = set()
    if live and usable:
        cost, iou = association_cost(live, [detections[j] for j in usable], cfg)
        for r, c in solve_assignment(cost).pairs:
            if iou[r, c] < cfg.iou_gate:
                continue
            j = usable[c]
            _absorb(live[r], detections[j], j, cfg)
            ids[j] = live[r].id
            matched_t.add(r)
            matched_d.add(j)

    for r, t in enumerate(live):
        if r in matched_t:
            continue
        t.time_since_update += 1
        t.hit_streak = 0
        if t.status == TrackStatus.TENTATIVE or t.time_since_update > cfg.max_age:
            t.status = TrackStatus.DELETED

    for j in usable:
        if j in matched_d:
            continue
        t = _spawn(next_id, detections[j], j, cfg)
        next_id += 1
        tracks.append(t)
        ids[j] = t.id
    return tracks, ids


class Tracker:
    """Stateful wrapper running ``tracker_step`` frame by frame for one play."""

    def __init__(self, cfg: Optional[TrackerConfig] = None):
        self.cfg = cfg or TrackerConfig()
        self.tracks: list[Track] = []

    def step(self, detections: Sequence[Detection]) -> list[Optional[int]]:
        _, ids = tracker_step(self.tracks, detections, self.cfg)
        return ids

    def run(self, frames: Sequence[Sequence[Detection]]) -> list[list[Optional[int]]]:
        return [self.step(dets) for dets in frames]

    @property
    def confirmed(self) -> list[Track]:
        return [t for t in self.tracks if t.ever_confirmed]
