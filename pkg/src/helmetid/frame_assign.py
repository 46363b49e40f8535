"""Per-frame matching of helmet detections to tracked players.

Two routes produce a :class:`FrameAssignment`:

* ``assign_frame_icp`` registers the detection cloud onto the tracking cloud
  with similarity ICP, then matches on a blend of registered distance and
  shape-context dissimilarity.
* ``assign_frame_homography`` carries a field-to-image homography from frame
  to frame, trying every homography in a window of recent frames.

Image points are y-down; they are mirrored to y-up before any similarity
registration so that a proper rotation relates them to field coordinates.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .assignment import AssignmentResult, adaptive_ignore
from .core import Detection, PlayerLabel
from .geometry import (
    DegenerateGeometryError,
    Homography,
    SimilarityTransform,
    as_points,
    cosine_cost_matrix,
    default_radii,
    estimate_homography,
    icp_register,
    pairwise_distances,
    shape_context,
)
from .team_cluster import disable_outliers


@dataclass
class FrameAssignConfig:
    alpha: float = 0.5  # weight of registered distance against shape-context cost
    ignore_threshold: float = 10.0  # pixels saved per extra ignored detection
    # same rule for the ICP route, in units of the tracking cloud's RMS radius
    icp_ignore_threshold: float = 0.25
    min_conf: float = 0.40
    window_len: int = 60
    icp_max_iters: int = 50
    icp_tol: float = 1e-6
    icp_starts: int = 12  # initial rotations spread over the full circle
    sc_radial: int = 5
    sc_angular: int = 12
    sc_inner: float = 0.125
    sc_outer: float = 2.0
    team_penalty: float = 1e4
    refine_iters: int = 3
    use_outlier_filter: bool = True


@dataclass
class FrameAssignment:
    frame: int
    mapping: list[tuple[int, PlayerLabel]]
    transform_used: Union[SimilarityTransform, Homography, None]
    cost: float
    flags: list[str] = field(default_factory=list)
    n_ignored: int = 0
    # field-to-image map implied by an ICP registration
    embedded: Optional[Homography] = None
    # homography route: window position of the winning candidate, and how
    # many candidates were scored
    candidate: Optional[int] = None
    n_candidates: int = 0

    def __post_init__(self):
        labels = [lbl for _, lbl in self.mapping]
        if len(set(labels)) != len(labels):
            raise ValueError(f"frame {self.frame}: labels repeat in mapping")

    def label_of(self, det_index: int) -> Optional[PlayerLabel]:
        for j, lbl in self.mapping:
            if j == det_index:
                return lbl
        return None

    def as_dict(self) -> dict[int, PlayerLabel]:
        return dict(self.mapping)


class HomographyWindow:
    """Ring of the most recent ``(frame, Homography)`` pairs, oldest first.

    Frames must move monotonically in ``direction`` (+1 forward in time, -1
    when propagating backwards from a seed frame).
    """

    def __init__(self, window_len: int = 60, entries=(), direction: int = 1):
        if window_len < 1:
            raise ValueError("window_len must be >= 1")
        if direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        self.window_len = window_len
        self.direction = direction
        self._items: deque = deque(maxlen=window_len)
        for frame, h in entries:
            self.push(frame, h)

    def push(self, frame: int, h: Homography) -> None:
        if self._items and (frame - self._items[-1][0]) * self.direction <= 0:
            raise ValueError(f"frame {frame} does not follow {self._items[-1][0]}")
        self._items.append((frame, h))

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __bool__(self):
        return bool(self._items)

    @property
    def latest(self) -> tuple[int, Homography]:
        return self._items[-1]


def _split(track_pts: Sequence[tuple[PlayerLabel, Sequence[float]]]):
    labels = [lbl for lbl, _ in track_pts]
    pts = as_points([p for _, p in track_pts])
    return labels, pts


def _mirror(pts: np.ndarray) -> np.ndarray:
    return pts * np.array([1.0, -1.0])


def _normalize_iso(pts: np.ndarray):
    """Zero mean, unit RMS radius. Returns (normalized, mean, scale)."""
    mean = pts.mean(axis=0)
    scale = float(np.sqrt(((pts - mean) ** 2).sum(axis=1).mean()))
    if scale <= 1e-12:
        raise DegenerateGeometryError("point cloud has no extent")
    return (pts - mean) / scale, mean, scale


def team_penalties(
    labels: Sequence[PlayerLabel],
    n_dets: int,
    det_teams: Optional[Sequence[Optional[object]]],
    penalty: float,
) -> np.ndarray:
    """``penalty`` where a detection's known team differs from the player's side."""
    out = np.zeros((len(labels), n_dets))
    if det_teams is None:
        return out
    for j, team in enumerate(det_teams):
        if team is None:
            continue
        for i, lbl in enumerate(labels):
            if lbl.side != team:
                out[i, j] = penalty
    return out


def _result_mapping(res: AssignmentResult, labels, det_index) -> list[tuple[int, PlayerLabel]]:
    return sorted((det_index[j], labels[i]) for i, j in res.pairs)


def register_icp(track_n: np.ndarray, det_n: np.ndarray, cfg: FrameAssignConfig):
    """Multi-start similarity ICP of normalized detections onto normalized tracks."""
    best = None
    for k in range(max(1, cfg.icp_starts)):
        init = SimilarityTransform(1.0, 2.0 * math.pi * k / max(1, cfg.icp_starts))
        res = icp_register(det_n, track_n, init, cfg.icp_max_iters, cfg.icp_tol)
        if best is None or res.residual < best.residual - 1e-12:
            best = res
    return best


def assign_frame_icp(
    track_pts: Sequence[tuple[PlayerLabel, Sequence[float]]],
    det_centers,
    cfg: Optional[FrameAssignConfig] = None,
    frame: int = 0,
    det_teams: Optional[Sequence] = None,
) -> FrameAssignment:
    """Match detections to players through ICP registration and shape contexts.

    Both clouds are centered and scaled to unit RMS radius; detections are
    registered onto the tracking cloud, and the matching cost blends the
    registered distance with the cosine distance between shape contexts.
    Perspective leaves residuals of a sizeable fraction of the cloud radius
    even for perfect detections, so the ignore rule here uses its own
    threshold in normalized units.
    """
    cfg = cfg or FrameAssignConfig()
    labels, trk = _split(track_pts)
    det_img = as_points(det_centers)
    if len(trk) < 2 or len(det_img) < 2:
        raise ValueError("assign_frame_icp needs at least 2 players and 2 detections")
    det = _mirror(det_img)
    flags: list[str] = []

    keep = np.ones(len(det), dtype=bool)
    if cfg.use_outlier_filter and len(det) >= 3:
        keep = np.asarray(disable_outliers(det))
    trk_n, trk_mean, trk_scale = _normalize_iso(trk)
    _, det_mean, det_scale = _normalize_iso(det[keep])
    det_n = (det - det_mean) / det_scale

    pen = team_penalties(labels, len(det), det_teams, cfg.team_penalty)
    try:
        reg = register_icp(trk_n, det_n[keep], cfg)
        if reg.degenerate:
            flags.append("icp-degenerate")
        transform = reg.transform
        moved = transform.apply(det_n)
        dist = pairwise_distances(trk_n, moved)
        r_min, r_max = default_radii(trk_n, cfg.sc_inner, cfg.sc_outer)
        sc_t = [shape_context(trk_n, i, cfg.sc_radial, cfg.sc_angular, r_min, r_max) for i in range(len(trk_n))]
        sc_d = [shape_context(moved, j, cfg.sc_radial, cfg.sc_angular, r_min, r_max) for j in range(len(moved))]
        sc = cosine_cost_matrix(sc_t, sc_d)
        cost = cfg.alpha * dist + (1.0 - cfg.alpha) * sc + pen
    except DegenerateGeometryError:
        flags.append("euclidean-fallback")
        transform = None
        cost = pairwise_distances(trk_n, det_n) + pen

    res, n_ignored = adaptive_ignore(cost, cfg.icp_ignore_threshold, axis=0)
    mapping = _result_mapping(res, labels, list(range(len(det))))
    embedded = None
    if transform is not None:
        embedded = _embed(transform, trk_mean, trk_scale, det_mean, det_scale)
    return FrameAssignment(frame, mapping, transform, res.total_cost, flags, n_ignored, embedded)


def _embed(t: SimilarityTransform, trk_mean, trk_scale, det_mean, det_scale) -> Optional[Homography]:
    to_trk_n = np.array(
        [[1 / trk_scale, 0, -trk_mean[0] / trk_scale], [0, 1 / trk_scale, -trk_mean[1] / trk_scale], [0, 0, 1.0]]
    )
    from_det_n = np.array([[det_scale, 0, det_mean[0]], [0, det_scale, det_mean[1]], [0, 0, 1.0]])
    mirror = np.diag([1.0, -1.0, 1.0])
    try:
        return Homography(mirror @ from_det_n @ t.inverse().matrix() @ to_trk_n)
    except DegenerateGeometryError:
        return None


def icp_to_homography(track_pts, det_centers, fa: FrameAssignment) -> list[Homography]:
    """Field-to-image homographies implied by an ICP frame assignment.

    The registration itself lifted to a homography comes first, followed by
    a direct fit on the matched pairs when at least four exist.
    """
    labels, trk = _split(track_pts)
    det = as_points(det_centers)
    out: list[Homography] = []
    if fa.embedded is not None:
        out.append(fa.embedded)
    index = {lbl: i for i, lbl in enumerate(labels)}
    pairs = [(index[lbl], j) for j, lbl in fa.mapping]
    if len(pairs) >= 4:
        try:
            out.append(estimate_homography(trk[[i for i, _ in pairs]], det[[j for _, j in pairs]]))
        except DegenerateGeometryError:
            pass
    return out


def _evaluate(h: Homography, trk: np.ndarray, det: np.ndarray, pen: np.ndarray, cfg: FrameAssignConfig):
    proj = h.project(trk)
    cost = pairwise_distances(proj, det) + pen
    res, n = adaptive_ignore(cost, cfg.ignore_threshold, axis=0)
    # a dropped detection must not look free when comparing candidates
    return res.total_cost + cfg.ignore_threshold * n, res, n


def assign_frame_homography(
    window: HomographyWindow,
    track_pts: Sequence[tuple[PlayerLabel, Sequence[float]]],
    detections: Sequence[Detection],
    cfg: Optional[FrameAssignConfig] = None,
    frame: Optional[int] = None,
    det_teams: Optional[Sequence] = None,
) -> tuple[FrameAssignment, Homography]:
    """Assign this frame's detections by reusing recent homographies.

    Every homography in ``window`` projects the current tracking data; the
    candidate whose matching cost is lowest (earliest on ties) wins. The
    homography is then refit on the matched pairs and the matching redone
    under the refit, ``refine_iters`` times at most or until the matching
    stops changing. The refit is appended to ``window``.
    """
    cfg = cfg or FrameAssignConfig()
    if not window:
        raise ValueError("homography window is empty")
    labels, trk = _split(track_pts)
    if frame is None:
        frame = detections[0].frame if detections else window.latest[0] + window.direction
    keep = [j for j, d in enumerate(detections) if d.confidence >= cfg.min_conf]
    det = as_points([detections[j].box.center for j in keep])
    teams = None if det_teams is None else [det_teams[j] for j in keep]
    pen = team_penalties(labels, len(keep), teams, cfg.team_penalty)
    prev_h = window.latest[1]
    if len(keep) == 0 or len(labels) == 0:
        window.push(frame, prev_h)
        return FrameAssignment(frame, [], prev_h, 0.0, ["no-detections"]), prev_h

    best = None
    tried = 0
    for idx, (_, h) in enumerate(window):
        tried += 1
        try:
            score, res, n = _evaluate(h, trk, det, pen, cfg)
        except (DegenerateGeometryError, ValueError):
            continue
        if best is None or score < best[0]:
            best = (score, res, h, idx)
    if best is None:
        window.push(frame, prev_h)
        return FrameAssignment(frame, [], prev_h, 0.0, ["no-valid-candidate"], n_candidates=tried), prev_h

    score, res, h, chosen = best
    flags: list[str] = []
    for _ in range(max(0, cfg.refine_iters)):
        pairs = res.pairs
        if len(pairs) < 4:
            flags.append("too-few-inliers")
            break
        try:
            refit = estimate_homography(trk[[i for i, _ in pairs]], det[[j for _, j in pairs]])
            new_score, new_res, _ = _evaluate(refit, trk, det, pen, cfg)
        except (DegenerateGeometryError, ValueError):
            flags.append("refit-failed")
            break
        if new_score > score + 1e-9:
            break
        changed = new_res.pairs != res.pairs
        h, res, score = refit, new_res, new_score
        if not changed:
            break

    window.push(frame, h)
    mapping = _result_mapping(res, labels, keep)
    fa = FrameAssignment(frame, mapping, h, res.total_cost, flags, len(res.ignored), candidate=chosen, n_candidates=tried)
    return fa, h
