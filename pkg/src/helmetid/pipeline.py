"""End-to-end labeling of one play: tracking, team split, per-frame
assignment and label fusion."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import LabeledBox, PlayBundle, PlayerLabel, Side, View, find_snap_frame, flip_endzone
from .frame_assign import (
    FrameAssignConfig,
    FrameAssignment,
    HomographyWindow,
    _evaluate,
    assign_frame_homography,
    assign_frame_icp,
    icp_to_homography,
    team_penalties,
)
from .geometry import as_points
from .label_fusion import VoteMatrix, build_vote_costs, finalize_labels
from .team_cluster import DegenerateClusteringError, team_of_tracks
from .tracker import Track, Tracker, TrackerConfig


@dataclass
class PipelineConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    assign: FrameAssignConfig = field(default_factory=FrameAssignConfig)
    seed_stride: int = 10  # every how many frames stage 3a is tried for a seed
    use_teams: bool = True
    team_seed: int = 0
    flip_endzone: bool = True
    trim_pre_snap: bool = True


@dataclass
class PlayResult:
    labels: list[LabeledBox]
    tracks: list[Track]
    per_frame: list[FrameAssignment]
    votes: VoteMatrix
    seed_frame: Optional[int]
    team_of_cluster: dict[int, Side] = field(default_factory=dict)


class _Frames:
    """Per-frame views of a bundle, built once."""

    def __init__(self, bundle: PlayBundle):
        self.tracking = defaultdict(list)
        for t in bundle.tracking:
            self.tracking[t.frame].append((t.player, (t.x, t.y)))
        self.detections = defaultdict(list)
        for d in bundle.detections:
            self.detections[d.frame].append(d)
        self.frames = sorted(set(self.tracking) | set(self.detections))


def _track_colors(tracks: list[Track]) -> dict[int, np.ndarray]:
    return {t.id: t.color_memory for t in tracks if t.ever_confirmed and t.color_memory is not None}


def _det_tracks(tracks: list[Track]) -> dict[tuple[int, int], int]:
    return {(o.frame, o.det_index): t.id for t in tracks for o in t.history}


def _side_of_clusters(
    fr: _Frames, frames: list[int], det_cluster: dict, cfg: FrameAssignConfig
) -> dict[int, Side]:
    """Name each color cluster after the side it is most often matched to."""
    votes = Counter()
    for f in frames:
        trk, dets = fr.tracking.get(f), fr.detections.get(f)
        if not trk or not dets or len(trk) < 2 or len(dets) < 2:
            continue
        fa = assign_frame_icp(trk, [d.box.center for d in dets], cfg, frame=f)
        for j, lbl in fa.mapping:
            cl = det_cluster.get((f, j))
            if cl is not None:
                votes[(cl, lbl.side)] += 1
    straight = votes[(0, Side.HOME)] + votes[(1, Side.VISITOR)]
    crossed = votes[(0, Side.VISITOR)] + votes[(1, Side.HOME)]
    if straight == crossed == 0:
        return {}
    return {0: Side.HOME, 1: Side.VISITOR} if straight >= crossed else {0: Side.VISITOR, 1: Side.HOME}


def _propagate(fr, frames, start_h, cfg, teams_of, out: dict[int, FrameAssignment]):
    direction = 1 if len(frames) < 2 or frames[1] > frames[0] else -1
    window = HomographyWindow(cfg.window_len, direction=direction)
    window.push(frames[0] - direction, start_h)
    for f in frames:
        trk, dets = fr.tracking.get(f), fr.detections.get(f, [])
        if not trk:
            continue
        fa, _ = assign_frame_homography(window, trk, dets, cfg, frame=f, det_teams=teams_of(f, dets))
        out[f] = fa


def run_play(bundle: PlayBundle, cfg: Optional[PipelineConfig] = None) -> PlayResult:
    """Label every helmet box of one play.

    The tracker sees every frame; frame assignment, and hence voting, only
    uses frames from the snap on when ``trim_pre_snap`` is set.
    """
    cfg = cfg or PipelineConfig()
    acfg = cfg.assign
    if cfg.flip_endzone and bundle.key.view == View.ENDZONE:
        bundle = flip_endzone(bundle)
    fr = _Frames(bundle)

    tracker = Tracker(cfg.tracker)
    for f in fr.frames:
        tracker.step(fr.detections.get(f, []))
    tracks = tracker.tracks

    snap = bundle.snap_frame if bundle.snap_frame is not None else find_snap_frame(bundle.tracking)
    frames = [f for f in fr.frames if f in fr.tracking]
    if cfg.trim_pre_snap and snap is not None:
        frames = [f for f in frames if f >= snap]

    # team split on confirmed track colors, named through unconstrained ICP matches
    det_track = _det_tracks(tracks)
    track_cluster: dict[int, int] = {}
    team_of_cluster: dict[int, Side] = {}
    colors = _track_colors(tracks)
    if cfg.use_teams and len(colors) >= 2:
        try:
            track_cluster, _ = team_of_tracks(colors, cfg.team_seed)
        except DegenerateClusteringError:
            track_cluster = {}
        if track_cluster:
            det_cluster = {k: track_cluster[tid] for k, tid in det_track.items() if tid in track_cluster}
            team_of_cluster = _side_of_clusters(fr, frames[:: cfg.seed_stride], det_cluster, acfg)

    def teams_of(f, dets):
        if not team_of_cluster:
            return None
        out = []
        for j in range(len(dets)):
            tid = det_track.get((f, j))
            cl = track_cluster.get(tid) if tid is not None else None
            out.append(team_of_cluster.get(cl) if cl is not None else None)
        return out

    # stage 3a on a stride of frames; the best-scoring homography seeds 3c
    best = None
    for f in frames[:: cfg.seed_stride]:
        trk, dets = fr.tracking.get(f), fr.detections.get(f, [])
        strong = [j for j, d in enumerate(dets) if d.confidence >= acfg.min_conf]
        if len(trk) < 4 or len(strong) < 4:
            continue
        centers = [dets[j].box.center for j in strong]
        all_teams = teams_of(f, dets)
        teams = None if all_teams is None else [all_teams[j] for j in strong]
        fa = assign_frame_icp(trk, centers, acfg, frame=f, det_teams=teams)
        labels = [lbl for lbl, _ in trk]
        pen = team_penalties(labels, len(strong), teams, acfg.team_penalty)
        for h in icp_to_homography(trk, centers, fa):
            score, _, _ = _evaluate(h, as_points([p for _, p in trk]), as_points(centers), pen, acfg)
            if best is None or score < best[0]:
                best = (score, f, h)

    per_frame: dict[int, FrameAssignment] = {}
    seed_frame = None
    if best is not None:
        _, seed_frame, h = best
        k = frames.index(seed_frame)
        _propagate(fr, frames[k:], h, acfg, teams_of, per_frame)
        if k > 0:
            _propagate(fr, frames[k - 1 :: -1], per_frame[seed_frame].transform_used, acfg, teams_of, per_frame)

    ordered = [per_frame[f] for f in sorted(per_frame)]
    votes = build_vote_costs(tracks, ordered, cfg.tracker.min_hits)
    labels = finalize_labels(votes, tracks, ordered)
    return PlayResult(labels, tracks, ordered, votes, seed_frame, team_of_cluster)


def baseline_nearest(bundle: PlayBundle, min_conf: float = 0.40) -> list[LabeledBox]:
    """Greedy nearest-neighbor labeling, frame by frame, without tracking.

    Both clouds are brought to zero mean and unit spread per axis (image y
    flipped to point up), then the closest remaining (player, detection)
    pair is taken repeatedly.
    """
    if bundle.key.view == View.ENDZONE:
        bundle = flip_endzone(bundle)
    fr = _Frames(bundle)
    out: list[LabeledBox] = []
    for f in fr.frames:
        trk = fr.tracking.get(f)
        dets = [d for d in fr.detections.get(f, []) if d.confidence >= min_conf]
        if not trk or len(trk) < 2 or len(dets) < 2:
            continue
        t = _unit(as_points([p for _, p in trk]))
        c = as_points([d.box.center for d in dets]) * np.array([1.0, -1.0])
        c = _unit(c)
        dist = np.linalg.norm(t[:, None, :] - c[None, :, :], axis=2)
        used_t, used_d = set(), set()
        for flat in np.argsort(dist, axis=None, kind="stable"):
            i, j = divmod(int(flat), dist.shape[1])
            if i in used_t or j in used_d:
                continue
            used_t.add(i)
            used_d.add(j)
            out.append(LabeledBox(f, dets[j].box, trk[i][0]))
            if len(used_t) == len(trk) or len(used_d) == len(dets):
                break
    return out


def _unit(p: np.ndarray) -> np.ndarray:
    std = p.std(axis=0)
    return (p - p.mean(axis=0)) / np.where(std > 1e-12, std, 1.0)
