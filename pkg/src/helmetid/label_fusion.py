"""Fusion of per-frame label assignments into one label per track."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .assignment import solve_assignment
from .core import MAX_HELMETS_PER_FRAME, BoundingBox, LabeledBox, PlayerLabel
from .frame_assign import FrameAssignment
from .tracker import Track


@dataclass
class VoteMatrix:
    """Cost ``1 - share of the track's labeled frames that carried the label``.

    Rows are tracks with at least one labeled frame, columns are labels.
    """

    track_ids: list[int]
    labels: list[PlayerLabel]
    costs: np.ndarray
    counts: dict[int, Counter] = field(default_factory=dict)

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=float).reshape(len(self.track_ids), len(self.labels))
        if self.costs.size and (self.costs.min() < 0 or self.costs.max() > 1):
            raise ValueError("vote costs must lie in [0, 1]")

    def cost(self, track_id: int, label: PlayerLabel) -> float:
        return float(self.costs[self.track_ids.index(track_id), self.labels.index(label)])


def _labels_by_detection(per_frame: Iterable[FrameAssignment]) -> dict[tuple[int, int], PlayerLabel]:
    out = {}
    for fa in per_frame:
        for j, lbl in fa.mapping:
            out[(fa.frame, j)] = lbl
    return out


def build_vote_costs(
    tracks: Sequence[Track],
    per_frame: Sequence[FrameAssignment],
    min_hits: int = 3,
    labels: Optional[Iterable[PlayerLabel]] = None,
) -> VoteMatrix:
    """Count, per track, how often each label was given to its detections.

    Tracks with fewer than ``min_hits`` observations are left out, as are
    tracks none of whose detections received a label. ``labels`` widens the
    column set beyond the labels actually seen.
    """
    by_det = _labels_by_detection(per_frame)
    owner: dict[tuple[int, int], int] = {}
    counts: dict[int, Counter] = {}
    for t in tracks:
        if len(t.history) < min_hits:
            continue
        c = Counter()
        for obs in t.history:
            key = (obs.frame, obs.det_index)
            if key in owner and owner[key] != t.id:
                raise ValueError(f"detection {key} belongs to tracks {owner[key]} and {t.id}")
            owner[key] = t.id
            if key in by_det:
                c[by_det[key]] += 1
        if c:
            counts[t.id] = c

    cols = set(labels or ())
    for c in counts.values():
        cols.update(c)
    cols = sorted(cols, key=lambda lbl: (lbl.side.value, lbl.jersey))
    ids = sorted(counts)
    costs = np.ones((len(ids), len(cols)))
    col_index = {lbl: k for k, lbl in enumerate(cols)}
    for r, tid in enumerate(ids):
        total = sum(counts[tid].values())
        for lbl, n in counts[tid].items():
            costs[r, col_index[lbl]] = 1.0 - n / total
    return VoteMatrix(ids, cols, costs, counts)


def _interpolate(a: BoundingBox, b: BoundingBox, w: float) -> BoundingBox:
    return BoundingBox(
        a.left + w * (b.left - a.left),
        a.top + w * (b.top - a.top),
        a.width + w * (b.width - a.width),
        a.height + w * (b.height - a.height),
    )


def track_boxes(track: Track) -> dict[int, tuple[BoundingBox, float]]:
    """Observed boxes of a track, with interior gaps filled by interpolation.

    Filled frames carry the track's mean confidence.
    """
    obs = sorted(track.history, key=lambda o: o.frame)
    out = {o.frame: (o.box, o.confidence) for o in obs}
    mean_conf = track.mean_confidence()
    for a, b in zip(obs, obs[1:]):
        gap = b.frame - a.frame
        for f in range(a.frame + 1, b.frame):
            out[f] = (_interpolate(a.box, b.box, (f - a.frame) / gap), mean_conf)
    return out


def finalize_labels(
    votes: VoteMatrix,
    tracks: Sequence[Track],
    per_frame: Sequence[FrameAssignment] = (),
    cap: int = MAX_HELMETS_PER_FRAME,
) -> list[LabeledBox]:
    """Pick one label per track and emit labeled boxes frame by frame.

    Only tracks that were ever confirmed emit boxes. Where a frame would carry
    more than ``cap`` boxes, those of the tracks with the lowest mean
    detection confidence are dropped.
    """
    by_id = {t.id: t for t in tracks}
    chosen: dict[int, PlayerLabel] = {}
    if votes.costs.size:
        res = solve_assignment(votes.costs)
        for r, c in res.pairs:
            chosen[votes.track_ids[r]] = votes.labels[c]

    per_frame_boxes: dict[int, list[tuple[float, int, LabeledBox]]] = defaultdict(list)
    for tid in sorted(chosen):
        t = by_id.get(tid)
        if t is None or not t.ever_confirmed:
            continue
        conf = t.mean_confidence()
        for f, (box, _) in track_boxes(t).items():
            per_frame_boxes[f].append((conf, tid, LabeledBox(f, box, chosen[tid])))

    out: list[LabeledBox] = []
    for f in sorted(per_frame_boxes):
        cands = per_frame_boxes[f]
        if len(cands) > cap:
            # highest confidence first, track id breaks ties
            cands = sorted(cands, key=lambda c: (-c[0], c[1]))[:cap]
        boxes = sorted((c[2] for c in cands), key=lambda b: (b.label.side.value, b.label.jersey))
        labels = [b.label for b in boxes]
        assert len(set(labels)) == len(labels), f"frame {f}: two tracks share a label"
        out.extend(boxes)
    return out
