"""IOU-gated matching of predicted to ground-truth boxes and the impact-weighted
accuracy used for scoring."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .assignment import solve_assignment
from .core import LabeledBox
from .geometry import iou_matrix

IOU_THRESHOLD = 0.35
IMPACT_WEIGHT = 1000
MATCH_MODES = ("greedy", "hungarian")


class Match(NamedTuple):
    pred: LabeledBox
    gt: LabeledBox
    iou: float

    @property
    def correct(self) -> bool:
        return self.pred.label == self.gt.label


@dataclass(frozen=True)
class ScoreBreakdown:
    correct_nonimp: int
    total_nonimp: int
    correct_imp: int
    total_imp: int
    weighted_accuracy: float

    def __post_init__(self):
        if not (0 <= self.correct_nonimp <= self.total_nonimp and 0 <= self.correct_imp <= self.total_imp):
            raise ValueError("correct counts must not exceed totals")

    @classmethod
    def from_counts(cls, correct_nonimp, total_nonimp, correct_imp, total_imp, weight=IMPACT_WEIGHT):
        denom = total_nonimp + weight * total_imp
        if denom == 0:
            raise ValueError("no ground-truth boxes to score")
        acc = (correct_nonimp + weight * correct_imp) / denom
        return cls(correct_nonimp, total_nonimp, correct_imp, total_imp, acc)


def _canonical(boxes: Iterable[LabeledBox]) -> list[LabeledBox]:
    return sorted(
        boxes,
        key=lambda b: (b.label.side.value, b.label.jersey, b.box.left, b.box.top, b.box.width, b.box.height),
    )


def _by_frame(boxes: Iterable[LabeledBox]) -> dict[int, list[LabeledBox]]:
    out: dict[int, list[LabeledBox]] = defaultdict(list)
    for b in boxes:
        out[b.frame].append(b)
    return {f: _canonical(v) for f, v in out.items()}


def _ltwh(boxes: Sequence[LabeledBox]) -> np.ndarray:
    return np.array([[b.box.left, b.box.top, b.box.width, b.box.height] for b in boxes], dtype=float).reshape(-1, 4)


def match_predictions(
    pred: Sequence[LabeledBox],
    gt: Sequence[LabeledBox],
    iou_threshold: float = IOU_THRESHOLD,
    mode: str = "greedy",
) -> list[Match]:
    """One-to-one matches per frame between predictions and ground truth.

    Only pairs with IOU at least ``iou_threshold`` qualify. ``greedy`` takes
    pairs by descending IOU; ``hungarian`` maximizes the summed IOU.
    """
    if mode not in MATCH_MODES:
        raise ValueError(f"unknown match mode {mode!r}; choose from {MATCH_MODES}")
    p_frames, g_frames = _by_frame(pred), _by_frame(gt)
    for f, boxes in p_frames.items():
        labels = [b.label for b in boxes]
        if len(set(labels)) != len(labels):
            dup = sorted({str(l) for l in labels if labels.count(l) > 1})
            raise ValueError(f"frame {f}: duplicate predicted labels {', '.join(dup)}")

    matches: list[Match] = []
    for f in sorted(set(p_frames) & set(g_frames)):
        ps, gs = p_frames[f], g_frames[f]
        iou = iou_matrix(_ltwh(ps), _ltwh(gs))
        if mode == "greedy":
            cand = [(-iou[i, j], i, j) for i, j in zip(*np.nonzero(iou >= iou_threshold))]
            used_p, used_g = set(), set()
            for neg, i, j in sorted(cand):
                if i in used_p or j in used_g:
                    continue
                used_p.add(i)
                used_g.add(j)
                matches.append(Match(ps[i], gs[j], -neg))
        else:
            cost = np.where(iou >= iou_threshold, 1.0 - iou, 1e6)
            for i, j in solve_assignment(cost).pairs:
                if iou[i, j] >= iou_threshold:
                    matches.append(Match(ps[i], gs[j], float(iou[i, j])))
    return matches


def weighted_accuracy(
    pred: Sequence[LabeledBox],
    gt: Sequence[LabeledBox],
    iou_threshold: float = IOU_THRESHOLD,
    mode: str = "greedy",
    impact_weight: float = IMPACT_WEIGHT,
) -> ScoreBreakdown:
    """Impact boxes count ``impact_weight`` times as much as the others."""
    if not gt:
        raise ValueError("weighted accuracy is undefined without ground-truth boxes")
    total_imp = sum(1 for g in gt if g.impact)
    total_nonimp = len(gt) - total_imp
    correct_imp = correct_nonimp = 0
    for m in match_predictions(pred, gt, iou_threshold, mode):
        if m.correct:
            if m.gt.impact:
                correct_imp += 1
            else:
                correct_nonimp += 1
    return ScoreBreakdown.from_counts(correct_nonimp, total_nonimp, correct_imp, total_imp, impact_weight)


REPORT_FIELDS = ("play", "correct_nonimp", "total_nonimp", "correct_imp", "total_imp", "weighted_accuracy")


def write_score_report(rows: Sequence[tuple[str, ScoreBreakdown]], path, impact_weight: float = IMPACT_WEIGHT) -> None:
    """One CSV row per play, followed by a pooled ``ALL`` row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for name, s in rows:
            w.writerow([name, *_fields(s)])
        if rows:
            pooled = ScoreBreakdown.from_counts(
                sum(s.correct_nonimp for _, s in rows),
                sum(s.total_nonimp for _, s in rows),
                sum(s.correct_imp for _, s in rows),
                sum(s.total_imp for _, s in rows),
                impact_weight,
            )
            w.writerow(["ALL", *_fields(pooled)])


def _fields(s: ScoreBreakdown) -> list:
    d = asdict(s)
    return [d[k] for k in REPORT_FIELDS[1:-1]] + [repr(s.weighted_accuracy)]


def summary(s: ScoreBreakdown) -> str:
    return (
        f"weighted accuracy {s.weighted_accuracy!r} "
        f"(non-impact {s.correct_nonimp}/{s.total_nonimp}, impact {s.correct_imp}/{s.total_imp})"
    )
