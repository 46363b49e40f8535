"""CSV readers and writers for tracking, detections, ground truth and
assignments.

Readers never drop rows silently: every data row either parses or is
reported in ``ReadResult.rejected`` with its line number (the header is
line 1). Writers sort their rows and format floats with ``repr`` so that
writing the same data twice gives byte-identical files which read back to
the exact same values.
"""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .core import (
    MAX_HELMETS_PER_FRAME,
    BoundingBox,
    Detection,
    LabeledBox,
    PlayBundle,
    PlayerLabel,
    PlayKey,
    TrackingSample,
    View,
)

TRACKING_COLUMNS = ("gameKey", "playID", "player", "frame", "x", "y", "o", "dir", "s", "a", "event")
DETECTION_COLUMNS = ("gameKey", "playID", "view", "frame", "left", "width", "top", "height", "conf")
COLOR_COLUMNS = ("r", "g", "b")
GROUND_TRUTH_COLUMNS = ("gameKey", "playID", "view", "frame", "label", "left", "width", "top", "height")
IMPACT_COLUMN = "isDefinitiveImpact"
ASSIGNMENT_COLUMNS = GROUND_TRUTH_COLUMNS

_OPTIONAL_TRACKING = {"o", "dir", "s", "a", "event"}


class SchemaError(ValueError):
    def __init__(self, path, missing: Sequence[str]):
        self.missing = list(missing)
        super().__init__(f"{path}: missing required column(s): {', '.join(self.missing)}")


class EmptyFileError(ValueError):
    pass


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass
class ReadResult:
    groups: dict = field(default_factory=dict)
    rejected: list[RowError] = field(default_factory=list)

    @property
    def n_parsed(self) -> int:
        return sum(len(v) for v in self.groups.values())


def _int(text: str) -> int:
    return int(text.strip())


def _real(text: str) -> float:
    v = float(text.strip())
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    return v


def _flag(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true"):
        return True
    if t in ("0", "false", ""):
        return False
    raise ValueError(f"invalid impact flag {text!r}")


def _read(path, required: Sequence[str], parse_row: Callable[[dict], tuple]) -> ReadResult:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyFileError(f"{path}: file is empty")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise SchemaError(path, missing)
        out = ReadResult(defaultdict(list))
        for row in reader:
            line = reader.line_num
            if None in row or None in row.values():
                n = len(reader.fieldnames)
                out.rejected.append(RowError(line, f"expected {n} fields"))
                continue
            try:
                key, item = parse_row(row)
            except (ValueError, TypeError, KeyError) as exc:
                out.rejected.append(RowError(line, str(exc)))
                continue
            out.groups[key].append(item)
    out.groups = dict(out.groups)
    return out


def read_tracking(path) -> ReadResult:
    """Tracking samples grouped by ``(game_key, play_id)``."""
    required = [c for c in TRACKING_COLUMNS if c not in _OPTIONAL_TRACKING]

    def parse(row):
        key = (_int(row["gameKey"]), _int(row["playID"]))
        opt = {k: _real(row[k]) for k in ("o", "dir", "s", "a") if row.get(k) not in (None, "")}
        event = (row.get("event") or "").strip() or None
        sample = TrackingSample(
            PlayerLabel.parse(row["player"]), _int(row["frame"]), _real(row["x"]), _real(row["y"]), event=event, **opt
        )
        return key, sample

    return _read(path, required, parse)


def _box(row) -> BoundingBox:
    return BoundingBox(_real(row["left"]), _real(row["top"]), _real(row["width"]), _real(row["height"]))


def _key(row) -> PlayKey:
    return PlayKey(_int(row["gameKey"]), _int(row["playID"]), View(row["view"].strip()))


def read_detections(path) -> ReadResult:
    """Detections grouped by :class:`PlayKey` (which carries the view)."""

    def parse(row):
        color = None
        vals = [row.get(c) for c in COLOR_COLUMNS]
        if all(v not in (None, "") for v in vals):
            color = tuple(_real(v) for v in vals)
        return _key(row), Detection(_int(row["frame"]), _box(row), _real(row["conf"]), color)

    return _read(path, DETECTION_COLUMNS, parse)


def read_ground_truth(path) -> ReadResult:
    """Labeled boxes grouped by :class:`PlayKey`; the impact flag defaults to false."""

    def parse(row):
        impact = _flag(row.get(IMPACT_COLUMN) or "")
        return _key(row), LabeledBox(_int(row["frame"]), _box(row), PlayerLabel.parse(row["label"]), impact)

    return _read(path, GROUND_TRUTH_COLUMNS, parse)


def bundles_from(tracking: ReadResult, detections: ReadResult) -> list[PlayBundle]:
    """Pair every detection group with the tracking of its play, sorted by key."""
    out = []
    for key in sorted(detections.groups, key=PlayKey.sort_key):
        trk = tracking.groups.get((key.game_key, key.play_id), [])
        out.append(PlayBundle(key, tuple(trk), tuple(detections.groups[key])))
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _label_key(lbl: PlayerLabel):
    return (lbl.side.value, lbl.jersey)


def _as_groups(assignments, key: Optional[PlayKey]) -> Mapping[PlayKey, Sequence[LabeledBox]]:
    if isinstance(assignments, Mapping):
        return assignments
    if key is None:
        raise ValueError("a play key is needed when writing a plain list of boxes")
    return {key: list(assignments)}


def _box_fields(b: BoundingBox):
    return [float(b.left), float(b.width), float(b.top), float(b.height)]


def write_assignments(assignments, path, key: Optional[PlayKey] = None) -> None:
    """Write labeled boxes, sorted by play, frame and label.

    ``assignments`` maps each :class:`PlayKey` to its boxes, or is a plain
    list when ``key`` is given. Writing is refused when a frame repeats a
    label or holds more than 22 boxes.
    """
    groups = _as_groups(assignments, key)
    rows = []
    for k in sorted(groups, key=PlayKey.sort_key):
        per_frame = defaultdict(list)
        for b in groups[k]:
            per_frame[b.frame].append(b.label)
        for f, labels in per_frame.items():
            dup = [str(l) for l, n in Counter(labels).items() if n > 1]
            if dup:
                raise ValueError(f"{k} frame {f}: label(s) {', '.join(sorted(dup))} appear more than once")
            if len(labels) > MAX_HELMETS_PER_FRAME:
                raise ValueError(f"{k} frame {f}: {len(labels)} boxes exceed the limit of {MAX_HELMETS_PER_FRAME}")
        for b in sorted(groups[k], key=lambda b: (b.frame, _label_key(b.label))):
            rows.append([k.game_key, k.play_id, k.view.value, b.frame, str(b.label), *_box_fields(b.box)])
    _write(path, ASSIGNMENT_COLUMNS, rows)


def write_ground_truth(groups: Mapping[PlayKey, Sequence[LabeledBox]], path) -> None:
    rows = []
    for k in sorted(groups, key=PlayKey.sort_key):
        for b in sorted(groups[k], key=lambda b: (b.frame, _label_key(b.label))):
            rows.append([k.game_key, k.play_id, k.view.value, b.frame, str(b.label), *_box_fields(b.box), int(b.impact)])
    _write(path, (*GROUND_TRUTH_COLUMNS, IMPACT_COLUMN), rows)


def write_detections(groups: Mapping[PlayKey, Sequence[Detection]], path) -> None:
    """Detections in their given order; color columns are written when any box has a color."""
    with_color = any(d.color is not None for ds in groups.values() for d in ds)
    header = DETECTION_COLUMNS + (COLOR_COLUMNS if with_color else ())
    rows = []
    for k in sorted(groups, key=PlayKey.sort_key):
        for d in sorted(groups[k], key=lambda d: d.frame):
            row = [k.game_key, k.play_id, k.view.value, d.frame, *_box_fields(d.box), float(d.confidence)]
            if with_color:
                row += [float(c) for c in d.color] if d.color is not None else ["", "", ""]
            rows.append(row)
    _write(path, header, rows)


def write_tracking(groups: Mapping[tuple[int, int], Sequence[TrackingSample]], path) -> None:
    rows = []
    for gk, pid in sorted(groups):
        for t in sorted(groups[(gk, pid)], key=lambda t: (t.frame, _label_key(t.player))):
            rows.append([gk, pid, str(t.player), t.frame, float(t.x), float(t.y),
                         float(t.o), float(t.dir), float(t.s), float(t.a), t.event or ""])
    _write(path, TRACKING_COLUMNS, rows)
