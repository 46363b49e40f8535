"""Domain types shared across the package and play-level data conditioning.

Field coordinates are yards on a 120 x 53.3 field (endzones included). Image
coordinates are pixels with the origin at the top-left corner and ``y``
pointing down.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace
from typing import Optional

FIELD_LENGTH = 120.0
FIELD_WIDTH = 53.3
MAX_HELMETS_PER_FRAME = 22
SNAP_EVENT = "ball_snap"

_LABEL_RE = re.compile(r"^([HV])([0-9]{1,2})$")


class View(str, enum.Enum):
    SIDELINE = "Sideline"
    ENDZONE = "Endzone"


class Side(str, enum.Enum):
    HOME = "Home"
    VISITOR = "Visitor"


def normalize_angle(deg: float) -> float:
    """Wrap an angle in degrees into [0, 360)."""
    out = float(deg) % 360.0
    # -1e-17 % 360 rounds to 360.0
    return 0.0 if out >= 360.0 else out


@dataclass(frozen=True)
class PlayKey:
    game_key: int
    play_id: int
    view: View = View.SIDELINE

    def __post_init__(self):
        if self.game_key <= 0 or self.play_id <= 0:
            raise ValueError(f"game_key and play_id must be positive, got {self}")
        object.__setattr__(self, "view", View(self.view))

    def sort_key(self):
        return (self.game_key, self.play_id, self.view.value)

    def __str__(self):
        return f"{self.game_key}_{self.play_id}_{self.view.value}"


@dataclass(frozen=True, order=True)
class PlayerLabel:
    side: Side
    jersey: int

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        if not 0 <= int(self.jersey) <= 99:
            raise ValueError(f"jersey must be in [0, 99], got {self.jersey}")

    @classmethod
    def parse(cls, text: str) -> "PlayerLabel":
        """Parse ``H23`` / ``V07`` style labels."""
        m = _LABEL_RE.match(text.strip())
        if m is None:
            raise ValueError(f"invalid player label {text!r}")
        side = Side.HOME if m.group(1) == "H" else Side.VISITOR
        return cls(side, int(m.group(2)))

    def __str__(self):
        return f"{self.side.value[0]}{self.jersey}"


@dataclass(frozen=True)
class TrackingSample:
    player: PlayerLabel
    frame: int
    x: float
    y: float
    o: float = 0.0
    dir: float = 0.0
    s: float = 0.0
    a: float = 0.0
    event: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "o", normalize_angle(self.o))
        object.__setattr__(self, "dir", normalize_angle(self.dir))


@dataclass(frozen=True)
class BoundingBox:
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"box width and height must be positive, got {self}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.left + self.width / 2.0, self.top + self.height / 2.0)

    @property
    def area(self) -> float:
        return self.width * self.height

    @classmethod
    def from_center(cls, cx: float, cy: float, width: float, height: float) -> "BoundingBox":
        return cls(cx - width / 2.0, cy - height / 2.0, width, height)


@dataclass(frozen=True)
class Detection:
    frame: int
    box: BoundingBox
    confidence: float
    color: Optional[tuple[float, float, float]] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.frame < 0:
            raise ValueError(f"frame must be >= 0, got {self.frame}")


@dataclass(frozen=True)
class LabeledBox:
    frame: int
    box: BoundingBox
    label: PlayerLabel
    impact: bool = False


@dataclass(frozen=True)
class PlayBundle:
    key: PlayKey
    tracking: tuple[TrackingSample, ...] = ()
    detections: tuple[Detection, ...] = ()
    snap_frame: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "tracking", tuple(self.tracking))
        object.__setattr__(self, "detections", tuple(self.detections))

    def frames(self) -> list[int]:
        return sorted({d.frame for d in self.detections} | {t.frame for t in self.tracking})

    def tracking_at(self, frame: int) -> list[TrackingSample]:
        return [t for t in self.tracking if t.frame == frame]

    def detections_at(self, frame: int) -> list[Detection]:
        return [d for d in self.detections if d.frame == frame]


class MissingSnapError(ValueError):
    pass


def find_snap_frame(tracking) -> Optional[int]:
    """First frame carrying the snap event, or None."""
    frames = [t.frame for t in tracking if t.event == SNAP_EVENT]
    return min(frames) if frames else None


def with_snap(bundle: PlayBundle) -> PlayBundle:
    """Fill ``snap_frame`` from the tracking events when it is unset."""
    if bundle.snap_frame is not None:
        return bundle
    return replace(bundle, snap_frame=find_snap_frame(bundle.tracking))


def trim_pre_snap(bundle: PlayBundle) -> PlayBundle:
    """Drop every tracking sample and detection before the snap."""
    snap = bundle.snap_frame
    if snap is None:
        snap = find_snap_frame(bundle.tracking)
    if snap is None:
        raise MissingSnapError(f"play {bundle.key} has no {SNAP_EVENT!r} event")
    return replace(
        bundle,
        tracking=tuple(t for t in bundle.tracking if t.frame >= snap),
        detections=tuple(d for d in bundle.detections if d.frame >= snap),
        snap_frame=snap,
    )


def flip_endzone(bundle: PlayBundle) -> PlayBundle:
    """Rotate endzone tracking 180 degrees about the field center.

    Positions map to ``(120 - x, 53.3 - y)`` and both angles turn by 180
    degrees, so applying it twice is the identity. Detections are untouched.
    """
    if bundle.key.view != View.ENDZONE:
        raise ValueError(f"flip_endzone only applies to Endzone plays, got {bundle.key}")
    flipped = tuple(
        replace(
            t,
            x=FIELD_LENGTH - t.x,
            y=FIELD_WIDTH - t.y,
            o=normalize_angle(t.o + 180.0),
            dir=normalize_angle(t.dir + 180.0),
        )
        for t in bundle.tracking
    )
    return replace(bundle, tracking=flipped)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    frame: Optional[int]
    message: str


def validate_play(bundle: PlayBundle) -> list[Diagnostic]:
    """Sanity checks on a play; reports problems without modifying anything."""
    out: list[Diagnostic] = []
    counts: dict[int, int] = {}
    for d in bundle.detections:
        counts[d.frame] = counts.get(d.frame, 0) + 1
        if not 0.0 <= d.confidence <= 1.0:
            out.append(Diagnostic("confidence", d.frame, f"confidence {d.confidence} outside [0, 1]"))
    for frame in sorted(counts):
        if counts[frame] > MAX_HELMETS_PER_FRAME:
            out.append(
                Diagnostic(
                    "over-capacity frame",
                    frame,
                    f"{counts[frame]} detections exceed {MAX_HELMETS_PER_FRAME}",
                )
            )
    for t in bundle.tracking:
        if not (0.0 <= t.x <= FIELD_LENGTH and 0.0 <= t.y <= FIELD_WIDTH):
            out.append(Diagnostic("out of bounds", t.frame, f"{t.player} at ({t.x}, {t.y})"))
    zero = [t for t in bundle.tracking if t.frame == 0]
    if zero:
        out.append(Diagnostic("frame zero", 0, f"{len(zero)} tracking samples at frame 0 are droppable"))
    return out

