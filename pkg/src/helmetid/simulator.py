"""Synthetic plays with known identities.

Players move on the field plane, a pinhole camera projects their helmets into
the image, and independent noise channels (jitter, false positives, missed
detections) turn ground-truth boxes into detections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    FIELD_LENGTH,
    FIELD_WIDTH,
    SNAP_EVENT,
    BoundingBox,
    Detection,
    LabeledBox,
    PlayBundle,
    PlayerLabel,
    PlayKey,
    Side,
    TrackingSample,
    View,
)
from .geometry import Homography

MAX_SPEED = 11.0  # yards / s
TEAM_COLORS = {Side.HOME: (0.92, 0.92, 0.88), Side.VISITOR: (0.62, 0.12, 0.15)}


class BehindCameraError(ValueError):
    pass


class ScenarioError(RuntimeError):
    pass


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera over the field plane (z = 0, yards).

    ``yaw`` is the heading of the optical axis in the field plane measured
    from +x, ``pitch`` its depression below the horizon and ``roll`` a
    rotation of the image about the optical axis. The principal point is the
    image center.
    """

    position: tuple[float, float, float]
    yaw: float
    pitch: float
    roll: float = 0.0
    focal: float = 1000.0
    image_size: tuple[int, int] = (1280, 720)
    view: View = View.SIDELINE

    def __post_init__(self):
        if self.position[2] <= 0:
            raise ValueError("camera height must be positive")
        if self.focal <= 0:
            raise ValueError("focal length must be positive")

    def rotation(self) -> np.ndarray:
        """World-to-camera rotation with rows (right, down, forward)."""
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        forward = np.array([cp * cy, cp * sy, -sp])
        right = np.array([sy, -cy, 0.0])
        down = np.cross(forward, right)
        cr, sr = math.cos(self.roll), math.sin(self.roll)
        right, down = cr * right + sr * down, -sr * right + cr * down
        return np.vstack([right, down, forward])

    def to_camera(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        world = np.hstack([p, np.zeros((len(p), 1))])
        return (world - np.asarray(self.position, dtype=float)) @ self.rotation().T

    def depth(self, pts) -> np.ndarray:
        return self.to_camera(pts)[:, 2]

    def project(self, pts) -> np.ndarray:
        cam = self.to_camera(pts)
        if np.any(cam[:, 2] <= 0):
            raise BehindCameraError("point lies behind the camera")
        w, h = self.image_size
        u = w / 2.0 + self.focal * cam[:, 0] / cam[:, 2]
        v = h / 2.0 + self.focal * cam[:, 1] / cam[:, 2]
        return np.column_stack([u, v])

    def homography(self) -> Homography:
        """Field-plane to image homography of this camera."""
        r = self.rotation()
        t = -r @ np.asarray(self.position, dtype=float)
        w, h = self.image_size
        k = np.array([[self.focal, 0, w / 2.0], [0, self.focal, h / 2.0], [0, 0, 1.0]])
        return Homography(k @ np.column_stack([r[:, 0], r[:, 1], t]))


def project_to_image(cam: CameraModel, p) -> np.ndarray:
    """Pixel position of one field point."""
    return cam.project(np.asarray(p, dtype=float).reshape(1, 2))[0]


def look_at(position, target, focal: float, roll: float = 0.0, view: View = View.SIDELINE,
            image_size=(1280, 720)) -> CameraModel:
    d = np.asarray(target, dtype=float) - np.asarray(position, dtype=float)
    yaw = math.atan2(d[1], d[0])
    pitch = math.atan2(-d[2], math.hypot(d[0], d[1]))
    return CameraModel(tuple(float(v) for v in position), yaw, pitch, roll, focal, tuple(image_size), view)


CAMERA_PRESETS = {
    "sideline": lambda: look_at((60.0, -15.0, 70.0), (60.0, 26.65, 0.0), focal=1050.0),
    "endzone": lambda: look_at((0.0, 26.65, 80.0), (60.0, 26.65, 0.0), focal=1000.0, view=View.ENDZONE),
}


def camera_preset(name: str) -> CameraModel:
    try:
        return CAMERA_PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown camera preset {name!r}; choose from {sorted(CAMERA_PRESETS)}") from None


MOTIONS = ("linear", "curved", "scripted")


@dataclass
class ScenarioConfig:
    n_players: int = 22
    n_frames: int = 200
    motion: str = "linear"
    jitter_sigma: float = 0.0
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    seed: int = 0
    snap_frame: int = 10
    fps: float = 30.0
    helmet_px: float = 30.0
    color_noise: float = 0.03
    impact_radius: float = 2.5
    # image-space spacing between helmet centers, in units of box size
    min_separation: float = 0.8
    game_key: int = 1
    play_id: int = 1
    max_attempts: int = 200

    def __post_init__(self):
        if self.n_players < 2:
            raise ValueError("n_players must be >= 2")
        for name in ("fp_rate", "fn_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.motion not in MOTIONS:
            raise ValueError(f"motion must be one of {MOTIONS}")
        if not 1 <= self.snap_frame <= self.n_frames:
            raise ValueError("snap_frame must lie within [1, n_frames]")


@dataclass
class _Streams:
    """Independent random streams so one channel never shifts another."""

    motion: np.random.Generator
    jitter: np.random.Generator
    fp: np.random.Generator
    fn: np.random.Generator
    conf: np.random.Generator
    color: np.random.Generator
    order: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "_Streams":
        kids = np.random.SeedSequence(seed).spawn(7)
        return cls(*(np.random.default_rng(k) for k in kids))


def _roster(rng: np.random.Generator, n_players: int) -> list[PlayerLabel]:
    n_home = (n_players + 1) // 2
    home = rng.choice(np.arange(1, 100), size=n_home, replace=False)
    away = rng.choice(np.arange(1, 100), size=n_players - n_home, replace=False)
    return [PlayerLabel(Side.HOME, int(j)) for j in sorted(home)] + [
        PlayerLabel(Side.VISITOR, int(j)) for j in sorted(away)
    ]


def _formation(rng: np.random.Generator, n: int, spacing: float = 5.0) -> np.ndarray:
    pts: list[np.ndarray] = []
    while len(pts) < n:
        p = np.array([rng.uniform(42.0, 78.0), rng.uniform(9.0, FIELD_WIDTH - 9.0)])
        if all(np.hypot(*(p - q)) >= spacing for q in pts):
            pts.append(p)
    return np.array(pts)


def _trajectories(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Positions, shape ``(n_frames, n_players, 2)``; frame index 0 is frame 1."""
    n, T = cfg.n_players, cfg.n_frames
    dt = 1.0 / cfg.fps
    start = _formation(rng, n)
    direction = rng.choice([-1.0, 1.0])
    drift = np.array([direction * rng.uniform(1.0, 3.0), rng.uniform(-0.5, 0.5)])
    vel = drift + rng.normal(0.0, 0.5, size=(n, 2))
    turn = rng.uniform(-0.25, 0.25, size=n)
    cut_time = rng.uniform(1.0, 3.0, size=n)
    cut_angle = rng.choice([-1.0, 1.0], size=n) * rng.uniform(0.3, 0.8, size=n)
    speed = np.linalg.norm(vel, axis=1)
    over = speed > MAX_SPEED
    vel[over] *= (MAX_SPEED / speed[over])[:, None]

    pos = np.empty((T, n, 2))
    p = start.copy()
    v = vel.copy()
    for k in range(T):
        frame = k + 1
        if frame > cfg.snap_frame:
            t = (frame - cfg.snap_frame) * dt
            if cfg.motion == "curved":
                c, s = np.cos(turn * dt), np.sin(turn * dt)
                v = np.column_stack([c * v[:, 0] - s * v[:, 1], s * v[:, 0] + c * v[:, 1]])
            elif cfg.motion == "scripted":
                cutting = np.abs(t - cut_time) < dt / 2
                if np.any(cutting):
                    c, s = np.cos(cut_angle), np.sin(cut_angle)
                    rot = np.column_stack([c * v[:, 0] - s * v[:, 1], s * v[:, 0] + c * v[:, 1]])
                    v = np.where(cutting[:, None], rot, v)
            p = p + v * dt
        pos[k] = p
    return pos


def _check_bounds(pos: np.ndarray) -> bool:
    x, y = pos[..., 0], pos[..., 1]
    return bool(np.all((x >= 0) & (x <= FIELD_LENGTH) & (y >= 0) & (y <= FIELD_WIDTH)))


def _image_layout(cam: CameraModel, pos: np.ndarray, cfg: ScenarioConfig, ref_depth: float):
    T, n, _ = pos.shape
    flat = pos.reshape(-1, 2)
    depth = cam.depth(flat)
    if np.any(depth <= 0):
        raise BehindCameraError("a player is behind the camera")
    centers = cam.project(flat).reshape(T, n, 2)
    sizes = (cfg.helmet_px * ref_depth / depth).reshape(T, n)
    return centers, sizes


def _layout_ok(cam: CameraModel, centers: np.ndarray, sizes: np.ndarray, cfg: ScenarioConfig) -> bool:
    w, h = cam.image_size
    half = sizes / 2.0
    if np.any(centers[..., 0] - half < 0) or np.any(centers[..., 0] + half > w):
        return False
    if np.any(centers[..., 1] - half < 0) or np.any(centers[..., 1] + half > h):
        return False
    n = centers.shape[1]
    iu = np.triu_indices(n, 1)
    for k in range(centers.shape[0]):
        c = centers[k]
        d = np.hypot(c[:, None, 0] - c[None, :, 0], c[:, None, 1] - c[None, :, 1])[iu]
        s = (sizes[k][:, None] + sizes[k][None, :])[iu] / 2.0
        if np.any(d < cfg.min_separation * s):
            return False
    return True


def _reference_depth(cam: CameraModel) -> float:
    return float(cam.depth([[60.0, FIELD_WIDTH / 2.0]])[0])


def _tracking_samples(pos: np.ndarray, roster: Sequence[PlayerLabel], cfg: ScenarioConfig) -> list[TrackingSample]:
    T = pos.shape[0]
    dt = 1.0 / cfg.fps
    vel = np.gradient(pos, dt, axis=0) if T > 1 else np.zeros_like(pos)
    speed = np.linalg.norm(vel, axis=2)
    acc = np.gradient(speed, dt, axis=0) if T > 1 else np.zeros_like(speed)
    heading = np.degrees(np.arctan2(vel[..., 1], vel[..., 0]))
    out = []
    for k in range(T):
        frame = k + 1
        event = SNAP_EVENT if frame == cfg.snap_frame else None
        for i, label in enumerate(roster):
            out.append(
                TrackingSample(
                    player=label,
                    frame=frame,
                    x=float(pos[k, i, 0]),
                    y=float(pos[k, i, 1]),
                    o=float(heading[k, i]),
                    dir=float(heading[k, i]),
                    s=float(speed[k, i]),
                    a=float(acc[k, i]),
                    event=event,
                )
            )
    return out


def _ground_truth(pos, centers, sizes, roster, cfg: ScenarioConfig) -> list[LabeledBox]:
    out = []
    n = len(roster)
    for k in range(pos.shape[0]):
        d = np.hypot(pos[k][:, None, 0] - pos[k][None, :, 0], pos[k][:, None, 1] - pos[k][None, :, 1])
        np.fill_diagonal(d, np.inf)
        impact = d.min(axis=1) < cfg.impact_radius
        for i in range(n):
            s = float(sizes[k, i])
            box = BoundingBox.from_center(float(centers[k, i, 0]), float(centers[k, i, 1]), s, s)
            out.append(LabeledBox(k + 1, box, roster[i], bool(impact[i])))
    return out


def perturb_detections(
    gt: Sequence[LabeledBox],
    cfg: ScenarioConfig,
    image_size: tuple[int, int] = (1280, 720),
    streams: Optional[_Streams] = None,
) -> list[Detection]:
    """Turn ground-truth boxes into detections through the noise channels.

    Every channel draws for every box whatever its rate, so changing one rate
    leaves the other channels' draws untouched.
    """
    rs = streams or _Streams.from_seed(cfg.seed)
    w, h = image_size
    by_frame: dict[int, list[Detection]] = {}
    for g in gt:
        drop = rs.fn.random() < cfg.fn_rate
        dx, dy = rs.jitter.normal(0.0, 1.0, size=2) * cfg.jitter_sigma
        conf = float(rs.conf.uniform(0.5, 1.0))
        base = np.asarray(TEAM_COLORS[g.label.side])
        color = np.clip(base + rs.color.normal(0.0, cfg.color_noise, size=3), 0.0, 1.0)
        fp = rs.fp.random() < cfg.fp_rate
        fp_center = rs.fp.uniform([g.box.width, g.box.height], [w - g.box.width, h - g.box.height])
        fp_conf = float(rs.fp.uniform(0.2, 0.7))
        fp_color = rs.fp.random(3)
        dets = by_frame.setdefault(g.frame, [])
        if not drop:
            box = BoundingBox(g.box.left + float(dx), g.box.top + float(dy), g.box.width, g.box.height)
            dets.append(Detection(g.frame, box, conf, tuple(float(c) for c in color)))
        if fp:
            box = BoundingBox.from_center(float(fp_center[0]), float(fp_center[1]), g.box.width, g.box.height)
            dets.append(Detection(g.frame, box, fp_conf, tuple(float(c) for c in fp_color)))
    out: list[Detection] = []
    for frame in sorted(by_frame):
        dets = by_frame[frame]
        order = rs.order.permutation(len(dets))
        out.extend(dets[i] for i in order)
    return out


@dataclass
class SimulatedPlay:
    bundle: PlayBundle
    ground_truth: list[LabeledBox]
    camera: CameraModel
    positions: np.ndarray = field(repr=False)
    roster: list[PlayerLabel] = field(default_factory=list)

    def __iter__(self):
        # unpacks as (bundle, ground_truth)
        return iter((self.bundle, self.ground_truth))


def generate_play(cfg: ScenarioConfig, cam: Optional[CameraModel] = None) -> SimulatedPlay:
    """Simulate one play; a pure function of ``(cfg, cam)``.

    Formations whose helmets would crowd each other in the image or leave
    the field are redrawn from the same motion stream, up to
    ``cfg.max_attempts`` times.
    """
    cam = cam or camera_preset("sideline")
    rs = _Streams.from_seed(cfg.seed)
    roster = _roster(rs.motion, cfg.n_players)
    ref_depth = _reference_depth(cam)
    for _ in range(cfg.max_attempts):
        pos = _trajectories(cfg, rs.motion)
        if not _check_bounds(pos):
            continue
        centers, sizes = _image_layout(cam, pos, cfg, ref_depth)
        if _layout_ok(cam, centers, sizes, cfg):
            break
    else:
        raise ScenarioError(
            f"no valid play after {cfg.max_attempts} attempts (players leave the field or crowd the image)"
        )
    gt = _ground_truth(pos, centers, sizes, roster, cfg)
    dets = perturb_detections(gt, cfg, cam.image_size, rs)
    key = PlayKey(cfg.game_key, cfg.play_id, cam.view)
    bundle = PlayBundle(key, _tracking_samples(pos, roster, cfg), dets, cfg.snap_frame)
    return SimulatedPlay(bundle, gt, cam, pos, roster)
