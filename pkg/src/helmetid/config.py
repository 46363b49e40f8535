"""Flat ``key = value`` run configuration shared by the command-line tools.

Lines starting with ``#`` or ``;`` are comments. Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from typing import Iterable

from .frame_assign import FrameAssignConfig
from .metrics import IMPACT_WEIGHT, IOU_THRESHOLD, MATCH_MODES
from .pipeline import PipelineConfig
from .simulator import MOTIONS, CAMERA_PRESETS, ScenarioConfig
from .tracker import TrackerConfig

_SECTION = "run"


@dataclass
class RunConfig:
    # simulation
    seed: int = 0
    n_plays: int = 1
    n_players: int = 22
    n_frames: int = 200
    motion: str = "linear"
    camera: str = "sideline"
    jitter_sigma: float = 0.0
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    snap_frame: int = 10
    helmet_px: float = 30.0
    impact_radius: float = 2.5
    game_key: int = 1
    play_id: int = 1
    # tracking
    max_age: int = 5
    min_hits: int = 3
    iou_gate: float = 0.3
    conf_floor: float = 0.25
    color_weight: float = 0.3
    stationary_frames: int = 5
    stationary_px: float = 1.0
    # frame assignment
    alpha: float = 0.5
    ignore_threshold: float = 10.0
    icp_ignore_threshold: float = 0.25
    min_conf: float = 0.40
    window_len: int = 60
    icp_starts: int = 12
    sc_radial: int = 5
    sc_angular: int = 12
    team_penalty: float = 1e4
    refine_iters: int = 3
    seed_stride: int = 10
    use_teams: bool = True
    team_seed: int = 0
    # scoring
    match_iou: float = IOU_THRESHOLD
    match_mode: str = "greedy"
    impact_weight: float = float(IMPACT_WEIGHT)

    def __post_init__(self):
        if self.motion not in MOTIONS:
            raise ValueError(f"motion must be one of {MOTIONS}, got {self.motion!r}")
        if self.camera not in CAMERA_PRESETS:
            raise ValueError(f"camera must be one of {sorted(CAMERA_PRESETS)}, got {self.camera!r}")
        if self.match_mode not in MATCH_MODES:
            raise ValueError(f"match_mode must be one of {MATCH_MODES}, got {self.match_mode!r}")
        if self.n_plays < 1:
            raise ValueError("n_plays must be >= 1")

    def scenarios(self) -> list[ScenarioConfig]:
        return [
            ScenarioConfig(
                n_players=self.n_players, n_frames=self.n_frames, motion=self.motion,
                jitter_sigma=self.jitter_sigma, fp_rate=self.fp_rate, fn_rate=self.fn_rate,
                seed=self.seed + i, snap_frame=self.snap_frame, helmet_px=self.helmet_px,
                impact_radius=self.impact_radius, game_key=self.game_key, play_id=self.play_id + i,
            )
            for i in range(self.n_plays)
        ]

    def tracker(self) -> TrackerConfig:
        return TrackerConfig(
            max_age=self.max_age, min_hits=self.min_hits, iou_gate=self.iou_gate,
            conf_floor=self.conf_floor, color_weight=self.color_weight,
            stationary_frames=self.stationary_frames, stationary_px=self.stationary_px,
        )

    def frame_assign(self) -> FrameAssignConfig:
        return FrameAssignConfig(
            alpha=self.alpha, ignore_threshold=self.ignore_threshold,
            icp_ignore_threshold=self.icp_ignore_threshold, min_conf=self.min_conf,
            window_len=self.window_len, icp_starts=self.icp_starts, sc_radial=self.sc_radial,
            sc_angular=self.sc_angular, team_penalty=self.team_penalty, refine_iters=self.refine_iters,
        )

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            tracker=self.tracker(), assign=self.frame_assign(), seed_stride=self.seed_stride,
            use_teams=self.use_teams, team_seed=self.team_seed,
        )


def _convert(name: str, typ, raw: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low not in configparser.RawConfigParser.BOOLEAN_STATES:
                raise ValueError(raw)
            return configparser.RawConfigParser.BOOLEAN_STATES[low]
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ValueError(f"config key {name!r}: cannot parse {raw!r} as {typ.__name__}") from None


_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def _field_types() -> dict:
    return {f.name: _TYPES[f.type] if isinstance(f.type, str) else f.type for f in fields(RunConfig)}


def parse_pairs(pairs: Iterable[tuple[str, str]], base: RunConfig | None = None) -> RunConfig:
    types = _field_types()
    values = {} if base is None else {f.name: getattr(base, f.name) for f in fields(RunConfig)}
    unknown = []
    for key, raw in pairs:
        key = key.strip()
        if key not in types:
            unknown.append(key)
            continue
        values[key] = _convert(key, types[key], raw)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return RunConfig(**values)


def loads(text: str, base: RunConfig | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), delimiters=("=",))
    cp.optionxform = str  # keep key case so unknown keys are reported verbatim
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ValueError(f"malformed config: {exc}") from None
    return parse_pairs(cp.items(_SECTION), base)


def load(path, base: RunConfig | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), base)


def dumps(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"
