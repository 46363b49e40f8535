"""Label helmet detections in play footage with player identities by matching
image-space detections against field-space tracking data."""

from .core import (
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
from .metrics import ScoreBreakdown, weighted_accuracy
from .pipeline import PipelineConfig, baseline_nearest, run_play
from .simulator import ScenarioConfig, camera_preset, generate_play

__version__ = "0.1.0"
