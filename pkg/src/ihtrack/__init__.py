"""Multi-object tracking by iterative hypothesis testing on a tracklet graph."""

__version__ = "0.1.0"

from .baseline import BaselineCosts, ksp_track, brute_force_partition
from .config import PRESETS, Settings, load_settings
from .detections import Detection, LabeledSequence, SyntheticConfig, ToyConfig, generate_synthetic, generate_toy
from .driver import DriverConfig, IncrementalTracker, RelaxSchedule, run_incremental, run_offline
from .evaluation import MotReport, evaluate
from .graph import GraphParams, Tracklet, TrackletGraph, build_graph
from .hypothesis import AppearanceParams, ValidationParams, hypothesis_test

__all__ = [
    "AppearanceParams",
    "BaselineCosts",
    "Detection",
    "DriverConfig",
    "GraphParams",
    "IncrementalTracker",
    "LabeledSequence",
    "MotReport",
    "PRESETS",
    "RelaxSchedule",
    "Settings",
    "SyntheticConfig",
    "ToyConfig",
    "Tracklet",
    "TrackletGraph",
    "ValidationParams",
    "brute_force_partition",
    "build_graph",
    "evaluate",
    "generate_synthetic",
    "generate_toy",
    "hypothesis_test",
    "ksp_track",
    "load_settings",
    "run_incremental",
    "run_offline",
]
