from footprints.training.checkpoint import load_checkpoint, restore_rng, save_checkpoint
from footprints.training.events import EventLog, MetricEvent, read_events
from footprints.training.loop import (
    FitResult,
    TrainConfig,
    TrainingDivergedError,
    evaluate,
    fit,
)
from footprints.training.lr_finder import DivergenceError, LRFindResult, lr_find
from footprints.training.schedule import cosine_interp, one_cycle

__all__ = [
    "TrainConfig",
    "FitResult",
    "TrainingDivergedError",
    "fit",
    "evaluate",
    "lr_find",
    "LRFindResult",
    "DivergenceError",
    "one_cycle",
    "cosine_interp",
    "EventLog",
    "MetricEvent",
    "read_events",
    "save_checkpoint",
    "load_checkpoint",
    "restore_rng",
]
