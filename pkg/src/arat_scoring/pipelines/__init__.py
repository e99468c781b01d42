from .config import (
    PipelineConfig,
    TrainConfig,
    ShapeMismatchError,
    FULL_FEATURE_DIMS,
    PIPELINE_KINDS,
    CLIP_FRAMES,
    DEFAULT_FREEZE,
)
from .factory import build_pipeline, freeze_early_layers, FreezeReport, apply_train_mode
from .train import (
    TrainResult,
    TrainingDivergedError,
    train_pipeline,
    extract_features,
    predict,
    save_checkpoint,
    load_checkpoint,
    checkpoint_name,
)

__all__ = [
    "PipelineConfig",
    "TrainConfig",
    "FULL_FEATURE_DIMS",
    "PIPELINE_KINDS",
    "CLIP_FRAMES",
    "DEFAULT_FREEZE",
    "build_pipeline",
    "freeze_early_layers",
    "FreezeReport",
    "apply_train_mode",
    "TrainResult",
    "TrainingDivergedError",
    "ShapeMismatchError",
    "train_pipeline",
    "extract_features",
    "predict",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_name",
]
