from .late import (
    DEFAULT_VIEW_WEIGHTS,
    DEFAULT_MODEL_WEIGHTS,
    late_fuse,
    late_fuse_views,
    late_fuse_models,
    weights_from_accuracies,
)
from .align import align_features
from .heads import (
    EARLY_VIEW_HIDDEN,
    EARLY_MODEL_HIDDEN,
    FusionHead,
    early_fuse_views,
    early_view_head,
    early_model_head,
    save_fusion_head,
    load_fusion_head,
)
from .train import train_fusion_head

__all__ = [
    "DEFAULT_VIEW_WEIGHTS",
    "DEFAULT_MODEL_WEIGHTS",
    "late_fuse",
    "late_fuse_views",
    "late_fuse_models",
    "weights_from_accuracies",
    "align_features",
    "EARLY_VIEW_HIDDEN",
    "EARLY_MODEL_HIDDEN",
    "FusionHead",
    "early_fuse_views",
    "early_view_head",
    "early_model_head",
    "save_fusion_head",
    "load_fusion_head",
    "train_fusion_head",
]
