from .types import (
    View,
    VIEW_ORDER,
    JOINT_NAMES,
    MIN_CLIP_FRAMES,
    PhaseAnnotation,
    ViewData,
    SegmentManifest,
    KeypointFrame,
    Joint,
    BoundingBox,
    ClipTensor,
    ValidationIssue,
    ArchiveIndex,
)
from .archive import (
    ArchiveError,
    load_manifest,
    read_frames,
    read_keypoints,
    read_boxes,
    box_for_frame,
)
from .labels import (
    EXCLUDED,
    map_label,
    display_score,
    filter_rated,
    split_dataset,
)
from .preprocess import (
    AUX_LAYOUT,
    RGB_LAYOUT,
    PreprocessConfig,
    ShortSegmentError,
    crop_region,
    preprocess_frames,
    uniform_indices,
    slow_from_fast,
    encode_keypoint_channels,
    kinematic_vector,
    sample_clip,
)
from .loader import SegmentClipDataset, build_loader
from .synthetic import (
    PHASE_NAMES,
    synthetic_manifests,
    write_synthetic_archive,
    separable_clip_batch,
    slowfast_pair,
)

__all__ = [
    "View",
    "VIEW_ORDER",
    "JOINT_NAMES",
    "MIN_CLIP_FRAMES",
    "PhaseAnnotation",
    "ViewData",
    "SegmentManifest",
    "KeypointFrame",
    "Joint",
    "BoundingBox",
    "ClipTensor",
    "ValidationIssue",
    "ArchiveIndex",
    "ArchiveError",
    "load_manifest",
    "read_frames",
    "read_keypoints",
    "read_boxes",
    "box_for_frame",
    "EXCLUDED",
    "map_label",
    "display_score",
    "filter_rated",
    "split_dataset",
    "AUX_LAYOUT",
    "RGB_LAYOUT",
    "PreprocessConfig",
    "ShortSegmentError",
    "crop_region",
    "preprocess_frames",
    "uniform_indices",
    "slow_from_fast",
    "encode_keypoint_channels",
    "kinematic_vector",
    "sample_clip",
    "SegmentClipDataset",
    "build_loader",
    "PHASE_NAMES",
    "synthetic_manifests",
    "write_synthetic_archive",
    "separable_clip_batch",
    "slowfast_pair",
]
