"""Configuration objects shared by the three video classification backbones.

Two scales are supported for every backbone:

* ``full`` -- the full-size networks used for real training runs.
* ``desk``  -- topology-preserving miniatures (same stages, same branch
  structure, narrower/shallower) that train in seconds on a CPU.  These
  exist so that behavioural tests can exercise real optimisation instead
  of mocking it.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


PIPELINE_KINDS = ("slowfast", "i3d", "transformer")


class ShapeMismatchError(ValueError):
    """An input clip does not match what the backbone was built for."""

#: Output width of ``forward_features`` for the full-scale networks.
FULL_FEATURE_DIMS = {"slowfast": 2304, "i3d": 1024, "transformer": 768}

#: Default freeze boundary per backbone (``None`` means train everything).
DEFAULT_FREEZE = {"slowfast": "s3", "i3d": "mixed_4b", "transformer": None}

#: Frames consumed per clip, per backbone.  SlowFast takes a (slow, fast)
#: pair; the loader carries the fast clip's frame count here.
CLIP_FRAMES = {"slowfast": 8, "i3d": 32, "transformer": 32}


@dataclass
class PipelineConfig:
    """Architecture hyper-parameters for one backbone."""

    kind: str
    scale: str = "full"
    num_classes: int = 2
    #: Input channels; ``None`` picks the per-backbone default (3 for the
    #: convolutional networks, 9 for the transformer: RGB plus 4 joint
    #: heatmap channels plus 2 object-position planes).
    in_channels: int | None = None
    #: Head dropout probability (used by the I3D head only).
    dropout: float = 0.5
    #: Name of the last stage to freeze during fine-tuning, or ``None``.
    freeze_boundary: str | None = field(default=None)

    def __post_init__(self) -> None:
        if self.kind not in PIPELINE_KINDS:
            raise ValueError(
                f"unknown pipeline kind {self.kind!r}; expected one of {PIPELINE_KINDS}"
            )
        if self.scale not in ("full", "desk"):
            raise ValueError(f"unknown scale {self.scale!r}; expected 'full' or 'desk'")
        if self.in_channels is None:
            self.in_channels = 9 if self.kind == "transformer" else 3
        if self.freeze_boundary is None and self.scale == "full":
            self.freeze_boundary = DEFAULT_FREEZE[self.kind]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "PipelineConfig":
        return cls(**payload)


@dataclass
class TrainConfig:
    """Optimisation settings for fine-tuning a backbone head-first."""

    learning_rate: float = 1e-4
    epochs: int = 10
    batch_size: int = 4
    grad_clip_max_norm: float = 1.0
    weight_decay: float = 0.0
    seed: int = 42
    #: Re-seed and shuffle identically given the same seed.
    log_every: int = 10

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        return cls(**payload)
