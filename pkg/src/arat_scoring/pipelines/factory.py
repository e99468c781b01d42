"""Construction and partial freezing of the video backbones."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from torch import nn

from .config import PipelineConfig
from .i3d import InceptionVideoNetwork
from .slowfast import SlowFastNetwork
from .transformer import SpaceTimeTransformer

logger = logging.getLogger(__name__)


def build_pipeline(config: PipelineConfig) -> nn.Module:
    """Instantiate the backbone named by ``config.kind``."""
    if config.kind == "slowfast":
        return SlowFastNetwork(config)
    if config.kind == "i3d":
        return InceptionVideoNetwork(config)
    if config.kind == "transformer":
        return SpaceTimeTransformer(config)
    raise ValueError(f"unknown pipeline kind {config.kind!r}")


@dataclass
class FreezeReport:
    """What ``freeze_early_layers`` did to a model."""

    frozen_stages: tuple[str, ...]
    frozen_params: int
    trainable_params: int


def freeze_early_layers(model: nn.Module, boundary: str | None) -> FreezeReport:
    """Disable gradients for every stage up to and including ``boundary``.

    Frozen stages are also recorded on the model (``frozen_stage_names``)
    so the training loop can hold their normalisation statistics fixed;
    without that, batch-norm running buffers would drift even with
    gradients off.  ``boundary=None`` freezes nothing.
    """
    names = model.stage_names()
    if boundary is None or boundary == "none":
        model.frozen_stage_names = ()
        return FreezeReport((), 0, sum(p.numel() for p in model.parameters()))
    if boundary not in names:
        raise ValueError(
            f"{type(model).__name__} has no stage {boundary!r}; "
            f"valid boundaries: {list(names) or 'none (all layers train)'}"
        )
    cut = names.index(boundary) + 1
    frozen = names[:cut]
    for name in frozen:
        for param in model.stage_module(name).parameters():
            param.requires_grad_(False)
    model.frozen_stage_names = frozen
    frozen_params = sum(p.numel() for p in model.parameters() if not p.requires_grad)
    trainable = sum(p.numel() for p in model.parameters() if p.requires_grad)
    logger.info(
        "froze stages %s: %d parameters frozen, %d trainable",
        ",".join(frozen), frozen_params, trainable,
    )
    return FreezeReport(tuple(frozen), frozen_params, trainable)


def apply_train_mode(model: nn.Module) -> None:
    """``model.train()`` that keeps frozen stages in eval mode."""
    model.train()
    for name in getattr(model, "frozen_stage_names", ()):
        model.stage_module(name).eval()
