"""Training for fusion heads: the backbones stay fixed, only the head fits."""
from __future__ import annotations

import logging

from ..pipelines.config import TrainConfig
from ..pipelines.train import TrainResult, train_pipeline

logger = logging.getLogger(__name__)

#: Fusion heads converge quickly over frozen features.
FUSION_EPOCHS = 5


def train_fusion_head(
    head,
    train_loader,
    val_loader=None,
    config: TrainConfig | None = None,
) -> TrainResult:
    """Fit a fusion head on precomputed-feature batches.

    Reuses the backbone training loop (Adam, clipping, best-epoch
    selection); only the default epoch count differs.
    """
    cfg = config or TrainConfig(epochs=FUSION_EPOCHS)
    return train_pipeline(head, train_loader, val_loader, cfg)
