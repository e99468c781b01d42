"""Feature-level fusion heads.

Two levels exist:

* view level -- the three camera views of one backbone are concatenated
  (e.g. 3 x 2304 = 6912 for the dual-pathway net) and classified through
  a 512-unit hidden layer;
* model level -- the 512-d hidden activations of the three per-backbone
  view heads are concatenated (1536) and classified through a 256-unit
  hidden layer.
"""
from __future__ import annotations

import logging
from typing import Mapping

import torch
from torch import nn

from ..dataset import VIEW_ORDER

logger = logging.getLogger(__name__)

EARLY_VIEW_HIDDEN = 512
EARLY_MODEL_HIDDEN = 256


class FusionHead(nn.Module):
    """Linear -> ReLU -> Linear classifier over concatenated features."""

    def __init__(self, in_dim: int, hidden_dim: int, num_classes: int = 2) -> None:
        super().__init__()
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.fc1 = nn.Linear(in_dim, hidden_dim)
        self.relu = nn.ReLU(inplace=True)
        self.fc2 = nn.Linear(hidden_dim, num_classes)

    def intermediate(self, x: torch.Tensor) -> torch.Tensor:
        """Hidden activations, the unit this head contributes upward."""
        self._check(x)
        return self.relu(self.fc1(x))

    def _check(self, x: torch.Tensor) -> None:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(
                f"fusion head built for [batch, {self.in_dim}] inputs, "
                f"got {tuple(x.shape)}"
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.intermediate(x))


def early_view_head(feature_dim: int, num_classes: int = 2) -> FusionHead:
    """Head over the concatenation of one backbone's three views."""
    return FusionHead(3 * feature_dim, EARLY_VIEW_HIDDEN, num_classes)


def early_model_head(num_classes: int = 2) -> FusionHead:
    """Head over the concatenated hidden units of three view heads."""
    return FusionHead(3 * EARLY_VIEW_HIDDEN, EARLY_MODEL_HIDDEN, num_classes)


def early_fuse_views(
    features_by_view: Mapping[str, torch.Tensor], head: FusionHead
) -> torch.Tensor:
    """Concatenate per-view features in canonical view order and classify."""
    missing = [v for v in VIEW_ORDER if v.value not in features_by_view]
    if missing:
        raise ValueError(f"missing views: {[v.value for v in missing]}")
    stacked = torch.cat([features_by_view[v.value] for v in VIEW_ORDER], dim=1)
    return head(stacked)


def save_fusion_head(head: FusionHead, path) -> None:
    """Persist a head with enough metadata to rebuild it."""
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "in_dim": head.in_dim,
            "hidden_dim": head.hidden_dim,
            "num_classes": head.fc2.out_features,
            "state_dict": head.state_dict(),
        },
        path,
    )
    logger.info("wrote fusion head %s", path)


def load_fusion_head(path) -> FusionHead:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    head = FusionHead(payload["in_dim"], payload["hidden_dim"], payload["num_classes"])
    head.load_state_dict(payload["state_dict"])
    head.eval()
    return head
