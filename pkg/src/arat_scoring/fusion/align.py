"""Width alignment for feature vectors from different backbones."""
from __future__ import annotations

import torch
import torch.nn.functional as F


def align_features(
    features: list[torch.Tensor], target_dim: int | None = None
) -> list[torch.Tensor]:
    """Bring ``[batch, d_i]`` feature batches to one common width.

    Narrower vectors are zero-padded on the right; wider ones are
    linearly resampled down.  With no explicit target the widest input
    wins (so nothing is resampled, only padded).
    """
    if isinstance(features, torch.Tensor):
        raise TypeError("align_features takes a list of feature batches, not one tensor")
    if not features:
        return []
    for f in features:
        if f.ndim != 2:
            raise ValueError(f"expected [batch, dim] features, got shape {tuple(f.shape)}")
    target = max(f.shape[1] for f in features) if target_dim is None else target_dim
    out = []
    for f in features:
        d = f.shape[1]
        if d == target:
            out.append(f)
        elif d < target:
            out.append(F.pad(f, (0, target - d)))
        else:
            resampled = F.interpolate(
                f.unsqueeze(1), size=target, mode="linear", align_corners=True
            ).squeeze(1)
            out.append(resampled)
    return out
