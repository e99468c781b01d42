"""Gradient-weighted class activation maps for the convolutional backbones.

Only the convolutional pipelines expose spatio-temporal feature maps to
attribute over; the transformer pipeline is rejected up front.  A saliency
pass never touches parameter state: gradients are taken with respect to the
captured activations alone and the model weights stay bitwise identical.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

logger = logging.getLogger(__name__)


@dataclass
class Heatmap:
    """One clip's saliency map for one target class.

    ``values`` lives at the target layer's resolution, ``upsampled`` at the
    clip's.  Both are min-max normalised per clip: every entry is in [0, 1]
    and the maximum equals 1 unless the rectified map came out identically
    zero, in which case ``is_zero`` is set and the values stay all-zero.
    """

    values: torch.Tensor  # [T', H', W']
    upsampled: torch.Tensor  # [T, H, W]
    target_class: int
    layer: str
    is_zero: bool = False


def _saliency_modules(model: nn.Module) -> dict[str, nn.Module]:
    getter = getattr(model, "saliency_targets", None)
    if getter is None:
        raise TypeError(
            f"{type(model).__name__} exposes no convolutional saliency targets"
        )
    return getter()


def default_layer(model: nn.Module) -> str:
    """The layer reported when the caller names none (fast pathway wins)."""
    targets = _saliency_modules(model)
    return "fast" if "fast" in targets else next(iter(targets))


def _clip_for_layer(clips, layer: str) -> torch.Tensor:
    """The input tensor whose resolution the map is upsampled to."""
    if isinstance(clips, (tuple, list)):
        return clips[0] if layer == "slow" else clips[1]
    return clips


def _normalise(raw: torch.Tensor) -> tuple[torch.Tensor, bool]:
    high = raw.max()
    if high == 0:
        return torch.zeros_like(raw), True
    low = raw.min()
    if high == low:
        return torch.ones_like(raw), False
    return (raw - low) / (high - low), False


def grad_cam(
    model: nn.Module,
    clips,
    target_class: int,
    layer: str | None = None,
) -> list[Heatmap]:
    """Per-clip class activation maps at ``layer``, one Heatmap per clip.

    ``clips`` is a batched clip tensor, or the usual (slow, fast) pair for
    the two-pathway model.  Channel weights are the spatio-temporal mean of
    d(target logit)/d(activation); the map is the rectified weighted channel
    sum, normalised per clip and trilinearly upsampled to clip resolution.
    """
    targets = _saliency_modules(model)
    if layer is None:
        layer = default_layer(model)
    if layer not in targets:
        raise ValueError(f"unknown saliency layer {layer!r}; have {sorted(targets)}")

    captured: dict[str, torch.Tensor] = {}

    def keep(_module, _inputs, output):
        captured["activation"] = output

    handle = targets[layer].register_forward_hook(keep)
    was_training = model.training
    model.eval()
    try:
        if isinstance(clips, (tuple, list)):
            clips = tuple(c.detach().clone().requires_grad_(True) for c in clips)
        else:
            clips = clips.detach().clone().requires_grad_(True)
        with torch.enable_grad():
            logits = model(clips)
            if not 0 <= target_class < logits.shape[1]:
                raise ValueError(
                    f"target_class {target_class} outside 0..{logits.shape[1] - 1}"
                )
            activation = captured["activation"]
            if activation.ndim != 5:
                raise ValueError(
                    f"layer {layer!r} has no spatio-temporal extent "
                    f"(activation shape {tuple(activation.shape)})"
                )
            score = logits[:, target_class].sum()
            (grads,) = torch.autograd.grad(score, activation)
    finally:
        handle.remove()
        model.train(was_training)

    weights = grads.mean(dim=(2, 3, 4), keepdim=True)  # [B, C, 1, 1, 1]
    raw_maps = F.relu((weights * activation).sum(dim=1)).detach()  # [B, T', H', W']

    size = _clip_for_layer(clips, layer).shape[-3:]
    out = []
    for raw in raw_maps:
        values, is_zero = _normalise(raw)
        if is_zero:
            logger.warning("all-zero saliency map for class %d at %s", target_class, layer)
        upsampled = F.interpolate(
            values[None, None], size=size, mode="trilinear", align_corners=False
        )[0, 0]
        out.append(
            Heatmap(
                values=values,
                upsampled=upsampled,
                target_class=target_class,
                layer=layer,
                is_zero=is_zero,
            )
        )
    return out
