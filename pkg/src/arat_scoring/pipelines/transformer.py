"""Video transformer with factorised space-time attention.

Frames are cut into 16x16 patches and linearly embedded; every encoder
block then runs self-attention twice with a *shared* projection set --
first across the patches of each frame (space), then across time for
each patch position -- followed by a standard MLP.  Sharing the
projections between the two attention passes keeps the parameter count
at the level of the equivalent image transformer (~86M at full scale)
while still letting every layer mix information along both axes.

Input clips may carry extra channels beyond RGB (joint heatmaps and
object-position planes); only the patch embedding grows with them.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import torch
from torch import nn

from .config import ShapeMismatchError

logger = logging.getLogger(__name__)


def scaled_dot_attention(
    q: torch.Tensor, k: torch.Tensor, v: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """softmax(q k^T / sqrt(d)) v over the last two axes.

    ``q, k, v`` are ``[..., tokens, head_dim]``.  Returns the attended
    values and the attention weights (rows sum to 1).
    """
    d_k = q.shape[-1]
    scores = q @ k.transpose(-2, -1) / math.sqrt(d_k)
    weights = scores.softmax(dim=-1)
    return weights @ v, weights


class MultiHeadAttention(nn.Module):
    def __init__(self, dim: int, num_heads: int) -> None:
        super().__init__()
        if dim % num_heads:
            raise ValueError(f"dim {dim} not divisible by num_heads {num_heads}")
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(
        self, x: torch.Tensor, return_weights: bool = False
    ) -> torch.Tensor | tuple[torch.Tensor, torch.Tensor]:
        b, n, d = x.shape
        qkv = self.qkv(x).reshape(b, n, 3, self.num_heads, self.head_dim)
        q, k, v = qkv.permute(2, 0, 3, 1, 4)  # each [b, heads, n, head_dim]
        out, weights = scaled_dot_attention(q, k, v)
        out = out.transpose(1, 2).reshape(b, n, d)
        out = self.proj(out)
        if return_weights:
            return out, weights
        return out


class _Mlp(nn.Module):
    def __init__(self, dim: int, hidden: int) -> None:
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.act(self.fc1(x)))


class SpaceTimeBlock(nn.Module):
    """Pre-norm block: spatial attention, temporal attention, MLP.

    Both attention passes reuse one projection set; they differ only in
    which axis is folded into the batch.
    """

    def __init__(self, dim: int, num_heads: int, mlp_ratio: float = 4.0) -> None:
        super().__init__()
        self.norm_space = nn.LayerNorm(dim)
        self.norm_time = nn.LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, num_heads)
        self.norm_mlp = nn.LayerNorm(dim)
        self.mlp = _Mlp(dim, int(dim * mlp_ratio))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: [batch, frames, patches, dim]
        b, t, n, d = x.shape
        y = self.norm_space(x).reshape(b * t, n, d)
        x = x + self.attn(y).reshape(b, t, n, d)
        y = self.norm_time(x).permute(0, 2, 1, 3).reshape(b * n, t, d)
        x = x + self.attn(y).reshape(b, n, t, d).permute(0, 2, 1, 3)
        return x + self.mlp(self.norm_mlp(x))


@dataclass(frozen=True)
class _TransformerDims:
    dim: int
    depth: int
    num_heads: int
    patch_size: int
    image_size: int


_DIMS = {
    "full": _TransformerDims(dim=768, depth=12, num_heads=12, patch_size=16, image_size=224),
    "desk": _TransformerDims(dim=64, depth=2, num_heads=4, patch_size=16, image_size=64),
}


class SpaceTimeTransformer(nn.Module):
    """Factorised space-time transformer over patch embeddings."""

    kind = "transformer"

    def __init__(self, config, num_frames: int = 32) -> None:
        super().__init__()
        self.config = config
        dims = _DIMS[config.scale]
        self.patch_size = dims.patch_size
        self.num_frames = num_frames
        self.feature_dim = dims.dim

        self.image_size = dims.image_size
        self.num_patches = (dims.image_size // dims.patch_size) ** 2

        self.patch_embed = nn.Conv2d(
            config.in_channels, dims.dim, dims.patch_size, stride=dims.patch_size
        )
        # Factorised learned position information: one table over patch
        # positions, one over frame indices.
        self.space_pos = nn.Parameter(torch.zeros(1, 1, self.num_patches, dims.dim))
        self.time_pos = nn.Parameter(torch.zeros(1, num_frames, 1, dims.dim))
        self.blocks = nn.ModuleList(
            SpaceTimeBlock(dims.dim, dims.num_heads) for _ in range(dims.depth)
        )
        self.norm = nn.LayerNorm(dims.dim)
        self.head = nn.Linear(dims.dim, config.num_classes)
        nn.init.trunc_normal_(self.space_pos, std=0.02)
        nn.init.trunc_normal_(self.time_pos, std=0.02)

    # -- structure ---------------------------------------------------

    def stage_names(self) -> tuple[str, ...]:
        # Every parameter trains; there is no freeze boundary to name.
        return ()

    def stage_module(self, name: str) -> nn.Module:
        raise KeyError(name)

    # -- forward -----------------------------------------------------

    def _check_inputs(self, clip: torch.Tensor) -> torch.Tensor:
        if not isinstance(clip, torch.Tensor) or clip.ndim != 5:
            got = tuple(clip.shape) if isinstance(clip, torch.Tensor) else type(clip).__name__
            raise ShapeMismatchError(
                "transformer expects one clip tensor "
                f"[batch, channels, frames, h, w], got {got}"
            )
        if clip.shape[1] != self.config.in_channels:
            raise ShapeMismatchError(
                f"transformer expects {self.config.in_channels} input channels "
                f"(got {clip.shape[1]}); RGB-only and heatmap-augmented clips "
                "are different configurations"
            )
        if clip.shape[2] > self.num_frames:
            raise ShapeMismatchError(
                f"clip has {clip.shape[2]} frames but the time-position table "
                f"covers {self.num_frames}"
            )
        if clip.shape[3] != self.image_size or clip.shape[4] != self.image_size:
            raise ShapeMismatchError(
                f"frame size {clip.shape[3]}x{clip.shape[4]} does not match the "
                f"patch-position table built for {self.image_size}x{self.image_size}"
            )
        return clip

    def forward_features(self, clip: torch.Tensor) -> torch.Tensor:
        clip = self._check_inputs(clip)
        b, c, t, h, w = clip.shape
        frames = clip.permute(0, 2, 1, 3, 4).reshape(b * t, c, h, w)
        patches = self.patch_embed(frames)  # [b*t, dim, h/p, w/p]
        n = patches.shape[2] * patches.shape[3]
        x = patches.flatten(2).transpose(1, 2).reshape(b, t, n, self.feature_dim)
        x = x + self.space_pos + self.time_pos[:, :t]
        for block in self.blocks:
            x = block(x)
        return self.norm(x).mean(dim=(1, 2))

    def forward(self, clip: torch.Tensor) -> torch.Tensor:
        return self.head(self.forward_features(clip))
