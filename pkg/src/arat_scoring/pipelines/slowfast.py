"""Dual-pathway residual video network.

A slow pathway looks at a sparsely sampled clip (2 frames at full width)
while a fast pathway looks at a densely sampled clip (8 frames at 1/8 of
the channel width).  After the stem and after each of the first three
residual stages, the fast pathway is fused into the slow pathway through
a time-strided convolution so the slow path can exploit motion cues.

The classifier consumes the concatenation of both globally pooled
pathways; at full scale that vector has 2048 + 256 = 2304 channels.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
from torch import nn

from .config import ShapeMismatchError

logger = logging.getLogger(__name__)

#: fast-pathway frames per slow-pathway frame
ALPHA = 4


@dataclass(frozen=True)
class _SlowFastDims:
    stem_slow: int
    stem_fast: int
    mids_slow: tuple[int, int, int, int]
    blocks: tuple[int, int, int, int]
    beta_inv: int  # fast channels = slow channels / beta_inv
    expansion: int = 4

    @property
    def feature_dim(self) -> int:
        slow_out = self.mids_slow[-1] * self.expansion
        return slow_out + slow_out // self.beta_inv


_DIMS = {
    "full": _SlowFastDims(
        stem_slow=64,
        stem_fast=8,
        mids_slow=(64, 128, 256, 512),
        blocks=(3, 4, 6, 3),
        beta_inv=8,
    ),
    "desk": _SlowFastDims(
        stem_slow=32,
        stem_fast=8,
        mids_slow=(8, 16, 32, 64),
        blocks=(1, 1, 1, 1),
        beta_inv=4,
    ),
}


def _conv_bn(
    in_ch: int,
    out_ch: int,
    kernel: tuple[int, int, int],
    stride: tuple[int, int, int] = (1, 1, 1),
) -> nn.Sequential:
    padding = tuple(k // 2 for k in kernel)
    return nn.Sequential(
        nn.Conv3d(in_ch, out_ch, kernel, stride=stride, padding=padding, bias=False),
        nn.BatchNorm3d(out_ch),
        nn.ReLU(inplace=True),
    )


class _Bottleneck(nn.Module):
    """1x1 reduce -> 3x3 spatial -> 1x1 expand, with identity shortcut."""

    def __init__(
        self,
        in_ch: int,
        mid_ch: int,
        temporal_kernel: int,
        spatial_stride: int,
        expansion: int = 4,
    ) -> None:
        super().__init__()
        out_ch = mid_ch * expansion
        tpad = temporal_kernel // 2
        self.conv1 = nn.Conv3d(
            in_ch, mid_ch, (temporal_kernel, 1, 1), padding=(tpad, 0, 0), bias=False
        )
        self.bn1 = nn.BatchNorm3d(mid_ch)
        self.conv2 = nn.Conv3d(
            mid_ch,
            mid_ch,
            (1, 3, 3),
            stride=(1, spatial_stride, spatial_stride),
            padding=(0, 1, 1),
            bias=False,
        )
        self.bn2 = nn.BatchNorm3d(mid_ch)
        self.conv3 = nn.Conv3d(mid_ch, out_ch, 1, bias=False)
        self.bn3 = nn.BatchNorm3d(out_ch)
        self.relu = nn.ReLU(inplace=True)
        if in_ch != out_ch or spatial_stride != 1:
            self.shortcut: nn.Module = nn.Sequential(
                nn.Conv3d(
                    in_ch,
                    out_ch,
                    1,
                    stride=(1, spatial_stride, spatial_stride),
                    bias=False,
                ),
                nn.BatchNorm3d(out_ch),
            )
        else:
            self.shortcut = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.relu(self.bn2(self.conv2(out)))
        out = self.bn3(self.conv3(out))
        return self.relu(out + self.shortcut(x))


def _stage(
    in_ch: int,
    mid_ch: int,
    n_blocks: int,
    temporal_kernel: int,
    spatial_stride: int,
    expansion: int = 4,
) -> nn.Sequential:
    blocks = [_Bottleneck(in_ch, mid_ch, temporal_kernel, spatial_stride, expansion)]
    for _ in range(n_blocks - 1):
        blocks.append(
            _Bottleneck(mid_ch * expansion, mid_ch, temporal_kernel, 1, expansion)
        )
    return nn.Sequential(*blocks)


class _Lateral(nn.Module):
    """Time-strided conv that maps fast features into the slow time base."""

    def __init__(self, fast_ch: int) -> None:
        super().__init__()
        self.conv = nn.Conv3d(
            fast_ch,
            2 * fast_ch,
            (5, 1, 1),
            stride=(ALPHA, 1, 1),
            padding=(2, 0, 0),
            bias=False,
        )
        self.bn = nn.BatchNorm3d(2 * fast_ch)
        self.relu = nn.ReLU(inplace=True)

    def forward(self, fast: torch.Tensor) -> torch.Tensor:
        return self.relu(self.bn(self.conv(fast)))


class SlowFastNetwork(nn.Module):
    """Two-pathway 3D ResNet with lateral fusion and a linear classifier."""

    kind = "slowfast"

    def __init__(self, config) -> None:
        super().__init__()
        self.config = config
        dims = _DIMS[config.scale]
        self._dims = dims
        self.feature_dim = dims.feature_dim
        exp = dims.expansion

        slow_stem = nn.Sequential(
            _conv_bn(config.in_channels, dims.stem_slow, (1, 7, 7), (1, 2, 2)),
            nn.MaxPool3d((1, 3, 3), stride=(1, 2, 2), padding=(0, 1, 1)),
        )
        fast_stem = nn.Sequential(
            _conv_bn(config.in_channels, dims.stem_fast, (5, 7, 7), (1, 2, 2)),
            nn.MaxPool3d((1, 3, 3), stride=(1, 2, 2), padding=(0, 1, 1)),
        )
        self.s1 = nn.ModuleDict(
            {"slow": slow_stem, "fast": fast_stem, "lateral": _Lateral(dims.stem_fast)}
        )

        # Slow path keeps spatial-only kernels early and gains temporal
        # kernels in the last two stages; the fast path is temporal
        # throughout.
        slow_tk = (1, 1, 3, 3)
        strides = (1, 2, 2, 2)
        slow_in = dims.stem_slow + 2 * dims.stem_fast
        fast_in = dims.stem_fast
        stage_names = ("s2", "s3", "s4", "s5")
        for i, name in enumerate(stage_names):
            mid_s = dims.mids_slow[i]
            mid_f = max(1, mid_s // dims.beta_inv)
            slow_stage = _stage(slow_in, mid_s, dims.blocks[i], slow_tk[i], strides[i], exp)
            fast_stage = _stage(fast_in, mid_f, dims.blocks[i], 3, strides[i], exp)
            fast_out = mid_f * exp
            parts = {"slow": slow_stage, "fast": fast_stage}
            if name != "s5":
                parts["lateral"] = _Lateral(fast_out)
                slow_in = mid_s * exp + 2 * fast_out
            else:
                slow_in = mid_s * exp
            fast_in = fast_out
            setattr(self, name, nn.ModuleDict(parts))

        self.head = nn.Linear(self.feature_dim, config.num_classes)

    # -- structure ---------------------------------------------------

    def stage_names(self) -> tuple[str, ...]:
        return ("s1", "s2", "s3", "s4", "s5")

    def stage_module(self, name: str) -> nn.Module:
        if name not in self.stage_names():
            raise KeyError(name)
        return getattr(self, name)

    def saliency_targets(self) -> dict[str, nn.Module]:
        """Last convolutional feature maps, per pathway."""
        return {"slow": self.s5["slow"], "fast": self.s5["fast"]}

    # -- forward -----------------------------------------------------

    def _check_inputs(self, inputs) -> tuple[torch.Tensor, torch.Tensor]:
        if not (isinstance(inputs, (tuple, list)) and len(inputs) == 2):
            raise ShapeMismatchError(
                "slowfast expects a (slow, fast) clip pair, "
                f"got {type(inputs).__name__}"
            )
        slow, fast = inputs
        for name, clip in (("slow", slow), ("fast", fast)):
            if clip.ndim != 5:
                raise ShapeMismatchError(
                    f"{name} clip must be [batch, channels, frames, h, w], "
                    f"got shape {tuple(clip.shape)}"
                )
        if fast.shape[2] != ALPHA * slow.shape[2]:
            raise ShapeMismatchError(
                f"fast clip must have {ALPHA}x the slow frame count; "
                f"got slow={slow.shape[2]}, fast={fast.shape[2]}"
            )
        return slow, fast

    def forward_features(self, inputs) -> torch.Tensor:
        slow, fast = self._check_inputs(inputs)
        for name in self.stage_names():
            stage = getattr(self, name)
            slow = stage["slow"](slow)
            fast = stage["fast"](fast)
            if "lateral" in stage:
                slow = torch.cat([slow, stage["lateral"](fast)], dim=1)
        pooled_slow = slow.mean(dim=(2, 3, 4))
        pooled_fast = fast.mean(dim=(2, 3, 4))
        return torch.cat([pooled_slow, pooled_fast], dim=1)

    def forward(self, inputs) -> torch.Tensor:
        return self.head(self.forward_features(inputs))
