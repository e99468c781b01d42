"""Inflated 3D Inception network.

A GoogLeNet-style backbone whose 2D convolutions are inflated to 3D so
that a dense 32-frame clip can be classified directly.  Each Inception
block mixes four branches (1x1, 3x3 via a reduction, a second 3x3 via a
reduction, and a pooled 1x1 projection); the classifier applies dropout
and a single linear layer to the globally pooled 1024-channel features.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
from torch import nn

from .config import ShapeMismatchError

logger = logging.getLogger(__name__)


class _Unit3D(nn.Module):
    """Conv3d + BatchNorm + ReLU, the basic building unit."""

    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        kernel: tuple[int, int, int] = (1, 1, 1),
        stride: tuple[int, int, int] = (1, 1, 1),
    ) -> None:
        super().__init__()
        padding = tuple(k // 2 for k in kernel)
        self.conv = nn.Conv3d(in_ch, out_ch, kernel, stride=stride, padding=padding, bias=False)
        self.bn = nn.BatchNorm3d(out_ch)
        self.relu = nn.ReLU(inplace=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.relu(self.bn(self.conv(x)))


@dataclass(frozen=True)
class _BranchSpec:
    """Channel widths of one Inception block: (b0, b1_reduce, b1, b2_reduce, b2, b3)."""

    b0: int
    b1_reduce: int
    b1: int
    b2_reduce: int
    b2: int
    b3: int

    @property
    def out_channels(self) -> int:
        return self.b0 + self.b1 + self.b2 + self.b3

    def scaled(self, divisor: int) -> "_BranchSpec":
        return _BranchSpec(
            *(max(4, round(v / divisor)) for v in
              (self.b0, self.b1_reduce, self.b1, self.b2_reduce, self.b2, self.b3))
        )


_BLOCK_SPECS = {
    "mixed_3b": _BranchSpec(64, 96, 128, 16, 32, 32),
    "mixed_3c": _BranchSpec(128, 128, 192, 32, 96, 64),
    "mixed_4b": _BranchSpec(192, 96, 208, 16, 48, 64),
    "mixed_4c": _BranchSpec(160, 112, 224, 24, 64, 64),
    "mixed_4d": _BranchSpec(128, 128, 256, 24, 64, 64),
    "mixed_4e": _BranchSpec(112, 144, 288, 32, 64, 64),
    "mixed_4f": _BranchSpec(256, 160, 320, 32, 128, 128),
    "mixed_5b": _BranchSpec(256, 160, 320, 32, 128, 128),
    "mixed_5c": _BranchSpec(384, 192, 384, 48, 128, 128),
}

_FULL_BLOCKS = tuple(_BLOCK_SPECS)
_DESK_BLOCKS = ("mixed_3b", "mixed_3c", "mixed_4b", "mixed_5b")
#: temporal/spatial max-pool (kernel, stride, padding) inserted *before* these blocks
_POOL_BEFORE = {
    "mixed_4b": ((3, 3, 3), (2, 2, 2), (1, 1, 1)),
    "mixed_5b": ((2, 2, 2), (2, 2, 2), (0, 0, 0)),
}


class _InceptionBlock(nn.Module):
    def __init__(self, in_ch: int, spec: _BranchSpec) -> None:
        super().__init__()
        self.branch0 = _Unit3D(in_ch, spec.b0)
        self.branch1 = nn.Sequential(
            _Unit3D(in_ch, spec.b1_reduce),
            _Unit3D(spec.b1_reduce, spec.b1, (3, 3, 3)),
        )
        self.branch2 = nn.Sequential(
            _Unit3D(in_ch, spec.b2_reduce),
            _Unit3D(spec.b2_reduce, spec.b2, (3, 3, 3)),
        )
        self.branch3 = nn.Sequential(
            nn.MaxPool3d((3, 3, 3), stride=1, padding=1),
            _Unit3D(in_ch, spec.b3),
        )
        self.out_channels = spec.out_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.cat(
            [self.branch0(x), self.branch1(x), self.branch2(x), self.branch3(x)], dim=1
        )


class InceptionVideoNetwork(nn.Module):
    """3D Inception backbone with a dropout + linear classifier."""

    kind = "i3d"

    def __init__(self, config) -> None:
        super().__init__()
        self.config = config
        if config.scale == "full":
            block_names, divisor = _FULL_BLOCKS, 1
        else:
            block_names, divisor = _DESK_BLOCKS, 8

        stem_a = max(4, round(64 / divisor))
        stem_b = max(4, round(192 / divisor))
        self.stem = nn.Sequential(
            _Unit3D(config.in_channels, stem_a, (7, 7, 7), (2, 2, 2)),
            nn.MaxPool3d((1, 3, 3), stride=(1, 2, 2), padding=(0, 1, 1)),
            _Unit3D(stem_a, stem_a),
            _Unit3D(stem_a, stem_b, (3, 3, 3)),
            nn.MaxPool3d((1, 3, 3), stride=(1, 2, 2), padding=(0, 1, 1)),
        )

        self._block_names = tuple(block_names)
        self.blocks = nn.ModuleDict()
        self.pools = nn.ModuleDict()
        in_ch = stem_b
        for name in block_names:
            if name in _POOL_BEFORE:
                kernel, stride, padding = _POOL_BEFORE[name]
                self.pools[name] = nn.MaxPool3d(kernel, stride=stride, padding=padding)
            block = _InceptionBlock(in_ch, _BLOCK_SPECS[name].scaled(divisor))
            self.blocks[name] = block
            in_ch = block.out_channels

        self.feature_dim = in_ch
        self.dropout = nn.Dropout(config.dropout)
        self.head = nn.Linear(self.feature_dim, config.num_classes)

    # -- structure ---------------------------------------------------

    def stage_names(self) -> tuple[str, ...]:
        return ("stem",) + self._block_names

    def stage_module(self, name: str) -> nn.Module:
        if name == "stem":
            return self.stem
        if name not in self.blocks:
            raise KeyError(name)
        return self.blocks[name]

    def saliency_targets(self) -> dict[str, nn.Module]:
        last = self._block_names[-1]
        return {last: self.blocks[last]}

    # -- forward -----------------------------------------------------

    def _check_inputs(self, clip: torch.Tensor) -> torch.Tensor:
        if not isinstance(clip, torch.Tensor) or clip.ndim != 5:
            got = tuple(clip.shape) if isinstance(clip, torch.Tensor) else type(clip).__name__
            raise ShapeMismatchError(
                f"i3d expects one clip tensor [batch, channels, frames, h, w], got {got}"
            )
        if clip.shape[1] != self.config.in_channels:
            raise ShapeMismatchError(
                f"i3d expects {self.config.in_channels} input channels, got {clip.shape[1]}"
            )
        return clip

    def forward_features(self, clip: torch.Tensor) -> torch.Tensor:
        x = self.stem(self._check_inputs(clip))
        for name in self._block_names:
            if name in self.pools:
                x = self.pools[name](x)
            x = self.blocks[name](x)
        return x.mean(dim=(2, 3, 4))

    def forward(self, clip: torch.Tensor) -> torch.Tensor:
        return self.head(self.dropout(self.forward_features(clip)))
