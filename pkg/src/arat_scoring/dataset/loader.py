"""Batched clip loading on top of the archive readers.

Segment reads are pure, so worker parallelism is safe; batch order is fixed
by the shuffle seed, never by worker timing.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Optional, Sequence

import torch
from torch.utils.data import DataLoader, Dataset

from .labels import EXCLUDED, map_label
from .preprocess import PreprocessConfig, sample_clip
from .types import SegmentManifest, View


class SegmentClipDataset(Dataset):
    """(clip(s), label) pairs for one pipeline over (segment, view) items."""

    def __init__(
        self,
        archive_root: Path | str,
        manifests: Sequence[SegmentManifest],
        view: View,
        pipeline_tag: str,
        config: Optional[PreprocessConfig] = None,
    ):
        self.archive_root = Path(archive_root)
        self.items = [m for m in manifests if map_label(m.arat_rating) is not EXCLUDED]
        self.view = view
        self.pipeline_tag = pipeline_tag
        self.config = config or PreprocessConfig()

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, idx: int):
        manifest = self.items[idx]
        label = map_label(manifest.arat_rating)
        clip = sample_clip(
            self.archive_root, manifest, self.view, self.pipeline_tag, self.config
        )
        if self.pipeline_tag == "slowfast":
            slow, fast = clip
            return (slow.data, fast.data), int(label)
        return clip.data, int(label)


def _collate(batch):
    labels = torch.tensor([b[1] for b in batch], dtype=torch.long)
    first = batch[0][0]
    if isinstance(first, tuple):
        slow = torch.stack([b[0][0] for b in batch])
        fast = torch.stack([b[0][1] for b in batch])
        return (slow, fast), labels
    return torch.stack([b[0] for b in batch]), labels


def build_loader(
    dataset: Dataset,
    batch_size: int = 4,
    shuffle: bool = True,
    seed: int = 42,
    num_workers: int = 0,
) -> DataLoader:
    """DataLoader with a seeded generator so batch composition is reproducible."""
    generator = torch.Generator()
    generator.manual_seed(seed)
    return DataLoader(
        dataset,
        batch_size=batch_size,
        shuffle=shuffle,
        num_workers=num_workers,
        generator=generator if shuffle else None,
        collate_fn=_collate,
    )
