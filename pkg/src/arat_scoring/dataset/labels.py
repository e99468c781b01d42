"""Rating-to-label mapping and the deterministic train/validation split.

Only segments rated 2 or 3 enter the binary classification problem: 2 maps to
class 0 and 3 to class 1. Ratings 0 and 1 are excluded (not errors).
"""

from __future__ import annotations

import random
from typing import Sequence, Union

from .types import SegmentManifest


class _Excluded:
    """Marker for ratings filtered out of the binary task."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EXCLUDED"


EXCLUDED = _Excluded()


def map_label(arat_rating: int) -> Union[int, _Excluded]:
    """Map a 0-3 ARAT rating to a binary label, or EXCLUDED for ratings 0/1."""
    if arat_rating not in (0, 1, 2, 3):
        raise ValueError(f"arat_rating must be in {{0,1,2,3}}, got {arat_rating}")
    if arat_rating in (0, 1):
        return EXCLUDED
    return arat_rating - 2


def display_score(label: int) -> int:
    """Inverse of map_label for dashboard display: 0 -> ARAT 2, 1 -> ARAT 3."""
    if label not in (0, 1):
        raise ValueError(f"binary label must be 0 or 1, got {label}")
    return label + 2


def filter_rated(manifests: Sequence[SegmentManifest]) -> list[SegmentManifest]:
    """Keep only segments whose rating maps to a binary label."""
    return [m for m in manifests if map_label(m.arat_rating) is not EXCLUDED]


def split_dataset(
    manifests: Sequence[SegmentManifest],
    ratio: float = 0.2,
    seed: int = 42,
) -> tuple[list[SegmentManifest], list[SegmentManifest]]:
    """Deterministic train/validation partition.

    Pure in (segment ids, ratio, seed): input order never changes the outcome,
    and repeated calls return identical partitions. Validation size is
    round(ratio * N), half up.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must lie in (0, 1), got {ratio}")
    if not manifests:
        raise ValueError("cannot split an empty manifest list")
    by_id = {m.segment_id: m for m in manifests}
    if len(by_id) != len(manifests):
        raise ValueError("duplicate segment ids in split input")
    ordered_ids = sorted(by_id)
    rng = random.Random(seed)
    rng.shuffle(ordered_ids)
    val_n = int(ratio * len(ordered_ids) + 0.5)
    val_ids = ordered_ids[:val_n]
    train_ids = ordered_ids[val_n:]
    return [by_id[i] for i in train_ids], [by_id[i] for i in val_ids]
