"""Synthetic fixtures: archives on disk, manifests in memory, separable clips.

The real patient recordings are private; every test and demo runs on
procedurally generated stand-ins. Class signal is planted spatially: label 1
segments carry a bright moving blob in the top-left image quadrant, label 0
in the bottom-right, so any of the pipelines can separate them quickly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np
import torch
from PIL import Image

from .preprocess import RGB_MEAN, RGB_STD
from .types import (
    JOINT_NAMES,
    PhaseAnnotation,
    SegmentManifest,
    View,
    ViewData,
)

PHASE_NAMES = ("initiation", "grasping", "transporting", "releasing")


def _phases(frame_count: int) -> list[PhaseAnnotation]:
    # Task interval spans the middle ~80% of the segment, split into 4 phases.
    start = frame_count // 10
    end = frame_count - frame_count // 10
    bounds = np.linspace(start, end, len(PHASE_NAMES) + 1).astype(int)
    return [
        PhaseAnnotation(name, int(bounds[i]), int(bounds[i + 1]))
        for i, name in enumerate(PHASE_NAMES)
    ]


def synthetic_manifests(
    n: int,
    seed: int = 0,
    frames_per_view: int = 48,
    patients: int = 50,
    include_excluded: bool = False,
) -> list[SegmentManifest]:
    """In-memory manifests without any backing files (for split/label logic)."""
    rng = np.random.default_rng(seed)
    manifests = []
    for i in range(n):
        if include_excluded and i % 10 == 9:
            rating = int(rng.integers(0, 2))
        else:
            rating = 2 + i % 2
        seg = f"seg_{i:04d}"
        manifests.append(
            SegmentManifest(
                segment_id=seg,
                patient_id=f"patient_{i % patients:02d}",
                views={
                    view: ViewData(frame_count=frames_per_view, frames=f"{seg}/{view.value}")
                    for view in View
                },
                fps=30,
                arat_rating=rating,
                phase_annotations=_phases(frames_per_view),
                keypoints=f"{seg}/keypoints.jsonl",
                boxes=f"{seg}/boxes.jsonl",
            )
        )
    return manifests


def _blob_center(label: int, size: int, t: int, frames: int, rng: np.random.Generator) -> tuple[float, float]:
    quarter = size // 4
    base = (quarter, quarter) if label == 1 else (3 * quarter, 3 * quarter)
    wiggle = size // 16
    drift = np.sin(2 * np.pi * t / max(frames, 1)) * wiggle
    return base[0] + drift + rng.normal(0, 1), base[1] - drift + rng.normal(0, 1)


def _render_frame(size: int, cx: float, cy: float, rng: np.random.Generator) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float32)
    blob = np.exp(-(((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * (size / 10.0) ** 2)))
    base = rng.normal(114.75, 8.0, size=(size, size))
    frame = np.clip(base + 120.0 * blob, 0, 255)
    return np.repeat(frame[:, :, None], 3, axis=2).astype(np.uint8)


def write_synthetic_archive(
    root: Path | str,
    n_segments: int = 6,
    frames_per_view: int = 40,
    image_size: int = 96,
    seed: int = 0,
    include_excluded: bool = False,
) -> list[SegmentManifest]:
    """Materialize a complete archive (index, PNG frames, annotations) on disk."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    manifests = synthetic_manifests(
        n_segments,
        seed=seed,
        frames_per_view=frames_per_view,
        include_excluded=include_excluded,
    )
    rng = np.random.default_rng(seed)
    for manifest in manifests:
        label = 1 if manifest.arat_rating == 3 else 0
        seg_dir = root / manifest.segment_id
        centers = [
            _blob_center(label, image_size, t, frames_per_view, rng)
            for t in range(frames_per_view)
        ]
        for view in View:
            view_dir = root / manifest.views[view].frames
            view_dir.mkdir(parents=True, exist_ok=True)
            for t, (cx, cy) in enumerate(centers):
                frame = _render_frame(image_size, cx, cy, rng)
                Image.fromarray(frame).save(view_dir / f"frame_{t:05d}.png")
        margin = image_size // 12
        with (seg_dir / "boxes.jsonl").open("w") as fh:
            for t in range(frames_per_view):
                fh.write(
                    json.dumps(
                        {
                            "frame_index": t,
                            "x1": margin,
                            "y1": margin,
                            "x2": image_size - margin,
                            "y2": image_size - 2 * margin,
                        }
                    )
                    + "\n"
                )
        with (seg_dir / "keypoints.jsonl").open("w") as fh:
            for t, (cx, cy) in enumerate(centers):
                joints = {}
                for ji, name in enumerate(JOINT_NAMES):
                    joints[name] = {
                        "x": float(np.clip(cx + 3 * ji, 0, image_size - 1)),
                        "y": float(np.clip(cy + 2 * ji, 0, image_size - 1)),
                        "confidence": 0.9,
                    }
                fh.write(
                    json.dumps(
                        {
                            "frame_index": t,
                            "joints": joints,
                            "object_centroid": {"x": float(cx), "y": float(cy)},
                        }
                    )
                    + "\n"
                )
    index = [m.to_json() for m in manifests]
    (root / "index.json").write_text(json.dumps(index, indent=2))
    return manifests


def separable_clip_batch(
    n: int,
    channels: int,
    frames: int,
    size: int,
    seed: int = 0,
    labels: Optional[np.ndarray] = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Separable clips shaped [n, channels, frames, size, size] plus labels.

    RGB channels are emitted in normalized units (the blob sits ~2 sigma above
    the background); channels beyond the first three mimic auxiliary keypoint
    planes in [0, 1] centered on the blob.
    """
    rng = np.random.default_rng(seed)
    if labels is None:
        labels = np.arange(n) % 2
    labels = np.asarray(labels, dtype=np.int64)
    clips = np.zeros((n, channels, frames, size, size), dtype=np.float32)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float32)
    for i in range(n):
        for t in range(frames):
            cx, cy = _blob_center(int(labels[i]), size, t, frames, rng)
            blob = np.exp(-(((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * (size / 10.0) ** 2)))
            pixel = np.clip(rng.normal(114.75, 8.0, size=(size, size)) + 120.0 * blob, 0, 255)
            normalized = (pixel / 255.0 - RGB_MEAN) / RGB_STD
            for c in range(min(3, channels)):
                clips[i, c, t] = normalized
            for c in range(3, channels):
                clips[i, c, t] = blob
    return torch.from_numpy(clips), torch.from_numpy(labels)


def slowfast_pair(clips: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Derive the (slow, fast) pair from an 8-frame clip batch."""
    return clips[:, :, ::4], clips
