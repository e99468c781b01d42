"""Colormap composites of saliency maps onto video frames, plus export.

Overlays follow the house rendering: jet colormap at 50% opacity over the
raw frame.  ``export_overlays`` writes one PNG per sampled frame and a
``saliency_manifest.json`` the dashboard uses to line overlays up with
source-video frame numbers.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib import colormaps
from PIL import Image

from .gradcam import Heatmap

_JET = colormaps["jet"]

MANIFEST_NAME = "saliency_manifest.json"
HEATMAP_ARCHIVE = "heatmap.npz"


def jet_colors(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] saliency values to RGB floats in [0, 1]."""
    return np.asarray(_JET(np.asarray(values, dtype=np.float64)))[..., :3]


def overlay_heatmap(frame: np.ndarray, heat) -> np.ndarray:
    """Composite one heatmap slice onto one frame at 50% opacity.

    ``frame`` is [H, W, 3] uint8; ``heat`` is [H, W] in [0, 1] at the same
    resolution.  Pure function: neither input is modified.
    """
    frame = np.asarray(frame)
    heat = np.asarray(heat, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[-1] != 3:
        raise ValueError(f"expected [H, W, 3] frame, got shape {frame.shape}")
    if heat.shape != frame.shape[:2]:
        raise ValueError(
            f"heatmap resolution {heat.shape} does not match frame {frame.shape[:2]}"
        )
    composite = 0.5 * jet_colors(heat) * 255.0 + 0.5 * frame.astype(np.float64)
    return np.clip(np.rint(composite), 0, 255).astype(np.uint8)


def export_overlays(
    frames: np.ndarray,
    heatmap: Heatmap,
    out_dir: str | Path,
    segment_id: str,
    view: str,
    source_frames: Sequence[int] | None = None,
) -> Path:
    """Write per-frame overlay PNGs plus the manifest; returns its path.

    ``frames`` is [T, H, W, 3] uint8, one frame per heatmap time step, in
    the order the clip was sampled; ``source_frames`` maps each back to its
    frame number in the original segment video (defaults to 0..T-1).
    """
    frames = np.asarray(frames)
    heat = heatmap.upsampled.cpu().numpy()
    if frames.shape[0] != heat.shape[0]:
        raise ValueError(
            f"{frames.shape[0]} frames but {heat.shape[0]} heatmap steps"
        )
    if source_frames is None:
        source_frames = list(range(frames.shape[0]))
    elif len(source_frames) != frames.shape[0]:
        raise ValueError("source_frames length does not match frames")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for t in range(frames.shape[0]):
        name = f"overlay_{t:04d}.png"
        Image.fromarray(overlay_heatmap(frames[t], heat[t])).save(out_dir / name)
        entries.append(
            {"overlay": name, "clip_step": t, "source_frame": int(source_frames[t])}
        )

    np.savez_compressed(
        out_dir / HEATMAP_ARCHIVE,
        values=heatmap.values.cpu().numpy(),
        upsampled=heat,
    )
    manifest = {
        "segment_id": segment_id,
        "view": view,
        "layer": heatmap.layer,
        "target_class": heatmap.target_class,
        "is_zero": heatmap.is_zero,
        "heatmap": HEATMAP_ARCHIVE,
        "frames": entries,
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2))
    return path
