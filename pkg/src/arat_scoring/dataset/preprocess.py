"""Frame preprocessing, temporal clip sampling, and keypoint channel encoding.

The geometric path for every pipeline: crop around the annotated box with a
30-pixel downward extension (hands drop below the box), bilinear-resize to
256x256, center-crop to 224x224. RGB is then normalized as (v/255 - 0.45) /
0.225 per channel; keypoint/object channels ride through the same geometry
unnormalized so they stay in [0, 1] and aligned with the pixels.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .archive import box_for_frame, read_boxes, read_frames, read_keypoints
from .types import (
    JOINT_NAMES,
    BoundingBox,
    ClipTensor,
    KeypointFrame,
    SegmentManifest,
    View,
)

RGB_MEAN = 0.45
RGB_STD = 0.225
LOWER_EXTENSION_PX = 30

RGB_LAYOUT = ("r", "g", "b")
AUX_LAYOUT = ("shoulder", "elbow", "wrist", "hand", "object_x", "object_y")

FAST_FRAMES = 8
SLOW_STRIDE = 4  # slow clip takes every 4th fast frame
DENSE_FRAMES = 32  # i3d and transformer


@dataclass
class PreprocessConfig:
    resize_to: int = 256
    crop_to: int = 224
    lower_extension: int = LOWER_EXTENSION_PX
    heatmap_sigma: float = 5.0  # pixels, pre-resize
    confidence_threshold: float = 0.1
    pad_short: bool = False  # opt-in: repeat last frame instead of erroring
    aux_only: bool = False  # literal 6-channel transformer input, no RGB


class ShortSegmentError(ValueError):
    """Raised when a frame range is shorter than the clip needs and padding is off."""


def crop_region(
    box: BoundingBox, frame_height: int, frame_width: int, lower_extension: int = LOWER_EXTENSION_PX
) -> tuple[int, int, int, int]:
    """Integer crop window (x1, y1, x2, y2) with the downward extension clamped."""
    x1 = min(max(0, int(round(box.x1))), frame_width)
    y1 = min(max(0, int(round(box.y1))), frame_height)
    x2 = max(x1, min(frame_width, int(round(box.x2))))
    y2 = max(y1, min(frame_height, int(round(box.y2)) + lower_extension))
    return x1, y1, x2, y2


def _geometric(frames: torch.Tensor, region: tuple[int, int, int, int], resize_to: int, crop_to: int) -> torch.Tensor:
    """Crop / bilinear resize / center-crop, on [T, C, H, W] float frames."""
    x1, y1, x2, y2 = region
    cropped = frames[:, :, y1:y2, x1:x2]
    resized = F.interpolate(
        cropped, size=(resize_to, resize_to), mode="bilinear", align_corners=False
    )
    off = (resize_to - crop_to) // 2
    return resized[:, :, off : off + crop_to, off : off + crop_to]


def preprocess_frames(
    frames: np.ndarray | torch.Tensor,
    box: BoundingBox,
    config: Optional[PreprocessConfig] = None,
) -> torch.Tensor:
    """Crop, resize, center-crop, and normalize RGB frames.

    ``frames`` is [T, H, W, 3] with values in [0, 255]. Returns float32
    [T, 3, crop_to, crop_to].
    """
    cfg = config or PreprocessConfig()
    if isinstance(frames, np.ndarray):
        frames = torch.from_numpy(np.ascontiguousarray(frames))
    frames = frames.to(torch.float32)
    if frames.ndim != 4 or frames.shape[-1] != 3:
        raise ValueError(f"expected [T, H, W, 3] frames, got shape {tuple(frames.shape)}")
    t, h, w, _ = frames.shape
    region = crop_region(box, h, w, cfg.lower_extension)
    x1, y1, x2, y2 = region
    if x2 <= x1 or y2 <= y1:
        raise ValueError(
            f"box at frame {box.frame_index} degenerate after clamping: region {region}"
        )
    chw = frames.permute(0, 3, 1, 2)
    out = _geometric(chw, region, cfg.resize_to, cfg.crop_to)
    return (out / 255.0 - RGB_MEAN) / RGB_STD


def uniform_indices(n_frames: int, n_samples: int, pad_short: bool = False) -> np.ndarray:
    """Uniformly spaced frame indices covering [0, n_frames).

    For n_frames >= n_samples the indices are strictly increasing, starting at
    0 and ending at n_frames - 1. Shorter inputs either error or, with
    ``pad_short``, take every frame and repeat the last.
    """
    if n_frames <= 0:
        raise ValueError("cannot sample from an empty frame range")
    if n_frames < n_samples:
        if not pad_short:
            raise ShortSegmentError(
                f"{n_frames} frames available but {n_samples} required"
                " (enable pad_short to repeat the last frame)"
            )
        base = list(range(n_frames))
        base += [n_frames - 1] * (n_samples - n_frames)
        return np.asarray(base, dtype=np.int64)
    return np.round(np.linspace(0, n_frames - 1, n_samples)).astype(np.int64)


def slow_from_fast(fast: torch.Tensor) -> torch.Tensor:
    """Slow clip = every 4th frame of the fast clip.

    Works for single clips ``[C, T, H, W]`` and batches ``[B, C, T, H, W]``;
    the time axis is third from the end either way.
    """
    index = [slice(None)] * fast.ndim
    index[-3] = slice(None, None, SLOW_STRIDE)
    return fast[tuple(index)]


def _gaussian_channel(height: int, width: int, cx: float, cy: float, sigma: float) -> torch.Tensor:
    ys = torch.arange(height, dtype=torch.float32).unsqueeze(1)
    xs = torch.arange(width, dtype=torch.float32).unsqueeze(0)
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    return torch.exp(-d2 / (2.0 * sigma * sigma))


def encode_keypoint_channels(
    keypoints: Sequence[KeypointFrame],
    height: int,
    width: int,
    sigma: float = 5.0,
    confidence_threshold: float = 0.1,
) -> torch.Tensor:
    """Encode joints and object location as image-aligned channels.

    Returns float32 [6, T, H, W]: one Gaussian bump (peak 1.0) per joint in
    JOINT_NAMES order, then two constant planes holding the normalized object
    centroid x and y. Missing joints (absent or confidence below threshold)
    and missing objects become zero channels.
    """
    t = len(keypoints)
    out = torch.zeros((len(AUX_LAYOUT), t, height, width), dtype=torch.float32)
    for ti, frame in enumerate(keypoints):
        for ji, name in enumerate(JOINT_NAMES):
            joint = frame.joints.get(name)
            if joint is None or joint.confidence < confidence_threshold:
                continue
            out[ji, ti] = _gaussian_channel(height, width, joint.x, joint.y, sigma)
        if frame.object_centroid is not None:
            ox, oy = frame.object_centroid
            out[4, ti] = ox / width
            out[5, ti] = oy / height
    return out


def kinematic_vector(
    keypoints: Sequence[KeypointFrame],
    height: int,
    width: int,
    time_steps: int = 32,
    confidence_threshold: float = 0.1,
) -> torch.Tensor:
    """Flattened normalized trajectory for the kinematic quality model.

    Per time step: 4 joints x (x, y) plus the object centroid, all divided by
    the frame dimensions; missing entries are zero. Resampled uniformly to
    ``time_steps`` and flattened to length time_steps * 10.
    """
    if not keypoints:
        raise ValueError("kinematic_vector needs at least one keypoint frame")
    idx = uniform_indices(len(keypoints), time_steps, pad_short=True)
    rows = []
    for i in idx:
        frame = keypoints[int(i)]
        row = []
        for name in JOINT_NAMES:
            joint = frame.joints.get(name)
            if joint is None or joint.confidence < confidence_threshold:
                row.extend([0.0, 0.0])
            else:
                row.extend([joint.x / width, joint.y / height])
        if frame.object_centroid is None:
            row.extend([0.0, 0.0])
        else:
            row.extend([frame.object_centroid[0] / width, frame.object_centroid[1] / height])
        rows.append(row)
    return torch.tensor(rows, dtype=torch.float32).flatten()


def _select_keypoints(
    keypoints: Sequence[KeypointFrame], frame_indices: Sequence[int]
) -> list[KeypointFrame]:
    by_index = {k.frame_index: k for k in keypoints}
    selected = []
    for idx in frame_indices:
        frame = by_index.get(int(idx))
        if frame is None:
            frame = KeypointFrame(frame_index=int(idx), joints={}, object_centroid=None)
        selected.append(frame)
    return selected


def sample_clip(
    archive_root: Path | str,
    manifest: SegmentManifest,
    view: View,
    pipeline_tag: str,
    config: Optional[PreprocessConfig] = None,
    frame_range: Optional[tuple[int, int]] = None,
):
    """Sample and preprocess one clip (or the slow/fast pair) from a segment.

    ``pipeline_tag`` is "slowfast", "i3d", or "transformer". A frame range
    restricts sampling to [start, end) for phase-level scoring. Returns a
    ClipTensor, or a (slow, fast) pair of ClipTensors for slowfast.
    """
    cfg = config or PreprocessConfig()
    start, end = frame_range if frame_range is not None else (0, manifest.view_frame_count(view))
    span = end - start
    if span <= 0:
        raise ValueError(f"empty frame range {frame_range} for segment {manifest.segment_id}")

    needed = FAST_FRAMES if pipeline_tag == "slowfast" else DENSE_FRAMES
    rel = uniform_indices(span, needed, pad_short=cfg.pad_short)
    indices = rel + start

    frames = read_frames(archive_root, manifest, view, indices.tolist())
    boxes = read_boxes(archive_root, manifest)
    box = box_for_frame(boxes, int(indices[0]))
    if box is None:
        raise ValueError(f"segment {manifest.segment_id} has no bounding boxes")

    rgb = preprocess_frames(frames, box, cfg)  # [T, 3, S, S]
    rgb_ctHW = rgb.permute(1, 0, 2, 3)

    if pipeline_tag == "slowfast":
        fast = ClipTensor(rgb_ctHW, "slowfast_fast", RGB_LAYOUT)
        slow = ClipTensor(slow_from_fast(rgb_ctHW), "slowfast_slow", RGB_LAYOUT)
        slow.assert_shape()
        fast.assert_shape()
        return slow, fast

    if pipeline_tag == "i3d":
        clip = ClipTensor(rgb_ctHW, "i3d", RGB_LAYOUT)
        clip.assert_shape()
        return clip

    if pipeline_tag == "transformer":
        keypoints = _select_keypoints(read_keypoints(archive_root, manifest), indices.tolist())
        h, w = frames.shape[1], frames.shape[2]
        aux = encode_keypoint_channels(
            keypoints, h, w, sigma=cfg.heatmap_sigma, confidence_threshold=cfg.confidence_threshold
        )
        region = crop_region(box, h, w, cfg.lower_extension)
        aux_t_first = aux.permute(1, 0, 2, 3)
        aux_geo = _geometric(aux_t_first, region, cfg.resize_to, cfg.crop_to).permute(1, 0, 2, 3)
        if cfg.aux_only:
            clip = ClipTensor(aux_geo, "transformer", AUX_LAYOUT)
        else:
            clip = ClipTensor(
                torch.cat([rgb_ctHW, aux_geo], dim=0), "transformer", RGB_LAYOUT + AUX_LAYOUT
            )
        clip.assert_shape()
        return clip

    raise ValueError(f"unknown pipeline_tag {pipeline_tag!r}")
