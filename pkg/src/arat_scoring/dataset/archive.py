"""Archive layout: index file, per-view frame containers, annotation JSONL.

Layout on disk::

    <root>/index.json                      array of segment manifest records
    <root>/<segment>/<view>/frame_%05d.png frame directory (one option)
    <root>/<segment>/<view>.avi            single lossless video (the other)
    <root>/<segment>/keypoints.jsonl       one keypoint record per line
    <root>/<segment>/boxes.jsonl           one bounding-box record per line

All coordinates are original-frame pixels; nothing here normalizes.
Loading is side-effect-free per segment, so callers may read segments
in parallel.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .types import (
    ArchiveIndex,
    BoundingBox,
    KeypointFrame,
    SegmentManifest,
    ValidationIssue,
    View,
)

logger = logging.getLogger(__name__)

INDEX_NAME = "index.json"
FRAME_PATTERN = "frame_{:05d}.png"

VIDEO_SUFFIXES = {".avi", ".mkv", ".mov", ".mp4"}


class ArchiveError(RuntimeError):
    """Fatal archive problem: missing or unparseable index."""


def load_manifest(archive_root: Path | str) -> ArchiveIndex:
    """Load and validate every segment manifest under ``archive_root``.

    Segments failing invariant validation are excluded from ``manifests`` and
    reported in ``issues``; a missing or malformed index is fatal.
    """
    root = Path(archive_root)
    index_path = root / INDEX_NAME
    if not index_path.is_file():
        raise ArchiveError(f"archive index not found: {index_path}")
    try:
        records = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"archive index is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise ArchiveError("archive index must be a JSON array of segment records")

    result = ArchiveIndex()
    for pos, record in enumerate(records):
        try:
            manifest = SegmentManifest.from_json(record)
        except (KeyError, TypeError, ValueError) as exc:
            seg_id = record.get("segment_id", f"<record {pos}>") if isinstance(record, dict) else f"<record {pos}>"
            result.issues.append(ValidationIssue(str(seg_id), f"unparseable record: {exc}"))
            continue
        problems = manifest.validate(archive_root=root)
        if problems:
            for message in problems:
                result.issues.append(ValidationIssue(manifest.segment_id, message))
        else:
            result.manifests.append(manifest)
    if result.issues:
        logger.warning(
            "archive %s: %d segment(s) failed validation", root, len({i.segment_id for i in result.issues})
        )
    return result


def _read_png_dir(directory: Path, indices: Sequence[int]) -> np.ndarray:
    frames = []
    for idx in indices:
        path = directory / FRAME_PATTERN.format(idx)
        if not path.is_file():
            raise FileNotFoundError(f"missing frame file {path}")
        with Image.open(path) as img:
            frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8))
    return np.stack(frames, axis=0)


def _read_video(path: Path, indices: Sequence[int]) -> np.ndarray:
    try:
        import cv2
    except ImportError as exc:  # pragma: no cover - depends on optional extra
        raise RuntimeError(
            f"reading video container {path} requires opencv-python-headless"
            " (install the 'video' extra); PNG frame directories need no extra"
        ) from exc
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise RuntimeError(f"could not open video container {path}")
    wanted = sorted(set(int(i) for i in indices))
    collected: dict[int, np.ndarray] = {}
    pos = 0
    try:
        while wanted and pos <= wanted[-1]:
            ok, frame = capture.read()
            if not ok:
                break
            if pos in wanted:
                collected[pos] = cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
            pos += 1
    finally:
        capture.release()
    missing = [i for i in indices if i not in collected]
    if missing:
        raise RuntimeError(f"video {path} ended before frame(s) {missing[:4]}")
    return np.stack([collected[int(i)] for i in indices], axis=0).astype(np.uint8)


def read_frames(
    archive_root: Path | str,
    manifest: SegmentManifest,
    view: View,
    indices: Sequence[int],
) -> np.ndarray:
    """Read the requested frames of one view as uint8 RGB, shape [T, H, W, 3]."""
    data = manifest.views[view]
    path = Path(archive_root) / data.frames
    for idx in indices:
        if idx < 0 or idx >= data.frame_count:
            raise ArchiveError(
                f"frame index {idx} outside [0, {data.frame_count}) for"
                f" segment {manifest.segment_id} view {view.value}"
            )
    if path.is_dir():
        return _read_png_dir(path, indices)
    if path.suffix.lower() in VIDEO_SUFFIXES and path.is_file():
        return _read_video(path, indices)
    raise FileNotFoundError(
        f"frame container for segment {manifest.segment_id} view {view.value}"
        f" is neither a directory nor a known video file: {path}"
    )


def read_keypoints(archive_root: Path | str, manifest: SegmentManifest) -> list[KeypointFrame]:
    path = Path(archive_root) / manifest.keypoints
    return [KeypointFrame.from_json(json.loads(line)) for line in _jsonl_lines(path)]


def read_boxes(archive_root: Path | str, manifest: SegmentManifest) -> list[BoundingBox]:
    path = Path(archive_root) / manifest.boxes
    return [BoundingBox.from_json(json.loads(line)) for line in _jsonl_lines(path)]


def _jsonl_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise FileNotFoundError(f"annotation file not found: {path}")
    return [line for line in path.read_text().splitlines() if line.strip()]


def box_for_frame(boxes: Sequence[BoundingBox], frame_index: int) -> Optional[BoundingBox]:
    """Box annotated for ``frame_index``, else the nearest earlier one."""
    exact = None
    best: Optional[BoundingBox] = None
    for box in boxes:
        if box.frame_index == frame_index:
            exact = box
            break
        if box.frame_index < frame_index and (best is None or box.frame_index > best.frame_index):
            best = box
    if exact is not None:
        return exact
    if best is not None:
        return best
    return min(boxes, key=lambda b: b.frame_index) if boxes else None
