"""Domain types for multi-view task segments and their annotations.

A segment is one recorded ARAT task attempt: synchronized frame sequences from
up to three camera views, per-frame joint keypoints and object locations, a
clinician rating, and movement-phase intervals. Everything downstream consumes
these types; coordinates stay in original-frame pixel space until
preprocessing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import torch

JOINT_NAMES = ("shoulder", "elbow", "wrist", "hand")

MIN_CLIP_FRAMES = 32


class View(str, enum.Enum):
    IPSILATERAL = "ipsilateral"
    CONTRALATERAL = "contralateral"
    TOP = "top"


# Fixed concatenation order for every multi-view operation.
VIEW_ORDER = (View.IPSILATERAL, View.CONTRALATERAL, View.TOP)


@dataclass(frozen=True)
class PhaseAnnotation:
    """Half-open frame interval [start_frame, end_frame) of one movement phase."""

    phase_name: str
    start_frame: int
    end_frame: int

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class ViewData:
    """Per-view frame storage: a PNG directory or a single video file."""

    frame_count: int
    frames: str  # path relative to the archive root


@dataclass
class SegmentManifest:
    segment_id: str
    patient_id: str
    views: dict[View, ViewData]
    fps: int
    arat_rating: int
    phase_annotations: list[PhaseAnnotation]
    keypoints: str
    boxes: str

    def view_frame_count(self, view: View) -> int:
        return self.views[view].frame_count

    @property
    def min_frame_count(self) -> int:
        return min(v.frame_count for v in self.views.values())

    @property
    def task_interval(self) -> tuple[int, int]:
        """Frame span covered by the annotated phases."""
        starts = [p.start_frame for p in self.phase_annotations]
        ends = [p.end_frame for p in self.phase_annotations]
        return (min(starts), max(ends)) if starts else (0, self.min_frame_count)

    @classmethod
    def from_json(cls, record: Mapping[str, Any]) -> "SegmentManifest":
        views: dict[View, ViewData] = {}
        for name, data in record["views"].items():
            views[View(name)] = ViewData(
                frame_count=int(data["frame_count"]), frames=str(data["frames"])
            )
        phases = [
            PhaseAnnotation(str(p[0]), int(p[1]), int(p[2]))
            for p in record.get("phase_annotations", [])
        ]
        return cls(
            segment_id=str(record["segment_id"]),
            patient_id=str(record["patient_id"]),
            views=views,
            fps=int(record.get("fps", 30)),
            arat_rating=int(record["arat_rating"]),
            phase_annotations=phases,
            keypoints=str(record["keypoints"]),
            boxes=str(record["boxes"]),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "segment_id": self.segment_id,
            "patient_id": self.patient_id,
            "views": {
                v.value: {"frame_count": d.frame_count, "frames": d.frames}
                for v, d in self.views.items()
            },
            "fps": self.fps,
            "arat_rating": self.arat_rating,
            "phase_annotations": [
                [p.phase_name, p.start_frame, p.end_frame] for p in self.phase_annotations
            ],
            "keypoints": self.keypoints,
            "boxes": self.boxes,
        }

    def validate(self, archive_root: Optional[Path] = None) -> list[str]:
        """Return invariant violations (empty list when the manifest is valid)."""
        problems: list[str] = []
        if not self.views:
            problems.append("segment declares no views")
        if self.arat_rating not in (0, 1, 2, 3):
            problems.append(f"arat_rating {self.arat_rating} outside {{0,1,2,3}}")
        if self.fps <= 0:
            problems.append(f"fps {self.fps} must be positive")
        for view, data in self.views.items():
            if data.frame_count < MIN_CLIP_FRAMES:
                problems.append(
                    f"view {view.value} has {data.frame_count} frames,"
                    f" fewer than the required {MIN_CLIP_FRAMES}"
                )
            if archive_root is not None and not (archive_root / data.frames).exists():
                problems.append(f"view {view.value} frame data missing: {data.frames}")
        if self.views:
            limit = self.min_frame_count
            ordered = sorted(self.phase_annotations, key=lambda p: p.start_frame)
            for phase in ordered:
                if phase.start_frame < 0 or phase.end_frame > limit:
                    problems.append(
                        f"phase {phase.phase_name} interval"
                        f" [{phase.start_frame}, {phase.end_frame}) outside [0, {limit})"
                    )
                if phase.start_frame >= phase.end_frame:
                    problems.append(
                        f"phase {phase.phase_name} interval is empty or inverted"
                    )
            for prev, nxt in zip(ordered, ordered[1:]):
                if nxt.start_frame < prev.end_frame:
                    problems.append(
                        f"phases {prev.phase_name} and {nxt.phase_name} overlap"
                    )
        return problems


@dataclass(frozen=True)
class Joint:
    x: float
    y: float
    confidence: float


@dataclass
class KeypointFrame:
    """Joint and object annotations for a single frame, in pixel coordinates."""

    frame_index: int
    joints: dict[str, Joint]
    object_centroid: Optional[tuple[float, float]] = None

    @classmethod
    def from_json(cls, record: Mapping[str, Any]) -> "KeypointFrame":
        joints = {
            name: Joint(float(j["x"]), float(j["y"]), float(j["confidence"]))
            for name, j in record.get("joints", {}).items()
        }
        centroid = record.get("object_centroid")
        return cls(
            frame_index=int(record["frame_index"]),
            joints=joints,
            object_centroid=(float(centroid["x"]), float(centroid["y"]))
            if centroid is not None
            else None,
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "frame_index": self.frame_index,
            "joints": {
                name: {"x": j.x, "y": j.y, "confidence": j.confidence}
                for name, j in self.joints.items()
            },
            "object_centroid": None
            if self.object_centroid is None
            else {"x": self.object_centroid[0], "y": self.object_centroid[1]},
        }


@dataclass(frozen=True)
class BoundingBox:
    frame_index: int
    x1: float
    y1: float
    x2: float
    y2: float

    def validate(self) -> list[str]:
        problems = []
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            problems.append(
                f"box at frame {self.frame_index} is degenerate:"
                f" ({self.x1},{self.y1},{self.x2},{self.y2})"
            )
        return problems

    @classmethod
    def from_json(cls, record: Mapping[str, Any]) -> "BoundingBox":
        return cls(
            frame_index=int(record["frame_index"]),
            x1=float(record["x1"]),
            y1=float(record["y1"]),
            x2=float(record["x2"]),
            y2=float(record["y2"]),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "frame_index": self.frame_index,
            "x1": self.x1,
            "y1": self.y1,
            "x2": self.x2,
            "y2": self.y2,
        }


@dataclass
class ClipTensor:
    """A preprocessed fixed-length clip, laid out channels x frames x H x W."""

    data: torch.Tensor
    pipeline_tag: str  # slowfast_slow | slowfast_fast | i3d | transformer
    channel_layout: tuple[str, ...]

    EXPECTED_FRAMES = {
        "slowfast_slow": 2,
        "slowfast_fast": 8,
        "i3d": 32,
        "transformer": 32,
    }

    def assert_shape(self) -> None:
        """Check frame count and channel count against the pipeline contract."""
        expected_t = self.EXPECTED_FRAMES[self.pipeline_tag]
        c, t = self.data.shape[0], self.data.shape[1]
        if t != expected_t:
            raise ValueError(
                f"{self.pipeline_tag} clip has {t} frames, expected {expected_t}"
            )
        if c != len(self.channel_layout):
            raise ValueError(
                f"clip has {c} channels but layout names {len(self.channel_layout)}"
            )


@dataclass(frozen=True)
class ValidationIssue:
    segment_id: str
    message: str


@dataclass
class ArchiveIndex:
    """Outcome of loading an archive: valid manifests plus a validation report."""

    manifests: list[SegmentManifest] = field(default_factory=list)
    issues: list[ValidationIssue] = field(default_factory=list)

    def issues_for(self, segment_id: str) -> list[ValidationIssue]:
        return [i for i in self.issues if i.segment_id == segment_id]
