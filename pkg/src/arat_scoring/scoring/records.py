"""Assessment records, clinician feedback, and the review state machine."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from ..dataset import display_score
from ..hbm import CRITERIA

REVIEW_STATES = ("pending", "saved", "submitted")

LIKERT_DIMENSIONS = ("accuracy", "usability", "interpretability", "clinical_relevance")

#: Which quality criteria can plausibly be impaired in which movement phase.
#: Kept as plain data so a deployment can re-map phases without code changes.
PHASE_CRITERIA: Mapping[str, tuple[str, ...]] = {
    "initiation": (
        "movement_initiation_quality",
        "shoulder_elevation",
        "forearm_pronation_support",
    ),
    "grasping": ("wrist_hand_aperture", "digit_positioning", "grasp_stability"),
    "transporting": (
        "trunk_stabilization",
        "trajectory_smoothness",
        "trajectory_accuracy",
    ),
    "releasing": ("release_control",),
}


class InvalidTransitionError(RuntimeError):
    """An action not permitted from the record's current review state."""


def next_state(current: str, action: str) -> str:
    """The review state after ``action`` ('save' or 'submit').

    The machine is pending -> saved* -> submitted; submitted is terminal.
    """
    if current not in REVIEW_STATES:
        raise ValueError(f"unknown review state {current!r}")
    if action not in ("save", "submit"):
        raise ValueError(f"unknown action {action!r}")
    if current == "submitted":
        raise InvalidTransitionError(f"record already submitted; cannot {action}")
    return "saved" if action == "save" else "submitted"


@dataclass
class PhaseScore:
    phase: str
    score: int  # binary 0/1, same domain as the task score
    impairments: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "phase": self.phase,
            "score": self.score,
            "display_score": display_score(self.score),
            "impairments": list(self.impairments),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PhaseScore":
        return cls(
            phase=str(data["phase"]),
            score=int(data["score"]),
            impairments=[str(c) for c in data.get("impairments", [])],
        )


@dataclass
class AssessmentRecord:
    """One segment's automated assessment plus its review lifecycle."""

    segment_id: str
    patient_id: str
    task_score: int  # binary 0/1; shown to clinicians as ARAT 2/3
    execution_time: float  # seconds, from the annotated task interval
    phase_scores: list[PhaseScore] = field(default_factory=list)
    quality: dict[str, float] = field(default_factory=dict)  # criterion -> probability
    model_provenance: dict[str, Any] = field(default_factory=dict)
    review_state: str = "pending"
    clinician_edits: Optional[dict[str, Any]] = None
    record_id: Optional[int] = None
    created_at: Optional[str] = None
    updated_at: Optional[str] = None

    @property
    def display_score(self) -> int:
        return display_score(self.task_score)

    def validate(self) -> list[str]:
        problems: list[str] = []
        if self.task_score not in (0, 1):
            problems.append(f"task_score {self.task_score} outside {{0,1}}")
        if not self.execution_time > 0:
            problems.append(f"execution_time {self.execution_time} must be positive")
        if self.review_state not in REVIEW_STATES:
            problems.append(f"unknown review_state {self.review_state!r}")
        for ps in self.phase_scores:
            if ps.phase not in PHASE_CRITERIA:
                problems.append(f"unknown phase {ps.phase!r}")
            if ps.score not in (0, 1):
                problems.append(f"phase {ps.phase} score {ps.score} outside {{0,1}}")
            bad = set(ps.impairments) - set(CRITERIA)
            if bad:
                problems.append(f"phase {ps.phase} lists unknown criteria {sorted(bad)}")
        bad_quality = set(self.quality) - set(CRITERIA)
        if bad_quality:
            problems.append(f"quality keys outside the criteria set: {sorted(bad_quality)}")
        return problems

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "segment_id": self.segment_id,
            "patient_id": self.patient_id,
            "task_score": self.task_score,
            "display_score": self.display_score,
            "execution_time": self.execution_time,
            "phase_scores": [p.to_dict() for p in self.phase_scores],
            "quality": dict(self.quality),
            "model_provenance": dict(self.model_provenance),
            "review_state": self.review_state,
            "clinician_edits": self.clinician_edits,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AssessmentRecord":
        return cls(
            segment_id=str(data["segment_id"]),
            patient_id=str(data["patient_id"]),
            task_score=int(data["task_score"]),
            execution_time=float(data["execution_time"]),
            phase_scores=[PhaseScore.from_dict(p) for p in data.get("phase_scores", [])],
            quality={str(k): float(v) for k, v in data.get("quality", {}).items()},
            model_provenance=dict(data.get("model_provenance", {})),
            review_state=str(data.get("review_state", "pending")),
            clinician_edits=data.get("clinician_edits"),
            record_id=data.get("record_id"),
            created_at=data.get("created_at"),
            updated_at=data.get("updated_at"),
        )


@dataclass
class ClinicianFeedback:
    """One clinician's study questionnaire for one record."""

    clinician_id: str
    record_id: int
    likert: dict[str, int] = field(default_factory=dict)
    manual_task_score: Optional[int] = None  # ARAT display domain {2, 3}
    free_text: str = ""
    themes: list[str] = field(default_factory=list)
    feedback_id: Optional[int] = None
    created_at: Optional[str] = None

    def validate(self, require_complete: bool = True) -> list[str]:
        problems: list[str] = []
        unknown = set(self.likert) - set(LIKERT_DIMENSIONS)
        if unknown:
            problems.append(f"unknown likert dimensions {sorted(unknown)}")
        for dim, value in self.likert.items():
            if not (isinstance(value, int) and 1 <= value <= 5):
                problems.append(f"likert {dim}={value!r} outside 1..5")
        if require_complete:
            missing = [d for d in LIKERT_DIMENSIONS if d not in self.likert]
            if missing:
                problems.append(f"missing likert dimensions {missing}")
        if self.manual_task_score is not None and self.manual_task_score not in (2, 3):
            problems.append(
                f"manual_task_score {self.manual_task_score} outside display domain {{2,3}}"
            )
        return problems

    def to_dict(self) -> dict[str, Any]:
        return {
            "feedback_id": self.feedback_id,
            "clinician_id": self.clinician_id,
            "record_id": self.record_id,
            "likert": dict(self.likert),
            "manual_task_score": self.manual_task_score,
            "free_text": self.free_text,
            "themes": list(self.themes),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ClinicianFeedback":
        return cls(
            clinician_id=str(data["clinician_id"]),
            record_id=int(data["record_id"]),
            likert={str(k): int(v) for k, v in data.get("likert", {}).items()},
            manual_task_score=data.get("manual_task_score"),
            free_text=str(data.get("free_text", "")),
            themes=[str(t) for t in data.get("themes", [])],
            feedback_id=data.get("feedback_id"),
            created_at=data.get("created_at"),
        )


def relevant_impairments(
    phase: str,
    flags: Mapping[str, bool],
    phase_criteria: Mapping[str, Sequence[str]] = PHASE_CRITERIA,
) -> list[str]:
    """Criteria flagged as impaired, restricted to those relevant to ``phase``."""
    relevant = phase_criteria.get(phase, ())
    return [c for c in relevant if flags.get(c, False)]
