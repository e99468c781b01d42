from .records import (
    LIKERT_DIMENSIONS,
    PHASE_CRITERIA,
    REVIEW_STATES,
    AssessmentRecord,
    ClinicianFeedback,
    InvalidTransitionError,
    PhaseScore,
    next_state,
    relevant_impairments,
)
from .store import RecordNotFoundError, RecordStore
from .engine import STRATEGIES, ScoringError, ScoringStack, score_segment
from .analytics import compute_agreement, summarize_feedback
from .api import create_app

__all__ = [
    "LIKERT_DIMENSIONS",
    "PHASE_CRITERIA",
    "REVIEW_STATES",
    "AssessmentRecord",
    "ClinicianFeedback",
    "InvalidTransitionError",
    "PhaseScore",
    "next_state",
    "relevant_impairments",
    "RecordNotFoundError",
    "RecordStore",
    "STRATEGIES",
    "ScoringError",
    "ScoringStack",
    "score_segment",
    "compute_agreement",
    "summarize_feedback",
    "create_app",
]
