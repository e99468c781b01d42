"""The ten movement-quality criteria scored for every segment.

Each criterion is a yes/no judgement about one aspect of how the arm
moved.  Six follow directly from clinical descriptions of compensatory
movement; the remaining four (flagged below) are defined by this
implementation so that the scoring surface is complete, and reports mark
them as such.
"""
from __future__ import annotations

CRITERIA: tuple[str, ...] = (
    "trunk_stabilization",
    "shoulder_elevation",
    "wrist_hand_aperture",
    "forearm_pronation_support",
    "digit_positioning",
    "movement_initiation_quality",
    "trajectory_smoothness",
    "trajectory_accuracy",
    "grasp_stability",
    "release_control",
)

#: Criteria whose precise definition is fixed by this implementation
#: rather than by an external clinical instrument.
ARTIFACT_DEFINED: frozenset[str] = frozenset(
    {
        "movement_initiation_quality",
        "trajectory_accuracy",
        "grasp_stability",
        "release_control",
    }
)


def criterion_index(name: str) -> int:
    try:
        return CRITERIA.index(name)
    except ValueError:
        raise KeyError(f"unknown criterion {name!r}; known: {list(CRITERIA)}") from None
