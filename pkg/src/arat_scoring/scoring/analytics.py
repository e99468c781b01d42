"""Study-level summaries: score agreement and questionnaire statistics."""
from __future__ import annotations

import math
from collections import Counter
from typing import Any, Iterable, Sequence

from .records import LIKERT_DIMENSIONS, ClinicianFeedback

#: Sample sizes this small get flagged so dashboards don't over-read them.
LOW_N = 5


def compute_agreement(pairs: Sequence[tuple[int, int]]) -> dict[str, Any]:
    """Agreement between automated and clinician scores on the 2/3 scale.

    ``pairs`` holds ``(automated, manual)`` display scores.  Returns the
    percentage of exact matches plus a confusion table keyed
    ``"auto->manual"``.  Order of the pairs never matters.
    """
    if not pairs:
        raise ValueError("agreement is undefined for zero scored records")
    confusion: Counter[str] = Counter()
    matches = 0
    for automated, manual in pairs:
        if automated not in (2, 3) or manual not in (2, 3):
            raise ValueError(
                f"scores must be on the display scale {{2,3}}, got ({automated}, {manual})"
            )
        confusion[f"{automated}->{manual}"] += 1
        if automated == manual:
            matches += 1
    n = len(pairs)
    return {
        "n": n,
        "matches": matches,
        "agreement_pct": 100.0 * matches / n,
        "confusion": {key: confusion.get(key, 0) for key in ("2->2", "2->3", "3->2", "3->3")},
    }


def summarize_feedback(feedback: Iterable[ClinicianFeedback]) -> dict[str, Any]:
    """Per-dimension Likert means/spreads plus theme tag counts."""
    items = list(feedback)
    likert: dict[str, Any] = {}
    for dim in LIKERT_DIMENSIONS:
        values = [fb.likert[dim] for fb in items if dim in fb.likert]
        n = len(values)
        if n == 0:
            likert[dim] = {"n": 0, "mean": None, "stddev": None, "low_n": True}
            continue
        mean = sum(values) / n
        stddev = math.sqrt(sum((v - mean) ** 2 for v in values) / n)  # population; 0 when n == 1
        likert[dim] = {"n": n, "mean": mean, "stddev": stddev, "low_n": n < LOW_N}
    themes: Counter[str] = Counter()
    for fb in items:
        themes.update(fb.themes)
    return {
        "responses": len(items),
        "likert": likert,
        "themes": dict(sorted(themes.items())),
    }
