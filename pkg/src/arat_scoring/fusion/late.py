"""Decision-level fusion: convex combinations of class probabilities.

All arithmetic runs in float64 regardless of the input container so the
convexity invariant (outputs are probability vectors whenever inputs
are) holds to machine precision.
"""
from __future__ import annotations

import logging
from typing import Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

#: Camera views weighted by how much of the movement they typically see.
DEFAULT_VIEW_WEIGHTS: Mapping[str, float] = {
    "ipsilateral": 0.40,
    "contralateral": 0.35,
    "top": 0.25,
}

#: Per-backbone weights for model-level decision fusion.
DEFAULT_MODEL_WEIGHTS: Mapping[str, float] = {
    "transformer": 0.35,
    "slowfast": 0.35,
    "i3d": 0.30,
}

_WEIGHT_TOL = 1e-9


def _check_weights(weights: Sequence[float], n: int) -> np.ndarray:
    w = np.asarray(list(weights), dtype=np.float64)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got {w.shape}")
    if (w < 0).any():
        raise ValueError(f"fusion weights must be non-negative, got {w.tolist()}")
    total = w.sum()
    if abs(total - 1.0) > _WEIGHT_TOL:
        raise ValueError(f"fusion weights must sum to 1, got {total!r}")
    return w


def late_fuse(
    probabilities: Sequence, weights: Sequence[float]
) -> np.ndarray:
    """Weighted average of probability vectors (or batches of them).

    ``probabilities`` holds one array-like per source, each either
    ``[n_classes]`` or ``[batch, n_classes]``.  The weights must form a
    convex combination.
    """
    arrays = [np.asarray(p, dtype=np.float64) for p in probabilities]
    if not arrays:
        raise ValueError("nothing to fuse")
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise ValueError(f"probability shapes differ: {shape} vs {a.shape}")
    w = _check_weights(weights, len(arrays))
    fused = np.zeros(shape, dtype=np.float64)
    for weight, array in zip(w, arrays):
        fused += weight * array
    return fused


def late_fuse_views(
    ipsilateral, contralateral, top, weights: Mapping[str, float] | None = None
) -> np.ndarray:
    """Fuse per-view probabilities with the view weighting."""
    w = dict(DEFAULT_VIEW_WEIGHTS if weights is None else weights)
    return late_fuse(
        [ipsilateral, contralateral, top],
        [w["ipsilateral"], w["contralateral"], w["top"]],
    )


def late_fuse_models(
    by_model: Mapping[str, Sequence], weights: Mapping[str, float] | None = None
) -> np.ndarray:
    """Fuse per-backbone probabilities with the model weighting."""
    w = dict(DEFAULT_MODEL_WEIGHTS if weights is None else weights)
    missing = set(w) - set(by_model)
    if missing:
        raise ValueError(f"missing probabilities for {sorted(missing)}")
    names = sorted(w)
    return late_fuse([by_model[name] for name in names], [w[name] for name in names])


def weights_from_accuracies(accuracies: Mapping[str, float]) -> dict[str, float]:
    """Convex weights proportional to held-out accuracy."""
    if not accuracies:
        raise ValueError("no accuracies given")
    values = np.asarray(list(accuracies.values()), dtype=np.float64)
    if (values < 0).any():
        raise ValueError("accuracies must be non-negative")
    total = values.sum()
    if total == 0:
        # Nothing to distinguish the sources; fall back to uniform.
        values = np.ones_like(values)
        total = values.sum()
    return {k: float(v / total) for k, v in zip(accuracies, values)}
