"""Principal component reduction for backbone feature vectors.

A thin SVD-based implementation (rather than a scikit-learn dependency)
so the orthonormality and reconstruction guarantees are directly
testable and the package stays light.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class PCAModel:
    mean: np.ndarray            # [d]
    components: np.ndarray      # [k, d], rows orthonormal
    explained_variance: np.ndarray  # [k]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return (x - self.mean) @ self.components.T

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        return z @ self.components + self.mean

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PCAModel":
        return cls(
            mean=np.asarray(payload["mean"], dtype=np.float64),
            components=np.asarray(payload["components"], dtype=np.float64),
            explained_variance=np.asarray(payload["explained_variance"], dtype=np.float64),
        )


def fit_pca(x: np.ndarray, n_components: int) -> PCAModel:
    """Fit a PCA with ``n_components`` directions via SVD of centred data."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected [n, d] data, got shape {x.shape}")
    n, d = x.shape
    if not 1 <= n_components <= min(n, d):
        raise ValueError(
            f"n_components={n_components} outside [1, min(n={n}, d={d})]"
        )
    mean = x.mean(axis=0)
    centred = x - mean
    _, singular, vt = np.linalg.svd(centred, full_matrices=False)
    components = vt[:n_components]
    explained = (singular[:n_components] ** 2) / max(n - 1, 1)
    return PCAModel(mean=mean, components=components, explained_variance=explained)
