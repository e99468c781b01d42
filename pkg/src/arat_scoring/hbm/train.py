"""Fitting and applying the hierarchical quality model."""
from __future__ import annotations

import logging
import math

import torch
from torch.nn import functional as F
from torch.utils.data import DataLoader, TensorDataset

from .criteria import CRITERIA
from .model import HBMConfig, HierarchicalQualityModel, elbo

logger = logging.getLogger(__name__)

DEFAULT_LR = 1e-3
DEFAULT_EPOCHS = 100
#: Per-layer KL floor (nats) in the training objective.  Below this
#: level the KL term stops penalising, so latents can carry at least
#: one bit of input information without the bound fighting them; the
#: *reported* ELBO is always the untouched bound.
DEFAULT_FREE_BITS = 1.0


def fit_hbm(
    model: HierarchicalQualityModel,
    x_kin: torch.Tensor,
    x_sem: torch.Tensor,
    y: torch.Tensor,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LR,
    batch_size: int = 32,
    seed: int = 42,
    free_bits: float = DEFAULT_FREE_BITS,
) -> list[dict]:
    """Maximise the ELBO with Adam; returns per-epoch history.

    The gradient objective applies a per-layer free-bits floor of
    ``free_bits`` nats; history records the true (un-floored) ELBO.
    """
    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    loader = DataLoader(
        TensorDataset(x_kin, x_sem, y),
        batch_size=batch_size,
        shuffle=True,
        generator=torch.Generator().manual_seed(seed),
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    history: list[dict] = []
    for epoch in range(epochs):
        model.train()
        sums = {"elbo": 0.0, "log_likelihood": 0.0, "kl": 0.0}
        seen = 0
        for xb_kin, xb_sem, yb in loader:
            optimizer.zero_grad(set_to_none=True)
            noise = model.sample_noise(
                model.config.train_samples, yb.shape[0], generator, dtype=x_kin.dtype
            )
            logits, kl, per_layer = model.criteria_logits(xb_kin, xb_sem, noise)
            target = yb.to(logits.dtype).unsqueeze(0).expand_as(logits)
            loglik = -F.binary_cross_entropy_with_logits(
                logits, target, reduction="none"
            ).sum(dim=-1)
            true_elbo = (loglik - kl).mean(dim=0).mean()
            kl_term = sum(
                torch.clamp(t.mean(), min=free_bits) for t in per_layer.values()
            )
            loss = -(loglik.mean() - kl_term)
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite ELBO at epoch {epoch}")
            loss.backward()
            optimizer.step()
            n = yb.shape[0]
            sums["elbo"] += float(true_elbo.detach()) * n
            sums["log_likelihood"] += float(loglik.detach().mean()) * n
            sums["kl"] += float(kl.detach().mean()) * n
            seen += n
        record = {"epoch": epoch, **{k: v / seen for k, v in sums.items()}}
        history.append(record)
        if epoch % 10 == 0 or epoch == epochs - 1:
            logger.info(
                "epoch %d: elbo=%.4f loglik=%.4f kl=%.4f",
                epoch, record["elbo"], record["log_likelihood"], record["kl"],
            )
    return history


@torch.no_grad()
def infer_quality(
    model: HierarchicalQualityModel,
    x_kin: torch.Tensor,
    x_sem: torch.Tensor,
    n_samples: int | None = None,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Posterior-mean probability that each criterion is satisfied.

    Noise paths are shared across the batch and the generator defaults
    to a fixed seed, so (a) repeated calls agree exactly and (b) an
    example's output does not depend on its batch neighbours.
    """
    model.eval()
    s = n_samples or model.config.eval_samples
    if generator is None:
        generator = torch.Generator().manual_seed(0)
    noise = model.sample_noise(
        s, x_kin.shape[0], generator, shared_across_batch=True, dtype=x_kin.dtype
    )
    logits, _, _ = model.criteria_logits(x_kin, x_sem, noise)
    return logits.sigmoid().mean(dim=0)  # [batch, n_criteria]


def combine_assessments(
    criteria_probabilities, threshold: float = 0.5
) -> dict[str, bool]:
    """Turn per-criterion satisfaction probabilities into impairment flags.

    A criterion whose satisfaction probability falls below ``threshold``
    is flagged impaired.  Accepts one example's probability vector.
    """
    probs = [float(p) for p in criteria_probabilities]
    if len(probs) != len(CRITERIA):
        raise ValueError(f"expected {len(CRITERIA)} probabilities, got {len(probs)}")
    if not all(0.0 <= p <= 1.0 for p in probs):
        raise ValueError("probabilities must lie in [0, 1]")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    return {name: p < threshold for name, p in zip(CRITERIA, probs)}


def planted_criteria_dataset(
    n: int,
    config: HBMConfig,
    seed: int = 0,
    planted: int = 0,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Synthetic quality data with one learnable criterion.

    Criterion ``planted`` is 1 exactly when the mean of the kinematic
    vector is positive; every other criterion is an unlearnable coin
    flip.  Used to verify the model recovers a real signal.
    """
    g = torch.Generator().manual_seed(seed)
    x_kin = torch.randn(n, config.kinematic_dim, generator=g)
    x_sem = torch.randn(n, config.semantic_dim, generator=g)
    y = (torch.rand(n, config.n_criteria, generator=g) < 0.5).float()
    y[:, planted] = (x_kin.mean(dim=1) > 0).float()
    return x_kin, x_sem, y


def save_quality_model(
    model: HierarchicalQualityModel,
    path,
    pca=None,
    history: list[dict] | None = None,
):
    """Persist the quality model (and optionally its feature reducer)."""
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": model.config.to_dict(),
        "state_dict": model.state_dict(),
        "pca": None if pca is None else pca.to_dict(),
        "history": history or [],
    }
    torch.save(payload, path)
    logger.info("wrote quality model %s", path)
    return path


def load_quality_model(path):
    """Rebuild a saved quality model; returns (model, pca-or-None, payload)."""
    from .pca import PCAModel

    payload = torch.load(path, map_location="cpu", weights_only=False)
    model = HierarchicalQualityModel(HBMConfig.from_dict(payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    pca = None if payload.get("pca") is None else PCAModel.from_dict(payload["pca"])
    return model, pca, payload
