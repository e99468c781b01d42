"""Static SVG plots of training and variational-objective histories."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

CURVES_DIR = "curves"


def _require_history(history: Sequence[Mapping], what: str) -> None:
    if not history:
        raise ValueError(f"empty history; nothing to plot for {what}")


def training_curves(
    histories: Mapping[str, Sequence[Mapping]], out_dir: Union[str, Path]
) -> list[Path]:
    """Overlay per-backbone loss and accuracy curves; returns written paths."""
    if not histories:
        raise ValueError("no training histories to plot")
    for name, history in histories.items():
        _require_history(history, name)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    specs = [
        ("training_loss.svg", "train_loss", "cross-entropy loss"),
        ("training_accuracy.svg", "train_accuracy", "training accuracy"),
    ]
    for filename, key, label in specs:
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in sorted(histories):
            history = histories[name]
            epochs = [h["epoch"] for h in history]
            ax.plot(epochs, [h[key] for h in history], marker="o", markersize=3, label=name)
        ax.set_xlabel("epoch")
        ax.set_ylabel(label)
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / filename
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written


def elbo_curve(history: Sequence[Mapping], out_dir: Union[str, Path]) -> Path:
    """Evidence lower bound and KL over epochs, one SVG with two panels."""
    _require_history(history, "variational objective")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    epochs = [h["epoch"] for h in history]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    top.plot(epochs, [h["elbo"] for h in history], color="tab:blue", label="ELBO")
    top.plot(
        epochs,
        [h["log_likelihood"] for h in history],
        color="tab:green",
        label="log-likelihood",
    )
    top.set_ylabel("nats")
    top.legend()
    top.grid(True, alpha=0.3)
    bottom.plot(epochs, [h["kl"] for h in history], color="tab:red", label="KL")
    bottom.set_xlabel("epoch")
    bottom.set_ylabel("nats")
    bottom.legend()
    bottom.grid(True, alpha=0.3)
    fig.tight_layout()
    path = out_dir / "elbo.svg"
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
