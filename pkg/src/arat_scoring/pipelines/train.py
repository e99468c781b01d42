"""Fine-tuning loop shared by the three backbones.

Cross-entropy on binary labels with Adam, per-step gradient clipping,
and best-epoch checkpoint selection by validation accuracy (ties broken
by lower validation loss).  The post-clip global gradient norm of every
optimisation step is recorded so clipping can be audited after the fact.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn

from .config import PipelineConfig, ShapeMismatchError, TrainConfig
from .factory import apply_train_mode, build_pipeline

logger = logging.getLogger(__name__)

__all__ = [
    "TrainResult",
    "TrainingDivergedError",
    "ShapeMismatchError",
    "train_pipeline",
    "extract_features",
    "predict",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_name",
]


class TrainingDivergedError(RuntimeError):
    """Raised when the loss stops being finite.

    Carries the most recent usable weights so a run can be salvaged.
    """

    def __init__(self, message: str, last_good_state: dict, history: list[dict]):
        super().__init__(message)
        self.last_good_state = last_good_state
        self.history = history


@dataclass
class TrainResult:
    history: list[dict] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = 0.0
    best_val_loss: float = math.inf
    best_state: dict | None = None


def _to_device(inputs, device):
    if isinstance(inputs, (tuple, list)):
        return tuple(t.to(device) for t in inputs)
    return inputs.to(device)


def _clone_state(model: nn.Module) -> dict:
    return {k: v.detach().clone() for k, v in model.state_dict().items()}


def _global_grad_norm(params) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(p.grad.detach().pow(2).sum())
    return math.sqrt(total)


@torch.no_grad()
def _evaluate(model: nn.Module, loader, criterion, device) -> tuple[float, float]:
    model.eval()
    total_loss, correct, seen = 0.0, 0, 0
    for inputs, labels in loader:
        inputs = _to_device(inputs, device)
        labels = labels.to(device)
        logits = model(inputs)
        total_loss += float(criterion(logits, labels)) * labels.shape[0]
        correct += int((logits.argmax(dim=1) == labels).sum())
        seen += labels.shape[0]
    if seen == 0:
        return math.nan, math.nan
    return total_loss / seen, correct / seen


def train_pipeline(
    model: nn.Module,
    train_loader,
    val_loader=None,
    config: TrainConfig | None = None,
    device: str = "cpu",
) -> TrainResult:
    """Fine-tune ``model`` and leave it loaded with its best-epoch weights."""
    cfg = config or TrainConfig()
    torch.manual_seed(cfg.seed)
    model.to(device)
    criterion = nn.CrossEntropyLoss()
    trainable = [p for p in model.parameters() if p.requires_grad]
    if not trainable:
        raise ValueError("model has no trainable parameters; nothing to fine-tune")
    optimizer = torch.optim.Adam(
        trainable, lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )

    result = TrainResult()
    last_good = _clone_state(model)
    for epoch in range(cfg.epochs):
        apply_train_mode(model)
        epoch_norms: list[float] = []
        total_loss, correct, seen = 0.0, 0, 0
        for step, (inputs, labels) in enumerate(train_loader):
            inputs = _to_device(inputs, device)
            labels = labels.to(device)
            optimizer.zero_grad(set_to_none=True)
            logits = model(inputs)
            loss = criterion(logits, labels)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} step {step}",
                    last_good_state=last_good,
                    history=result.history,
                )
            loss.backward()
            torch.nn.utils.clip_grad_norm_(trainable, cfg.grad_clip_max_norm)
            norm = _global_grad_norm(trainable)
            epoch_norms.append(norm)
            result.grad_norms.append(norm)
            optimizer.step()
            total_loss += float(loss.detach()) * labels.shape[0]
            correct += int((logits.argmax(dim=1) == labels).sum())
            seen += labels.shape[0]
        last_good = _clone_state(model)

        record = {
            "epoch": epoch,
            "train_loss": total_loss / max(seen, 1),
            "train_accuracy": correct / max(seen, 1),
            "mean_grad_norm": sum(epoch_norms) / max(len(epoch_norms), 1),
            "max_grad_norm": max(epoch_norms, default=0.0),
        }
        if val_loader is not None:
            val_loss, val_acc = _evaluate(model, val_loader, criterion, device)
            record["val_loss"] = val_loss
            record["val_accuracy"] = val_acc
            better = val_acc > result.best_val_accuracy or (
                val_acc == result.best_val_accuracy and val_loss < result.best_val_loss
            )
            if result.best_state is None or better:
                result.best_epoch = epoch
                result.best_val_accuracy = val_acc
                result.best_val_loss = val_loss
                result.best_state = _clone_state(model)
        result.history.append(record)
        logger.info(
            "epoch %d: train_loss=%.4f train_acc=%.3f%s",
            epoch,
            record["train_loss"],
            record["train_accuracy"],
            f" val_acc={record['val_accuracy']:.3f}" if val_loader is not None else "",
        )

    if result.best_state is None:
        # No validation data: the final weights are the checkpoint.
        result.best_epoch = cfg.epochs - 1
        result.best_state = _clone_state(model)
    else:
        model.load_state_dict(result.best_state)
    return result


@torch.no_grad()
def extract_features(model: nn.Module, inputs) -> torch.Tensor:
    """Pooled pre-classifier features for one batch."""
    model.eval()
    return model.forward_features(inputs)


@torch.no_grad()
def predict(model: nn.Module, inputs) -> torch.Tensor:
    """Per-class probabilities for one batch."""
    model.eval()
    return model(inputs).softmax(dim=1)


def checkpoint_name(kind: str) -> str:
    return f"{kind}_finetuned.pt"


def save_checkpoint(
    model: nn.Module,
    path: str | Path,
    history: list[dict] | None = None,
    train_config: TrainConfig | None = None,
) -> Path:
    """Write weights + config to ``path`` and history to a JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "state_dict": model.state_dict(),
        "pipeline_config": model.config.to_dict(),
        "frozen_stages": list(getattr(model, "frozen_stage_names", ())),
        "history": history or [],
    }
    if train_config is not None:
        payload["train_config"] = train_config.to_dict()
    torch.save(payload, path)
    if history is not None:
        sidecar = path.with_suffix(".history.json")
        sidecar.write_text(json.dumps(history, indent=2))
    logger.info("wrote checkpoint %s", path)
    return path


def load_checkpoint(path: str | Path) -> tuple[nn.Module, dict]:
    """Rebuild the model a checkpoint was saved from.

    Returns ``(model, payload)`` where payload keeps the stored history
    and configs.  Frozen stages are re-frozen so fine-tuning can resume
    with identical trainability.
    """
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    config = PipelineConfig.from_dict(payload["pipeline_config"])
    model = build_pipeline(config)
    model.load_state_dict(payload["state_dict"])
    frozen = tuple(payload.get("frozen_stages", ()))
    for name in frozen:
        for param in model.stage_module(name).parameters():
            param.requires_grad_(False)
    model.frozen_stage_names = frozen
    return model, payload
