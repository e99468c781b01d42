"""Batch evaluation: the seven-strategy metric grid.

The grid compares, on one validation archive:

1-3. each backbone alone (ipsilateral view only),
4-5. multi-view fusion for a designated backbone, early (trained view
     head over concatenated features) and late (weighted probability
     average),
6-7. multi-model fusion, early (view-head hidden units through a model
     head) and late (weighted average of per-backbone view-fused
     probabilities).

A strategy whose checkpoints are missing yields an "unavailable" row;
the remaining rows are still produced.  Training time per epoch is
wall-clock supplied by whoever trained the checkpoints — it is reported
for transparency, never compared against a target.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np
import torch

from ..dataset import (
    VIEW_ORDER,
    EXCLUDED,
    PreprocessConfig,
    SegmentManifest,
    View,
    display_score,
    map_label,
    sample_clip,
)
from ..fusion import (
    DEFAULT_MODEL_WEIGHTS,
    DEFAULT_VIEW_WEIGHTS,
    FusionHead,
    late_fuse_models,
    late_fuse_views,
    load_fusion_head,
)
from ..pipelines import PIPELINE_KINDS, checkpoint_name, extract_features, load_checkpoint, predict
from ..scoring import compute_agreement

logger = logging.getLogger(__name__)

STRATEGIES = (
    "slowfast",
    "i3d",
    "transformer",
    "view-fusion-early",
    "view-fusion-late",
    "model-fusion-early",
    "model-fusion-late",
)

METRICS_CSV = "metrics.csv"
METRICS_JSON = "metrics.json"


def view_head_name(kind: str) -> str:
    return f"view_head_{kind}.pt"


MODEL_HEAD_NAME = "model_head.pt"


@dataclass
class MetricRow:
    strategy: str
    accuracy_pct: Optional[float] = None
    f1: Optional[float] = None
    agreement_pct: Optional[float] = None
    train_min_per_epoch: Optional[float] = None
    available: bool = True
    note: str = ""

    def validate(self) -> list[str]:
        problems = []
        for name in ("accuracy_pct", "agreement_pct"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 100.0:
                problems.append(f"{name} {value} outside [0, 100]")
        if self.f1 is not None and not 0.0 <= self.f1 <= 1.0:
            problems.append(f"f1 {self.f1} outside [0, 1]")
        return problems

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "accuracy_pct": self.accuracy_pct,
            "f1": self.f1,
            "agreement_pct": self.agreement_pct,
            "train_min_per_epoch": self.train_min_per_epoch,
            "available": self.available,
            "note": self.note,
        }


def binary_metrics(predictions: Sequence[int], labels: Sequence[int]) -> dict[str, Any]:
    """Accuracy, positive-class F1, and the underlying confusion counts."""
    preds = np.asarray(predictions, dtype=int)
    truth = np.asarray(labels, dtype=int)
    if preds.shape != truth.shape or preds.ndim != 1 or len(preds) == 0:
        raise ValueError(
            f"need equal non-empty 1-D predictions and labels, got {preds.shape} vs {truth.shape}"
        )
    bad = set(np.unique(np.concatenate([preds, truth]))) - {0, 1}
    if bad:
        raise ValueError(f"binary metrics need 0/1 values, got extras {sorted(bad)}")
    tp = int(np.sum((preds == 1) & (truth == 1)))
    fp = int(np.sum((preds == 1) & (truth == 0)))
    tn = int(np.sum((preds == 0) & (truth == 0)))
    fn = int(np.sum((preds == 0) & (truth == 1)))
    denominator = 2 * tp + fp + fn
    return {
        "tp": tp,
        "fp": fp,
        "tn": tn,
        "fn": fn,
        "accuracy_pct": 100.0 * (tp + tn) / len(preds),
        "f1": (2.0 * tp / denominator) if denominator else 0.0,
    }


def _rated_labels(manifests: Sequence[SegmentManifest]) -> list[int]:
    labels = []
    for manifest in manifests:
        label = map_label(manifest.arat_rating)
        if label is EXCLUDED:
            raise ValueError(
                f"segment {manifest.segment_id} has unrated/excluded score"
                f" {manifest.arat_rating}; filter the validation set first"
            )
        labels.append(int(label))
    return labels


class _Caches:
    """Per-(backbone, view) probabilities and features, computed once."""

    def __init__(self, archive_root, manifests, models, preprocess):
        self.archive_root = archive_root
        self.manifests = manifests
        self.models = models
        self.preprocess = preprocess
        self._probs: dict[tuple[str, str], np.ndarray] = {}
        self._feats: dict[tuple[str, str], torch.Tensor] = {}

    def _inputs(self, manifest, kind: str, view: View):
        clip = sample_clip(self.archive_root, manifest, view, kind, config=self.preprocess)
        if kind == "slowfast":
            slow, fast = clip
            return slow.data.unsqueeze(0), fast.data.unsqueeze(0)
        return clip.data.unsqueeze(0)

    def probs(self, kind: str, view: View) -> np.ndarray:
        """[n_segments, 2] class probabilities."""
        key = (kind, view.value)
        if key not in self._probs:
            model = self.models[kind]
            rows = [
                predict(model, self._inputs(m, kind, view))[0].numpy()
                for m in self.manifests
            ]
            self._probs[key] = np.stack(rows)
        return self._probs[key]

    def features(self, kind: str, view: View) -> torch.Tensor:
        """[n_segments, feature_dim] pooled backbone features."""
        key = (kind, view.value)
        if key not in self._feats:
            model = self.models[kind]
            with torch.no_grad():
                rows = [
                    extract_features(model, self._inputs(m, kind, view))[0]
                    for m in self.manifests
                ]
            self._feats[key] = torch.stack(rows)
        return self._feats[key]

    def view_fused(self, kind: str, view_weights) -> np.ndarray:
        return late_fuse_views(
            self.probs(kind, View.IPSILATERAL),
            self.probs(kind, View.CONTRALATERAL),
            self.probs(kind, View.TOP),
            view_weights,
        )

    def early_view_logits(self, kind: str, head: FusionHead) -> torch.Tensor:
        stacked = torch.cat([self.features(kind, v) for v in VIEW_ORDER], dim=1)
        with torch.no_grad():
            return head(stacked)

    def early_view_hidden(self, kind: str, head: FusionHead) -> torch.Tensor:
        stacked = torch.cat([self.features(kind, v) for v in VIEW_ORDER], dim=1)
        with torch.no_grad():
            return head.intermediate(stacked)


def _row_from_probs(
    strategy: str,
    probabilities: np.ndarray,
    labels: Sequence[int],
    train_min_per_epoch: Optional[float],
) -> MetricRow:
    predictions = np.argmax(probabilities, axis=1)
    metrics = binary_metrics(predictions, labels)
    agreement = compute_agreement(
        [(display_score(int(p)), display_score(int(t))) for p, t in zip(predictions, labels)]
    )
    return MetricRow(
        strategy=strategy,
        accuracy_pct=metrics["accuracy_pct"],
        f1=metrics["f1"],
        agreement_pct=agreement["agreement_pct"],
        train_min_per_epoch=train_min_per_epoch,
    )


def evaluate_all(
    checkpoint_dir: Union[str, Path],
    archive_root: Union[str, Path],
    manifests: Sequence[SegmentManifest],
    preprocess: Optional[PreprocessConfig] = None,
    view_backbone: str = "slowfast",
    view_weights: Optional[Mapping[str, float]] = None,
    model_weights: Optional[Mapping[str, float]] = None,
    epoch_minutes: Optional[Mapping[str, float]] = None,
    out_dir: Optional[Union[str, Path]] = None,
) -> list[MetricRow]:
    """Evaluate every strategy on one validation archive; 7 rows, always.

    ``epoch_minutes`` maps strategy names to wall-clock training minutes
    per epoch (recorded by whoever trained the checkpoints).
    """
    checkpoint_dir = Path(checkpoint_dir)
    if view_backbone not in PIPELINE_KINDS:
        raise ValueError(f"unknown view_backbone {view_backbone!r}; pick from {PIPELINE_KINDS}")
    if not manifests:
        raise ValueError("validation set is empty")
    labels = _rated_labels(manifests)
    preprocess = preprocess or PreprocessConfig()
    minutes = dict(epoch_minutes or {})

    models: dict[str, Any] = {}
    missing: dict[str, str] = {}
    for kind in PIPELINE_KINDS:
        path = checkpoint_dir / checkpoint_name(kind)
        if path.is_file():
            model, _ = load_checkpoint(path)
            model.eval()
            models[kind] = model
        else:
            missing[kind] = path.name

    view_heads: dict[str, FusionHead] = {}
    for kind in PIPELINE_KINDS:
        head_path = checkpoint_dir / view_head_name(kind)
        if head_path.is_file():
            view_heads[kind] = load_fusion_head(head_path)
    model_head_path = checkpoint_dir / MODEL_HEAD_NAME
    model_head = load_fusion_head(model_head_path) if model_head_path.is_file() else None

    caches = _Caches(archive_root, manifests, models, preprocess)
    rows: list[MetricRow] = []

    def unavailable(strategy: str, note: str) -> MetricRow:
        logger.warning("strategy %s unavailable: %s", strategy, note)
        return MetricRow(strategy=strategy, available=False, note=note)

    for kind in PIPELINE_KINDS:
        if kind in models:
            rows.append(
                _row_from_probs(
                    kind, caches.probs(kind, View.IPSILATERAL), labels, minutes.get(kind)
                )
            )
        else:
            rows.append(unavailable(kind, f"checkpoint {missing[kind]} missing"))

    # view fusion over the designated backbone
    if view_backbone not in models:
        note = f"checkpoint {missing.get(view_backbone, '?')} missing"
        rows.append(unavailable("view-fusion-early", note))
        rows.append(unavailable("view-fusion-late", note))
    else:
        if view_backbone in view_heads:
            logits = caches.early_view_logits(view_backbone, view_heads[view_backbone])
            rows.append(
                _row_from_probs(
                    "view-fusion-early",
                    logits.softmax(dim=1).numpy(),
                    labels,
                    minutes.get("view-fusion-early"),
                )
            )
        else:
            rows.append(
                unavailable(
                    "view-fusion-early", f"head {view_head_name(view_backbone)} missing"
                )
            )
        rows.append(
            _row_from_probs(
                "view-fusion-late",
                caches.view_fused(view_backbone, view_weights or DEFAULT_VIEW_WEIGHTS),
                labels,
                minutes.get("view-fusion-late"),
            )
        )

    # model fusion needs every backbone
    missing_models = sorted(set(PIPELINE_KINDS) - set(models))
    if missing_models:
        note = f"checkpoints missing for {missing_models}"
        rows.append(unavailable("model-fusion-early", note))
        rows.append(unavailable("model-fusion-late", note))
    else:
        missing_heads = sorted(set(PIPELINE_KINDS) - set(view_heads))
        if missing_heads or model_head is None:
            pieces = [f"view heads missing for {missing_heads}"] if missing_heads else []
            if model_head is None:
                pieces.append(f"{MODEL_HEAD_NAME} missing")
            rows.append(unavailable("model-fusion-early", "; ".join(pieces)))
        else:
            hidden = torch.cat(
                [caches.early_view_hidden(kind, view_heads[kind]) for kind in PIPELINE_KINDS],
                dim=1,
            )
            with torch.no_grad():
                probs = model_head(hidden).softmax(dim=1).numpy()
            rows.append(
                _row_from_probs("model-fusion-early", probs, labels, minutes.get("model-fusion-early"))
            )
        weights = model_weights or DEFAULT_MODEL_WEIGHTS
        by_model = {kind: caches.view_fused(kind, view_weights or DEFAULT_VIEW_WEIGHTS) for kind in weights}
        rows.append(
            _row_from_probs(
                "model-fusion-late",
                late_fuse_models(by_model, weights),
                labels,
                minutes.get("model-fusion-late"),
            )
        )

    assert [row.strategy for row in rows] == list(STRATEGIES)
    for row in rows:
        problems = row.validate()
        if problems:
            raise RuntimeError(f"metric row {row.strategy} invalid: {problems}")

    if out_dir is not None:
        write_metrics(rows, out_dir)
    return rows


def write_metrics(rows: Sequence[MetricRow], out_dir: Union[str, Path]) -> tuple[Path, Path]:
    """Emit the grid as ``metrics.csv`` and ``metrics.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / METRICS_CSV
    json_path = out_dir / METRICS_JSON
    fields = [
        "strategy",
        "accuracy_pct",
        "f1",
        "agreement_pct",
        "train_min_per_epoch",
        "available",
        "note",
    ]
    with csv_path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            payload = row.to_dict()
            writer.writerow({k: "" if payload[k] is None else payload[k] for k in fields})
    json_path.write_text(json.dumps([row.to_dict() for row in rows], indent=2))
    return csv_path, json_path
