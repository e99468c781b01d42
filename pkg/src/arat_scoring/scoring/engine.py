"""Turn one archived segment into an assessment record.

The engine runs the loaded backbones over every camera view, fuses the
class probabilities with the requested strategy, scores each annotated
movement phase from its sub-clip, and (when a quality model is loaded)
attaches per-criterion satisfaction probabilities plus the impairment
flags relevant to each phase.  It never persists anything — storage is
the caller's concern — and a failed run raises before a record exists.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import numpy as np
import torch
from torch import nn

from ..dataset import (
    VIEW_ORDER,
    PreprocessConfig,
    SegmentManifest,
    View,
    kinematic_vector,
    read_frames,
    read_keypoints,
    sample_clip,
)
from ..fusion import (
    DEFAULT_MODEL_WEIGHTS,
    DEFAULT_VIEW_WEIGHTS,
    FusionHead,
    early_fuse_views,
    late_fuse_models,
    late_fuse_views,
)
from ..hbm import HierarchicalQualityModel, PCAModel, combine_assessments, infer_quality
from ..pipelines import checkpoint_name, extract_features, predict
from .records import PHASE_CRITERIA, AssessmentRecord, PhaseScore, relevant_impairments

STRATEGIES = ("per-pipeline", "early", "late")


class ScoringError(RuntimeError):
    """A segment could not be scored; carries structured context."""

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = dict(details)


@dataclass
class ScoringStack:
    """Everything score_segment needs besides the segment itself."""

    models: dict[str, nn.Module]
    hbm: Optional[HierarchicalQualityModel] = None
    pca: Optional[PCAModel] = None
    semantic_source: Optional[str] = None  # backbone whose features feed the PCA
    view_weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_VIEW_WEIGHTS))
    model_weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_MODEL_WEIGHTS))
    early_view_heads: dict[str, FusionHead] = field(default_factory=dict)
    early_model_head: Optional[FusionHead] = None
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    phase_criteria: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: dict(PHASE_CRITERIA))
    impairment_threshold: float = 0.5
    checkpoint_ids: dict[str, str] = field(default_factory=dict)

    def provenance(self, strategy: str, pipeline: Optional[str]) -> dict[str, Any]:
        checkpoints = {
            kind: self.checkpoint_ids.get(kind, checkpoint_name(kind))
            for kind in sorted(self.models)
        }
        info: dict[str, Any] = {"strategy": strategy, "checkpoints": checkpoints}
        if pipeline is not None:
            info["pipeline"] = pipeline
        if strategy in ("per-pipeline", "late"):
            info["view_weights"] = dict(self.view_weights)
        if strategy == "late":
            info["model_weights"] = dict(self.model_weights)
        return info


def _clip_inputs(
    archive_root: Union[str, Path],
    manifest: SegmentManifest,
    view: View,
    kind: str,
    config: PreprocessConfig,
    frame_range: Optional[tuple[int, int]],
):
    out = sample_clip(archive_root, manifest, view, kind, config=config, frame_range=frame_range)
    if kind == "slowfast":
        slow, fast = out
        return slow.data.unsqueeze(0), fast.data.unsqueeze(0)
    return out.data.unsqueeze(0)


class _SegmentScorer:
    def __init__(
        self,
        archive_root: Union[str, Path],
        manifest: SegmentManifest,
        stack: ScoringStack,
        strategy: str,
        pipeline: Optional[str],
    ) -> None:
        self.archive_root = archive_root
        self.manifest = manifest
        self.stack = stack
        self.strategy = strategy
        self.pipeline = pipeline
        # Phase sub-clips are often shorter than a clip's frame count, so
        # phase scoring always pads by repeating the final frame.
        self.phase_config = dataclasses.replace(stack.preprocess, pad_short=True)

    def _view_probs(self, kind: str, config: PreprocessConfig, frame_range) -> dict[str, np.ndarray]:
        model = self.stack.models[kind]
        by_view: dict[str, np.ndarray] = {}
        for view in VIEW_ORDER:
            inputs = _clip_inputs(self.archive_root, self.manifest, view, kind, config, frame_range)
            by_view[view.value] = predict(model, inputs)[0].numpy()
        return by_view

    def fused_probs(self, frame_range: Optional[tuple[int, int]]) -> np.ndarray:
        config = self.stack.preprocess if frame_range is None else self.phase_config
        if self.strategy == "per-pipeline":
            by_view = self._view_probs(self.pipeline, config, frame_range)
            return late_fuse_views(
                by_view["ipsilateral"], by_view["contralateral"], by_view["top"],
                self.stack.view_weights,
            )
        if self.strategy == "late":
            by_model = {
                kind: late_fuse_views(
                    probs["ipsilateral"], probs["contralateral"], probs["top"],
                    self.stack.view_weights,
                )
                for kind, probs in (
                    (kind, self._view_probs(kind, config, frame_range))
                    for kind in sorted(self.stack.model_weights)
                )
            }
            return late_fuse_models(by_model, self.stack.model_weights)
        # early: per-backbone view heads feed a shared upper head
        hidden: list[torch.Tensor] = []
        with torch.no_grad():
            for kind in sorted(self.stack.early_view_heads):
                model = self.stack.models[kind]
                feats = {
                    view.value: extract_features(
                        model,
                        _clip_inputs(self.archive_root, self.manifest, view, kind, config, frame_range),
                    )
                    for view in VIEW_ORDER
                }
                head = self.stack.early_view_heads[kind]
                stacked = torch.cat([feats[v.value] for v in VIEW_ORDER], dim=1)
                hidden.append(head.intermediate(stacked))
            logits = self.stack.early_model_head(torch.cat(hidden, dim=1))
            return logits.softmax(dim=1)[0].numpy()

    def quality(self) -> tuple[dict[str, float], dict[str, bool]]:
        stack = self.stack
        if stack.hbm is None:
            return {}, {}
        if stack.pca is None:
            raise ScoringError(
                "quality model loaded without a feature reducer",
                segment_id=self.manifest.segment_id,
            )
        cfg = stack.hbm.config
        if cfg.kinematic_dim % 10 != 0:
            raise ScoringError(
                f"kinematic width {cfg.kinematic_dim} is not a whole number of time steps",
                kinematic_dim=cfg.kinematic_dim,
            )
        if stack.pca.n_components != cfg.semantic_dim:
            raise ScoringError(
                f"feature reducer yields {stack.pca.n_components} dims,"
                f" quality model expects {cfg.semantic_dim}",
                segment_id=self.manifest.segment_id,
            )
        keypoints = read_keypoints(self.archive_root, self.manifest)
        probe = read_frames(self.archive_root, self.manifest, View.IPSILATERAL, [0])
        height, width = probe.shape[1], probe.shape[2]
        x_kin = kinematic_vector(keypoints, height, width, time_steps=cfg.kinematic_dim // 10)
        source = stack.semantic_source or sorted(stack.models)[0]
        if source not in stack.models:
            raise ScoringError(
                f"semantic feature source {source!r} is not loaded",
                loaded=sorted(stack.models),
            )
        with torch.no_grad():
            view_feats = [
                extract_features(
                    stack.models[source],
                    _clip_inputs(
                        self.archive_root, self.manifest, view, source, stack.preprocess, None
                    ),
                )
                for view in VIEW_ORDER
            ]
        pooled = torch.stack(view_feats).mean(dim=0)  # [1, d], mean over views
        x_sem = torch.as_tensor(stack.pca.transform(pooled.numpy()), dtype=torch.float32)
        probs = infer_quality(stack.hbm, x_kin.unsqueeze(0), x_sem)[0]
        quality = {name: float(p) for name, p in zip(_criteria_names(), probs.tolist())}
        flags = combine_assessments(probs.tolist(), stack.impairment_threshold)
        return quality, flags


def _criteria_names() -> tuple[str, ...]:
    from ..hbm import CRITERIA

    return CRITERIA


def score_segment(
    archive_root: Union[str, Path],
    manifest: SegmentManifest,
    stack: ScoringStack,
    strategy: str = "late",
    pipeline: Optional[str] = None,
) -> AssessmentRecord:
    """Score one segment end to end; returns an unpersisted pending record.

    ``strategy`` selects how per-view, per-backbone probabilities combine:
    ``per-pipeline`` (one backbone, weighted view average), ``late``
    (weighted view average per backbone, then weighted backbone average),
    or ``early`` (feature-level fusion through trained heads).
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; pick one of {list(STRATEGIES)}")

    missing_views = [v.value for v in VIEW_ORDER if v not in manifest.views]
    if missing_views:
        raise ScoringError(
            f"segment {manifest.segment_id} is missing views {missing_views}",
            segment_id=manifest.segment_id,
            missing_views=missing_views,
        )

    if strategy == "per-pipeline":
        if pipeline is None:
            if len(stack.models) != 1:
                raise ScoringError(
                    "per-pipeline scoring needs an explicit pipeline when several are loaded",
                    loaded=sorted(stack.models),
                )
            pipeline = next(iter(stack.models))
        if pipeline not in stack.models:
            raise ScoringError(
                f"pipeline {pipeline!r} is not loaded", loaded=sorted(stack.models)
            )
    elif strategy == "late":
        missing = sorted(set(stack.model_weights) - set(stack.models))
        if missing:
            raise ScoringError(
                f"late fusion needs checkpoints for {missing}",
                missing_models=missing,
                loaded=sorted(stack.models),
            )
    else:  # early
        missing = sorted(set(stack.early_view_heads) - set(stack.models))
        if not stack.early_view_heads or stack.early_model_head is None or missing:
            raise ScoringError(
                "early fusion needs per-backbone view heads, a model head,"
                " and their backbones loaded",
                missing_models=missing,
                loaded=sorted(stack.models),
            )

    scorer = _SegmentScorer(archive_root, manifest, stack, strategy, pipeline)

    task_probs = scorer.fused_probs(frame_range=None)
    task_score = int(np.argmax(task_probs))

    quality, flags = scorer.quality()

    phase_scores: list[PhaseScore] = []
    for annotation in manifest.phase_annotations:
        probs = scorer.fused_probs(frame_range=(annotation.start_frame, annotation.end_frame))
        phase_scores.append(
            PhaseScore(
                phase=annotation.phase_name,
                score=int(np.argmax(probs)),
                impairments=relevant_impairments(
                    annotation.phase_name, flags, stack.phase_criteria
                ),
            )
        )

    start, end = manifest.task_interval
    execution_time = (end - start) / manifest.fps

    record = AssessmentRecord(
        segment_id=manifest.segment_id,
        patient_id=manifest.patient_id,
        task_score=task_score,
        execution_time=execution_time,
        phase_scores=phase_scores,
        quality=quality,
        model_provenance=stack.provenance(strategy, pipeline),
        review_state="pending",
    )
    problems = record.validate()
    if problems:
        raise ScoringError(
            "scoring produced an invalid record: " + "; ".join(problems),
            segment_id=manifest.segment_id,
        )
    return record
