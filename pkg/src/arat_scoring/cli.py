"""Command-line entry points: train, fuse, score, evaluate, report, serve.

Every command reads one YAML config (``--config``); any value omitted
falls back to the defaults below, and ``--seed`` overrides the config's
seed.  Paths in the config are resolved relative to the config file's
directory so a checked-in config works from anywhere.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

logger = logging.getLogger(__name__)

#: Complete default configuration.  A config file only needs the keys it
#: wants to change.
DEFAULT_CONFIG: dict[str, Any] = {
    # Global RNG seed for training, splitting, and head fitting.
    "seed": 42,
    # Model scale: "full" (full-size backbones) or "desk" (miniatures).
    "scale": "full",
    # Segment archive root (index.json + per-segment frames/annotations).
    "archive": "data/archive",
    # Where checkpoints (backbones, fusion heads, quality model) live.
    "checkpoints": "artifacts/checkpoints",
    # Where evaluate/report write metrics and curves.
    "reports": "artifacts/report",
    # SQLite file backing the review API.
    "store": "artifacts/records.sqlite",
    # Exported saliency overlays served by the API (may not exist yet).
    "saliency": "artifacts/saliency",
    "preprocess": {
        # Frames are resized so the shorter side is `resize_to`, then
        # centre-cropped to `crop_to` squares.
        "resize_to": 256,
        "crop_to": 224,
    },
    "train": {
        # Backbone fine-tuning settings (head-first, frozen early stages).
        "epochs": 10,
        "learning_rate": 1.0e-4,
        "weight_decay": 1.0e-3,
        "batch_size": 4,
        # Fraction of rated segments held out for validation.
        "val_fraction": 0.2,
        # Camera view used for single-view fine-tuning.
        "view": "ipsilateral",
    },
    "fusion": {
        # Fusion-head fitting settings (features are precomputed).
        "epochs": 20,
        "learning_rate": 1.0e-3,
        "batch_size": 8,
        # Backbone whose three views feed the view-fusion rows.
        "view_backbone": "slowfast",
    },
    "scoring": {
        # Fusion strategy for `score`: per-pipeline | early | late.
        "strategy": "late",
        # Backbone used when strategy is per-pipeline.
        "pipeline": "slowfast",
        # Criterion satisfaction below this probability flags impairment.
        "impairment_threshold": 0.5,
        # Optional quality-model checkpoint (null disables quality output).
        "quality_model": None,
    },
    "serve": {
        "host": "127.0.0.1",
        "port": 8000,
    },
}

EPOCH_MINUTES_NAME = "epoch_minutes.json"


def _deep_merge(base: dict, override: Mapping) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if key not in merged:
            raise KeyError(f"unknown config key {key!r}")
        if isinstance(merged[key], dict):
            if not isinstance(value, Mapping):
                raise TypeError(f"config key {key!r} must be a mapping")
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[str]) -> dict[str, Any]:
    """Defaults overlaid with the YAML file at ``path`` (if given)."""
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    import yaml

    file_path = Path(path)
    loaded = yaml.safe_load(file_path.read_text()) or {}
    if not isinstance(loaded, dict):
        raise TypeError(f"config root must be a mapping, got {type(loaded).__name__}")
    config = _deep_merge(DEFAULT_CONFIG, loaded)
    base = file_path.parent
    for key in ("archive", "checkpoints", "reports", "store", "saliency"):
        config[key] = str((base / config[key]).resolve())
    quality = config["scoring"]["quality_model"]
    if quality is not None:
        config["scoring"]["quality_model"] = str((base / quality).resolve())
    return config


def _preprocess(config) -> "PreprocessConfig":
    from .dataset import PreprocessConfig

    return PreprocessConfig(
        resize_to=int(config["preprocess"]["resize_to"]),
        crop_to=int(config["preprocess"]["crop_to"]),
    )


def _load_archive(config):
    from .dataset import filter_rated, load_manifest

    index = load_manifest(config["archive"])
    rated = filter_rated(index.manifests)
    if not rated:
        raise SystemExit(f"archive {config['archive']} has no rated segments")
    return index, rated


def _split(config, rated):
    from .dataset import split_dataset

    return split_dataset(rated, config["train"]["val_fraction"], seed=config["seed"])


def cmd_train(config) -> int:
    """Fine-tune the three backbones; saves checkpoints + epoch timings."""
    import torch

    from .dataset import SegmentClipDataset, View, build_loader
    from .pipelines import (
        PIPELINE_KINDS,
        PipelineConfig,
        TrainConfig,
        build_pipeline,
        checkpoint_name,
        save_checkpoint,
        train_pipeline,
    )

    _, rated = _load_archive(config)
    train_manifests, val_manifests = _split(config, rated)
    preprocess = _preprocess(config)
    view = View(config["train"]["view"])
    train_cfg = TrainConfig(
        learning_rate=float(config["train"]["learning_rate"]),
        epochs=int(config["train"]["epochs"]),
        weight_decay=float(config["train"]["weight_decay"]),
        seed=int(config["seed"]),
    )
    checkpoint_dir = Path(config["checkpoints"])
    minutes: dict[str, float] = {}
    if (checkpoint_dir / EPOCH_MINUTES_NAME).is_file():
        minutes = json.loads((checkpoint_dir / EPOCH_MINUTES_NAME).read_text())

    for kind in PIPELINE_KINDS:
        torch.manual_seed(config["seed"])
        model = build_pipeline(PipelineConfig(kind, scale=config["scale"]))
        loader = build_loader(
            SegmentClipDataset(config["archive"], train_manifests, view, kind, preprocess),
            batch_size=int(config["train"]["batch_size"]),
            seed=config["seed"],
        )
        val_loader = None
        if val_manifests:
            val_loader = build_loader(
                SegmentClipDataset(config["archive"], val_manifests, view, kind, preprocess),
                batch_size=int(config["train"]["batch_size"]),
                shuffle=False,
            )
        started = time.monotonic()
        result = train_pipeline(model, loader, val_loader, train_cfg)
        elapsed_min = (time.monotonic() - started) / 60.0
        minutes[kind] = elapsed_min / max(train_cfg.epochs, 1)
        save_checkpoint(
            model, checkpoint_dir / checkpoint_name(kind), history=result.history,
            train_config=train_cfg,
        )
        last = result.history[-1]
        print(
            f"trained {kind}: {train_cfg.epochs} epochs,"
            f" final train_acc={last['train_accuracy']:.3f},"
            f" {minutes[kind]:.2f} min/epoch"
        )
    (checkpoint_dir / EPOCH_MINUTES_NAME).write_text(json.dumps(minutes, indent=2))
    return 0


def _view_features(archive, manifests, model, kind, preprocess):
    """[n, 3*feature_dim] per-segment features, views concatenated."""
    import torch

    from .dataset import VIEW_ORDER, sample_clip
    from .pipelines import extract_features

    rows = []
    with torch.no_grad():
        for manifest in manifests:
            per_view = []
            for view in VIEW_ORDER:
                clip = sample_clip(archive, manifest, view, kind, config=preprocess)
                if kind == "slowfast":
                    slow, fast = clip
                    inputs = (slow.data.unsqueeze(0), fast.data.unsqueeze(0))
                else:
                    inputs = clip.data.unsqueeze(0)
                per_view.append(extract_features(model, inputs)[0])
            rows.append(torch.cat(per_view))
    return torch.stack(rows)


def cmd_fuse(config) -> int:
    """Fit early-fusion heads (per-backbone view heads + the model head)."""
    import torch
    from torch.utils.data import DataLoader, TensorDataset

    from .dataset import EXCLUDED, map_label
    from .fusion import early_model_head, early_view_head, save_fusion_head, train_fusion_head
    from .pipelines import PIPELINE_KINDS, TrainConfig, checkpoint_name, load_checkpoint
    from .reports import MODEL_HEAD_NAME, view_head_name

    _, rated = _load_archive(config)
    train_manifests, _ = _split(config, rated)
    preprocess = _preprocess(config)
    checkpoint_dir = Path(config["checkpoints"])
    labels = torch.tensor(
        [int(map_label(m.arat_rating)) for m in train_manifests], dtype=torch.long
    )
    head_cfg = TrainConfig(
        learning_rate=float(config["fusion"]["learning_rate"]),
        epochs=int(config["fusion"]["epochs"]),
        weight_decay=0.0,
        seed=int(config["seed"]),
    )
    batch = int(config["fusion"]["batch_size"])

    hidden_parts = []
    for kind in PIPELINE_KINDS:
        path = checkpoint_dir / checkpoint_name(kind)
        if not path.is_file():
            raise SystemExit(f"missing checkpoint {path}; run `arat train` first")
        model, _ = load_checkpoint(path)
        model.eval()
        features = _view_features(config["archive"], train_manifests, model, kind, preprocess)
        torch.manual_seed(config["seed"])
        head = early_view_head(model.feature_dim)
        loader = DataLoader(TensorDataset(features, labels), batch_size=batch, shuffle=False)
        result = train_fusion_head(head, loader, config=head_cfg)
        save_fusion_head(head, checkpoint_dir / view_head_name(kind))
        head.eval()
        with torch.no_grad():
            hidden_parts.append(head.intermediate(features))
        print(
            f"fitted view head for {kind}:"
            f" final train_acc={result.history[-1]['train_accuracy']:.3f}"
        )

    stacked = torch.cat(hidden_parts, dim=1)
    torch.manual_seed(config["seed"])
    top = early_model_head()
    loader = DataLoader(TensorDataset(stacked, labels), batch_size=batch, shuffle=False)
    result = train_fusion_head(top, loader, config=head_cfg)
    save_fusion_head(top, checkpoint_dir / MODEL_HEAD_NAME)
    print(f"fitted model head: final train_acc={result.history[-1]['train_accuracy']:.3f}")
    return 0


def _build_stack(config):
    from .fusion import load_fusion_head
    from .hbm import load_quality_model
    from .pipelines import PIPELINE_KINDS, checkpoint_name, load_checkpoint
    from .reports import MODEL_HEAD_NAME, view_head_name
    from .scoring import ScoringStack

    checkpoint_dir = Path(config["checkpoints"])
    models = {}
    for kind in PIPELINE_KINDS:
        path = checkpoint_dir / checkpoint_name(kind)
        if path.is_file():
            model, _ = load_checkpoint(path)
            model.eval()
            models[kind] = model
    if not models:
        raise SystemExit(f"no backbone checkpoints under {checkpoint_dir}")

    view_heads = {}
    for kind in models:
        head_path = checkpoint_dir / view_head_name(kind)
        if head_path.is_file():
            view_heads[kind] = load_fusion_head(head_path)
    model_head_path = checkpoint_dir / MODEL_HEAD_NAME
    model_head = load_fusion_head(model_head_path) if model_head_path.is_file() else None

    hbm = pca = None
    quality_path = config["scoring"]["quality_model"]
    if quality_path is not None and Path(quality_path).is_file():
        hbm, pca, _ = load_quality_model(quality_path)

    return ScoringStack(
        models=models,
        hbm=hbm,
        pca=pca,
        early_view_heads=view_heads,
        early_model_head=model_head,
        preprocess=_preprocess(config),
        impairment_threshold=float(config["scoring"]["impairment_threshold"]),
    )


def cmd_score(config) -> int:
    """Score every rated segment into the record store (skips existing)."""
    from .scoring import RecordStore, ScoringError, score_segment

    _, rated = _load_archive(config)
    stack = _build_stack(config)
    strategy = config["scoring"]["strategy"]
    pipeline = config["scoring"]["pipeline"] if strategy == "per-pipeline" else None
    Path(config["store"]).parent.mkdir(parents=True, exist_ok=True)
    store = RecordStore(config["store"])
    scored = skipped = failed = 0
    for manifest in rated:
        if store.find_by_segment(manifest.segment_id) is not None:
            skipped += 1
            continue
        try:
            record = score_segment(
                config["archive"], manifest, stack, strategy, pipeline=pipeline
            )
        except ScoringError as exc:
            failed += 1
            logger.error("segment %s failed: %s %s", manifest.segment_id, exc, exc.details)
            continue
        stored = store.add_record(record)
        scored += 1
        print(
            f"scored {manifest.segment_id}: record {stored.record_id},"
            f" display {stored.display_score}, {stored.execution_time:.2f}s task"
        )
    print(f"done: {scored} scored, {skipped} already present, {failed} failed")
    return 0 if failed == 0 else 1


def cmd_evaluate(config) -> int:
    """Run the seven-strategy grid on the validation split."""
    from .reports import evaluate_all

    _, rated = _load_archive(config)
    _, val_manifests = _split(config, rated)
    if not val_manifests:
        raise SystemExit("validation split is empty; lower train.val_fraction")
    checkpoint_dir = Path(config["checkpoints"])
    minutes = {}
    minutes_path = checkpoint_dir / EPOCH_MINUTES_NAME
    if minutes_path.is_file():
        minutes = json.loads(minutes_path.read_text())
    rows = evaluate_all(
        checkpoint_dir,
        config["archive"],
        val_manifests,
        preprocess=_preprocess(config),
        view_backbone=config["fusion"]["view_backbone"],
        epoch_minutes=minutes,
        out_dir=config["reports"],
    )
    width = max(len(row.strategy) for row in rows)
    for row in rows:
        if row.available:
            print(
                f"{row.strategy:<{width}}  acc={row.accuracy_pct:6.2f}%"
                f"  f1={row.f1:.3f}  agreement={row.agreement_pct:6.2f}%"
            )
        else:
            print(f"{row.strategy:<{width}}  unavailable ({row.note})")
    print(f"wrote metrics to {config['reports']}")
    return 0


def cmd_report(config) -> int:
    """Render training/ELBO curves from checkpoint histories."""
    from .pipelines import PIPELINE_KINDS, checkpoint_name
    from .reports import CURVES_DIR, elbo_curve, training_curves

    checkpoint_dir = Path(config["checkpoints"])
    curves_dir = Path(config["reports"]) / CURVES_DIR
    histories = {}
    for kind in PIPELINE_KINDS:
        sidecar = (checkpoint_dir / checkpoint_name(kind)).with_suffix(".history.json")
        if sidecar.is_file():
            history = json.loads(sidecar.read_text())
            if history:
                histories[kind] = history
    written = []
    if histories:
        written.extend(training_curves(histories, curves_dir))
    quality_path = config["scoring"]["quality_model"]
    if quality_path is not None and Path(quality_path).is_file():
        from .hbm import load_quality_model

        _, _, payload = load_quality_model(quality_path)
        if payload.get("history"):
            written.append(elbo_curve(payload["history"], curves_dir))
    if not written:
        raise SystemExit("no histories found; run `arat train` first")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_serve(config) -> int:
    """Serve the review API over HTTP."""
    import uvicorn

    from .scoring import RecordStore, create_app

    archive = config["archive"] if Path(config["archive"]).exists() else None
    saliency = config["saliency"] if Path(config["saliency"]).exists() else None
    store = RecordStore(config["store"])
    app = create_app(store, archive_root=archive, saliency_root=saliency)
    uvicorn.run(app, host=config["serve"]["host"], port=int(config["serve"]["port"]))
    return 0


COMMANDS = {
    "train": cmd_train,
    "fuse": cmd_fuse,
    "score": cmd_score,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "serve": cmd_serve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arat", description="Automated ARAT scoring from multi-view video."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        sub = subparsers.add_parser(name, help=func.__doc__)
        sub.add_argument("--config", help="YAML config; omitted keys use defaults")
        sub.add_argument("--seed", type=int, help="override the config seed")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    return COMMANDS[args.command](config)


if __name__ == "__main__":
    sys.exit(main())
