"""Command-line workflow: config handling plus train/fuse/score/evaluate/report."""
import json

import numpy as np
import pytest
import torch

from arat_scoring.cli import (
    DEFAULT_CONFIG,
    EPOCH_MINUTES_NAME,
    build_parser,
    load_config,
    main,
)
from arat_scoring.dataset import write_synthetic_archive
from arat_scoring.fusion import load_fusion_head
from arat_scoring.hbm import (
    CRITERIA,
    HBMConfig,
    HierarchicalQualityModel,
    fit_pca,
    save_quality_model,
)
from arat_scoring.pipelines import PIPELINE_KINDS, checkpoint_name, load_checkpoint
from arat_scoring.reports import MODEL_HEAD_NAME, STRATEGIES, view_head_name
from arat_scoring.scoring import RecordStore

WORKSPACE_CONFIG = """\
seed: 0
scale: desk
archive: archive
checkpoints: artifacts/ckpt
reports: artifacts/report
store: artifacts/records.sqlite
preprocess:
  resize_to: 72
  crop_to: 64
train:
  epochs: 2
  batch_size: 2
  val_fraction: 0.25
fusion:
  epochs: 4
  batch_size: 4
"""


class TestConfigLoading:
    def test_no_file_returns_fresh_copy_of_defaults(self):
        config = load_config(None)
        assert config == DEFAULT_CONFIG
        config["seed"] = -1
        config["train"]["epochs"] = -1
        assert DEFAULT_CONFIG["seed"] == 42
        assert DEFAULT_CONFIG["train"]["epochs"] == 10

    def test_partial_file_overlays_defaults(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("seed: 7\ntrain:\n  epochs: 3\n")
        config = load_config(str(path))
        assert config["seed"] == 7
        assert config["train"]["epochs"] == 3
        assert config["train"]["learning_rate"] == DEFAULT_CONFIG["train"]["learning_rate"]
        assert config["scale"] == "full"

    def test_empty_file_equals_defaults_with_resolved_paths(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("")
        config = load_config(str(path))
        assert config["archive"] == str((tmp_path / "data/archive").resolve())
        assert config["train"] == DEFAULT_CONFIG["train"]

    def test_paths_resolve_relative_to_the_config_file(self, tmp_path):
        nested = tmp_path / "configs"
        nested.mkdir()
        path = nested / "config.yaml"
        path.write_text("archive: ../archive\nstore: db/records.sqlite\n")
        config = load_config(str(path))
        assert config["archive"] == str((tmp_path / "archive").resolve())
        assert config["store"] == str((nested / "db/records.sqlite").resolve())

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("learning_rate: 0.1\n")
        with pytest.raises(KeyError, match="learning_rate"):
            load_config(str(path))

    def test_unknown_nested_key_rejected(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("train:\n  optimizer: sgd\n")
        with pytest.raises(KeyError, match="optimizer"):
            load_config(str(path))

    def test_scalar_where_mapping_expected_rejected(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("train: 5\n")
        with pytest.raises(TypeError, match="train"):
            load_config(str(path))

    def test_non_mapping_root_rejected(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("- just\n- a\n- list\n")
        with pytest.raises(TypeError, match="root"):
            load_config(str(path))

    def test_quality_model_path_resolves_when_set(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("scoring:\n  quality_model: quality.pt\n")
        config = load_config(str(path))
        assert config["scoring"]["quality_model"] == str((tmp_path / "quality.pt").resolve())


class TestParser:
    def test_every_command_is_registered(self):
        parser = build_parser()
        for command in ("train", "fuse", "score", "evaluate", "report", "serve"):
            args = parser.parse_args([command])
            assert args.command == command
            assert args.config is None and args.seed is None

    def test_seed_override_parses(self):
        args = build_parser().parse_args(["train", "--seed", "9"])
        assert args.seed == 9

    def test_missing_command_exits(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """An archive plus the artifacts of one `train` + `fuse` run."""
    root = tmp_path_factory.mktemp("cli")
    write_synthetic_archive(
        root / "archive", n_segments=8, frames_per_view=40, image_size=96, seed=0
    )
    config_path = root / "config.yaml"
    config_path.write_text(WORKSPACE_CONFIG)
    assert main(["train", "--config", str(config_path)]) == 0
    assert main(["fuse", "--config", str(config_path)]) == 0
    return {
        "root": root,
        "config": config_path,
        "checkpoints": root / "artifacts/ckpt",
        "reports": root / "artifacts/report",
    }


class TestTrainCommand:
    def test_writes_checkpoint_and_history_per_backbone(self, workspace):
        for kind in PIPELINE_KINDS:
            path = workspace["checkpoints"] / checkpoint_name(kind)
            assert path.is_file()
            sidecar = path.with_suffix(".history.json")
            history = json.loads(sidecar.read_text())
            assert len(history) == 2
            assert {"epoch", "train_loss", "train_accuracy"} <= set(history[0])

    def test_checkpoints_reload_into_working_models(self, workspace):
        model, payload = load_checkpoint(workspace["checkpoints"] / checkpoint_name("i3d"))
        assert len(payload["history"]) == 2
        with torch.no_grad():
            logits = model(torch.randn(1, 3, 8, 64, 64))
        assert logits.shape == (1, 2)

    def test_records_wall_clock_minutes_per_epoch(self, workspace):
        minutes = json.loads(
            (workspace["checkpoints"] / EPOCH_MINUTES_NAME).read_text()
        )
        assert set(minutes) == set(PIPELINE_KINDS)
        assert all(value > 0 for value in minutes.values())


class TestFuseCommand:
    def test_writes_all_fusion_heads(self, workspace):
        for kind in PIPELINE_KINDS:
            assert (workspace["checkpoints"] / view_head_name(kind)).is_file()
        assert (workspace["checkpoints"] / MODEL_HEAD_NAME).is_file()

    def test_heads_reload_with_matching_dims(self, workspace):
        model, _ = load_checkpoint(workspace["checkpoints"] / checkpoint_name("slowfast"))
        head = load_fusion_head(workspace["checkpoints"] / view_head_name("slowfast"))
        with torch.no_grad():
            logits = head(torch.randn(2, 3 * model.feature_dim))
        assert logits.shape == (2, 2)

    def test_fails_cleanly_without_checkpoints(self, tmp_path):
        write_synthetic_archive(
            tmp_path / "archive", n_segments=4, frames_per_view=40, image_size=96, seed=1
        )
        (tmp_path / "config.yaml").write_text(WORKSPACE_CONFIG)
        with pytest.raises(SystemExit, match="arat train"):
            main(["fuse", "--config", str(tmp_path / "config.yaml")])


class TestScoreCommand:
    def test_scores_every_rated_segment_into_the_store(self, workspace):
        assert main(["score", "--config", str(workspace["config"])]) == 0
        store = RecordStore(str(workspace["root"] / "artifacts/records.sqlite"))
        records = store.all_records()
        assert len(records) == 8
        assert all(record.review_state == "pending" for record in records)
        assert all(record.task_score in (0, 1) for record in records)
        assert all(record.model_provenance["strategy"] == "late" for record in records)
        assert all(len(record.phase_scores) == 4 for record in records)
        # No quality model configured: records carry no quality block.
        assert all(record.quality == {} for record in records)

    def test_rerun_skips_already_scored_segments(self, workspace):
        store_path = workspace["root"] / "artifacts/records.sqlite"
        store = RecordStore(str(store_path))
        before = {record.record_id for record in store.all_records()}
        assert before  # scored by the previous test or this re-run
        assert main(["score", "--config", str(workspace["config"])]) == 0
        after = {record.record_id for record in RecordStore(str(store_path)).all_records()}
        assert after == before

    def test_per_pipeline_strategy_with_explicit_backbone(self, workspace):
        config_path = workspace["root"] / "config_pp.yaml"
        config_path.write_text(
            WORKSPACE_CONFIG.replace(
                "store: artifacts/records.sqlite", "store: artifacts/records_pp.sqlite"
            )
            + "scoring:\n  strategy: per-pipeline\n  pipeline: i3d\n"
        )
        assert main(["score", "--config", str(config_path)]) == 0
        records = RecordStore(
            str(workspace["root"] / "artifacts/records_pp.sqlite")
        ).all_records()
        assert len(records) == 8
        assert all(r.model_provenance["strategy"] == "per-pipeline" for r in records)
        assert all(r.model_provenance["pipeline"] == "i3d" for r in records)

    def test_quality_model_config_adds_quality_blocks(self, workspace):
        hbm_config = HBMConfig(
            kinematic_dim=20,
            semantic_dim=6,
            kinematic_layers=2,
            kinematic_width=4,
            semantic_layers=2,
            semantic_width=4,
            encoder_hidden=16,
            train_samples=4,
            eval_samples=8,
        )
        torch.manual_seed(2)
        model = HierarchicalQualityModel(hbm_config)
        i3d, _ = load_checkpoint(workspace["checkpoints"] / checkpoint_name("i3d"))
        pca = fit_pca(
            np.random.default_rng(0).normal(size=(50, i3d.feature_dim)),
            hbm_config.semantic_dim,
        )
        save_quality_model(model, workspace["root"] / "quality.pt", pca=pca)

        config_path = workspace["root"] / "config_quality.yaml"
        config_path.write_text(
            WORKSPACE_CONFIG.replace(
                "store: artifacts/records.sqlite", "store: artifacts/records_q.sqlite"
            )
            + "scoring:\n  quality_model: quality.pt\n"
        )
        assert main(["score", "--config", str(config_path)]) == 0
        records = RecordStore(
            str(workspace["root"] / "artifacts/records_q.sqlite")
        ).all_records()
        assert len(records) == 8
        for record in records:
            assert set(record.quality) == set(CRITERIA)
            assert all(0.0 <= p <= 1.0 for p in record.quality.values())


class TestEvaluateCommand:
    def test_writes_full_grid_with_recorded_epoch_minutes(self, workspace):
        assert main(["evaluate", "--config", str(workspace["config"])]) == 0
        rows = json.loads((workspace["reports"] / "metrics.json").read_text())
        assert [row["strategy"] for row in rows] == list(STRATEGIES)
        assert all(row["available"] for row in rows)
        assert (workspace["reports"] / "metrics.csv").is_file()
        minutes = json.loads(
            (workspace["checkpoints"] / EPOCH_MINUTES_NAME).read_text()
        )
        by_name = {row["strategy"]: row for row in rows}
        for kind in PIPELINE_KINDS:
            assert by_name[kind]["train_min_per_epoch"] == minutes[kind]


class TestReportCommand:
    def test_renders_training_curves_from_history_sidecars(self, workspace):
        assert main(["report", "--config", str(workspace["config"])]) == 0
        curves = workspace["reports"] / "curves"
        for name in ("training_loss.svg", "training_accuracy.svg"):
            assert (curves / name).is_file()
            assert (curves / name).read_text().lstrip().startswith("<?xml")

    def test_fails_cleanly_without_histories(self, tmp_path):
        write_synthetic_archive(
            tmp_path / "archive", n_segments=4, frames_per_view=40, image_size=96, seed=1
        )
        (tmp_path / "config.yaml").write_text(WORKSPACE_CONFIG)
        with pytest.raises(SystemExit, match="no histories"):
            main(["report", "--config", str(tmp_path / "config.yaml")])


class TestErrorPaths:
    def test_missing_archive_fails_with_descriptive_error(self, tmp_path):
        from arat_scoring.dataset import ArchiveError

        (tmp_path / "config.yaml").write_text("archive: nowhere\n")
        with pytest.raises(ArchiveError, match="index not found"):
            main(["train", "--config", str(tmp_path / "config.yaml")])
