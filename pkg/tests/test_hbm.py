"""Hierarchical quality model: PCA, ELBO math, fitting, inference."""
import math
import random

import numpy as np
import pytest
import torch

from arat_scoring.hbm import (
    ARTIFACT_DEFINED,
    CRITERIA,
    HBMConfig,
    HierarchicalQualityModel,
    combine_assessments,
    criterion_index,
    elbo,
    fit_pca,
    infer_quality,
    planted_criteria_dataset,
)


class TestCriteria:
    def test_ten_criteria(self):
        assert len(CRITERIA) == 10
        assert len(set(CRITERIA)) == 10

    def test_artifact_flags_are_criteria(self):
        assert ARTIFACT_DEFINED < set(CRITERIA)

    def test_index_lookup(self):
        assert criterion_index(CRITERIA[3]) == 3
        with pytest.raises(KeyError, match="unknown criterion"):
            criterion_index("vibes")


class TestPCA:
    def test_rank_k_data_reconstructs_exactly(self):
        rng = np.random.default_rng(0)
        basis = np.linalg.qr(rng.normal(size=(12, 12)))[0][:, :3]  # rank 3
        data = rng.normal(size=(200, 3)) @ basis.T + rng.normal(size=12)
        model = fit_pca(data, 3)
        recon = model.inverse_transform(model.transform(data))
        assert np.abs(recon - data).max() < 1e-6

    def test_components_orthonormal(self):
        rng = np.random.default_rng(1)
        data = rng.normal(size=(100, 20))
        model = fit_pca(data, 8)
        gram = model.components @ model.components.T
        assert np.abs(gram - np.eye(8)).max() < 1e-6

    def test_explained_variance_decreasing(self):
        rng = np.random.default_rng(2)
        data = rng.normal(size=(150, 10)) * np.arange(1, 11)
        model = fit_pca(data, 5)
        assert (np.diff(model.explained_variance) <= 1e-9).all()

    def test_transform_shape(self):
        rng = np.random.default_rng(3)
        model = fit_pca(rng.normal(size=(50, 30)), 4)
        z = model.transform(rng.normal(size=(7, 30)))
        assert z.shape == (7, 4)

    def test_bad_component_count_rejected(self):
        data = np.zeros((10, 5))
        with pytest.raises(ValueError, match="n_components"):
            fit_pca(data, 6)
        with pytest.raises(ValueError, match="n_components"):
            fit_pca(data, 0)

    def test_round_trip_serialisation(self):
        rng = np.random.default_rng(4)
        model = fit_pca(rng.normal(size=(40, 6)), 2)
        from arat_scoring.hbm import PCAModel

        clone = PCAModel.from_dict(model.to_dict())
        x = rng.normal(size=(3, 6))
        assert np.allclose(model.transform(x), clone.transform(x))


@pytest.fixture(scope="module")
def desk_model():
    torch.manual_seed(0)
    return HierarchicalQualityModel(HBMConfig.desk())


@pytest.fixture(scope="module")
def desk_batch():
    cfg = HBMConfig.desk()
    x_kin, x_sem, y = planted_criteria_dataset(6, cfg, seed=1)
    return x_kin, x_sem, y


class TestELBO:
    def test_full_scale_dimensions(self):
        cfg = HBMConfig()
        assert cfg.kinematic_dim == 320  # 32 steps x (4 joints x 2 + 2)
        assert (cfg.kinematic_layers, cfg.kinematic_width) == (5, 50)
        assert cfg.semantic_dim == 128
        assert (cfg.semantic_layers, cfg.semantic_width) == (3, 30)
        model = HierarchicalQualityModel(cfg)
        assert model.criteria_head.in_features == 80
        assert model.criteria_head.out_features == 10

    def test_elbo_nonpositive_kl_nonnegative(self, desk_model, desk_batch):
        x_kin, x_sem, y = desk_batch
        for trial in range(10):
            r = elbo(desk_model, x_kin, x_sem, y, n_samples=3)
            assert r.elbo.item() <= 0.0
            assert r.kl.item() >= -1e-8
            assert all(v >= -1e-8 for v in r.per_layer_kl.values())
            assert r.log_likelihood.item() <= 0.0

    def test_elbo_deterministic_given_noise(self, desk_model, desk_batch):
        x_kin, x_sem, y = desk_batch
        noise = desk_model.sample_noise(4, x_kin.shape[0], torch.Generator().manual_seed(9))
        a = elbo(desk_model, x_kin, x_sem, y, noise=noise).elbo.item()
        b = elbo(desk_model, x_kin, x_sem, y, noise=noise).elbo.item()
        assert a == b

    def test_wrong_label_width_rejected(self, desk_model, desk_batch):
        x_kin, x_sem, y = desk_batch
        with pytest.raises(ValueError, match="criteria labels"):
            elbo(desk_model, x_kin, x_sem, y[:, :4])

    def test_gradient_matches_central_differences(self):
        torch.manual_seed(3)
        cfg = HBMConfig.desk()
        model = HierarchicalQualityModel(cfg).double()
        x_kin, x_sem, y = planted_criteria_dataset(5, cfg, seed=2)
        x_kin, x_sem = x_kin.double(), x_sem.double()
        noise = model.sample_noise(
            2, 5, torch.Generator().manual_seed(7), dtype=torch.float64
        )

        def value():
            return elbo(model, x_kin, x_sem, y, noise=noise).elbo

        model.zero_grad()
        value().backward()
        rng = random.Random(13)
        params = list(model.parameters())
        checked = 0
        for _ in range(15):
            p = rng.choice(params)
            idx = tuple(rng.randrange(s) for s in p.shape)
            analytic = p.grad[idx].item()
            h = 1e-5
            with torch.no_grad():
                orig = p[idx].item()
                p[idx] = orig + h
                up = value().item()
                p[idx] = orig - h
                down = value().item()
                p[idx] = orig
            fd = (up - down) / (2 * h)
            if abs(fd) < 1e-10 and abs(analytic) < 1e-10:
                continue
            rel = abs(analytic - fd) / max(abs(fd), abs(analytic))
            assert rel < 1e-4, f"param grad mismatch: {analytic} vs {fd}"
            checked += 1
        assert checked >= 8


class TestFit:
    def test_elbo_improves(self, hbm_planted_fit):
        _, history, _ = hbm_planted_fit
        assert len(history) == 100
        first = sum(h["elbo"] for h in history[:10]) / 10
        last = sum(h["elbo"] for h in history[-10:]) / 10
        assert last > first

    def test_planted_criterion_recovered(self, hbm_planted_fit):
        model, _, (x_kin, x_sem, y) = hbm_planted_fit
        probs = infer_quality(model, x_kin[800:], x_sem[800:])
        acc = ((probs[:, 0] > 0.5).float() == y[800:, 0]).float().mean().item()
        assert acc >= 0.90

    def test_history_elbo_always_nonpositive(self, hbm_planted_fit):
        _, history, _ = hbm_planted_fit
        assert all(h["elbo"] <= 1e-9 for h in history)
        assert all(h["kl"] >= -1e-8 for h in history)


class TestInference:
    def test_probabilities_shape_and_range(self, desk_model, desk_batch):
        x_kin, x_sem, _ = desk_batch
        probs = infer_quality(desk_model, x_kin, x_sem)
        assert probs.shape == (6, 10)
        assert probs.min() >= 0.0 and probs.max() <= 1.0

    def test_repeat_calls_identical(self, desk_model, desk_batch):
        x_kin, x_sem, _ = desk_batch
        a = infer_quality(desk_model, x_kin, x_sem)
        b = infer_quality(desk_model, x_kin, x_sem)
        assert torch.equal(a, b)

    def test_batch_composition_irrelevant(self, desk_model, desk_batch):
        x_kin, x_sem, _ = desk_batch
        full = infer_quality(desk_model, x_kin, x_sem)
        solo = infer_quality(desk_model, x_kin[:1], x_sem[:1])
        assert (full[:1] - solo).abs().max().item() < 1e-6


class TestCombine:
    def test_flags_below_threshold(self):
        probs = [0.9] * 10
        probs[2] = 0.3
        probs[7] = 0.49
        flags = combine_assessments(probs)
        impaired = {name for name, bad in flags.items() if bad}
        assert impaired == {CRITERIA[2], CRITERIA[7]}

    def test_threshold_adjustable(self):
        flags = combine_assessments([0.6] * 10, threshold=0.7)
        assert all(flags.values())

    def test_validates_inputs(self):
        with pytest.raises(ValueError, match="10"):
            combine_assessments([0.5] * 3)
        with pytest.raises(ValueError, match="0, 1"):
            combine_assessments([1.5] * 10)
        with pytest.raises(ValueError, match="threshold"):
            combine_assessments([0.5] * 10, threshold=1.0)
