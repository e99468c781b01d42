import pytest
import torch
from torch.utils.data import DataLoader, TensorDataset

torch.set_num_threads(1)

from arat_scoring.dataset import load_manifest, write_synthetic_archive


@pytest.fixture(scope="session")
def archive_root(tmp_path_factory):
    """A small on-disk segment archive shared by read-only tests."""
    root = tmp_path_factory.mktemp("archive")
    write_synthetic_archive(root, n_segments=4, frames_per_view=40, image_size=96, seed=11)
    return root


@pytest.fixture(scope="session")
def archive_index(archive_root):
    index = load_manifest(archive_root)
    assert not index.issues
    return index


@pytest.fixture(scope="session")
def hbm_planted_fit():
    """A small quality model fitted on data with one learnable criterion.

    Criterion 0 is a deterministic function of the kinematic input; the
    other nine are coin flips.  Returns the fitted model, its training
    history, and the full 1000-example dataset (train = first 800).
    """
    from arat_scoring.hbm import HBMConfig, HierarchicalQualityModel, fit_hbm, planted_criteria_dataset

    cfg = HBMConfig.desk()
    x_kin, x_sem, y = planted_criteria_dataset(1000, cfg, seed=5)
    torch.manual_seed(1)
    model = HierarchicalQualityModel(cfg)
    history = fit_hbm(model, x_kin[:800], x_sem[:800], y[:800], epochs=100, seed=42)
    return model, history, (x_kin, x_sem, y)


@pytest.fixture(scope="session")
def gradcam_planted_run():
    """A desk backbone trained so the class-1 logit depends only on the
    top-left image quadrant, plus its saliency maps on held-out positives.

    Class-1 clips carry a bright patch confined to the quadrant; after
    training, the decision boundary is moved wholly into the class-1 head
    row (softmax-equivalent), so that logit literally carries all class
    dependence.  Returns quadrant mass fractions alongside the run.
    """
    from arat_scoring.interpretability import grad_cam
    from arat_scoring.pipelines import PipelineConfig, TrainConfig, build_pipeline, train_pipeline

    size, lo, hi = 256, 16, 80

    def planted_clips(n, seed):
        g = torch.Generator().manual_seed(seed)
        clips = torch.randn(n, 3, 8, size, size, generator=g) * 0.05
        labels = torch.arange(n) % 2
        for i in range(n):
            if labels[i] == 1:
                clips[i, :, :, lo:hi, lo:hi] += 3.0
        perm = torch.randperm(n, generator=g)
        return clips[perm], labels[perm]

    train_x, train_y = planted_clips(48, 0)
    val_x, val_y = planted_clips(16, 1)
    train_loader = DataLoader(
        TensorDataset(train_x, train_y), batch_size=8, shuffle=True,
        generator=torch.Generator().manual_seed(2),
    )
    val_loader = DataLoader(TensorDataset(val_x, val_y), batch_size=8)
    torch.manual_seed(5)
    model = build_pipeline(PipelineConfig("i3d", scale="desk"))
    result = train_pipeline(
        model, train_loader, val_loader,
        TrainConfig(epochs=8, learning_rate=3e-3, weight_decay=1e-3, seed=7),
    )
    with torch.no_grad():
        w, b = model.head.weight, model.head.bias
        w[1] = w[1] - w[0]
        b[1] = b[1] - b[0]
        w[0].zero_()
        b[0].zero_()

    positives = val_x[val_y == 1][:6]
    maps = grad_cam(model, positives, 1)
    quadrant = size // 2
    masses = [
        (m.upsampled[:, :quadrant, :quadrant].sum() / m.upsampled.sum().clamp(min=1e-12)).item()
        for m in maps
    ]
    return {
        "model": model,
        "val_accuracy": result.best_val_accuracy,
        "maps": maps,
        "masses": masses,
        "positives": positives,
    }
