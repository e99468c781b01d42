"""Saliency maps: gradient attribution, compositing, overlay export."""
import json

import numpy as np
import pytest
import torch
from PIL import Image

from arat_scoring.interpretability import (
    HEATMAP_ARCHIVE,
    MANIFEST_NAME,
    Heatmap,
    default_layer,
    export_overlays,
    grad_cam,
    jet_colors,
    overlay_heatmap,
)
from arat_scoring.pipelines import PipelineConfig, build_pipeline


@pytest.fixture(scope="module")
def desk_i3d():
    torch.manual_seed(0)
    return build_pipeline(PipelineConfig("i3d", scale="desk"))


@pytest.fixture(scope="module")
def small_clip():
    return torch.randn(2, 3, 8, 64, 64, generator=torch.Generator().manual_seed(4))


class TestGradCAM:
    def test_normalised_range_and_shapes(self, desk_i3d, small_clip):
        maps = grad_cam(desk_i3d, small_clip, 1)
        assert len(maps) == 2
        for m in maps:
            assert m.layer == "mixed_5b"
            assert m.upsampled.shape == (8, 64, 64)
            assert 0.0 <= m.values.min() and m.values.max() <= 1.0
            assert 0.0 <= m.upsampled.min() and m.upsampled.max() <= 1.0
            assert m.is_zero or m.values.max() == 1.0

    def test_slowfast_pathway_choice(self):
        torch.manual_seed(1)
        model = build_pipeline(PipelineConfig("slowfast", scale="desk"))
        pair = (torch.randn(1, 3, 2, 64, 64), torch.randn(1, 3, 8, 64, 64))
        assert default_layer(model) == "fast"
        fast = grad_cam(model, pair, 0)[0]
        slow = grad_cam(model, pair, 0, layer="slow")[0]
        assert fast.upsampled.shape == (8, 64, 64)
        assert slow.upsampled.shape == (2, 64, 64)

    def test_transformer_has_no_targets(self):
        torch.manual_seed(2)
        model = build_pipeline(PipelineConfig("transformer", scale="desk"))
        with pytest.raises(TypeError, match="saliency"):
            grad_cam(model, torch.randn(1, 9, 32, 64, 64), 1)

    def test_unknown_layer_rejected(self, desk_i3d, small_clip):
        with pytest.raises(ValueError, match="mixed_5b"):
            grad_cam(desk_i3d, small_clip, 1, layer="stem_conv")

    def test_bad_target_class_rejected(self, desk_i3d, small_clip):
        with pytest.raises(ValueError, match="target_class"):
            grad_cam(desk_i3d, small_clip, 5)

    def test_parameters_bitwise_unchanged(self, desk_i3d, small_clip):
        before = {k: v.clone() for k, v in desk_i3d.state_dict().items()}
        grad_cam(desk_i3d, small_clip, 1)
        after = desk_i3d.state_dict()
        assert all(torch.equal(before[k], after[k]) for k in before)

    def test_training_mode_restored(self, desk_i3d, small_clip):
        desk_i3d.train()
        grad_cam(desk_i3d, small_clip, 0)
        assert desk_i3d.training
        desk_i3d.eval()
        grad_cam(desk_i3d, small_clip, 0)
        assert not desk_i3d.training

    def test_constant_logit_yields_flagged_zero_map(self, small_clip):
        torch.manual_seed(3)
        model = build_pipeline(PipelineConfig("i3d", scale="desk"))
        with torch.no_grad():
            model.head.weight.zero_()
            model.head.bias.zero_()
        m = grad_cam(model, small_clip[:1], 1)[0]
        assert m.is_zero
        assert m.values.abs().max() == 0.0
        assert m.upsampled.abs().max() == 0.0

    def test_nontarget_bias_shift_leaves_map_unchanged(self, small_clip):
        torch.manual_seed(6)
        model = build_pipeline(PipelineConfig("i3d", scale="desk"))
        base = grad_cam(model, small_clip, 1)[0]
        with torch.no_grad():
            model.head.bias[0] += 7.0
        shifted = grad_cam(model, small_clip, 1)[0]
        assert torch.equal(base.values, shifted.values)

    def test_planted_signal_mass_in_quadrant(self, gradcam_planted_run):
        run = gradcam_planted_run
        assert run["val_accuracy"] >= 0.9
        assert all(not m.is_zero for m in run["maps"])
        assert min(run["masses"]) >= 0.5


class TestOverlay:
    def test_jet_endpoints(self):
        lo, hi = jet_colors(np.array([0.0, 1.0]))
        assert np.allclose(lo, [0.0, 0.0, 0.5])
        assert np.allclose(hi, [0.5, 0.0, 0.0])

    def test_zero_map_composites_jet_floor_everywhere(self):
        rng = np.random.default_rng(0)
        frame = rng.integers(0, 256, size=(12, 16, 3), dtype=np.uint8)
        out = overlay_heatmap(frame, np.zeros((12, 16)))
        expected = np.clip(
            np.rint(0.5 * frame.astype(np.float64) + np.array([0.0, 0.0, 63.75])), 0, 255
        ).astype(np.uint8)
        assert np.array_equal(out, expected)

    def test_single_hot_pixel_gets_top_color(self):
        frame = np.zeros((8, 8, 3), dtype=np.uint8)
        heat = np.zeros((8, 8))
        heat[3, 4] = 1.0
        out = overlay_heatmap(frame, heat)
        assert out[3, 4].tolist() == [64, 0, 0]  # rint(0.5 * jet(1) * 255)
        others = np.delete(out.reshape(-1, 3), 3 * 8 + 4, axis=0)
        assert (others == [0, 0, 64]).all()  # rint(0.5 * jet(0) * 255)

    def test_output_always_in_byte_range(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            h, w = rng.integers(1, 12, size=2)
            frame = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            heat = rng.random((h, w))
            out = overlay_heatmap(frame, heat)
            assert out.dtype == np.uint8
            reference = 0.5 * jet_colors(heat) * 255.0 + 0.5 * frame
            assert np.abs(out.astype(np.float64) - reference).max() <= 0.5
            assert reference.min() >= 0.0 and reference.max() <= 255.0

    def test_resolution_mismatch_rejected(self):
        frame = np.zeros((10, 10, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="resolution"):
            overlay_heatmap(frame, np.zeros((5, 5)))
        with pytest.raises(ValueError, match="frame"):
            overlay_heatmap(np.zeros((10, 10)), np.zeros((10, 10)))

    def test_pure_function(self):
        rng = np.random.default_rng(2)
        frame = rng.integers(0, 256, size=(6, 6, 3), dtype=np.uint8)
        heat = rng.random((6, 6))
        frame_copy, heat_copy = frame.copy(), heat.copy()
        first = overlay_heatmap(frame, heat)
        second = overlay_heatmap(frame, heat)
        assert np.array_equal(first, second)
        assert np.array_equal(frame, frame_copy)
        assert np.array_equal(heat, heat_copy)


class TestExport:
    @pytest.fixture()
    def heatmap(self):
        g = torch.Generator().manual_seed(5)
        values = torch.rand(2, 4, 4, generator=g)
        upsampled = torch.rand(4, 32, 32, generator=g)
        return Heatmap(values=values, upsampled=upsampled, target_class=1, layer="mixed_5b")

    def test_writes_pngs_npz_and_manifest(self, tmp_path, heatmap):
        rng = np.random.default_rng(3)
        frames = rng.integers(0, 256, size=(4, 32, 32, 3), dtype=np.uint8)
        path = export_overlays(
            frames, heatmap, tmp_path, segment_id="p01_t04", view="top",
            source_frames=[0, 33, 66, 99],
        )
        assert path == tmp_path / MANIFEST_NAME
        manifest = json.loads(path.read_text())
        assert manifest["segment_id"] == "p01_t04"
        assert manifest["view"] == "top"
        assert manifest["layer"] == "mixed_5b"
        assert manifest["target_class"] == 1
        assert manifest["is_zero"] is False
        assert [f["source_frame"] for f in manifest["frames"]] == [0, 33, 66, 99]
        for entry in manifest["frames"]:
            with Image.open(tmp_path / entry["overlay"]) as img:
                assert img.size == (32, 32)
        stored = np.load(tmp_path / HEATMAP_ARCHIVE)
        assert np.allclose(stored["values"], heatmap.values.numpy())
        assert np.allclose(stored["upsampled"], heatmap.upsampled.numpy())

    def test_overlay_pixels_match_compositor(self, tmp_path, heatmap):
        rng = np.random.default_rng(4)
        frames = rng.integers(0, 256, size=(4, 32, 32, 3), dtype=np.uint8)
        export_overlays(frames, heatmap, tmp_path, segment_id="s", view="top")
        with Image.open(tmp_path / "overlay_0002.png") as img:
            stored = np.asarray(img)
        assert np.array_equal(stored, overlay_heatmap(frames[2], heatmap.upsampled[2].numpy()))

    def test_frame_count_mismatch_rejected(self, tmp_path, heatmap):
        frames = np.zeros((3, 32, 32, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="heatmap steps"):
            export_overlays(frames, heatmap, tmp_path, segment_id="s", view="top")

    def test_source_frames_length_checked(self, tmp_path, heatmap):
        frames = np.zeros((4, 32, 32, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="source_frames"):
            export_overlays(
                frames, heatmap, tmp_path, segment_id="s", view="top", source_frames=[1, 2]
            )
