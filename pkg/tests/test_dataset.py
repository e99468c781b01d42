"""Archive, manifest, and label handling."""
import json

import pytest

from arat_scoring.dataset import (
    EXCLUDED,
    ArchiveError,
    SegmentManifest,
    View,
    box_for_frame,
    display_score,
    filter_rated,
    load_manifest,
    map_label,
    read_boxes,
    read_frames,
    read_keypoints,
    split_dataset,
    synthetic_manifests,
)


class TestLabels:
    def test_ratings_map_to_binary(self):
        assert map_label(2) == 0
        assert map_label(3) == 1

    def test_low_ratings_are_excluded(self):
        assert map_label(0) is EXCLUDED
        assert map_label(1) is EXCLUDED

    @pytest.mark.parametrize("bad", [-1, 4, 2.5, "2"])
    def test_out_of_range_rating_rejected(self, bad):
        with pytest.raises((ValueError, TypeError)):
            map_label(bad)

    def test_display_score_inverts_mapping(self):
        assert display_score(0) == 2
        assert display_score(1) == 3
        assert display_score(map_label(2)) == 2
        assert display_score(map_label(3)) == 3

    def test_filter_rated_drops_excluded(self):
        manifests = synthetic_manifests(20, seed=3, include_excluded=True)
        kept = filter_rated(manifests)
        assert 0 < len(kept) < len(manifests)
        assert all(m.arat_rating in (2, 3) for m in kept)


class TestSplit:
    def test_sizes_500(self):
        manifests = synthetic_manifests(500, seed=0)
        train, val = split_dataset(manifests, ratio=0.2, seed=42)
        assert (len(train), len(val)) == (400, 100)

    def test_byte_identical_across_runs(self):
        manifests = synthetic_manifests(500, seed=0)
        outcomes = set()
        for _ in range(3):
            train, val = split_dataset(manifests, ratio=0.2, seed=42)
            payload = json.dumps(
                [[m.segment_id for m in train], [m.segment_id for m in val]]
            ).encode()
            outcomes.add(payload)
        assert len(outcomes) == 1

    def test_input_order_irrelevant(self):
        manifests = synthetic_manifests(100, seed=0)
        t1, v1 = split_dataset(manifests, ratio=0.2, seed=42)
        t2, v2 = split_dataset(list(reversed(manifests)), ratio=0.2, seed=42)
        assert [m.segment_id for m in t1] == [m.segment_id for m in t2]
        assert [m.segment_id for m in v1] == [m.segment_id for m in v2]

    def test_different_seed_different_split(self):
        manifests = synthetic_manifests(100, seed=0)
        _, v42 = split_dataset(manifests, ratio=0.2, seed=42)
        _, v7 = split_dataset(manifests, ratio=0.2, seed=7)
        assert {m.segment_id for m in v42} != {m.segment_id for m in v7}

    def test_partition_is_exact(self):
        manifests = synthetic_manifests(33, seed=5)
        train, val = split_dataset(manifests, ratio=0.2, seed=1)
        train_ids = {m.segment_id for m in train}
        val_ids = {m.segment_id for m in val}
        assert not train_ids & val_ids
        assert train_ids | val_ids == {m.segment_id for m in manifests}

    def test_duplicate_ids_rejected(self):
        manifests = synthetic_manifests(4, seed=0)
        with pytest.raises(ValueError, match="duplicate"):
            split_dataset(manifests + [manifests[0]], ratio=0.5, seed=0)


class TestManifest:
    def test_round_trip_json(self):
        m = synthetic_manifests(1, seed=9)[0]
        clone = SegmentManifest.from_json(m.to_json())
        assert clone.segment_id == m.segment_id
        assert clone.views.keys() == m.views.keys()
        assert clone.task_interval == m.task_interval
        assert [p.phase_name for p in clone.phase_annotations] == [
            p.phase_name for p in m.phase_annotations
        ]

    def test_task_interval_spans_phases(self):
        m = synthetic_manifests(1, seed=9, frames_per_view=100)[0]
        start, end = m.task_interval
        assert start == min(p.start_frame for p in m.phase_annotations)
        assert end == max(p.end_frame for p in m.phase_annotations)


class TestArchive:
    def test_loads_written_archive(self, archive_index):
        assert len(archive_index.manifests) == 4
        for m in archive_index.manifests:
            assert set(m.views) == {v.value for v in View}

    def test_missing_index_is_fatal(self, tmp_path):
        with pytest.raises(ArchiveError, match="index.json"):
            load_manifest(tmp_path)

    def test_invalid_segment_reported_not_fatal(self, tmp_path):
        from arat_scoring.dataset import write_synthetic_archive

        root = tmp_path / "arch"
        write_synthetic_archive(root, n_segments=2, frames_per_view=40, seed=2)
        index_path = root / "index.json"
        payload = json.loads(index_path.read_text())
        # Corrupt one segment: rating outside 0..3 and a phase past the end.
        payload[0]["arat_rating"] = 5
        payload[0]["phase_annotations"][0][2] = 10_000  # end frame past the view
        index_path.write_text(json.dumps(payload))

        index = load_manifest(root)
        assert len(index.manifests) == 1
        assert len(index.issues) >= 2
        bad_id = payload[0]["segment_id"]
        assert all(issue.segment_id == bad_id for issue in index.issues)
        reasons = " ".join(issue.message for issue in index.issues)
        assert "rating" in reasons
        assert "phase" in reasons

    def test_read_frames_shape_and_dtype(self, archive_root, archive_index):
        m = archive_index.manifests[0]
        frames = read_frames(archive_root, m, View.TOP, [0, 5, 39])
        assert frames.shape == (3, 96, 96, 3)
        assert frames.dtype.name == "uint8"

    def test_read_frames_out_of_range(self, archive_root, archive_index):
        m = archive_index.manifests[0]
        with pytest.raises(ArchiveError, match="frame"):
            read_frames(archive_root, m, View.TOP, [40])

    def test_keypoints_and_boxes_per_frame(self, archive_root, archive_index):
        m = archive_index.manifests[0]
        kps = read_keypoints(archive_root, m)
        boxes = read_boxes(archive_root, m)
        assert len(kps) == m.views[View.IPSILATERAL.value].frame_count
        assert len(boxes) == len(kps)
        assert all(len(k.joints) == 4 for k in kps)

    def test_box_for_frame_falls_back_to_earlier(self, archive_root, archive_index):
        m = archive_index.manifests[0]
        boxes = read_boxes(archive_root, m)[:3]  # pretend later boxes are missing
        assert box_for_frame(boxes, 2).frame_index == 2
        assert box_for_frame(boxes, 10).frame_index == 2
        assert box_for_frame(boxes, 0).frame_index == 0
