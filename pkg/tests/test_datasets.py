import numpy as np
import pytest

from retargetkit.datasets import (
    annotate_skeleton,
    build_motion_dataset,
    build_pose_dataset,
    motion_manifest,
    normalize_pair,
    pose_manifest,
    skeleton_hash,
)
from retargetkit.errors import ValidationError
from conftest import random_motion, random_skeleton


def _clips(rng, n_clips=3, n_frames=100, n_joints=5):
    sk = random_skeleton(rng, n_joints)
    return [(sk, random_motion(rng, sk, n_frames)) for _ in range(n_clips)]


class TestMotionWindows:
    def test_window_count_oracle(self, rng):
        # 100 frames, window 64, stride 16 -> starts 0, 16, 32
        clips = _clips(rng, n_clips=1, n_frames=100)
        ds = build_motion_dataset(clips, 64, 16)
        assert ds.n_windows == 3
        assert all(w.n_frames == 64 for w in ds.windows)

    def test_windows_are_views_of_clip_content(self, rng):
        clips = _clips(rng, n_clips=1, n_frames=40)
        ds = build_motion_dataset(clips, 32, 8)
        motion = clips[0][1]
        assert np.array_equal(ds.windows[1].poses, motion.poses[8:40])

    def test_short_clip_skipped_with_warning(self, rng):
        sk = random_skeleton(rng, 4)
        clips = [(sk, random_motion(rng, sk, 10)), (sk, random_motion(rng, sk, 70))]
        with pytest.warns(UserWarning, match="skipped"):
            ds = build_motion_dataset(clips, 64, 16)
        assert ds.skipped == 1
        assert ds.n_windows == 1

    def test_mixed_skeletons_rejected(self, rng):
        sk1 = random_skeleton(rng, 4)
        sk2 = random_skeleton(rng, 5)
        clips = [(sk1, random_motion(rng, sk1, 70)), (sk2, random_motion(rng, sk2, 70))]
        with pytest.raises(ValidationError, match="clip0.*clip1"):
            build_motion_dataset(clips, 64, 16)

    def test_bad_parameters(self, rng):
        clips = _clips(rng, 1, 70)
        with pytest.raises(ValidationError):
            build_motion_dataset(clips, 1, 16)
        with pytest.raises(ValidationError):
            build_motion_dataset(clips, 64, 0)
        with pytest.raises(ValidationError):
            build_motion_dataset([], 64, 16)


class TestPoseSets:
    def test_fraction_sizes(self, rng):
        clips = _clips(rng, n_clips=3, n_frames=200)  # 600 frames total
        assert build_pose_dataset(clips, 1.0, 0).n_poses == 600
        assert build_pose_dataset(clips, 0.1, 0).n_poses == 60
        assert build_pose_dataset(clips, 0.0, 0).n_poses == 0

    def test_ceil_rounding(self, rng):
        clips = _clips(rng, n_clips=1, n_frames=10)
        assert build_pose_dataset(clips, 0.05, 0).n_poses == 1  # ceil(0.5)

    def test_seed_determinism_and_shuffle(self, rng):
        clips = _clips(rng, n_clips=2, n_frames=50)
        a = build_pose_dataset(clips, 1.0, 7)
        b = build_pose_dataset(clips, 1.0, 7)
        c = build_pose_dataset(clips, 1.0, 8)
        assert np.array_equal(a.as_array(), b.as_array())
        assert not np.array_equal(a.as_array(), c.as_array())

    def test_full_set_is_permutation_of_frames(self, rng):
        clips = _clips(rng, n_clips=2, n_frames=30)
        ds = build_pose_dataset(clips, 1.0, 3)
        pooled = np.concatenate([m.poses for _, m in clips]).reshape(60, -1)
        got = ds.as_array()
        assert sorted(map(tuple, got)) == sorted(map(tuple, pooled))

    def test_empty_as_array_shape(self, rng):
        clips = _clips(rng, n_clips=1, n_frames=10, n_joints=4)
        ds = build_pose_dataset(clips, 0.0, 0)
        assert ds.as_array().shape == (0, 24)

    def test_fraction_out_of_range(self, rng):
        clips = _clips(rng, 1, 10)
        with pytest.raises(ValidationError):
            build_pose_dataset(clips, 1.5, 0)


class TestAnnotateNormalize:
    def test_annotation_resolves_names(self, rng):
        sk = random_skeleton(rng, 6)
        leaves = [j.name for i, j in enumerate(sk.joints) if not sk.children_of(i)]
        out = annotate_skeleton(sk, leaves, leaves[:1], normalize=False)
        assert [out.joints[i].name for i in out.end_effectors] == leaves

    def test_annotation_unknown_name(self, rng):
        sk = random_skeleton(rng, 4)
        with pytest.raises(ValidationError, match="nope"):
            annotate_skeleton(sk, ["nope"], [])

    def test_normalize_pair_height_one(self, rng):
        sk = random_skeleton(rng, 5)
        motion = random_motion(rng, sk, 8)
        sk2, m2 = normalize_pair(sk, motion)
        assert abs(sk2.height - 1.0) < 1e-9
        assert np.allclose(m2.root_velocities, motion.root_velocities / sk.height)


class TestManifests:
    def test_hash_stable_and_discriminating(self, rng):
        sk1 = random_skeleton(rng, 5)
        sk2 = random_skeleton(rng, 6)
        assert skeleton_hash(sk1) == skeleton_hash(sk1)
        assert skeleton_hash(sk1) != skeleton_hash(sk2)
        assert len(skeleton_hash(sk1)) == 16

    def test_manifest_contents(self, rng):
        clips = _clips(rng, 1, 100)
        md = motion_manifest(build_motion_dataset(clips, 64, 16))
        assert md["n_windows"] == 3 and md["window_length"] == 64
        pd = pose_manifest(build_pose_dataset(clips, 0.5, 4))
        assert pd["n_poses"] == 50 and pd["seed"] == 4
