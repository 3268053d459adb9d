import numpy as np
import pytest

from retargetkit.bvh import parse_bvh, write_bvh
from retargetkit.errors import BVHParseError, RetargetError
from retargetkit.kinematics import contact_labels, forward_kinematics
from retargetkit.rotations import rot6d_to_matrix
from conftest import random_motion, random_skeleton

SIMPLE = """\
HIERARCHY
ROOT root
{
  OFFSET 0.0 0.0 0.0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation
  JOINT child
  {
    OFFSET 0.0 1.0 0.0
    CHANNELS 3 Zrotation Yrotation Xrotation
    End Site
    {
      OFFSET 0.0 0.5 0.0
    }
  }
}
MOTION
Frames: 3
Frame Time: 0.033333
0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0
1.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0
2.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0
"""


class TestParse:
    def test_zero_channels_give_identity(self):
        sk, motion = parse_bvh(SIMPLE)
        assert [j.name for j in sk.joints] == ["root", "child"]
        ident = np.array([1.0, 0, 0, 0, 1, 0])
        assert np.allclose(motion.poses, ident)
        assert np.allclose(motion.root_orientations, ident)

    def test_linear_translation_becomes_unit_velocity(self):
        _, motion = parse_bvh(SIMPLE)
        assert np.allclose(motion.root_velocities, [[1, 0, 0]] * 3)

    def test_frame_rate(self):
        _, motion = parse_bvh(SIMPLE)
        assert abs(motion.frame_rate - 30.0) < 0.01

    def test_frame_count_mismatch_names_both_numbers(self):
        bad = SIMPLE.replace("Frames: 3", "Frames: 5")
        with pytest.raises(BVHParseError) as e:
            parse_bvh(bad)
        assert "5" in str(e.value) and "3" in str(e.value)

    def test_channel_count_mismatch(self):
        bad = SIMPLE.replace("0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0",
                             "0.0 0.0 0.0", 1)
        with pytest.raises(BVHParseError) as e:
            parse_bvh(bad)
        assert "channels" in str(e.value)

    def test_unknown_keyword(self):
        bad = SIMPLE.replace("OFFSET 0.0 1.0 0.0", "WIBBLE 0.0 1.0 0.0")
        with pytest.raises(BVHParseError):
            parse_bvh(bad)

    def test_non_finite_number(self):
        bad = SIMPLE.replace("1.0 0.0 0.0", "nan 0.0 0.0", 1)
        with pytest.raises(BVHParseError) as e:
            parse_bvh(bad)
        assert "non-finite" in str(e.value)

    def test_errors_carry_line_numbers(self):
        bad = SIMPLE.replace("Frames: 3", "Frames: x")
        with pytest.raises(BVHParseError) as e:
            parse_bvh(bad)
        assert "line" in str(e.value)

    def test_unsupported_rotation_order(self):
        bad = SIMPLE.replace("CHANNELS 3 Zrotation Yrotation Xrotation",
                             "CHANNELS 3 Zrotation Xrotation Zrotation")
        with pytest.raises(BVHParseError) as e:
            parse_bvh(bad)
        assert "rotation order" in str(e.value)


class TestRoundTrip:
    def test_parse_write_parse_rotations(self, rng):
        sk = random_skeleton(rng, 6)
        motion = random_motion(rng, sk, n_frames=5)
        text = write_bvh(sk, motion)
        sk2, motion2 = parse_bvh(text)
        # the writer re-orders joints depth-first, so match them up by name
        idx2 = {j.name: i for i, j in enumerate(sk2.joints)}
        perm = [idx2[j.name] for j in sk.joints]
        # FK positions agree (the root decomposition may legally differ)
        p1 = forward_kinematics(sk, motion)
        p2 = forward_kinematics(sk2, motion2)[:, perm]
        assert np.abs(p1 - p2).max() < 1e-4
        # non-root rotations agree directly
        assert np.abs(rot6d_to_matrix(motion.poses[:, 1:])
                      - rot6d_to_matrix(motion2.poses[:, perm][:, 1:])).max() < 1e-4

    def test_write_parse_write_idempotent(self, rng):
        sk = random_skeleton(rng, 5)
        motion = random_motion(rng, sk, n_frames=4)
        text1 = write_bvh(sk, motion)
        sk2, motion2 = parse_bvh(text1)
        text2 = write_bvh(sk2, motion2)
        sk3, motion3 = parse_bvh(text2)
        assert write_bvh(sk3, motion3) == text2

    def test_identity_motion_writes_zero_rotations(self):
        from conftest import identity_motion
        sk = random_skeleton(np.random.default_rng(1), 4)
        text = write_bvh(sk, identity_motion(sk, 2))
        data_lines = text.splitlines()[-2:]
        vals = np.array([float(v) for v in data_lines[0].split()])
        assert np.abs(vals).max() < 1e-6

    def test_topology_round_trips(self, rng):
        sk = random_skeleton(rng, 7)
        motion = random_motion(rng, sk, 3)
        sk2, _ = parse_bvh(write_bvh(sk, motion))
        # same joints and the same parent-child relations, up to reordering
        assert sorted(j.name for j in sk2.joints) == sorted(j.name for j in sk.joints)
        def edges(s):
            return {(j.name, s.joints[j.parent].name)
                    for j in s.joints if j.parent is not None}
        assert edges(sk2) == edges(sk)


class TestFuzz:
    def test_mutated_inputs_only_structured_errors(self):
        rng = np.random.default_rng(99)
        base = SIMPLE.encode()
        for _ in range(500):
            data = bytearray(base)
            for _ in range(rng.integers(1, 8)):
                k = rng.integers(0, len(data))
                data[k] = rng.integers(0, 256)
            try:
                parse_bvh(bytes(data))
            except RetargetError:
                pass  # structured error is the only acceptable failure

    def test_random_garbage(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            blob = bytes(rng.integers(0, 256, size=rng.integers(0, 300)))
            try:
                parse_bvh(blob)
            except RetargetError:
                pass
