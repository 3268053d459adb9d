import numpy as np
import pytest
from hypothesis import given, strategies as st

from retargetkit.errors import DegenerateRotationError, ValidationError
from retargetkit.rotations import (
    axis_angle_to_matrix,
    euler_to_matrix,
    geodesic_angle,
    identity_rot6d,
    matrix_to_rot6d,
    matrix_to_euler,
    rot6d_to_matrix,
)
from conftest import random_rotation_matrix


class TestRot6dToMatrix:
    def test_identity(self):
        r = np.array([1.0, 0, 0, 0, 1.0, 0])
        assert np.allclose(rot6d_to_matrix(r), np.eye(3))

    def test_scale_invariance(self):
        r = np.array([2.0, 0, 0, 0, 3.0, 0])
        assert np.allclose(rot6d_to_matrix(r), np.eye(3))

    def test_recovers_axis_angle_rotations(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            mat = random_rotation_matrix(rng)
            rec = rot6d_to_matrix(matrix_to_rot6d(mat))
            assert np.abs(rec - mat).max() < 1e-6

    def test_degenerate_zero_first_vector(self):
        with pytest.raises(DegenerateRotationError):
            rot6d_to_matrix(np.array([0.0, 0, 0, 0, 1.0, 0]))

    def test_degenerate_parallel_vectors(self):
        with pytest.raises(DegenerateRotationError):
            rot6d_to_matrix(np.array([1.0, 0, 0, 2.0, 0, 0]))

    @given(st.integers(0, 2 ** 32 - 1))
    def test_output_is_special_orthogonal(self, seed):
        rng = np.random.default_rng(seed)
        r = rng.normal(size=6)
        try:
            mat = rot6d_to_matrix(r)
        except DegenerateRotationError:
            return
        assert np.abs(mat.T @ mat - np.eye(3)).max() < 1e-6
        assert abs(np.linalg.det(mat) - 1.0) < 1e-6


class TestMatrixToRot6d:
    def test_identity(self):
        assert np.allclose(matrix_to_rot6d(np.eye(3)), [1, 0, 0, 0, 1, 0])

    def test_quarter_turn_about_z(self):
        mat = axis_angle_to_matrix([0, 0, 1], np.pi / 2)
        assert np.allclose(matrix_to_rot6d(mat), [0, 1, 0, -1, 0, 0], atol=1e-12)

    def test_round_trip_1000_random(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            mat = random_rotation_matrix(rng)
            assert np.abs(rot6d_to_matrix(matrix_to_rot6d(mat)) - mat).max() < 1e-6

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValidationError):
            matrix_to_rot6d(np.eye(3) * 1.5)


class TestEuler:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        for order in ("ZYX", "ZXY", "XYZ", "XZY", "YXZ", "YZX"):
            angles = rng.uniform(-80, 80, size=3)
            mat = euler_to_matrix(angles, order)
            back = matrix_to_euler(mat, order)
            assert np.allclose(euler_to_matrix(back, order), mat, atol=1e-10)

    def test_single_axis(self):
        mat = euler_to_matrix([90, 0, 0], "ZYX")
        assert np.allclose(mat @ [1, 0, 0], [0, 1, 0], atol=1e-12)


class TestGeodesicAngle:
    def test_identical_is_zero(self, rng):
        mat = random_rotation_matrix(rng)
        assert geodesic_angle(mat, mat) < 1e-6

    def test_matches_quaternion_dot_oracle(self, rng):
        from scipy.spatial.transform import Rotation

        for _ in range(50):
            a = random_rotation_matrix(rng)
            b = random_rotation_matrix(rng)
            qa = Rotation.from_matrix(a).as_quat()
            qb = Rotation.from_matrix(b).as_quat()
            expected = 2 * np.arccos(min(1.0, abs(np.dot(qa, qb))))
            assert abs(geodesic_angle(a, b) - expected) < 1e-9


def test_identity_rot6d_batched():
    r = identity_rot6d((4, 3))
    assert r.shape == (4, 3, 6)
    assert np.allclose(rot6d_to_matrix(r), np.eye(3))
