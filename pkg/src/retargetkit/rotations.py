"""Rotation math: continuous 6D representation and helpers.

A rotation is encoded by the first two columns of its matrix, flattened to a
6-vector.  Decoding runs Gram-Schmidt on the two 3-vectors and completes the
frame with a cross product, so the map is scale-invariant and continuous.
"""

import numpy as np

from .errors import DegenerateRotationError, ValidationError

DEGENERACY_TOL = 1e-8


def rot6d_to_matrix(r):
    """Decode 6D rotations to matrices.

    Parameters
    ----------
    r : array, shape (..., 6)

    Returns
    -------
    array, shape (..., 3, 3) with columns [b1 b2 b3].
    """
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 6:
        raise ValidationError(f"expected trailing dimension 6, got shape {r.shape}")
    a1 = r[..., 0:3]
    a2 = r[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1)
    if np.any(n1 < DEGENERACY_TOL):
        raise DegenerateRotationError("first 3-vector of 6D rotation has (near-)zero norm")
    b1 = a1 / n1[..., None]
    a2p = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(a2p, axis=-1)
    if np.any(n2 < DEGENERACY_TOL):
        raise DegenerateRotationError("second 3-vector is parallel to the first")
    b2 = a2p / n2[..., None]
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def matrix_to_rot6d(mat, tol=1e-4):
    """Encode rotation matrices as 6-vectors (first two columns).

    Inputs must be orthonormal with determinant +1 within `tol`.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.shape[-2:] != (3, 3):
        raise ValidationError(f"expected trailing shape (3, 3), got {mat.shape}")
    eye = np.eye(3)
    err = np.abs(np.swapaxes(mat, -1, -2) @ mat - eye).max()
    if err > tol:
        raise ValidationError(f"matrix not orthonormal: max |R^T R - I| = {err:.3g} > {tol}")
    det = np.linalg.det(mat)
    if np.any(np.abs(det - 1.0) > 10 * tol):
        raise ValidationError("matrix determinant differs from +1 (improper rotation)")
    return np.concatenate([mat[..., :, 0], mat[..., :, 1]], axis=-1)


def identity_rot6d(shape=()):
    """6D encoding of the identity rotation, optionally batched."""
    r = np.zeros(shape + (6,))
    r[..., 0] = 1.0
    r[..., 4] = 1.0
    return r


def axis_angle_to_matrix(axis, angle):
    """Rodrigues formula; `axis` need not be normalized."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < DEGENERACY_TOL:
        raise ValidationError("rotation axis has zero norm")
    x, y, z = axis / n
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def geodesic_angle(r_a, r_b):
    """Angle (radians) of the relative rotation R_a^T R_b, batched."""
    r_a = np.asarray(r_a, dtype=float)
    r_b = np.asarray(r_b, dtype=float)
    rel = np.swapaxes(r_a, -1, -2) @ r_b
    tr = np.trace(rel, axis1=-2, axis2=-1)
    c = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
    return np.arccos(c)


_EULER_AXES = {"X": 0, "Y": 1, "Z": 2}


def euler_to_matrix(angles_deg, order):
    """Intrinsic Euler rotation from BVH channel order (e.g. 'ZYX'), degrees.

    BVH applies channels left to right as successive local rotations, which is
    a product of the single-axis matrices in channel order.
    """
    angles = np.deg2rad(np.asarray(angles_deg, dtype=float))
    mat = np.eye(3)
    for ax, ang in zip(order, angles):
        mat = mat @ _single_axis(_EULER_AXES[ax], ang)
    return mat


def matrix_to_euler(mat, order):
    """Inverse of :func:`euler_to_matrix`; returns degrees.

    Uses scipy's intrinsic-Euler decomposition (same axis convention).
    """
    from scipy.spatial.transform import Rotation

    return Rotation.from_matrix(mat).as_euler(order, degrees=True)


def _single_axis(axis, angle):
    c, s = np.cos(angle), np.sin(angle)
    if axis == 0:
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis == 1:
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
