"""Differentiable kinematics on autodiff nodes.

Mirrors `rotations.rot6d_to_matrix` and `kinematics.forward_kinematics` so
that every loss can push gradients into predicted rotations and root
velocities.  Values are cross-checked against the numpy twins in the tests.
"""

import numpy as np

from . import autodiff as ad
from .errors import DegenerateRotationError, ShapeError
from .rotations import DEGENERACY_TOL


def rot6d_to_matrix_nodes(r):
    """Decode a (N, 6) node into (N, 3, 3) rotation matrices."""
    if r.value.ndim != 2 or r.value.shape[1] != 6:
        raise ShapeError(f"expected (N, 6), got {r.value.shape}")
    a1 = ad.take_slice(r, (slice(None), slice(0, 3)))
    a2 = ad.take_slice(r, (slice(None), slice(3, 6)))
    n1 = np.linalg.norm(a1.value, axis=-1)
    if n1.min() < DEGENERACY_TOL:
        raise DegenerateRotationError(
            f"zero first vector at row {int(np.argmin(n1))}")
    b1 = ad.normalize(a1, axis=-1)
    dot = ad.sum_(ad.mul(b1, a2), axis=-1, keepdims=True)
    a2p = ad.sub(a2, ad.mul(dot, b1))
    n2 = np.linalg.norm(a2p.value, axis=-1)
    if n2.min() < DEGENERACY_TOL:
        raise DegenerateRotationError(
            f"parallel vectors at row {int(np.argmin(n2))}")
    b2 = ad.normalize(a2p, axis=-1)
    b3 = ad.cross_product(b1, b2)
    cols = [ad.reshape(b, (-1, 3, 1)) for b in (b1, b2, b3)]
    return ad.concat(cols, axis=-1)


def displacement_matrix(t):
    """Strictly lower-triangular (T, T) matrix L with x = L v (forward Euler)."""
    return np.tril(np.ones((t, t)), k=-1)


def forward_kinematics_nodes(skeleton, poses, root_orientations, root_velocities):
    """Differentiable FK.

    poses: node (T, J, 6); root_orientations: node (T, 6);
    root_velocities: node (T, 3).  Returns positions node (T, J, 3).
    """
    t, j_count = poses.value.shape[0], poses.value.shape[1]
    if j_count != skeleton.n_joints:
        raise ShapeError(f"poses carry {j_count} joints, skeleton has {skeleton.n_joints}")

    try:
        root_rot = rot6d_to_matrix_nodes(root_orientations)  # (T, 3, 3)
        flat = ad.reshape(poses, (t * j_count, 6))
        joint_rot = ad.reshape(rot6d_to_matrix_nodes(flat), (t, j_count, 3, 3))
    except DegenerateRotationError as exc:
        raise DegenerateRotationError(f"degenerate rotation in motion: {exc}") from exc

    x_root = ad.matmul(ad.leaf(displacement_matrix(t)), root_velocities)  # (T, 3)

    positions = [None] * j_count
    globals_ = [None] * j_count
    positions[0] = x_root
    globals_[0] = ad.matmul(root_rot, _joint_rot(joint_rot, 0))
    for j in range(1, j_count):
        p = skeleton.joints[j].parent
        offset = skeleton.joints[j].offset.reshape(3, 1)
        step = ad.reshape(ad.matmul(globals_[p], ad.leaf(offset)), (t, 3))
        positions[j] = ad.add(positions[p], step)
        globals_[j] = ad.matmul(globals_[p], _joint_rot(joint_rot, j))

    stacked = ad.concat([ad.reshape(pos, (t, 1, 3)) for pos in positions], axis=1)
    return stacked


def _joint_rot(joint_rot, j):
    # (T, J, 3, 3) -> (T, 3, 3) for joint j
    t = joint_rot.value.shape[0]
    sl = ad.take_slice(joint_rot, (slice(None), slice(j, j + 1)))
    return ad.reshape(sl, (t, 3, 3))


def joint_velocities_nodes(positions):
    """Backward differences over the frame axis of a (T, J, 3) node."""
    t = positions.value.shape[0]
    if t < 2:
        raise ShapeError(f"need at least 2 frames, got {t}")
    later = ad.take_slice(positions, (slice(1, t),))
    earlier = ad.take_slice(positions, (slice(0, t - 1),))
    return ad.sub(later, earlier)
