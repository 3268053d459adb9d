"""Forward kinematics and derived kinematic quantities (numpy path).

The differentiable twin used inside training lives in `diffkin`; the two are
cross-checked in the test suite.
"""

import numpy as np

from .errors import DegenerateRotationError, ValidationError
from .rotations import rot6d_to_matrix


def root_displacements(root_velocities):
    """Integrate per-frame root velocity with forward Euler, x(0) = 0.

    x(t+1) = x(t) + v(t), so frame t accumulates velocities 0..t-1.
    """
    v = np.asarray(root_velocities, dtype=float)
    x = np.zeros_like(v)
    x[1:] = np.cumsum(v[:-1], axis=0)
    return x


def forward_kinematics(skeleton, motion):
    """Global joint positions, shape (T, J, 3).

    Per frame: G_root = R(theta_r), x_root = integrated root velocity;
    x_j = x_parent + G_parent @ offset_j, G_j = G_parent @ R_j.
    """
    if motion.n_joints != skeleton.n_joints:
        raise ValidationError(
            f"motion has {motion.n_joints} joints, skeleton has {skeleton.n_joints}"
        )
    t = motion.n_frames
    j_count = skeleton.n_joints
    try:
        root_rot = rot6d_to_matrix(motion.root_orientations)  # (T, 3, 3)
        joint_rot = rot6d_to_matrix(motion.poses)  # (T, J, 3, 3)
    except DegenerateRotationError as exc:
        raise DegenerateRotationError(f"degenerate rotation in motion: {exc}") from exc

    positions = np.zeros((t, j_count, 3))
    globals_ = np.zeros((t, j_count, 3, 3))
    positions[:, 0] = root_displacements(motion.root_velocities)
    globals_[:, 0] = root_rot @ joint_rot[:, 0]
    for j in range(1, j_count):
        p = skeleton.joints[j].parent
        offset = skeleton.joints[j].offset
        positions[:, j] = positions[:, p] + (globals_[:, p] @ offset)
        globals_[:, j] = globals_[:, p] @ joint_rot[:, j]
    return positions


def joint_velocities(positions):
    """Backward finite differences over frames: v(n) = x(n) - x(n-1).

    Returns (T-1, J, 3); frame 0 has no velocity.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.shape[0] < 2:
        raise ValidationError(
            f"need at least 2 frames for velocities, got {positions.shape[0]}"
        )
    return positions[1:] - positions[:-1]


def contact_labels(positions, feet, eps):
    """Binary contact labels (T-1, |feet|): 1 where foot speed < eps."""
    feet = list(feet)
    if not feet:
        raise ValidationError("empty foot set")
    if eps <= 0:
        raise ValidationError("contact threshold eps must be positive")
    vel = joint_velocities(positions)[:, feet]
    speed = np.linalg.norm(vel, axis=-1)
    return (speed < eps).astype(np.int8)


def rest_pose_positions(skeleton):
    """Joint positions with all local rotations identity and root at origin."""
    pos = np.zeros((skeleton.n_joints, 3))
    for i, joint in enumerate(skeleton.joints):
        if joint.parent is not None:
            pos[i] = pos[joint.parent] + joint.offset
    return pos
