import numpy as np
import pytest

from retargetkit.rotations import axis_angle_to_matrix, matrix_to_rot6d, identity_rot6d
from retargetkit.skeleton import Motion, Skeleton


def random_rotation_matrix(rng):
    """Axis-angle oracle: compose a rotation independently of the 6D codec."""
    axis = rng.normal(size=3)
    while np.linalg.norm(axis) < 1e-6:
        axis = rng.normal(size=3)
    angle = rng.uniform(-np.pi, np.pi)
    return axis_angle_to_matrix(axis, angle)


def random_skeleton(rng, n_joints=6, with_annotations=True):
    """Random topologically sorted tree with nonzero offsets."""
    joints = [("root", None, np.zeros(3))]
    for i in range(1, n_joints):
        parent = int(rng.integers(0, i))
        offset = rng.normal(size=3)
        offset /= max(np.linalg.norm(offset), 0.3)
        joints.append((f"j{i}", parent, offset))
    children = {i: [] for i in range(n_joints)}
    for i, (_, p, _) in enumerate(joints):
        if p is not None:
            children[p].append(i)
    leaves = [i for i in range(n_joints) if not children[i] and i != 0]
    ee = tuple(leaves) if with_annotations else ()
    feet = tuple(leaves[:1]) if with_annotations else ()
    return Skeleton.create(joints, ee, feet)

def random_motion(rng, skeleton, n_frames=4, frame_rate=30.0):
    j = skeleton.n_joints
    poses = np.stack([
        np.stack([matrix_to_rot6d(random_rotation_matrix(rng)) for _ in range(j)])
        for _ in range(n_frames)
    ])
    ori = np.stack([matrix_to_rot6d(random_rotation_matrix(rng)) for _ in range(n_frames)])
    vel = rng.normal(scale=0.1, size=(n_frames, 3))
    return Motion.create(poses, ori, vel, frame_rate)


def identity_motion(skeleton, n_frames=4, frame_rate=30.0):
    j = skeleton.n_joints
    return Motion.create(
        identity_rot6d((n_frames, j)),
        identity_rot6d((n_frames,)),
        np.zeros((n_frames, 3)),
        frame_rate,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
