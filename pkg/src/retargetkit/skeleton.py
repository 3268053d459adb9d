"""Core data model: skeleton, pose, root transform, motion.

All types are immutable after construction (arrays carry writeable=False) and
validated up front, so downstream code can assume well-formed data.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .rotations import DEGENERACY_TOL, identity_rot6d

ROOT_CHANNELS = 9  # 6D orientation + 3D velocity


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _check_rot6d_rows(rows, what):
    rows = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(rows)):
        raise ValidationError(f"{what}: non-finite entries")
    a1 = rows[..., 0:3]
    a2 = rows[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1)
    if np.any(n1 < DEGENERACY_TOL):
        raise ValidationError(f"{what}: degenerate 6D rotation (zero first vector)")
    b1 = a1 / n1[..., None]
    a2p = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    if np.any(np.linalg.norm(a2p, axis=-1) < DEGENERACY_TOL):
        raise ValidationError(f"{what}: degenerate 6D rotation (parallel vectors)")


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int | None  # None only for the root
    offset: np.ndarray  # (3,) local offset from parent


@dataclass(frozen=True)
class Skeleton:
    """Joint hierarchy with end-effector and foot annotations.

    Joints are topologically sorted (parent index < child index).  `height`
    is the characteristic length used for normalization; `chain_lengths`
    maps each end-effector index to the summed offset norms root->joint.
    """

    joints: tuple
    end_effectors: tuple  # joint indices, sorted
    feet: tuple  # joint indices, sorted; subset of end_effectors
    height: float
    chain_lengths: dict = field(compare=False)

    @staticmethod
    def create(joints, end_effectors, feet, height=None):
        joints = tuple(
            Joint(j.name if isinstance(j, Joint) else j[0],
                  j.parent if isinstance(j, Joint) else j[1],
                  _frozen(j.offset if isinstance(j, Joint) else j[2]))
            for j in joints
        )
        n = len(joints)
        roots = [i for i, j in enumerate(joints) if j.parent is None]
        if len(roots) != 1 or roots[0] != 0:
            raise ValidationError("skeleton must have exactly one root at index 0")
        children = {i: [] for i in range(n)}
        for i, j in enumerate(joints[1:], start=1):
            if not (0 <= j.parent < i):
                raise ValidationError(
                    f"joint {i} ({j.name}): parent index {j.parent} not before child"
                )
            children[j.parent].append(i)
        leaves = {i for i in range(n) if not children[i]}
        end_effectors = tuple(sorted(set(end_effectors)))
        feet = tuple(sorted(set(feet)))
        if not set(feet) <= set(end_effectors):
            raise ValidationError("feet must be a subset of the end-effector set")
        if not set(end_effectors) <= leaves:
            raise ValidationError("end-effectors must be leaf joints")
        chain_lengths = {}
        for e in end_effectors:
            total, k = 0.0, e
            while joints[k].parent is not None:
                total += float(np.linalg.norm(joints[k].offset))
                k = joints[k].parent
            if total <= 0:
                raise ValidationError(f"end-effector {joints[e].name}: zero chain length")
            chain_lengths[e] = total
        if height is None:
            pos = rest_positions_of(joints)
            height = float(pos[:, 1].max() - pos[:, 1].min())
            if height <= 0:
                height = float(np.linalg.norm(pos, axis=1).max())
        if height <= 0:
            raise ValidationError("skeleton height must be positive")
        return Skeleton(joints, end_effectors, feet, float(height), chain_lengths)

    @property
    def n_joints(self):
        return len(self.joints)

    def children_of(self, i):
        return [k for k, j in enumerate(self.joints) if j.parent == i]

    def offsets(self):
        return np.stack([j.offset for j in self.joints])

    def parents(self):
        return [j.parent for j in self.joints]

    def scaled(self, factor):
        """Uniformly scale all offsets (and height) by `factor`."""
        joints = [Joint(j.name, j.parent, _frozen(j.offset * factor)) for j in self.joints]
        return Skeleton.create(joints, self.end_effectors, self.feet,
                               height=self.height * factor)

    def normalized(self):
        """Rescale so height == 1."""
        return self.scaled(1.0 / self.height)

    def signature(self):
        """Topology + offsets tuple used to compare skeletons across files."""
        return tuple((j.name, j.parent, tuple(np.round(j.offset, 5))) for j in self.joints)


def rest_positions_of(joints):
    pos = np.zeros((len(joints), 3))
    for i, j in enumerate(joints):
        if j.parent is not None:
            pos[i] = pos[j.parent] + j.offset
    return pos


@dataclass(frozen=True)
class Pose:
    """Per-joint 6D rotations, one row per joint."""

    rotations: np.ndarray  # (J, 6)

    @staticmethod
    def create(rotations):
        rotations = _frozen(rotations)
        if rotations.ndim != 2 or rotations.shape[1] != 6:
            raise ValidationError(f"pose rotations must be (J, 6), got {rotations.shape}")
        _check_rot6d_rows(rotations, "pose")
        return Pose(rotations)

    @staticmethod
    def identity(n_joints):
        return Pose.create(identity_rot6d((n_joints,)))

    @property
    def n_joints(self):
        return self.rotations.shape[0]


@dataclass(frozen=True)
class RootTransform:
    """Root orientation (6D) and world-frame linear velocity (per frame)."""

    orientation: np.ndarray  # (6,)
    velocity: np.ndarray  # (3,)

    @staticmethod
    def create(orientation, velocity):
        orientation = _frozen(orientation)
        velocity = _frozen(velocity)
        if orientation.shape != (6,) or velocity.shape != (3,):
            raise ValidationError("root transform needs a 6-vector and a 3-vector")
        if not np.all(np.isfinite(velocity)):
            raise ValidationError("root velocity: non-finite entries")
        _check_rot6d_rows(orientation[None], "root orientation")
        return RootTransform(orientation, velocity)

    @staticmethod
    def identity():
        return RootTransform.create(identity_rot6d(), np.zeros(3))


@dataclass(frozen=True)
class Motion:
    """T frames of (pose, root transform) over one skeleton.

    The flattened layout is T x (6(J+1)+3): J pose rows, then the root
    armature's 6D orientation and 3D velocity.
    """

    poses: np.ndarray  # (T, J, 6)
    root_orientations: np.ndarray  # (T, 6)
    root_velocities: np.ndarray  # (T, 3)
    frame_rate: float

    @staticmethod
    def create(poses, root_orientations, root_velocities, frame_rate=30.0):
        poses = _frozen(poses)
        root_orientations = _frozen(root_orientations)
        root_velocities = _frozen(root_velocities)
        if poses.ndim != 3 or poses.shape[2] != 6:
            raise ValidationError(f"poses must be (T, J, 6), got {poses.shape}")
        t = poses.shape[0]
        if root_orientations.shape != (t, 6) or root_velocities.shape != (t, 3):
            raise ValidationError("root arrays must be (T, 6) and (T, 3)")
        if not np.all(np.isfinite(root_velocities)):
            raise ValidationError("root velocities: non-finite entries")
        if frame_rate <= 0:
            raise ValidationError("frame_rate must be positive")
        _check_rot6d_rows(poses, "motion poses")
        _check_rot6d_rows(root_orientations, "motion root orientation")
        return Motion(poses, root_orientations, root_velocities, float(frame_rate))

    @staticmethod
    def from_frames(frames, frame_rate=30.0):
        poses = np.stack([p.rotations for p, _ in frames])
        ori = np.stack([r.orientation for _, r in frames])
        vel = np.stack([r.velocity for _, r in frames])
        return Motion.create(poses, ori, vel, frame_rate)

    @property
    def n_frames(self):
        return self.poses.shape[0]

    @property
    def n_joints(self):
        return self.poses.shape[1]

    def flattened(self):
        """(T, 6(J+1)+3) layout: pose rows, root orientation, root velocity."""
        t = self.n_frames
        return np.concatenate(
            [self.poses.reshape(t, -1), self.root_orientations, self.root_velocities],
            axis=1,
        )

    @staticmethod
    def from_flattened(data, n_joints, frame_rate=30.0):
        data = np.asarray(data, dtype=float)
        width = 6 * (n_joints + 1) + 3
        if data.ndim != 2 or data.shape[1] != width:
            raise ValidationError(
                f"flattened motion must be (T, {width}) for J={n_joints}, got {data.shape}"
            )
        t = data.shape[0]
        poses = data[:, : 6 * n_joints].reshape(t, n_joints, 6)
        ori = data[:, 6 * n_joints : 6 * n_joints + 6]
        vel = data[:, 6 * n_joints + 6 :]
        return Motion.create(poses, ori, vel, frame_rate)

    def window(self, start, length):
        sl = slice(start, start + length)
        return Motion.create(self.poses[sl], self.root_orientations[sl],
                             self.root_velocities[sl], self.frame_rate)

    def reversed(self):
        """Time reversal.

        Velocity v(t) moves frame t to t+1, so the reversed sequence uses
        -v(T-2-t); the final (never-integrated) entry just negates.
        """
        vel = np.concatenate([-self.root_velocities[:-1][::-1],
                              -self.root_velocities[-1:]])
        return Motion.create(self.poses[::-1], self.root_orientations[::-1],
                             vel, self.frame_rate)
