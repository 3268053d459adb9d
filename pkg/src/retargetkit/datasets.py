"""Dataset builders: windowed motion corpora and shuffled pose sets.

The pose set deliberately destroys temporal adjacency: frames from all clips
are pooled, root transforms dropped, and the order shuffled with a recorded
seed before optional subsampling.
"""

import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .skeleton import Motion, Pose, Skeleton


def annotate_skeleton(skeleton, end_effector_names, foot_names, normalize=True):
    """Attach end-effector/foot sets (by joint name) and normalize height to 1."""
    by_name = {j.name: i for i, j in enumerate(skeleton.joints)}
    missing = [n for n in list(end_effector_names) + list(foot_names) if n not in by_name]
    if missing:
        raise ValidationError(f"unknown joint names: {missing}")
    sk = Skeleton.create(skeleton.joints,
                         tuple(by_name[n] for n in end_effector_names),
                         tuple(by_name[n] for n in foot_names),
                         height=skeleton.height)
    return sk.normalized() if normalize else sk


def normalize_pair(skeleton, motion):
    """Height=1 units: scale offsets and root velocities by 1/height."""
    factor = 1.0 / skeleton.height
    sk = skeleton.normalized()
    m = Motion.create(motion.poses, motion.root_orientations,
                      motion.root_velocities * factor, motion.frame_rate)
    return sk, m


@dataclass(frozen=True)
class MotionDataset:
    windows: tuple  # of Motion, all with the same frame count
    skeleton: Skeleton
    window_length: int
    stride: int
    sources: tuple  # file identifiers
    skipped: int  # clips shorter than the window length

    @property
    def n_windows(self):
        return len(self.windows)


@dataclass(frozen=True)
class PoseDataset:
    poses: tuple  # of Pose, shuffled (no temporal adjacency)
    skeleton: Skeleton
    fraction: float
    seed: int

    @property
    def n_poses(self):
        return len(self.poses)

    def as_array(self):
        """(N, 6J) matrix of all poses."""
        if not self.poses:
            return np.zeros((0, self.skeleton.n_joints * 6))
        return np.stack([p.rotations.reshape(-1) for p in self.poses])


def check_same_skeleton(skeletons, names, tol=1e-5):
    """All skeletons must share topology and offsets within `tol`."""
    ref = skeletons[0]
    for sk, name in zip(skeletons[1:], names[1:]):
        if len(sk.joints) != len(ref.joints) or sk.parents() != ref.parents():
            raise ValidationError(
                f"skeleton mismatch between {names[0]!r} and {name!r}: different topology")
        if np.abs(sk.offsets() - ref.offsets()).max() > tol:
            raise ValidationError(
                f"skeleton mismatch between {names[0]!r} and {name!r}: offsets differ")


def build_motion_dataset(clips, window_length, stride, names=None):
    """Cut (skeleton, motion) clips into sliding windows.

    clips: list of (Skeleton, Motion); all must share one skeleton signature.
    Clips shorter than the window are skipped (counted in `skipped`).
    """
    if window_length < 2:
        raise ValidationError("window length must be >= 2")
    if stride < 1:
        raise ValidationError("stride must be >= 1")
    if not clips:
        raise ValidationError("no clips given")
    names = list(names) if names is not None else [f"clip{i}" for i in range(len(clips))]
    check_same_skeleton([sk for sk, _ in clips], names)
    skeleton = clips[0][0]
    windows = []
    skipped = 0
    for (_, motion), name in zip(clips, names):
        if motion.n_frames < window_length:
            warnings.warn(f"{name}: {motion.n_frames} frames < window {window_length}, skipped")
            skipped += 1
            continue
        n = (motion.n_frames - window_length) // stride + 1
        for k in range(n):
            windows.append(motion.window(k * stride, window_length))
    return MotionDataset(tuple(windows), skeleton, window_length, stride,
                         tuple(names), skipped)


def build_pose_dataset(clips, fraction, seed, names=None):
    """Pool all frames from all clips into a shuffled, subsampled pose set.

    Root transforms are discarded; order is shuffled by `seed`; the first
    ceil(fraction * N) poses are kept.  fraction=0 yields a valid empty set.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError(f"fraction must be in [0, 1], got {fraction}")
    if not clips:
        raise ValidationError("no clips given")
    names = list(names) if names is not None else [f"clip{i}" for i in range(len(clips))]
    check_same_skeleton([sk for sk, _ in clips], names)
    skeleton = clips[0][0]
    all_rows = np.concatenate([m.poses for _, m in clips], axis=0)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(all_rows))
    keep = int(np.ceil(fraction * len(all_rows)))
    rows = all_rows[order[:keep]]
    poses = tuple(Pose.create(r) for r in rows)
    return PoseDataset(poses, skeleton, float(fraction), int(seed))


def skeleton_hash(skeleton):
    payload = json.dumps(skeleton.signature()).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def motion_manifest(dataset):
    return {
        "kind": "motion_dataset",
        "skeleton_hash": skeleton_hash(dataset.skeleton),
        "window_length": dataset.window_length,
        "stride": dataset.stride,
        "n_windows": dataset.n_windows,
        "skipped_clips": dataset.skipped,
        "sources": list(dataset.sources),
    }


def pose_manifest(dataset):
    return {
        "kind": "pose_dataset",
        "skeleton_hash": skeleton_hash(dataset.skeleton),
        "n_poses": dataset.n_poses,
        "fraction": dataset.fraction,
        "seed": dataset.seed,
    }
