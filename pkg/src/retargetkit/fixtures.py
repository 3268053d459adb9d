"""Synthetic fixture corpus: two homeomorphic quadrupeds with stop-and-go gaits.

The gait alternates move segments (sinusoidal joint curves, constant root
speed) with plant segments in which every channel is frozen, so foot
velocities are *exactly* zero there and the contact schedule is analytic:
contact at velocity index m iff frame m+1 lies in a plant segment.
"""

import os
from dataclasses import dataclass, field, replace

import numpy as np

from .bvh import write_bvh
from .errors import ValidationError
from .rotations import axis_angle_to_matrix, matrix_to_rot6d, identity_rot6d
from .skeleton import Motion, Skeleton

EE_NAMES = ("head", "foot_fl", "foot_fr", "foot_bl", "foot_br")
FOOT_NAMES = ("foot_fl", "foot_fr", "foot_bl", "foot_br")


def source_skeleton():
    """8 joints: single-segment legs, short neck."""
    joints = [
        ("root", None, [0.0, 0.0, 0.0]),
        ("neck", 0, [0.20, 0.25, 0.0]),
        ("head", 1, [0.10, 0.15, 0.0]),
        ("foot_fl", 0, [0.25, -0.45, 0.12]),
        ("foot_fr", 0, [0.25, -0.45, -0.12]),
        ("foot_bl", 0, [-0.25, -0.45, 0.12]),
        ("foot_br", 0, [-0.25, -0.45, -0.12]),
        ("tail", 0, [-0.35, 0.05, 0.0]),
    ]
    names = [j[0] for j in joints]
    ee = tuple(names.index(n) for n in EE_NAMES)
    feet = tuple(names.index(n) for n in FOOT_NAMES)
    return Skeleton.create(joints, ee, feet)


def target_skeleton():
    """12 joints: two-segment legs, longer neck and tail, other proportions."""
    joints = [
        ("root", None, [0.0, 0.0, 0.0]),
        ("neck", 0, [0.25, 0.30, 0.0]),
        ("head", 1, [0.15, 0.20, 0.0]),
        ("leg_fl", 0, [0.30, -0.25, 0.15]),
        ("foot_fl", 3, [0.0, -0.35, 0.0]),
        ("leg_fr", 0, [0.30, -0.25, -0.15]),
        ("foot_fr", 5, [0.0, -0.35, 0.0]),
        ("leg_bl", 0, [-0.30, -0.25, 0.15]),
        ("foot_bl", 7, [0.0, -0.35, 0.0]),
        ("leg_br", 0, [-0.30, -0.25, -0.15]),
        ("foot_br", 9, [0.0, -0.35, 0.0]),
        ("tail", 0, [-0.45, 0.10, 0.0]),
    ]
    names = [j[0] for j in joints]
    ee = tuple(names.index(n) for n in EE_NAMES)
    feet = tuple(names.index(n) for n in FOOT_NAMES)
    return Skeleton.create(joints, ee, feet)


@dataclass(frozen=True)
class FixtureSpec:
    """Corpus parameters; end-effector name sets must match across skeletons."""

    n_source_clips: int = 6
    n_target_clips: int = 4
    cycles_per_clip: int = 5
    move_frames: int = 12
    plant_frames: int = 6
    frame_rate: float = 30.0
    root_speed: float = 0.02  # raw length units per frame, along +x
    source_end_effectors: tuple = EE_NAMES
    target_end_effectors: tuple = EE_NAMES

    @property
    def frames_per_clip(self):
        return self.cycles_per_clip * (self.move_frames + self.plant_frames)


def moving_frame_mask(spec, n_frames):
    """Boolean per frame: True during move segments."""
    cycle = spec.move_frames + spec.plant_frames
    t = np.arange(n_frames)
    return (t % cycle) < spec.move_frames


def plant_velocity_mask(spec, n_frames):
    """Analytic contact schedule over velocity indices 0..T-2.

    Velocity m spans frames m -> m+1 and is exactly zero iff frame m+1 is a
    plant frame (pose frozen and root gate closed).
    """
    moving = moving_frame_mask(spec, n_frames)
    return ~moving[1:]


def _gait_curves(skeleton, style, rng):
    """Per-joint (axis, base angle, amplitude, phase, frequency multiplier)."""
    curves = []
    for i, joint in enumerate(skeleton.joints):
        name = joint.name
        axis = np.array([0.0, 0.0, 1.0])
        base, amp, freq = 0.0, 0.0, 1.0
        phase = rng.uniform(0, 2 * np.pi)
        if name.startswith(("foot", "leg")):
            amp = 0.35
            # diagonal legs swing in antiphase
            phase = 0.0 if name.endswith(("fl", "br")) else np.pi
            phase += rng.uniform(-0.3, 0.3)
            base = style.get("leg_bend", 0.0)
        elif name in ("neck", "head"):
            amp = 0.12
            base = style.get("neck_bend", 0.0)
        elif name == "tail":
            amp = 0.25
            base = style.get("tail_bend", 0.0)
            axis = np.array([0.0, 1.0, 0.0])
        curves.append((i, axis, base, amp, phase, freq))
    return curves


def generate_clip(skeleton, spec, style, rng):
    """One stop-and-go clip on `skeleton`; exact frame repeats in plant phases."""
    t = spec.frames_per_clip
    moving = moving_frame_mask(spec, t)
    # gait progress advances only on moving frames; frozen frames repeat exactly
    progress = np.concatenate([[0.0], np.cumsum(moving[1:].astype(float))])
    curves = _gait_curves(skeleton, style, rng)

    poses = identity_rot6d((t, skeleton.n_joints))
    omega = 2 * np.pi / spec.move_frames
    for j, axis, base, amp, phase, freq in curves:
        if j == 0:
            continue  # root pose row stays identity (matches BVH round trip)
        angles = base + amp * np.sin(omega * freq * progress + phase)
        # frozen frames share a progress value, hence an identical rotation
        unique, inverse = np.unique(angles, return_inverse=True)
        mats = np.stack([axis_angle_to_matrix(axis, a) for a in unique])
        poses[:, j] = matrix_to_rot6d(mats)[inverse]

    root_ori = identity_rot6d((t,))
    vel = np.zeros((t, 3))
    # v(t) moves frame t to t+1: nonzero only when the next frame is moving
    gate = np.zeros(t)
    gate[:-1] = moving[1:].astype(float)
    vel[:, 0] = spec.root_speed * gate
    return Motion.create(poses, root_ori, vel, spec.frame_rate)


def fixture_clips(spec, seed):
    """In-memory corpus: (source clips, target clips) as (Skeleton, Motion) pairs."""
    if tuple(spec.source_end_effectors) != tuple(spec.target_end_effectors):
        raise ValidationError(
            "fixture skeletons are not homeomorphic: end-effector sets differ "
            f"({spec.source_end_effectors} vs {spec.target_end_effectors})")
    rng = np.random.default_rng(seed)
    src_sk = source_skeleton()
    tgt_sk = target_skeleton()
    src_style = {"leg_bend": 0.0, "neck_bend": 0.1, "tail_bend": 0.0}
    tgt_style = {"leg_bend": 0.45, "neck_bend": -0.35, "tail_bend": 0.5}
    source = [(src_sk, generate_clip(src_sk, spec, src_style, rng))
              for _ in range(spec.n_source_clips)]
    target = [(tgt_sk, generate_clip(tgt_sk, spec, tgt_style, rng))
              for _ in range(spec.n_target_clips)]
    return source, target


def generate_fixture_corpus(spec, seed, out_dir):
    """Write the corpus as BVH under out_dir/source and out_dir/target.

    Deterministic: the same (spec, seed) produces byte-identical files.
    """
    source, target = fixture_clips(spec, seed)
    paths = ([], [])
    for sub, clips, bucket in (("source", source, paths[0]), ("target", target, paths[1])):
        d = os.path.join(out_dir, sub)
        os.makedirs(d, exist_ok=True)
        for i, (sk, motion) in enumerate(clips):
            path = os.path.join(d, f"{sub}_{i:03d}.bvh")
            with open(path, "w") as f:
                f.write(write_bvh(sk, motion))
            bucket.append(path)
    return paths
