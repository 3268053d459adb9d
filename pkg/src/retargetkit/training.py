"""Adversarial training loop for the motion-to-pose-domain transfer model.

One training step runs three phases:

1. Pose critic: scores every frame the translator generates against poses
   sampled from the target pose set; Wasserstein loss plus gradient penalty.
2. Motion critic: scores reconstructed source windows (through the full
   cycle) against real source windows, patch-wise, same objective.
3. Generator: both translators update on the weighted sum of the adversarial
   terms, the cycle reconstruction error, and the kinematic regularizers
   (contact pinning, end-effector velocity and offset matching) computed
   through differentiable forward kinematics.

Critic parameters and generator parameters live in disjoint dictionaries
and only their own phase updates them.  Everything is driven by one seeded
random generator, so a (config, seed) pair reproduces its loss history
bit for bit.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import topology as topo
from .checkpoint import join_prefix, load_arrays, save_arrays, split_prefix
from .diffkin import forward_kinematics_nodes, joint_velocities_nodes
from .errors import NumericalError, ValidationError
from .kinematics import contact_labels, forward_kinematics, joint_velocities, rest_pose_positions
from .losses import (
    LossWeights,
    contact_loss,
    ee_offset_loss,
    ee_velocity_loss,
    gradient_penalty,
    reconstruction_loss,
    total_loss,
    wgan_losses,
)
from .networks import ArchConfig, MotionCritic, PoseCritic, SkeletalTranslator, split_generator_output
from .optim import AdamState, adam_step
from .rotations import identity_rot6d

HISTORY_COLUMNS = (
    "step", "total", "recon", "adv_pose", "adv_motion",
    "contact", "ee_velocity", "ee_offset",
    "critic_pose", "critic_motion", "gp_pose", "gp_motion",
)


@dataclass(frozen=True)
class TrainSettings:
    """Loop hyperparameters (architecture and weights ride along)."""

    steps: int = 1000
    batch_windows: int = 4
    batch_poses: int = 64
    n_critic: int = 5
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    contact_eps: float = 0.006
    seed: int = 0
    checkpoint_every: int = 500
    weights: LossWeights = field(default_factory=LossWeights)
    arch: ArchConfig = field(default_factory=ArchConfig)


@dataclass
class TrainState:
    generator_params: dict  # G and F parameters, key-prefixed g./f.
    pose_critic_params: dict
    motion_critic_params: dict
    generator_opt: AdamState
    pose_critic_opt: AdamState
    motion_critic_opt: AdamState
    step: int
    history: list  # rows matching HISTORY_COLUMNS


class Trainer:
    """Holds the model quartet plus cached per-window source quantities."""

    def __init__(self, motion_dataset, pose_dataset, settings):
        self.settings = settings
        self.source_skeleton = motion_dataset.skeleton
        self.target_skeleton = pose_dataset.skeleton
        if pose_dataset.n_poses == 0 and settings.weights.gan > 0:
            raise ValidationError(
                "target pose set is empty; only allowed when the adversarial "
                "weight is zero")
        src_topo = topo.from_skeleton(self.source_skeleton)
        tgt_topo = topo.from_skeleton(self.target_skeleton)
        self.g = SkeletalTranslator("g", src_topo, tgt_topo, settings.arch)
        self.f = SkeletalTranslator("f", tgt_topo, src_topo, settings.arch)
        self.d_pose = PoseCritic("dp", self.target_skeleton.n_joints, settings.arch)
        self.d_motion = MotionCritic("dm", src_topo, settings.arch)
        self.n_target_joints = self.target_skeleton.n_joints

        self.windows = motion_dataset.windows
        self.window_length = motion_dataset.window_length
        self.window_arrays = np.stack([w.flattened() for w in self.windows])
        self.pose_array = pose_dataset.as_array()

        # per-window source-side quantities the losses compare against
        self.src_positions = []
        self.src_velocities = []
        self.src_contact = []
        feet = list(self.source_skeleton.feet)
        for w in self.windows:
            pos = forward_kinematics(self.source_skeleton, w)
            self.src_positions.append(pos)
            self.src_velocities.append(joint_velocities(pos))
            self.src_contact.append(
                contact_labels(pos, feet, settings.contact_eps))
        self.src_rest = rest_pose_positions(self.source_skeleton)
        self.tgt_rest = rest_pose_positions(self.target_skeleton)
        self.tgt_feet = list(self.target_skeleton.feet)

    def init_state(self):
        s = self.settings
        rng = np.random.default_rng(s.seed)
        gen = {}
        gen.update(self.g.init(rng))
        gen.update(self.f.init(rng))
        # bias the pose heads toward identity rotations so early samples decode
        for name, translator in (("g", self.g), ("f", self.f)):
            ident = identity_rot6d(())
            for j in range(translator.out_topology.n_nodes - 1):
                gen[f"{name}.head.n{j}.b"] = gen[f"{name}.head.n{j}.b"] + ident
            arm = translator.out_topology.n_nodes - 1
            bias = gen[f"{name}.head.n{arm}.b"].copy()
            bias[:6] += ident
            gen[f"{name}.head.n{arm}.b"] = bias

        def opt():
            return AdamState(learning_rate=s.learning_rate,
                             beta1=s.beta1, beta2=s.beta2)

        return TrainState(gen, self.d_pose.init(rng), self.d_motion.init(rng),
                          opt(), opt(), opt(), 0, [])

    # -- forward helpers ----------------------------------------------------

    def _forward_cycle(self, gen_params, batch):
        """G then F on a (B, T, D_src) batch of source windows (graph nodes)."""
        translated = self.g.apply(gen_params, batch)
        reconstructed = self.f.apply(gen_params, translated)
        return translated, reconstructed

    def _target_motion_nodes(self, translated, b):
        """Pose/orientation/velocity nodes of window b of the translated batch."""
        t = self.window_length
        j = self.n_target_joints
        row = ad.take_slice(translated, (slice(b, b + 1),))
        row = ad.reshape(row, (t, 6 * j + 9))
        poses = ad.reshape(
            ad.take_slice(row, (slice(None), slice(0, 6 * j))), (t, j, 6))
        ori = ad.take_slice(row, (slice(None), slice(6 * j, 6 * j + 6)))
        vel = ad.take_slice(row, (slice(None), slice(6 * j + 6, 6 * j + 9)))
        return poses, ori, vel

    def _generator_losses(self, gen_params, batch, idx,
                          pose_critic_params, motion_critic_params):
        s = self.settings
        w = s.weights
        translated, reconstructed = self._forward_cycle(gen_params, batch)
        parts = {"recon": reconstruction_loss(reconstructed, ad.constant(batch))}

        if w.gan > 0:
            flat_poses = ad.reshape(
                ad.take_slice(translated,
                              (slice(None), slice(None),
                               slice(0, 6 * self.n_target_joints))),
                (batch.shape[0] * self.window_length, 6 * self.n_target_joints))
            _, adv_pose = wgan_losses(
                np.zeros(1), self.d_pose.apply(pose_critic_params, flat_poses))
            _, adv_motion = wgan_losses(
                np.zeros(1), self.d_motion.apply(motion_critic_params, reconstructed))
            parts["adv_pose"] = adv_pose
            parts["adv_motion"] = adv_motion

        if w.contact > 0 or w.ee_velocity > 0 or w.ee_offset > 0:
            con, eev, eer = [], [], []
            for b, k in enumerate(idx):
                poses, ori, vel = self._target_motion_nodes(translated, b)
                pos = forward_kinematics_nodes(self.target_skeleton, poses, ori, vel)
                vels = joint_velocities_nodes(pos)
                if w.contact > 0:
                    foot_v = ad.take(vels, self.tgt_feet, axis=1)
                    con.append(contact_loss(foot_v, self.src_contact[k]))
                if w.ee_velocity > 0:
                    eev.append(ee_velocity_loss(
                        vels, self.src_velocities[k],
                        self.target_skeleton, self.source_skeleton))
                if w.ee_offset > 0:
                    eer.append(ee_offset_loss(
                        pos, self.src_positions[k],
                        self.target_skeleton, self.source_skeleton,
                        self.tgt_rest, self.src_rest))

            def avg(nodes):
                acc = nodes[0]
                for n in nodes[1:]:
                    acc = ad.add(acc, n)
                return ad.scale(acc, 1.0 / len(nodes))

            if con:
                parts["contact"] = avg(con)
            if eev:
                parts["ee_velocity"] = avg(eev)
            if eer:
                parts["ee_offset"] = avg(eer)
        return parts

    # -- training -----------------------------------------------------------

    def _critic_step(self, critic, params, opt, real, fake, rng):
        """One Wasserstein critic update; returns (params, critic loss, gp)."""
        nodes = {k: ad.leaf(v) for k, v in params.items()}
        real_scores = critic.apply(nodes, real)
        fake_scores = critic.apply(nodes, fake)
        critic_loss, _ = wgan_losses(real_scores, fake_scores)
        gp = gradient_penalty(lambda x: critic.apply(nodes, x), real, fake, rng)
        loss = ad.add(critic_loss, ad.scale(gp, self.settings.weights.gp))
        ad.backward(loss)
        grads = {k: (n.grad if n.grad is not None else np.zeros_like(n.value))
                 for k, n in nodes.items()}
        return adam_step(params, grads, opt), critic_loss.value, gp.value

    def run(self, state, steps=None, on_step=None):
        """Advance `state` by `steps` training steps (mutating it)."""
        s = self.settings
        steps = s.steps if steps is None else steps
        rng = np.random.default_rng((s.seed, state.step, 0xC0FFEE))
        n_windows = len(self.windows)
        for _ in range(steps):
            idx = rng.integers(0, n_windows, size=s.batch_windows)
            batch = self.window_arrays[idx]
            crit_pose = crit_motion = gp_pose = gp_motion = 0.0

            if s.weights.gan > 0:
                gen_nodes = {k: ad.constant(v)
                             for k, v in state.generator_params.items()}
                translated, reconstructed = self._forward_cycle(gen_nodes, batch)
                fake_poses = translated.value[:, :, :6 * self.n_target_joints]
                fake_poses = fake_poses.reshape(-1, 6 * self.n_target_joints)
                fake_motion = reconstructed.value
                for _ in range(s.n_critic):
                    take = rng.integers(0, len(self.pose_array), size=s.batch_poses)
                    real_poses = self.pose_array[take]
                    pick = rng.integers(0, len(fake_poses),
                                        size=min(s.batch_poses, len(fake_poses)))
                    state.pose_critic_params, crit_pose, gp_pose = self._critic_step(
                        self.d_pose, state.pose_critic_params,
                        state.pose_critic_opt, real_poses, fake_poses[pick], rng)
                    real_idx = rng.integers(0, n_windows, size=s.batch_windows)
                    state.motion_critic_params, crit_motion, gp_motion = self._critic_step(
                        self.d_motion, state.motion_critic_params,
                        state.motion_critic_opt,
                        self.window_arrays[real_idx], fake_motion, rng)

            gen_nodes = {k: ad.leaf(v) for k, v in state.generator_params.items()}
            parts = self._generator_losses(
                gen_nodes, batch, idx,
                {k: ad.constant(v) for k, v in state.pose_critic_params.items()},
                {k: ad.constant(v) for k, v in state.motion_critic_params.items()})
            loss = total_loss(parts, s.weights)
            if not np.isfinite(loss.value):
                raise NumericalError(
                    f"non-finite training loss at step {state.step + 1}")
            ad.backward(loss)
            grads = {k: (n.grad if n.grad is not None else np.zeros_like(n.value))
                     for k, n in gen_nodes.items()}
            state.generator_params = adam_step(
                state.generator_params, grads, state.generator_opt)

            state.step += 1
            row = {
                "step": state.step,
                "total": float(loss.value),
                "recon": float(parts["recon"].value),
                "adv_pose": float(parts["adv_pose"].value) if "adv_pose" in parts else 0.0,
                "adv_motion": float(parts["adv_motion"].value) if "adv_motion" in parts else 0.0,
                "contact": float(parts["contact"].value) if "contact" in parts else 0.0,
                "ee_velocity": float(parts["ee_velocity"].value) if "ee_velocity" in parts else 0.0,
                "ee_offset": float(parts["ee_offset"].value) if "ee_offset" in parts else 0.0,
                "critic_pose": float(crit_pose),
                "critic_motion": float(crit_motion),
                "gp_pose": float(gp_pose),
                "gp_motion": float(gp_motion),
            }
            state.history.append(row)
            if on_step is not None:
                on_step(state, row)
        return state

    def translate(self, state, motion):
        """Retarget one source Motion through the trained translator."""
        from .skeleton import Motion
        arr = motion.flattened()[None]
        out = self.g.apply(
            {k: ad.constant(v) for k, v in state.generator_params.items()},
            arr).value[0]
        return Motion.from_flattened(out, self.n_target_joints, motion.frame_rate)


def history_csv(history):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=HISTORY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in history:
        writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k]
                         for k in HISTORY_COLUMNS})
    return buf.getvalue()


def save_train_state(path, state):
    arrays = {}
    arrays.update(join_prefix(state.generator_params, "gen"))
    arrays.update(join_prefix(state.pose_critic_params, "dp"))
    arrays.update(join_prefix(state.motion_critic_params, "dm"))
    for prefix, opt in (("opt_gen", state.generator_opt),
                        ("opt_dp", state.pose_critic_opt),
                        ("opt_dm", state.motion_critic_opt)):
        arrays.update(join_prefix(opt.m, f"{prefix}.m"))
        arrays.update(join_prefix(opt.v, f"{prefix}.v"))
        arrays[f"{prefix}.meta"] = np.array(
            [opt.learning_rate, opt.beta1, opt.beta2, opt.eps, opt.step])
    arrays["step"] = np.array(state.step)
    save_arrays(path, arrays)


def load_train_state(path):
    arrays = load_arrays(path)

    def opt(prefix):
        meta = arrays[f"{prefix}.meta"]
        return AdamState(
            learning_rate=float(meta[0]), beta1=float(meta[1]),
            beta2=float(meta[2]), eps=float(meta[3]), step=int(meta[4]),
            m=split_prefix(arrays, f"{prefix}.m"),
            v=split_prefix(arrays, f"{prefix}.v"))

    return TrainState(
        split_prefix(arrays, "gen"), split_prefix(arrays, "dp"),
        split_prefix(arrays, "dm"),
        opt("opt_gen"), opt("opt_dp"), opt("opt_dm"),
        int(arrays["step"]), [])
