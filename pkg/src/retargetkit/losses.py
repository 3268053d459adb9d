"""Training objectives.

The cycle objective pairs a Wasserstein adversarial term (pose critics on
generated frames, a patch critic on reconstructed windows) with an L2
reconstruction term.  Three kinematic regularizers shape the root prediction
indirectly: a contact term that pins target feet wherever the source feet
are planted, and end-effector velocity/offset matching terms normalized by
each skeleton's root-to-end-effector chain length so they cancel under
uniform scaling.

All losses return scalar graph nodes so they can be mixed and
backpropagated through the networks and differentiable kinematics.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, ShapeError, ValidationError


@dataclass(frozen=True)
class LossWeights:
    """Nonnegative weights of the total objective."""

    cycle: float = 1.0
    recon: float = 10.0
    gp: float = 10.0
    contact: float = 5.0
    ee_velocity: float = 2.0
    ee_offset: float = 2.0
    gan: float = 1.0  # scales both adversarial terms; 0 disables the critics

    def __post_init__(self):
        vals = (self.cycle, self.recon, self.gp, self.contact,
                self.ee_velocity, self.ee_offset, self.gan)
        if any(v < 0 for v in vals):
            raise ValidationError(f"loss weights must be nonnegative, got {vals}")
        if not any(v > 0 for v in vals):
            raise ValidationError("at least one loss weight must be positive")


def _node(x):
    return x if isinstance(x, ad.DiffNode) else ad.leaf(np.asarray(x, dtype=float))


def reconstruction_loss(reconstructed, original):
    """Mean squared entrywise difference."""
    reconstructed, original = _node(reconstructed), _node(original)
    if reconstructed.value.shape != original.value.shape:
        raise ShapeError(
            f"reconstruction shapes differ: {reconstructed.value.shape} "
            f"vs {original.value.shape}")
    diff = ad.sub(reconstructed, original)
    return ad.mean(ad.mul(diff, diff))


def wgan_losses(real_scores, fake_scores):
    """(critic loss, generator loss) for unbounded Wasserstein scores."""
    real_scores, fake_scores = _node(real_scores), _node(fake_scores)
    critic = ad.sub(ad.mean(fake_scores), ad.mean(real_scores))
    generator = ad.neg(ad.mean(fake_scores))
    return critic, generator


def gradient_penalty(critic_fn, real, fake, rng):
    """mean((||grad_x critic(x_hat)|| - 1)^2) at x_hat between real and fake.

    x_hat mixes each sample pair with its own u ~ U(0, 1) drawn from `rng`.
    The critic's total score is differentiated with respect to x_hat and the
    norm is taken per sample over all remaining axes.  The result is a graph
    node, so the penalty itself backpropagates into the critic parameters.
    """
    real = np.asarray(real, dtype=float)
    fake = np.asarray(fake, dtype=float)
    if real.shape != fake.shape:
        raise ShapeError(f"penalty batches differ: {real.shape} vs {fake.shape}")
    n = real.shape[0]
    u = rng.uniform(size=(n,) + (1,) * (real.ndim - 1))
    xhat = ad.leaf(u * real + (1.0 - u) * fake)
    scores = critic_fn(xhat)
    (grad,) = ad.gradient_nodes(ad.sum_(scores), wrt=[xhat])
    flat = ad.reshape(grad, (n, int(np.prod(real.shape[1:]))))
    norms = ad.norm2(flat, axis=-1)
    dev = ad.sub(norms, ad.leaf(np.ones(n)))
    return ad.mean(ad.mul(dev, dev))


def contact_loss(foot_velocities, source_labels):
    """Squared target foot speed wherever the source foot is in contact.

    foot_velocities: (T-1, F, 3) node of the retargeted motion's foot
    velocities; source_labels: (T-1, F) binary contact labels from the
    source.  Normalized by the total (frame, foot) count, so a single
    contact frame with unit foot speed contributes 1 / ((T-1) * F).
    """
    foot_velocities = _node(foot_velocities)
    labels = np.asarray(source_labels, dtype=float)
    t, f = labels.shape
    if foot_velocities.value.shape[:2] != (t, f):
        raise ShapeError(
            f"foot velocities {foot_velocities.value.shape} do not match "
            f"labels {labels.shape}")
    sq = ad.sum_(ad.mul(foot_velocities, foot_velocities), axis=-1)
    gated = ad.mul(sq, ad.constant(labels))
    return ad.scale(ad.sum_(gated), 1.0 / (t * f))


def _ee_chain_scales(skeleton):
    h = [skeleton.chain_lengths[e] for e in skeleton.end_effectors]
    if any(v <= 0 for v in h):
        raise ConfigError("nonpositive end-effector chain length")
    return np.array(h)


def _check_ee_pair(target_skeleton, source_skeleton):
    nt, ns = len(target_skeleton.end_effectors), len(source_skeleton.end_effectors)
    if nt != ns or nt == 0:
        raise ConfigError(
            f"end-effector correspondence needs equal nonempty sets, got {nt} and {ns}")


def _ee_normalized(values, skeleton):
    """Divide each end-effector's vectors by its chain length."""
    ee = list(skeleton.end_effectors)
    scales = 1.0 / _ee_chain_scales(skeleton)
    picked = values if values.value.shape[1] == len(ee) else ad.take(values, ee, axis=1)
    return ad.mul(picked, ad.constant(scales[None, :, None]))


def ee_velocity_loss(target_velocities, source_velocities,
                     target_skeleton, source_skeleton):
    """Chain-length-normalized end-effector velocity matching.

    Inputs are (T-1, J, 3) joint velocities (or already restricted to the
    end-effector columns).  End-effector k of one skeleton corresponds to
    end-effector k of the other; each is normalized by its own root chain
    length, which makes the loss exactly zero for uniformly scaled pairs.
    """
    _check_ee_pair(target_skeleton, source_skeleton)
    a = _ee_normalized(_node(target_velocities), target_skeleton)
    b = _ee_normalized(_node(source_velocities), source_skeleton)
    diff = ad.sub(a, b)
    return ad.mean(ad.sum_(ad.mul(diff, diff), axis=-1))


def ee_offset_loss(target_positions, source_positions,
                   target_skeleton, source_skeleton,
                   target_rest, source_rest):
    """Chain-length-normalized end-effector offsets from the rest pose.

    positions: (T, J, 3); rest: (J, 3) rest-pose positions.  The offset of
    end-effector j is its position minus its rest position.
    """
    _check_ee_pair(target_skeleton, source_skeleton)
    o_t = ad.sub(_node(target_positions), ad.constant(np.asarray(target_rest)[None]))
    o_s = ad.sub(_node(source_positions), ad.constant(np.asarray(source_rest)[None]))
    a = _ee_normalized(o_t, target_skeleton)
    b = _ee_normalized(o_s, source_skeleton)
    diff = ad.sub(a, b)
    return ad.mean(ad.sum_(ad.mul(diff, diff), axis=-1))


def total_loss(parts, weights):
    """Weighted generator objective.

    parts: dict with scalar nodes under keys 'adv_pose', 'adv_motion',
    'recon', 'contact', 'ee_velocity', 'ee_offset' (missing keys count as
    zero).  The cycle term is gan * (adv_pose + adv_motion) + recon_weight *
    recon, scaled by the cycle weight; the three kinematic terms add with
    their own weights.  Critic gradient penalties belong to the critic
    objectives, not here.
    """
    known = {"adv_pose", "adv_motion", "recon", "contact", "ee_velocity", "ee_offset"}
    unknown = set(parts) - known
    if unknown:
        raise ValidationError(f"unknown loss parts: {sorted(unknown)}")

    def get(key):
        return _node(parts[key]) if key in parts else None

    zero = ad.leaf(np.array(0.0))
    cycle = zero
    for key, w in (("adv_pose", weights.gan), ("adv_motion", weights.gan),
                   ("recon", weights.recon)):
        part = get(key)
        if part is not None and w > 0:
            cycle = ad.add(cycle, ad.scale(part, w))
    total = ad.scale(cycle, weights.cycle)
    for key, w in (("contact", weights.contact),
                   ("ee_velocity", weights.ee_velocity),
                   ("ee_offset", weights.ee_offset)):
        part = get(key)
        if part is not None and w > 0:
            total = ad.add(total, ad.scale(part, w))
    return total
