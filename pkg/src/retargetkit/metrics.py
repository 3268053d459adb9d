"""Evaluation metrics for retargeted motion.

Positional metrics are computed on height-normalized forward-kinematics
positions (positions divided by the skeleton height before any error is
taken) and scaled by 1000; jitter uses the third temporal difference scaled
by 100.  Contact consistency compares binary foot-contact labels.  The
precision/recall pair measures realism and coverage of a generated pose set
against a reference set via nearest-neighbor root-relative pose distances.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .kinematics import contact_labels, forward_kinematics
from .rotations import geodesic_angle, rot6d_to_matrix
from .skeleton import Motion


def _check_same_layout(retargeted, truth):
    if retargeted.n_joints != truth.n_joints:
        raise ShapeError(
            f"joint counts differ: {retargeted.n_joints} vs {truth.n_joints}")
    if retargeted.n_frames != truth.n_frames:
        raise ShapeError(
            f"frame counts differ: {retargeted.n_frames} vs {truth.n_frames}")


def joint_angle_error(retargeted, truth):
    """Mean geodesic joint rotation difference in degrees."""
    _check_same_layout(retargeted, truth)
    r_ret = rot6d_to_matrix(retargeted.poses)
    r_tru = rot6d_to_matrix(truth.poses)
    angles = geodesic_angle(r_tru, r_ret)
    # bitwise-equal encodings are the same rotation; keep the zero exact
    # despite round-off in the trace of R^T R
    angles[np.all(retargeted.poses == truth.poses, axis=-1)] = 0.0
    return float(np.degrees(angles).mean())


def _normalized_positions(skeleton, motion):
    return forward_kinematics(skeleton, motion) / skeleton.height


def _root_relative(skeleton, motion):
    """Positions in the per-frame root frame (translation and rotation removed)."""
    pos = _normalized_positions(skeleton, motion)
    arm = rot6d_to_matrix(motion.root_orientations)  # (T, 3, 3)
    centered = pos - pos[:, :1]
    return np.einsum("tba,tjb->tja", arm, centered)  # R^T applied per frame


def root_relative_pos_error(skeleton, retargeted, truth):
    """MSE of root-frame joint positions, height-normalized, x1000."""
    _check_same_layout(retargeted, truth)
    a = _root_relative(skeleton, retargeted)
    b = _root_relative(skeleton, truth)
    return float(((a - b) ** 2).mean() * 1000.0)


def global_pos_error(skeleton, retargeted, truth):
    """MSE of global joint positions, height-normalized, x1000."""
    _check_same_layout(retargeted, truth)
    a = _normalized_positions(skeleton, retargeted)
    b = _normalized_positions(skeleton, truth)
    return float(((a - b) ** 2).mean() * 1000.0)


def jitter(skeleton, motion):
    """Mean third-difference magnitude of global positions, normalized, x100."""
    if motion.n_frames < 4:
        raise ValidationError(f"jitter needs >= 4 frames, got {motion.n_frames}")
    pos = _normalized_positions(skeleton, motion)
    jerk = np.diff(pos, n=3, axis=0)
    return float(np.linalg.norm(jerk, axis=-1).mean() * 100.0)


def contact_consistency(ret_positions, ret_feet, ref_positions, ref_feet, eps):
    """Fraction of (frame, foot) pairs whose contact labels agree."""
    if len(ret_feet) != len(ref_feet) or not ret_feet:
        raise ValidationError(
            f"foot correspondence needs equal nonempty sets, "
            f"got {len(ret_feet)} and {len(ref_feet)}")
    a = contact_labels(ret_positions, list(ret_feet), eps)
    b = contact_labels(ref_positions, list(ref_feet), eps)
    if a.shape != b.shape:
        raise ShapeError(f"label shapes differ: {a.shape} vs {b.shape}")
    return float((a == b).mean())


@dataclass(frozen=True)
class MetricReport:
    """Per-clip metric rows plus frame-weighted means."""

    clips: tuple  # dicts: name, frames, angle, root_relative, global, jitter, contact
    means: dict  # frame-weighted means of the five metrics
    clip_means: dict  # unweighted per-clip means (secondary convention)
    n_clips: int
    n_frames: int

    COLUMNS = ("angle_deg", "root_relative_x1000", "global_x1000",
               "jitter_x100", "contact_consistency")


def metric_report(skeleton, retargeted, reference, eps, names=None):
    """Evaluate paired clips on one skeleton and aggregate.

    retargeted/reference: equal-length lists of Motions with matching frame
    counts.  Contact labels compare the two clips' own feet.
    """
    if len(retargeted) != len(reference) or not retargeted:
        raise ValidationError(
            f"need equal nonempty clip lists, got {len(retargeted)} "
            f"and {len(reference)}")
    names = list(names) if names is not None else [
        f"clip{i}" for i in range(len(retargeted))]
    rows = []
    for name, ret, ref in zip(names, retargeted, reference):
        pos_ret = forward_kinematics(skeleton, ret)
        pos_ref = forward_kinematics(skeleton, ref)
        rows.append({
            "name": name,
            "frames": ret.n_frames,
            "angle_deg": joint_angle_error(ret, ref),
            "root_relative_x1000": root_relative_pos_error(skeleton, ret, ref),
            "global_x1000": global_pos_error(skeleton, ret, ref),
            "jitter_x100": jitter(skeleton, ret),
            "contact_consistency": contact_consistency(
                pos_ret, skeleton.feet, pos_ref, skeleton.feet, eps),
        })
    total = sum(r["frames"] for r in rows)
    means = {c: sum(r[c] * r["frames"] for r in rows) / total
             for c in MetricReport.COLUMNS}
    clip_means = {c: float(np.mean([r[c] for r in rows]))
                  for c in MetricReport.COLUMNS}
    return MetricReport(tuple(rows), means, clip_means, len(rows), total)


# ---------------------------------------------------------------------------
# precision / recall


@dataclass(frozen=True)
class PRCurve:
    epsilons: tuple
    precision: tuple
    recall: tuple
    k: int  # number of generated samples scored


def pose_distance_matrix(skeleton, poses_a, poses_b):
    """Pairwise root-relative position distance between two pose sets.

    poses: (N, J, 6) rotation arrays.  Each pose is placed at the origin
    with identity armature, so the distance is the mean squared difference
    of height-normalized FK positions.
    """
    def positions(poses):
        t = len(poses)
        motion = Motion.create(
            np.asarray(poses), np.tile([1.0, 0, 0, 0, 1, 0], (t, 1)),
            np.zeros((t, 3)))
        return forward_kinematics(skeleton, motion) / skeleton.height

    pa = positions(poses_a)  # (N, J, 3)
    pb = positions(poses_b)  # (M, J, 3)
    diff = pa[:, None] - pb[None]  # (N, M, J, 3)
    return (diff ** 2).mean(axis=(2, 3))


def default_epsilon_grid(distances, n=64):
    """Log-spaced grid spanning the observed nearest-neighbor distances."""
    positive = distances[distances > 0]
    if positive.size == 0:
        return np.array([1e-12])
    lo, hi = positive.min(), distances.max()
    return np.geomspace(max(lo * 0.5, 1e-15), hi * 1.05, n)


def precision_recall(skeleton, generated, reference, epsilons=None):
    """Nearest-neighbor precision/recall curves over a threshold grid.

    precision(eps): fraction of generated poses whose nearest reference pose
    lies within eps; recall(eps): fraction of reference poses whose nearest
    generated pose lies within eps.  Brute-force scan.
    """
    generated = np.asarray(generated)
    reference = np.asarray(reference)
    if len(generated) == 0 or len(reference) == 0:
        raise ValidationError("precision/recall needs nonempty pose sets")
    d = pose_distance_matrix(skeleton, generated, reference)
    nn_gen = d.min(axis=1)  # per generated pose
    nn_ref = d.min(axis=0)  # per reference pose
    if epsilons is None:
        epsilons = default_epsilon_grid(np.concatenate([nn_gen, nn_ref]))
    epsilons = np.asarray(epsilons, dtype=float)
    precision = tuple(float((nn_gen <= e).mean()) for e in epsilons)
    recall = tuple(float((nn_ref <= e).mean()) for e in epsilons)
    return PRCurve(tuple(float(e) for e in epsilons), precision, recall,
                   len(generated))


# ---------------------------------------------------------------------------
# frame-level baseline


def baseline_frame_copy(source_motion, source_skeleton, target_skeleton,
                        pose_mapper=None):
    """Per-frame baseline: scale the root velocity, copy the root rotation.

    The root velocity is scaled by the height ratio, the armature rotation
    is copied unchanged, and each frame's pose is mapped independently by
    `pose_mapper` ((J_S, 6) -> (J_T, 6)); identity when the skeletons match.
    """
    if pose_mapper is None:
        if source_skeleton.n_joints != target_skeleton.n_joints:
            raise ValidationError(
                "identity pose mapping needs equal joint counts, got "
                f"{source_skeleton.n_joints} and {target_skeleton.n_joints}")
        pose_mapper = lambda pose: pose
    mapped = np.stack([np.asarray(pose_mapper(p)) for p in source_motion.poses])
    if mapped.shape[1:] != (target_skeleton.n_joints, 6):
        raise ShapeError(
            f"pose mapper produced {mapped.shape[1:]}, expected "
            f"({target_skeleton.n_joints}, 6)")
    ratio = target_skeleton.height / source_skeleton.height
    return Motion.create(mapped, source_motion.root_orientations,
                         source_motion.root_velocities * ratio,
                         source_motion.frame_rate)
