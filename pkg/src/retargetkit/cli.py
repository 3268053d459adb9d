"""Command-line pipeline: fixtures, prepare, train, retarget, evaluate, pr, baseline.

All commands read one YAML run configuration (see `config`) and write their
artifacts under its output directory.  Exit codes: 0 success, 1 validation
or configuration problem, 2 runtime failure, 3 numerical failure during
training (the last good checkpoint path is printed).
"""

import glob
import json
import logging
import os
import sys

import click
import numpy as np

from .bvh import parse_bvh, write_bvh
from .config import load_config, save_resolved_config
from .datasets import (
    annotate_skeleton,
    build_motion_dataset,
    build_pose_dataset,
    motion_manifest,
    normalize_pair,
    pose_manifest,
)
from .errors import (
    BVHParseError,
    CheckpointError,
    ConfigError,
    NumericalError,
    RetargetError,
    ValidationError,
)
from .fixtures import FixtureSpec, generate_fixture_corpus
from .metrics import baseline_frame_copy, metric_report, precision_recall
from .report import (
    emit_metric_report,
    render_history_figure,
    render_pr_figure,
    write_pr_csv,
)
from .skeleton import Motion
from .training import Trainer, history_csv, load_train_state, save_train_state

log = logging.getLogger("retargetkit")


def _setup_logging():
    level = os.environ.get("RETARGETKIT_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(message)s")


def _exit_with(exc):
    if isinstance(exc, (ConfigError, ValidationError, BVHParseError)):
        log.error("validation error: %s", exc)
        sys.exit(1)
    if isinstance(exc, NumericalError):
        log.error("numerical failure: %s", exc)
        sys.exit(3)
    if isinstance(exc, (RetargetError, OSError)):
        log.error("runtime error: %s", exc)
        sys.exit(2)
    raise exc


def _guarded(fn):
    def wrapper(*args, **kwargs):
        _setup_logging()
        try:
            fn(*args, **kwargs)
        except SystemExit:
            raise
        except Exception as exc:
            _exit_with(exc)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _load_clips(directory, ee_names, feet_names):
    """Parse, annotate, and height-normalize every .bvh file in a directory."""
    paths = sorted(glob.glob(os.path.join(directory, "*.bvh")))
    if not paths:
        raise ValidationError(f"no .bvh files in {directory}")
    clips, names, failures = [], [], []
    for path in paths:
        try:
            with open(path) as f:
                sk, motion = parse_bvh(f.read())
            sk = annotate_skeleton(sk, ee_names, feet_names, normalize=False)
            clips.append(normalize_pair(sk, motion))
            names.append(os.path.basename(path))
        except RetargetError as exc:
            failures.append(f"{path}: {exc}")
    if failures:
        raise ValidationError("failed to load:\n  " + "\n  ".join(failures))
    return clips, names


def _datasets(cfg):
    sc = cfg.skeleton
    source, src_names = _load_clips(cfg.source_dir, sc.source_end_effectors,
                                    sc.source_feet)
    target, tgt_names = _load_clips(cfg.target_dir, sc.target_end_effectors,
                                    sc.target_feet)
    motion = build_motion_dataset(source, cfg.data.window_length,
                                  cfg.data.stride, names=src_names)
    poses = build_pose_dataset(target, cfg.data.pose_fraction,
                               cfg.data.pose_seed, names=tgt_names)
    return motion, poses, source, target


def _trainer(cfg):
    motion, poses, source, target = _datasets(cfg)
    return Trainer(motion, poses, cfg.train_settings()), motion, poses, source


def _checkpoint_path(cfg, override):
    return override or os.path.join(cfg.output_dir, "train_state.npz")


@click.group()
def main():
    """Motion-domain to pose-domain retargeting pipeline."""


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--source-clips", default=6, show_default=True)
@click.option("--target-clips", default=4, show_default=True)
@click.option("--cycles", default=5, show_default=True)
@_guarded
def fixtures(out, seed, source_clips, target_clips, cycles):
    """Generate the synthetic quadruped corpus as BVH files."""
    spec = FixtureSpec(n_source_clips=source_clips, n_target_clips=target_clips,
                       cycles_per_clip=cycles)
    src, tgt = generate_fixture_corpus(spec, seed, out)
    log.info("wrote %d source and %d target clips under %s",
             len(src), len(tgt), out)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@_guarded
def prepare(config_path):
    """Build datasets from the configured BVH directories; write manifests."""
    cfg = load_config(config_path)
    motion, poses, _, _ = _datasets(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    for name, manifest in (("motion_manifest.json", motion_manifest(motion)),
                           ("pose_manifest.json", pose_manifest(poses))):
        with open(os.path.join(cfg.output_dir, name), "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
    log.info("%d windows, %d poses", motion.n_windows, poses.n_poses)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@_guarded
def train(config_path):
    """Train the model; writes checkpoints, loss history, resolved config."""
    cfg = load_config(config_path)
    trainer, _, _, _ = _trainer(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    save_resolved_config(os.path.join(cfg.output_dir, "resolved_config.yaml"), cfg)
    state = trainer.init_state()
    final_path = _checkpoint_path(cfg, None)
    last_good = {"path": None}

    def on_step(st, row):
        if st.step % cfg.training.checkpoint_every == 0:
            path = os.path.join(cfg.output_dir, f"checkpoint_{st.step:06d}.npz")
            save_train_state(path, st)
            last_good["path"] = path
            log.info("step %d: total %.6f recon %.6f", st.step,
                     row["total"], row["recon"])

    try:
        trainer.run(state, on_step=on_step)
    except NumericalError as exc:
        if last_good["path"]:
            log.error("last good checkpoint: %s", last_good["path"])
        raise exc
    finally:
        with open(os.path.join(cfg.output_dir, "history.csv"), "w") as f:
            f.write(history_csv(state.history))
        if state.history:
            render_history_figure(os.path.join(cfg.output_dir, "losses.png"),
                                  state.history)
    save_train_state(final_path, state)
    log.info("trained %d steps; final state at %s", state.step, final_path)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--checkpoint", default=None, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@_guarded
def retarget(config_path, checkpoint, out):
    """Translate every source clip into the target domain; write BVH files."""
    cfg = load_config(config_path)
    trainer, _, _, source = _trainer(cfg)
    state = load_train_state(_checkpoint_path(cfg, checkpoint))
    out_dir = out or os.path.join(cfg.output_dir, "retargeted")
    os.makedirs(out_dir, exist_ok=True)
    tgt_sk = trainer.target_skeleton
    for i, (sk, motion) in enumerate(source):
        translated = trainer.translate(state, motion)
        path = os.path.join(out_dir, f"retargeted_{i:03d}.bvh")
        with open(path, "w") as f:
            f.write(write_bvh(tgt_sk, translated))
    log.info("wrote %d retargeted clips to %s", len(source), out_dir)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--retargeted", "ret_dir", required=True, type=click.Path())
@click.option("--reference", "ref_dir", required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@_guarded
def evaluate(config_path, ret_dir, ref_dir, out):
    """Paired metric report between two BVH sets on the target skeleton."""
    cfg = load_config(config_path)
    sc = cfg.skeleton
    ret, ret_names = _load_clips(ret_dir, sc.target_end_effectors, sc.target_feet)
    ref, _ = _load_clips(ref_dir, sc.target_end_effectors, sc.target_feet)
    if len(ret) != len(ref):
        raise ValidationError(
            f"clip counts differ: {len(ret)} retargeted vs {len(ref)} reference")
    skeleton = ret[0][0]
    report = metric_report(skeleton, [m for _, m in ret], [m for _, m in ref],
                           eps=cfg.training.contact_eps, names=ret_names)
    paths = emit_metric_report(out or cfg.output_dir, report)
    log.info("metric report: %s", paths["csv"])


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--retargeted", "ret_dir", required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@_guarded
def pr(config_path, ret_dir, out):
    """Precision/recall of retargeted poses against the target pose set."""
    cfg = load_config(config_path)
    sc = cfg.skeleton
    ret, _ = _load_clips(ret_dir, sc.target_end_effectors, sc.target_feet)
    target, _ = _load_clips(cfg.target_dir, sc.target_end_effectors,
                            sc.target_feet)
    skeleton = ret[0][0]
    generated = np.concatenate([m.poses for _, m in ret])
    reference = np.concatenate([m.poses for _, m in target])
    curve = precision_recall(skeleton, generated, reference)
    out_dir = out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    write_pr_csv(os.path.join(out_dir, "pr.csv"), curve)
    render_pr_figure(os.path.join(out_dir, "pr.png"), curve)
    log.info("precision/recall over %d thresholds", len(curve.epsilons))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--checkpoint", default=None, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@_guarded
def baseline(config_path, checkpoint, out):
    """Frame-copy baseline: scaled root velocity, copied rotation, mapped poses."""
    cfg = load_config(config_path)
    trainer, _, _, source = _trainer(cfg)
    src_sk = trainer.source_skeleton
    tgt_sk = trainer.target_skeleton
    state = None
    if checkpoint or os.path.exists(_checkpoint_path(cfg, None)):
        state = load_train_state(_checkpoint_path(cfg, checkpoint))
    out_dir = out or os.path.join(cfg.output_dir, "baseline")
    os.makedirs(out_dir, exist_ok=True)
    ratio = tgt_sk.height / src_sk.height
    for i, (_, motion) in enumerate(source):
        if state is not None:
            # pose mapping through the trained translator, roots frame-copied
            translated = trainer.translate(state, motion)
            result = Motion.create(translated.poses, motion.root_orientations,
                                   motion.root_velocities * ratio,
                                   motion.frame_rate)
        else:
            result = baseline_frame_copy(motion, src_sk, tgt_sk)
        path = os.path.join(out_dir, f"baseline_{i:03d}.bvh")
        with open(path, "w") as f:
            f.write(write_bvh(tgt_sk, result))
    log.info("wrote %d baseline clips to %s", len(source), out_dir)


if __name__ == "__main__":
    main()
