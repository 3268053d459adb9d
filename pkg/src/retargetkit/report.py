"""Report emission: delimited tables plus rendered figures.

Every artifact is written twice where it makes sense: a CSV (stable column
order, machine-diffable) and a PNG rendered with matplotlib for quick
inspection.  JSON mirrors the metric tables for downstream tooling.
"""

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import MetricReport

METRIC_COLUMNS = ("name", "frames") + MetricReport.COLUMNS


def write_metric_csv(path, report):
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=METRIC_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in report.clips:
            writer.writerow({k: row[k] for k in METRIC_COLUMNS})
        mean_row = {"name": "mean", "frames": report.n_frames}
        mean_row.update(report.means)
        writer.writerow(mean_row)


def write_metric_json(path, report):
    payload = {
        "clips": list(report.clips),
        "frame_weighted_means": report.means,
        "clip_means": report.clip_means,
        "n_clips": report.n_clips,
        "n_frames": report.n_frames,
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def render_metric_figure(path, report):
    fig, axes = plt.subplots(1, len(MetricReport.COLUMNS),
                             figsize=(3 * len(MetricReport.COLUMNS), 3))
    names = [row["name"] for row in report.clips]
    for ax, column in zip(axes, MetricReport.COLUMNS):
        values = [row[column] for row in report.clips]
        ax.bar(range(len(values)), values)
        ax.axhline(report.means[column], color="k", linestyle="--", linewidth=1)
        ax.set_title(column, fontsize=8)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=90, fontsize=6)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_pr_csv(path, curve):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["epsilon", "precision", "recall"])
        for e, p, r in zip(curve.epsilons, curve.precision, curve.recall):
            writer.writerow([repr(e), repr(p), repr(r)])


def render_pr_figure(path, curves, labels=None):
    """Plot one or several precision/recall curve pairs against epsilon."""
    if not isinstance(curves, (list, tuple)):
        curves = [curves]
    labels = labels or [f"run{i}" for i in range(len(curves))]
    fig, (ax_p, ax_r) = plt.subplots(1, 2, figsize=(9, 3.5))
    for curve, label in zip(curves, labels):
        ax_p.semilogx(curve.epsilons, curve.precision, label=label)
        ax_r.semilogx(curve.epsilons, curve.recall, label=label)
    for ax, title in ((ax_p, "precision"), (ax_r, "recall")):
        ax.set_xlabel("epsilon")
        ax.set_ylabel(title)
        ax.set_ylim(-0.05, 1.05)
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_history_figure(path, history):
    keys = ("total", "recon", "contact", "ee_velocity", "ee_offset",
            "critic_pose", "critic_motion")
    steps = [row["step"] for row in history]
    fig, ax = plt.subplots(figsize=(8, 4))
    for key in keys:
        values = [row[key] for row in history]
        if any(v != 0 for v in values):
            ax.plot(steps, values, label=key, linewidth=1)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def emit_metric_report(out_dir, report, prefix="metrics"):
    """CSV + JSON + figure; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, f"{prefix}.csv"),
        "json": os.path.join(out_dir, f"{prefix}.json"),
        "png": os.path.join(out_dir, f"{prefix}.png"),
    }
    write_metric_csv(paths["csv"], report)
    write_metric_json(paths["json"], report)
    render_metric_figure(paths["png"], report)
    return paths
