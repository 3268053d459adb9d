import csv
import json
import os

import numpy as np
import yaml
from click.testing import CliRunner

from retargetkit.cli import main


def write_config(tmp_path, corpus, **overrides):
    cfg = {
        "source_dir": os.path.join(str(corpus), "source"),
        "target_dir": os.path.join(str(corpus), "target"),
        "output_dir": str(tmp_path / "out"),
        "seed": 0,
        "data": {"window_length": 16, "stride": 8},
        "arch": {"hidden_channels": 6, "neighborhood": 1, "kernel": 3,
                 "encoder_layers": 1, "decoder_layers": 1, "critic_hidden": 8,
                 "critic_layers": 1, "motion_channels": 4, "motion_layers": 2,
                 "motion_kernel": 3},
        "training": {"steps": 2, "batch_windows": 2, "batch_poses": 8,
                     "n_critic": 1, "learning_rate": 1e-3,
                     "checkpoint_every": 1},
    }
    cfg.update(overrides)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def make_corpus(tmp_path):
    runner = CliRunner()
    corpus = tmp_path / "corpus"
    result = runner.invoke(main, ["fixtures", "--out", str(corpus),
                                  "--source-clips", "2", "--target-clips", "2",
                                  "--cycles", "2"])
    assert result.exit_code == 0, result.output
    return corpus


class TestPipeline:
    def test_end_to_end_smoke(self, tmp_path):
        runner = CliRunner()
        corpus = make_corpus(tmp_path)
        config = write_config(tmp_path, corpus)
        out = tmp_path / "out"

        result = runner.invoke(main, ["prepare", "--config", config])
        assert result.exit_code == 0, result.output
        manifest = json.loads((out / "motion_manifest.json").read_text())
        assert manifest["n_windows"] > 0

        result = runner.invoke(main, ["train", "--config", config])
        assert result.exit_code == 0, result.output
        assert (out / "train_state.npz").exists()
        assert (out / "resolved_config.yaml").exists()
        assert (out / "losses.png").stat().st_size > 0
        with open(out / "history.csv") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 2

        result = runner.invoke(main, ["retarget", "--config", config])
        assert result.exit_code == 0, result.output
        ret_dir = out / "retargeted"
        assert len(list(ret_dir.glob("*.bvh"))) == 2

        result = runner.invoke(main, [
            "evaluate", "--config", config,
            "--retargeted", str(ret_dir), "--reference", str(ret_dir)])
        assert result.exit_code == 0, result.output
        with open(out / "metrics.csv") as f:
            mrows = list(csv.DictReader(f))
        mean = [r for r in mrows if r["name"] == "mean"][0]
        assert float(mean["angle_deg"]) == 0.0
        assert float(mean["contact_consistency"]) == 1.0
        assert (out / "metrics.png").stat().st_size > 0

        result = runner.invoke(main, ["pr", "--config", config,
                                      "--retargeted", str(ret_dir)])
        assert result.exit_code == 0, result.output
        with open(out / "pr.csv") as f:
            prows = list(csv.DictReader(f))
        assert len(prows) > 0
        assert (out / "pr.png").stat().st_size > 0

        result = runner.invoke(main, ["baseline", "--config", config])
        assert result.exit_code == 0, result.output
        assert len(list((out / "baseline").glob("*.bvh"))) == 2

    def test_pr_on_target_equals_target_pins_curves(self, tmp_path):
        runner = CliRunner()
        corpus = make_corpus(tmp_path)
        config = write_config(tmp_path, corpus)
        result = runner.invoke(main, [
            "pr", "--config", config,
            "--retargeted", os.path.join(str(corpus), "target")])
        assert result.exit_code == 0, result.output
        with open(tmp_path / "out" / "pr.csv") as f:
            rows = list(csv.DictReader(f))
        assert all(float(r["precision"]) == 1.0 for r in rows)
        assert all(float(r["recall"]) == 1.0 for r in rows)


class TestExitCodes:
    def test_bad_config_is_validation_error(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("bogus_key: 1\n")
        result = CliRunner().invoke(main, ["prepare", "--config", str(bad)])
        assert result.exit_code == 1

    def test_missing_bvh_dir_is_validation_error(self, tmp_path):
        config = tmp_path / "run.yaml"
        config.write_text(yaml.safe_dump({
            "source_dir": str(tmp_path / "nowhere"),
            "target_dir": str(tmp_path / "nowhere"),
            "output_dir": str(tmp_path / "out")}))
        result = CliRunner().invoke(main, ["prepare", "--config", str(config)])
        assert result.exit_code == 1

    def test_missing_checkpoint_is_runtime_error(self, tmp_path):
        corpus = make_corpus(tmp_path)
        config = write_config(tmp_path, corpus)
        result = CliRunner().invoke(main, ["retarget", "--config", config])
        assert result.exit_code == 2

    def test_determinism_of_history(self, tmp_path):
        corpus = make_corpus(tmp_path)
        runner = CliRunner()
        texts = []
        for run in ("a", "b"):
            config = write_config(tmp_path, corpus,
                                  output_dir=str(tmp_path / run))
            result = runner.invoke(main, ["train", "--config", config])
            assert result.exit_code == 0, result.output
            texts.append((tmp_path / run / "history.csv").read_text())
        assert texts[0] == texts[1]
