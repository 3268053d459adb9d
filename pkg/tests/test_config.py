import pytest
import yaml

from retargetkit.config import RunConfig, load_config, resolved_dict, save_resolved_config
from retargetkit.errors import ConfigError


def write(tmp_path, data):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(data))
    return str(path)


class TestLoad:
    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        cfg = load_config(str(path))
        assert cfg == RunConfig()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(str(tmp_path / "nope.yaml"))

    def test_values_reach_nested_blocks(self, tmp_path):
        cfg = load_config(write(tmp_path, {
            "seed": 7,
            "data": {"window_length": 16, "stride": 4},
            "weights": {"gan": 0.0, "contact": 3.5},
            "arch": {"hidden_channels": 8, "kernel": 5},
            "training": {"steps": 10, "n_critic": 2},
        }))
        assert cfg.seed == 7
        assert cfg.data.window_length == 16
        assert cfg.weights.gan == 0.0
        assert cfg.arch.kernel == 5
        settings = cfg.train_settings()
        assert settings.steps == 10 and settings.n_critic == 2
        assert settings.weights.contact == 3.5

    def test_unknown_top_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="windowlength"):
            load_config(write(tmp_path, {"windowlength": 3}))

    def test_unknown_nested_key_names_path(self, tmp_path):
        with pytest.raises(ConfigError, match="data.windw"):
            load_config(write(tmp_path, {"data": {"windw": 3}}))

    def test_wrong_type_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="data.stride"):
            load_config(write(tmp_path, {"data": {"stride": "often"}}))

    def test_negative_weight_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path, {"weights": {"contact": -2.0}}))

    def test_name_lists_become_tuples(self, tmp_path):
        cfg = load_config(write(tmp_path, {
            "skeleton": {"source_feet": ["a", "b"]}}))
        assert cfg.skeleton.source_feet == ("a", "b")


class TestResolved:
    def test_round_trip_reproduces_config(self, tmp_path):
        cfg = load_config(write(tmp_path, {
            "seed": 3, "weights": {"gan": 0.5}, "data": {"stride": 2}}))
        out = tmp_path / "resolved.yaml"
        save_resolved_config(str(out), cfg)
        again = load_config(str(out))
        assert again == cfg

    def test_resolved_contains_defaults(self, tmp_path):
        d = resolved_dict(RunConfig())
        assert d["training"]["n_critic"] == 5
        assert d["weights"]["recon"] == 10.0
        assert d["arch"]["kernel"] == 15
