"""Run configuration: one YAML file drives every pipeline command.

The schema is the dataclass tree below.  Unknown keys anywhere in the file
are rejected with their full path, so typos fail fast instead of silently
falling back to defaults.  After loading, the fully resolved configuration
(defaults filled in) can be written back out as an artifact; re-running
from that artifact reproduces the original run.
"""

import dataclasses
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .losses import LossWeights
from .networks import ArchConfig
from .training import TrainSettings


@dataclass(frozen=True)
class DataConfig:
    window_length: int = 24
    stride: int = 8
    pose_fraction: float = 1.0
    pose_seed: int = 1


@dataclass(frozen=True)
class SkeletonConfig:
    """Joint-name annotations; index k of each list corresponds across skeletons."""

    source_end_effectors: tuple = ("head", "foot_fl", "foot_fr", "foot_bl", "foot_br")
    source_feet: tuple = ("foot_fl", "foot_fr", "foot_bl", "foot_br")
    target_end_effectors: tuple = ("head", "foot_fl", "foot_fr", "foot_bl", "foot_br")
    target_feet: tuple = ("foot_fl", "foot_fr", "foot_bl", "foot_br")


@dataclass(frozen=True)
class LoopConfig:
    steps: int = 1000
    batch_windows: int = 4
    batch_poses: int = 64
    n_critic: int = 5
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    contact_eps: float = 0.006
    checkpoint_every: int = 500


@dataclass(frozen=True)
class RunConfig:
    source_dir: str = ""
    target_dir: str = ""
    output_dir: str = "out"
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    skeleton: SkeletonConfig = field(default_factory=SkeletonConfig)
    training: LoopConfig = field(default_factory=LoopConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    arch: ArchConfig = field(default_factory=ArchConfig)

    def train_settings(self):
        t = self.training
        return TrainSettings(
            steps=t.steps, batch_windows=t.batch_windows,
            batch_poses=t.batch_poses, n_critic=t.n_critic,
            learning_rate=t.learning_rate, beta1=t.beta1, beta2=t.beta2,
            contact_eps=t.contact_eps, seed=self.seed,
            checkpoint_every=t.checkpoint_every,
            weights=self.weights, arch=self.arch)


_SCALARS = (int, float, str, bool)


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"unknown config key(s): "
                          + ", ".join(f"{where}{k}" for k in sorted(unknown)))
    kwargs = {}
    for name, f in fields.items():
        if name not in data:
            continue
        value = data[name]
        here = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(f.type) or (
                isinstance(f.type, type) and dataclasses.is_dataclass(f.type)):
            kwargs[name] = _build(f.type, value, here)
        elif f.type in ("tuple", tuple) or isinstance(f.default, tuple):
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{here}: expected a list")
            kwargs[name] = tuple(value)
        else:
            if isinstance(value, (dict, list)):
                raise ConfigError(f"{here}: expected a scalar")
            if isinstance(f.default, bool):
                if not isinstance(value, bool):
                    raise ConfigError(f"{here}: expected a boolean")
            elif isinstance(f.default, int) and not isinstance(f.default, bool):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{here}: expected an integer, got {value!r}")
            elif isinstance(f.default, float):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{here}: expected a number, got {value!r}")
                value = float(value)
            elif isinstance(f.default, str) and not isinstance(value, str):
                raise ConfigError(f"{here}: expected a string, got {value!r}")
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{path or 'config'}: {exc}")


def config_from_dict(data):
    # dataclass field types may be strings under postponed evaluation, so
    # resolve the nested classes explicitly
    data = dict(data or {})
    nested = {"data": DataConfig, "skeleton": SkeletonConfig,
              "training": LoopConfig, "weights": LossWeights, "arch": ArchConfig}
    kwargs = {}
    top_fields = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - top_fields
    if unknown:
        raise ConfigError("unknown config key(s): " + ", ".join(sorted(unknown)))
    for key, value in data.items():
        if key in nested:
            kwargs[key] = _build(nested[key], value, key)
        else:
            stub = _build_scalar(key, value)
            kwargs[key] = stub
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


def _build_scalar(key, value):
    defaults = RunConfig()
    default = getattr(defaults, key)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    raise ConfigError(f"{key}: unsupported value {value!r}")


def load_config(path):
    try:
        with open(path) as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(raw)


def resolved_dict(config):
    """Plain-dict form of a fully resolved configuration."""
    out = dataclasses.asdict(config)

    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, tuple):
            return [clean(x) for x in v]
        return v

    return clean(out)


def save_resolved_config(path, config):
    with open(path, "w") as f:
        yaml.safe_dump(resolved_dict(config), f, sort_keys=True)
