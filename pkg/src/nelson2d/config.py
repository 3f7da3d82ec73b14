"""Dataclass configuration and the YAML loader used by the command line."""
import dataclasses
import math
import os
from dataclasses import dataclass, field

import yaml

from .kspace import ModelParams


@dataclass(frozen=True)
class GridSpec:
    n_panels: int = 6
    order: int = 8
    n_theta: int = 48


@dataclass(frozen=True)
class SamplerSpec:
    eps: float = 0.1
    correction: bool = False
    correction_dt: float | None = None


@dataclass(frozen=True)
class FSpec:
    """Nonnegative bounded weight f on R^{2N}: indicator of a cube or a Gaussian."""
    kind: str = "box"
    scale: float = 200.0

    def __post_init__(self):
        if self.kind not in ("box", "gauss"):
            raise ValueError(f"unknown f kind {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class EstimatorSpec:
    t_ladder: tuple = (1.0, 2.0, 4.0)
    n_paths: int = 1000
    f: FSpec = field(default_factory=FSpec)
    potential: str = "zero"
    potential_value: float = 0.0
    route: str = "direct"


@dataclass(frozen=True)
class BoundsSpec:
    b: float = 1.0
    b_prime: float = 1.0
    c: float = 1.0
    c_prime: float = 1.0
    c_m: float = 1.0
    alpha: float = 2.0
    theta: float = 0.99
    s: float = 1.0


@dataclass
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    grid: GridSpec = field(default_factory=GridSpec)
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    bounds: BoundsSpec = field(default_factory=BoundsSpec)
    seed: int = 0
    workers: int = 1
    out: str = "runs/latest"
    # subcommand specific knobs
    n_paths: int = 100
    horizon: float = 1.0
    regime: str = "N"
    p: float = 1.0


_SECTIONS = {"params": ModelParams, "grid": GridSpec, "sampler": SamplerSpec,
             "estimator": EstimatorSpec, "bounds": BoundsSpec}


class ConfigError(ValueError):
    pass


def _coerce(value, current, where):
    if isinstance(current, bool):
        if isinstance(value, str):
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return bool(value)
    if isinstance(current, tuple):
        if isinstance(value, str):
            value = yaml.safe_load(value)
        if not isinstance(value, (list, tuple)):
            value = [value]
        return tuple(float(v) for v in value)
    if isinstance(current, (int, float)) and not isinstance(current, bool):
        if isinstance(value, str):
            value = yaml.safe_load(value)
        if isinstance(value, str) and value.lower() in ("inf", "+inf"):
            value = math.inf
        try:
            return type(current)(value) if isinstance(current, int) and float(value).is_integer() \
                else float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    return value


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    default = cls()
    kw = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{where}: unknown key {key!r}")
        cur = getattr(default, key)
        if dataclasses.is_dataclass(cur):
            kw[key] = _build(type(cur), value, f"{where}.{key}")
        elif cur is None:
            kw[key] = None if value is None else float(value)
        else:
            kw[key] = _coerce(value, cur, f"{where}.{key}")
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data):
    data = dict(data or {})
    top = RunConfig()
    kw = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kw[key] = _build(_SECTIONS[key], value, key)
        elif hasattr(top, key):
            kw[key] = _coerce(value, getattr(top, key), key)
        else:
            raise ConfigError(f"unknown key {key!r}")
    return RunConfig(**kw)


def load_config(path=None, overrides=()):
    """Read a YAML file (optional) and apply 'section.key=value' overrides."""
    data = {}
    if path:
        with open(path) as fh:
            try:
                data = yaml.safe_load(fh) or {}
            except yaml.YAMLError as exc:
                mark = getattr(exc, "problem_mark", None)
                line = f" line {mark.line + 1}" if mark else ""
                raise ConfigError(f"{path}:{line} {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {p} is not a section")
        node[parts[-1]] = yaml.safe_load(value)
    return config_from_dict(data)


def config_to_dict(cfg):
    d = dataclasses.asdict(cfg)
    return d


def worker_count(cfg_workers=1):
    env = os.environ.get("NELSON2D_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"NELSON2D_THREADS must be an integer, got {env!r}") from None
    return max(1, int(cfg_workers))
