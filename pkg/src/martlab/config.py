"""Experiment configuration: flat ``key = value`` text with dotted keys.

Grammar (one entry per line)::

    # comment                        blank lines and '#' comments are ignored
    key = value                      keys are dotted names, values are raw text
    model.kind = A                   model letter or full name (StoppedBrownianUpper, ...)
    model.a = 1.0                    barrier_up      model.b = 2.0   barrier_down
    model.sigma / model.rho / model.K / model.T_max / model.epsilon / model.max_events
    n_paths = 1000000
    master_seed = 42
    step = 0.001                     grid step h for discretized models and path mode
    lambdas.small = 0.5, 0.2, 0.1, 0.05, 0.02
    lambdas.big = auto               or a comma-separated list
    checks = mean_one, sandwich, bdg, zeta    or 'none'
    checks.n_paths = 10000           paths for the horizon sweep
    checks.lambdas = 0.1, 0.5        lambdas for the mean-one check
    checks.horizons = 10, 100, 1000
    threads = 1
    censor_threshold = 0.01
    output_dir = out

Unknown keys are an error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .models import FACTORIES, ModelKind, ModelSpec
from .stochexp import DEFAULT_SMALL_LAMBDAS

MIN_TAIL_PATHS = 1000
ALL_CHECKS = ("mean_one", "sandwich", "bdg", "zeta")


class ConfigError(ValueError):
    pass


_MODEL_KEYS = {
    "a": "barrier_up", "b": "barrier_down", "sigma": "sigma", "rho": "jump_rate", "K": "jump_bound",
    "T_max": "horizon_cap", "epsilon": "epsilon", "max_events": "max_events",
}


@dataclass
class ExperimentConfig:
    model: ModelSpec
    n_paths: int = 100_000
    master_seed: int = 0
    small_lambdas: tuple = DEFAULT_SMALL_LAMBDAS
    big_lambdas: tuple | None = None
    step: float = 1e-3
    checks_enabled: frozenset = frozenset(ALL_CHECKS)
    check_paths: int = 10_000
    check_lambdas: tuple = (0.1, 0.5)
    check_horizons: tuple = (10.0, 100.0, 1000.0)
    threads: int = 1
    censor_threshold: float = 0.01
    output_dir: str = "out"

    def __post_init__(self):
        if self.n_paths < MIN_TAIL_PATHS:
            raise ConfigError(f"n_paths={self.n_paths}: tail estimation needs at least {MIN_TAIL_PATHS} paths")
        if not self.small_lambdas:
            raise ConfigError("lambdas.small must be nonempty")
        if self.big_lambdas is not None and not self.big_lambdas:
            raise ConfigError("lambdas.big must be nonempty or 'auto'")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in 64 unsigned bits")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        unknown = set(self.checks_enabled) - set(ALL_CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks: {sorted(unknown)}")
        if not self.step > 0:
            raise ConfigError("step must be positive")


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _floats(value: str, key: str) -> tuple:
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {value!r}") from exc


def _kind(value: str) -> ModelKind:
    v = value.strip()
    for k in ModelKind:
        if v in (k.value, k.letter, k.name):
            return k
    raise ConfigError(f"unknown model {value!r}; choose one of {[k.value for k in ModelKind]}")


def build_model(kind: str, params: dict) -> ModelSpec:
    k = _kind(kind)
    spec = FACTORIES[k]()
    changes = {}
    for key, value in params.items():
        if key not in _MODEL_KEYS:
            raise ConfigError(f"unknown model parameter {key!r}")
        field_name = _MODEL_KEYS[key]
        try:
            changes[field_name] = int(value) if field_name == "max_events" else float(value)
        except ValueError as exc:
            raise ConfigError(f"model.{key}: not a number: {value!r}") from exc
    try:
        return spec.with_params(**changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(kv: dict) -> ExperimentConfig:
    kv = dict(kv)
    if "model.kind" not in kv:
        raise ConfigError("model.kind is required")
    kind = kv.pop("model.kind")
    params = {k[len("model."):]: kv.pop(k) for k in list(kv) if k.startswith("model.")}
    model = build_model(kind, params)
    args = {}

    def take(key, conv, dest):
        if key in kv:
            raw = kv.pop(key)
            try:
                args[dest] = conv(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{key}: invalid value {raw!r}") from exc

    take("n_paths", lambda v: int(float(v)), "n_paths")
    take("master_seed", int, "master_seed")
    take("step", float, "step")
    take("threads", int, "threads")
    take("censor_threshold", float, "censor_threshold")
    take("output_dir", str, "output_dir")
    take("lambdas.small", lambda v: _floats(v, "lambdas.small"), "small_lambdas")
    take("lambdas.big", lambda v: None if v.strip().lower() == "auto" else _floats(v, "lambdas.big"), "big_lambdas")
    take("checks", lambda v: frozenset() if v.strip().lower() == "none"
         else frozenset(s.strip() for s in v.split(",") if s.strip()), "checks_enabled")
    take("checks.n_paths", lambda v: int(float(v)), "check_paths")
    take("checks.lambdas", lambda v: _floats(v, "checks.lambdas"), "check_lambdas")
    take("checks.horizons", lambda v: _floats(v, "checks.horizons"), "check_horizons")
    if kv:
        raise ConfigError(f"unknown config keys: {sorted(kv)}")
    return ExperimentConfig(model=model, **args)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(parse_kv(fh.read()))
