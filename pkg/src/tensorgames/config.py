"""Flat key-value experiment configuration.

The config format is plain text, one ``key = value`` per line with dotted
section keys (``scenario.name``, ``chance.epsilon``, ...). Blank lines and
``#`` comments are ignored. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .games import CHANCE, EXPECTATION


class ConfigError(ValueError):
    """The experiment configuration is unreadable or inconsistent."""


def parse_kv_file(path) -> dict:
    """Read a flat key = value file into a string mapping."""
    text = Path(path).read_text()
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _as_float(key, v):
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {v!r}") from None


def _as_int(key, v):
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {v!r}") from None


def _as_int_list(key, v):
    return tuple(_as_int(key, part) for part in str(v).split(",") if part.strip())


def _as_float_list(key, v):
    return tuple(_as_float(key, part) for part in str(v).split(",") if part.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a harness run needs; field defaults mirror the benchmark
    setup (two-strategy hog-poacher-ranger, chance constraints)."""

    scenario: str = "hog_poacher_ranger"
    r: float = 1.0
    m: tuple[int, ...] | None = None
    players: int = 3
    box_low: float = -2.0
    box_high: float = 2.0

    mode: str = CHANCE
    epsilon: float = 0.8

    omega0: float = 1.0
    omega_des: float = 64.0
    omega_accept: float = 10.0

    tolerance: float = 1e-8
    max_iterations: int = 200
    max_restarts: int = 5
    perturbation: float = 0.1

    trials: int = 100
    seed: int = 0
    out: str = "results"
    workers: int = 1

    sweep_epsilons: tuple[float, ...] = (0.2, 0.35, 0.5, 0.65, 0.8)
    bench_players: tuple[int, ...] = (2, 3, 4, 5)
    bench_strategies: tuple[int, ...] = (2, 3)
    bench_repeats: int = 10

    probe_trials: int = 0
    support_threshold: float = 1e-3

    def __post_init__(self):
        if self.mode not in (CHANCE, EXPECTATION):
            raise ConfigError(f"constraint.mode must be '{CHANCE}' or "
                              f"'{EXPECTATION}', got {self.mode!r}")
        if self.mode == CHANCE and not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"chance.epsilon must lie in [0, 1], got {self.epsilon}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.bench_repeats < 1:
            raise ConfigError("bench.repeats must be >= 1")
        if not self.box_low < self.box_high:
            raise ConfigError("scenario.box.low must be below scenario.box.high")

    def replace(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)


_KEYMAP = {
    "scenario.name": ("scenario", str),
    "scenario.r": ("r", _as_float),
    "scenario.m": ("m", _as_int_list),
    "scenario.players": ("players", _as_int),
    "scenario.box.low": ("box_low", _as_float),
    "scenario.box.high": ("box_high", _as_float),
    "constraint.mode": ("mode", str),
    "chance.epsilon": ("epsilon", _as_float),
    "tighten.omega0": ("omega0", _as_float),
    "tighten.omega_des": ("omega_des", _as_float),
    "tighten.omega_accept": ("omega_accept", _as_float),
    "solver.tolerance": ("tolerance", _as_float),
    "solver.max_iterations": ("max_iterations", _as_int),
    "solver.max_restarts": ("max_restarts", _as_int),
    "solver.perturbation": ("perturbation", _as_float),
    "trials": ("trials", _as_int),
    "seed": ("seed", _as_int),
    "out": ("out", str),
    "workers": ("workers", _as_int),
    "sweep.epsilons": ("sweep_epsilons", _as_float_list),
    "bench.players": ("bench_players", _as_int_list),
    "bench.strategies": ("bench_strategies", _as_int_list),
    "bench.repeats": ("bench_repeats", _as_int),
    "probe.trials": ("probe_trials", _as_int),
    "support.threshold": ("support_threshold", _as_float),
}


def config_from_mapping(raw: dict) -> ExperimentConfig:
    values = {}
    for key, value in raw.items():
        if key not in _KEYMAP:
            raise ConfigError(f"unknown configuration key {key!r}")
        name, conv = _KEYMAP[key]
        values[name] = conv(key, value) if conv is not str else str(value)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return config_from_mapping(parse_kv_file(path))
