"""Configuration ingestion for the CLI and experiment drivers.

A scheme configuration is a JSON object with keys
{M, N, T, eta, epsilon, n, beta1?, grid?, priv_slack?}; a sweep configuration
adds {eps_grid, samples, seed, schemes, input_model, out}.  Rejected
documents raise :class:`ConfigError` carrying the violated invariant by name.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .noise import DEFAULT_PRIV_SLACK, NoiseCalibration, calibrate_R_noise
from .scheme import (EvaluationGrid, Regime, ScalingSchedule, SchemeParams,
                     classify_regime, default_grid, make_schedule)

__all__ = [
    "SchemeConfig",
    "SweepConfig",
    "Pipeline",
    "build_pipeline",
    "DEFAULT_EPS_GRID",
    "DEFAULT_SAMPLES",
    "DEFAULT_SEED",
    "DEFAULT_SCHEDULE_INDEX",
]

DEFAULT_SCHEDULE_INDEX = 256
DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 42
#: Log-spaced epsilon grid spanning the trade-off figure range.
DEFAULT_EPS_GRID = tuple(float(e) for e in np.geomspace(0.5, 4.0, 7))

_SCHEME_KEYS = {"M", "N", "T", "eta", "epsilon", "n", "beta1", "grid", "priv_slack"}
_SWEEP_ONLY_KEYS = {"eps_grid", "samples", "seed", "schemes", "input_model", "out", "threads"}
_SCHEMES = ("layered", "independent_baseline")


def _require_int(raw: dict, key: str, minimum: int) -> int:
    value = raw.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {value!r}",
                          invariant=f"{key}_integer_at_least_{minimum}", key=key, value=value)
    return value


def _require_number(raw: dict, key: str, *, positive: bool = False,
                    nonnegative: bool = False, default=None) -> float:
    value = raw.get(key, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ConfigError(f"{key} must be a finite number, got {value!r}",
                          invariant=f"{key}_finite", key=key, value=value)
    if positive and value <= 0:
        raise ConfigError(f"{key} must be > 0, got {value!r}",
                          invariant=f"{key}_positive", key=key, value=value)
    if nonnegative and value < 0:
        raise ConfigError(f"{key} must be >= 0, got {value!r}",
                          invariant=f"{key}_nonnegative", key=key, value=value)
    return float(value)


@dataclass(frozen=True)
class SchemeConfig:
    """Validated scheme configuration (one parameter point)."""

    m: int
    n_nodes: int
    t: int
    eta: float
    epsilon: float
    schedule_n: int = DEFAULT_SCHEDULE_INDEX
    beta1: float | None = None
    grid: tuple[float, ...] | None = None
    priv_slack: float = DEFAULT_PRIV_SLACK

    @classmethod
    def from_dict(cls, raw: dict) -> "SchemeConfig":
        unknown = set(raw) - _SCHEME_KEYS - _SWEEP_ONLY_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}",
                              invariant="known_keys", key=sorted(unknown)[0])
        m = _require_int(raw, "M", 2)
        n_nodes = _require_int(raw, "N", 2)
        t = _require_int(raw, "T", 1)
        eta = _require_number(raw, "eta", nonnegative=True)
        epsilon = _require_number(raw, "epsilon", positive=True)
        schedule_n = raw.get("n", DEFAULT_SCHEDULE_INDEX)
        if not isinstance(schedule_n, int) or isinstance(schedule_n, bool) or schedule_n < 2:
            raise ConfigError(f"n must be an integer >= 2, got {schedule_n!r}",
                              invariant="n_integer_at_least_2", key="n", value=schedule_n)
        priv_slack = _require_number(raw, "priv_slack", default=DEFAULT_PRIV_SLACK)
        if not (0.0 < priv_slack < 1.0):
            raise ConfigError(f"priv_slack must lie in (0, 1), got {priv_slack!r}",
                              invariant="priv_slack_open_unit_interval",
                              key="priv_slack", value=priv_slack)

        regime = classify_regime(m, n_nodes, t)
        if regime is Regime.OUT_OF_SCOPE:
            raise ConfigError(
                f"(M={m}, N={n_nodes}, T={t}) falls outside both supported regimes: "
                "need (M-1)T+1 <= N <= MT or N = T+1 < M",
                invariant="supported_regime", key="N", value=n_nodes)

        beta1 = raw.get("beta1")
        if beta1 is not None:
            beta1 = _require_number(raw, "beta1")
            if t == 1:
                raise ConfigError("beta1 is only meaningful for T >= 2",
                                  invariant="beta1_requires_t_ge_2", key="beta1", value=beta1)
            upper = t / (t - 1)
            if not (1.0 < beta1 < upper):
                raise ConfigError(f"beta1 must lie in (1, {upper}), got {beta1!r}",
                                  invariant="beta1_open_interval", key="beta1", value=beta1)

        grid = raw.get("grid")
        if grid is not None:
            if (not isinstance(grid, (list, tuple))
                    or not all(isinstance(g, (int, float)) and not isinstance(g, bool)
                               and math.isfinite(g) for g in grid)):
                raise ConfigError(f"grid must be a list of finite numbers, got {grid!r}",
                                  invariant="grid_numeric", key="grid", value=grid)
            if len(grid) < n_nodes:
                raise ConfigError(f"grid must supply at least N={n_nodes} points, got {len(grid)}",
                                  invariant="grid_length", key="grid", value=grid)
            if len(set(float(g) for g in grid)) != len(grid):
                raise ConfigError("grid points must be pairwise distinct",
                                  invariant="grid_distinct", key="grid", value=grid)
            grid = tuple(float(g) for g in grid)

        return cls(m=m, n_nodes=n_nodes, t=t, eta=eta, epsilon=epsilon,
                   schedule_n=schedule_n, beta1=beta1, grid=grid, priv_slack=priv_slack)

    @classmethod
    def from_json(cls, path: str | Path) -> "SchemeConfig":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def to_dict(self) -> dict:
        return {
            "M": self.m, "N": self.n_nodes, "T": self.t, "eta": self.eta,
            "epsilon": self.epsilon, "n": self.schedule_n, "beta1": self.beta1,
            "grid": list(self.grid) if self.grid is not None else None,
            "priv_slack": self.priv_slack,
        }


@dataclass(frozen=True)
class Pipeline:
    """Resolved objects for one scheme configuration."""

    params: SchemeParams
    calibration: NoiseCalibration
    schedule: ScalingSchedule
    grid: EvaluationGrid


def build_pipeline(cfg: SchemeConfig, epsilon: float | None = None) -> Pipeline:
    """Materialize params/calibration/schedule/grid; ``epsilon`` overrides the
    config value (used by sweeps)."""
    eps = cfg.epsilon if epsilon is None else float(epsilon)
    params = SchemeParams(m=cfg.m, n=cfg.n_nodes, t=cfg.t, eta=cfg.eta, epsilon=eps)
    calibration = calibrate_R_noise(eps, cfg.priv_slack)
    schedule = make_schedule(cfg.schedule_n, cfg.t, cfg.beta1)
    grid = EvaluationGrid(cfg.grid) if cfg.grid is not None else default_grid(cfg.n_nodes)
    return Pipeline(params=params, calibration=calibration, schedule=schedule, grid=grid)


@dataclass(frozen=True)
class SweepConfig:
    """Configuration of a trade-off sweep over epsilon values."""

    scheme: SchemeConfig
    eps_grid: tuple[float, ...] = DEFAULT_EPS_GRID
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    schemes: tuple[str, ...] = ("layered",)
    input_model: str = "rademacher"
    threads: int = 1
    out: str | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        scheme = SchemeConfig.from_dict(raw)
        eps_grid = raw.get("eps_grid")
        if eps_grid is None:
            eps_grid = DEFAULT_EPS_GRID
        else:
            if (not isinstance(eps_grid, (list, tuple)) or len(eps_grid) == 0
                    or not all(isinstance(e, (int, float)) and not isinstance(e, bool)
                               and math.isfinite(e) and e > 0 for e in eps_grid)):
                raise ConfigError(f"eps_grid must be a nonempty list of positive numbers, got {eps_grid!r}",
                                  invariant="eps_grid_positive", key="eps_grid", value=eps_grid)
            eps_grid = tuple(float(e) for e in eps_grid)
        samples = raw.get("samples", DEFAULT_SAMPLES)
        if not isinstance(samples, int) or isinstance(samples, bool) or samples < 1000:
            raise ConfigError(f"samples must be an integer >= 1000, got {samples!r}",
                              invariant="samples_at_least_1000", key="samples", value=samples)
        seed = raw.get("seed", DEFAULT_SEED)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}",
                              invariant="seed_nonnegative_integer", key="seed", value=seed)
        schemes = raw.get("schemes", ["layered"])
        if (not isinstance(schemes, (list, tuple)) or len(schemes) == 0
                or not all(s in _SCHEMES for s in schemes)):
            raise ConfigError(f"schemes must be a nonempty subset of {_SCHEMES}, got {schemes!r}",
                              invariant="schemes_known", key="schemes", value=schemes)
        input_model = raw.get("input_model", "rademacher")
        if input_model not in ("rademacher", "uniform", "gaussian"):
            raise ConfigError(f"input_model must be rademacher|uniform|gaussian, got {input_model!r}",
                              invariant="input_model_known", key="input_model", value=input_model)
        threads = raw.get("threads", 1)
        if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
            raise ConfigError(f"threads must be a positive integer, got {threads!r}",
                              invariant="threads_positive", key="threads", value=threads)
        out = raw.get("out")
        if out is not None and not isinstance(out, str):
            raise ConfigError(f"out must be a path string, got {out!r}",
                              invariant="out_path", key="out", value=out)
        return cls(scheme=scheme, eps_grid=eps_grid, samples=samples, seed=seed,
                   schemes=tuple(schemes), input_model=input_model,
                   threads=threads, out=out)

    @classmethod
    def from_json(cls, path: str | Path) -> "SweepConfig":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def to_dict(self) -> dict:
        doc = self.scheme.to_dict()
        doc.update({
            "eps_grid": list(self.eps_grid),
            "samples": self.samples,
            "seed": self.seed,
            "schemes": list(self.schemes),
            "input_model": self.input_model,
            "threads": self.threads,
            "out": self.out,
        })
        return doc
