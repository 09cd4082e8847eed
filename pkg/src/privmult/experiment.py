"""Sweep orchestration and CSV emission for trade-off experiments."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .bounds import baseline_independent_lmse, compute_bounds
from .config import Pipeline, SweepConfig, build_pipeline
from .decoding import decode_minimal_regime, decode_optimal_regime
from .errors import NumericError
from .montecarlo import InputModel, mc_baseline_lmse, mc_lmse
from .scheme import Regime

__all__ = ["TradeoffPoint", "run_sweep", "emit_csv", "write_config_log", "CSV_COLUMNS"]


@dataclass(frozen=True)
class TradeoffPoint:
    """One row of a privacy-accuracy sweep.

    Field order is the CSV column order and is append-only across versions.
    """

    epsilon: float
    snr_star: float
    lmse_theory: float
    lmse_mc: float
    lmse_mc_stderr: float
    bound_lower: float
    bound_upper: float
    baseline_lmse: float
    M: int
    N: int
    T: int
    eta: float
    n: int
    samples: int
    seed: int


CSV_COLUMNS = tuple(f.name for f in fields(TradeoffPoint))


def regime_decoder(pipeline: Pipeline):
    """Pick the decode function matching the pipeline's regime."""
    if pipeline.params.regime is Regime.OPTIMAL:
        return decode_optimal_regime
    return decode_minimal_regime


def run_sweep(config: SweepConfig) -> list[TradeoffPoint]:
    """Run the sweep: closed-form bounds plus Monte Carlo at every epsilon.

    Deterministic for a fixed config: the Monte Carlo seed of grid point i is
    ``seed + i``.  The layered scheme is simulated when requested in
    ``schemes``; the independent baseline column is analytic unless
    ``independent_baseline`` is requested, in which case it is simulated
    under its analytic optimal weights.
    """
    points: list[TradeoffPoint] = []
    for index, epsilon in enumerate(config.eps_grid):
        pipeline = build_pipeline(config.scheme, epsilon=epsilon)
        params = pipeline.params
        bounds = compute_bounds(params)
        if params.regime is Regime.OPTIMAL:
            theory = bounds.lmse_opt
            lower = upper = bounds.lmse_opt
        else:
            theory = bounds.lmse_min_upper
            lower, upper = bounds.lmse_min_lower, bounds.lmse_min_upper

        point_seed = config.seed + index
        input_model = InputModel(kind=config.input_model, variance=params.eta)
        if "layered" in config.schemes:
            mc = mc_lmse(params, pipeline.calibration, pipeline.schedule, pipeline.grid,
                         input_model, regime_decoder(pipeline), config.samples,
                         point_seed, threads=config.threads)
            lmse_mc, lmse_mc_stderr = mc.estimate, mc.stderr
        else:
            lmse_mc, lmse_mc_stderr = math.nan, math.nan

        if "independent_baseline" in config.schemes:
            baseline = mc_baseline_lmse(params, input_model, config.samples,
                                        point_seed, threads=config.threads).estimate
        else:
            baseline = baseline_independent_lmse(epsilon, params.eta, params.m, params.n)

        row = TradeoffPoint(
            epsilon=epsilon, snr_star=bounds.snr_star, lmse_theory=theory,
            lmse_mc=lmse_mc, lmse_mc_stderr=lmse_mc_stderr,
            bound_lower=lower, bound_upper=upper, baseline_lmse=baseline,
            M=params.m, N=params.n, T=params.t, eta=params.eta,
            n=config.scheme.schedule_n, samples=config.samples, seed=point_seed,
        )
        if "layered" in config.schemes and not math.isfinite(row.lmse_mc):
            raise NumericError(f"non-finite Monte Carlo LMSE at epsilon={epsilon}")
        points.append(row)
    return points


def _format(value) -> str:
    return f"{value:.10g}"


def emit_csv(points: list[TradeoffPoint], path: str | Path) -> Path:
    """Write sweep rows with the exact column names, 10 significant digits,
    newline-terminated."""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(",".join(CSV_COLUMNS) + "\n")
            for point in points:
                handle.write(",".join(_format(getattr(point, name)) for name in CSV_COLUMNS) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing sweep CSV to {path}: {exc}") from exc
    return path


def write_config_log(config: SweepConfig, csv_path: str | Path) -> Path:
    """Log the resolved configuration (after defaults) as JSON beside the CSV."""
    csv_path = Path(csv_path)
    log_path = csv_path.with_suffix(".config.json")
    with open(log_path, "w", encoding="utf-8") as handle:
        json.dump(config.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return log_path
