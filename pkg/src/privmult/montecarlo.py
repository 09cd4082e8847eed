"""Monte Carlo verification layer.

Estimates the LMSE of a scheme/decoder pair, the empirically-optimal linear
decoder, and the brute-force symmetric-sum oracles.  All estimators are
deterministic for a fixed (config, seed): work is split into fixed-size
chunks, each chunk draws from a counter-derived child seed, and chunk
statistics are merged in index order, so results do not depend on the worker
count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .bounds import lmmse_weights
from .decoding import decoder_vector
from .errors import ParameterError
from .noise import NoiseCalibration, laplace_unit_sample, optimal_gamma, optimal_variance
from .scheme import (EvaluationGrid, ScalingSchedule, SchemeParams,
                     encoding_powers, layer_coefficients)

__all__ = [
    "InputModel",
    "McResult",
    "mc_lmse",
    "mc_optimal_linear",
    "mc_baseline_lmse",
    "scheme_sampler",
    "baseline_sampler",
    "direct_Ck",
    "direct_Dk",
]

_CHUNK = 16384
_INPUT_KINDS = ("rademacher", "uniform", "gaussian")


@dataclass(frozen=True)
class InputModel:
    """Zero-mean input distribution with per-coordinate variance exactly
    ``variance``; coordinates are independent."""

    kind: str = "rademacher"
    variance: float = 1.0

    def __post_init__(self):
        if self.kind not in _INPUT_KINDS:
            raise ParameterError(f"input kind must be one of {_INPUT_KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.variance) and self.variance >= 0.0):
            raise ParameterError(f"variance must be nonnegative, got {self.variance!r}")

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        root = math.sqrt(self.variance)
        if self.kind == "rademacher":
            return (rng.integers(0, 2, size=shape) * 2 - 1) * root
        if self.kind == "uniform":
            return rng.uniform(-root * math.sqrt(3.0), root * math.sqrt(3.0), size=shape)
        return rng.normal(0.0, root, size=shape)


@dataclass(frozen=True)
class McResult:
    """Monte Carlo estimate with its standard error of the mean."""

    estimate: float
    stderr: float
    samples: int
    seed: int
    note: str | None = None


def _chunk_seeds(seed: int, n_chunks: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n_chunks)


def _merge_moments(stats):
    """Combine per-chunk (count, mean, M2) in order (Chan's update)."""
    count, mean, m2 = 0, 0.0, 0.0
    for c_count, c_mean, c_m2 in stats:
        if c_count == 0:
            continue
        delta = c_mean - mean
        total = count + c_count
        mean += delta * c_count / total
        m2 += c_m2 + delta * delta * count * c_count / total
        count = total
    return count, mean, m2


def _welford_run(chunk_fn, samples: int, seed: int, threads: int, chunk_size: int):
    """Evaluate chunk_fn(rng, m) -> per-sample values over all chunks and
    return (count, mean, M2) merged in chunk order."""
    n_chunks = (samples + chunk_size - 1) // chunk_size
    seeds = _chunk_seeds(seed, n_chunks)
    sizes = [min(chunk_size, samples - i * chunk_size) for i in range(n_chunks)]

    def run(i: int):
        values = chunk_fn(np.random.default_rng(seeds[i]), sizes[i])
        mean = float(values.mean())
        return sizes[i], mean, float(((values - mean) ** 2).sum())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(run, range(n_chunks)))
    else:
        stats = [run(i) for i in range(n_chunks)]
    return _merge_moments(stats)


def scheme_sampler(params: SchemeParams, calibration: NoiseCalibration,
                   schedule: ScalingSchedule, grid: EvaluationGrid,
                   input_model: InputModel):
    """Batched sampler of the layered scheme.

    Returns a callable (rng, m) -> (node_outputs (m, N), target products (m,)).
    """
    powers = encoding_powers(grid, params.t, npoints=params.n)

    def draw(rng: np.random.Generator, m: int):
        a = input_model.sample(rng, (m, params.m))
        r = calibration.sample(rng, size=(m, params.m))
        if params.t >= 2:
            s = laplace_unit_sample(rng, size=(m, params.m, params.t - 1))
        else:
            s = np.zeros((m, params.m, 0))
        coeffs = layer_coefficients(a, r, s, schedule, params.t)
        outputs = np.einsum("jk,mik->mji", powers, coeffs).prod(axis=2)
        return outputs, a.prod(axis=1)

    return draw


def baseline_sampler(params: SchemeParams, input_model: InputModel):
    """Batched sampler of the independent-noise baseline: each node holds the
    inputs perturbed by its own optimal staircase draw at the full budget."""
    calibration = NoiseCalibration(
        target_epsilon=params.epsilon,
        eps_bar=params.epsilon,
        gamma_star=optimal_gamma(params.epsilon),
        sigma_sq=optimal_variance(params.epsilon),
    )

    def draw(rng: np.random.Generator, m: int):
        a = input_model.sample(rng, (m, params.m))
        r = calibration.sample(rng, size=(m, params.n, params.m))
        outputs = (a[:, None, :] + r).prod(axis=2)
        return outputs, a.prod(axis=1)

    return draw


def mc_lmse(params: SchemeParams, calibration: NoiseCalibration,
            schedule: ScalingSchedule, grid: EvaluationGrid,
            input_model: InputModel, decoder, samples: int, seed: int,
            threads: int = 1, chunk_size: int = _CHUNK) -> McResult:
    """Monte Carlo mean squared error of a regime decoder.

    ``decoder`` is one of the regime decode functions; it is materialized
    once as a linear functional of the node outputs (both decoders are
    linear for fixed parameters), then applied to vectorized fresh draws of
    (inputs, noise).
    """
    if samples < 1000:
        raise ParameterError(f"need at least 1000 samples, got {samples}")
    d = decoder_vector(params, calibration, schedule, grid, decoder)
    draw = scheme_sampler(params, calibration, schedule, grid, input_model)

    def chunk_fn(rng, m):
        outputs, target = draw(rng, m)
        return (outputs @ d - target) ** 2

    count, mean, m2 = _welford_run(chunk_fn, samples, seed, threads, chunk_size)
    stderr = math.sqrt(m2 / (count - 1) / count)
    return McResult(estimate=mean, stderr=stderr, samples=count, seed=seed)


def mc_optimal_linear(params: SchemeParams, sampler, samples: int, seed: int,
                      threads: int = 1, chunk_size: int = _CHUNK,
                      cond_threshold: float = 1e12) -> McResult:
    """LMSE achieved by the empirically-optimal linear decoder.

    First pass accumulates the output second moments and the cross moments
    with the target product and solves the normal equations (ridge-stabilized
    with a note when the empirical covariance is ill-conditioned); the second
    pass regenerates the identical sample stream and measures the residual of
    the fitted weights.  The result upper-bounds what any fixed linear
    decoder can achieve on the sampled scheme, up to sampling error.
    """
    if samples < 10_000:
        raise ParameterError(f"need at least 10000 samples, got {samples}")
    n_chunks = (samples + chunk_size - 1) // chunk_size
    seeds = _chunk_seeds(seed, n_chunks)
    sizes = [min(chunk_size, samples - i * chunk_size) for i in range(n_chunks)]

    def moments(i: int):
        outputs, target = sampler(np.random.default_rng(seeds[i]), sizes[i])
        return outputs.T @ outputs, outputs.T @ target

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(moments, range(n_chunks)))
    else:
        partials = [moments(i) for i in range(n_chunks)]
    syy = sum(p[0] for p in partials)
    syp = sum(p[1] for p in partials)
    count = sum(sizes)
    cov = syy / count
    cross = syp / count

    note = None
    cond = float(np.linalg.cond(cov))
    if not math.isfinite(cond) or cond > cond_threshold:
        note = f"ill-conditioned empirical covariance (cond={cond:.3g})"
    try:
        weights = np.linalg.solve(cov, cross)
    except np.linalg.LinAlgError:
        weights = None
    if weights is None or not np.all(np.isfinite(weights)):
        # rescue path: the gentlest ridge that makes the solve go through,
        # so near-null directions are perturbed as little as possible
        ridge = np.trace(cov) / cov.shape[0] * 1e-14
        while True:
            try:
                weights = np.linalg.solve(cov + ridge * np.eye(cov.shape[0]), cross)
                if np.all(np.isfinite(weights)):
                    break
            except np.linalg.LinAlgError:
                pass
            ridge *= 100.0
        note = f"ridge-regularized (cond={cond:.3g}, ridge={ridge:.3g})"

    def chunk_fn(rng, m):
        outputs, target = sampler(rng, m)
        return (outputs @ weights - target) ** 2

    count2, mean, m2 = _welford_run(chunk_fn, samples, seed, threads, chunk_size)
    stderr = math.sqrt(m2 / (count2 - 1) / count2)
    return McResult(estimate=mean, stderr=stderr, samples=count2, seed=seed, note=note)


def mc_baseline_lmse(params: SchemeParams, input_model: InputModel, samples: int,
                     seed: int, threads: int = 1, chunk_size: int = _CHUNK) -> McResult:
    """Monte Carlo LMSE of the independent-noise baseline under its analytic
    optimal linear weights."""
    if samples < 1000:
        raise ParameterError(f"need at least 1000 samples, got {samples}")
    eta, m_inputs, n_nodes = params.eta, params.m, params.n
    diag = (eta + optimal_variance(params.epsilon)) ** m_inputs
    off = eta**m_inputs
    cov = np.full((n_nodes, n_nodes), off)
    np.fill_diagonal(cov, diag)
    weights = lmmse_weights(cov, np.full(n_nodes, off), target_var=off).weights
    draw = baseline_sampler(params, input_model)

    def chunk_fn(rng, m):
        outputs, target = draw(rng, m)
        return (outputs @ weights - target) ** 2

    count, mean, m2 = _welford_run(chunk_fn, samples, seed, threads, chunk_size)
    stderr = math.sqrt(m2 / (count - 1) / count)
    return McResult(estimate=mean, stderr=stderr, samples=count, seed=seed)


def direct_Ck(a_values, r_values, k: int) -> float:
    """Brute-force symmetric sum over size-k subsets:

        C_k = sum_{|S|=k} prod_{i in S} R_i * prod_{l not in S} (A_l + R_l).
    """
    a_values = np.asarray(a_values, dtype=float)
    r_values = np.asarray(r_values, dtype=float)
    m = a_values.shape[0]
    if not (0 <= k <= m - 1):
        raise ParameterError(f"k must lie in [0, M-1], got k={k}, M={m}")
    total = 0.0
    for subset in combinations(range(m), k):
        chosen = set(subset)
        term = 1.0
        for i in range(m):
            term *= r_values[i] if i in chosen else (a_values[i] + r_values[i])
        total += term
    return total


def direct_Dk(a_values, z_values, k: int) -> float:
    """Brute-force MMSE-rescaled symmetric sum:

        D_k = sum_{|S|=k} prod_{i in S} A_i * prod_{l not in S} (A_l + Z_l).
    """
    a_values = np.asarray(a_values, dtype=float)
    z_values = np.asarray(z_values, dtype=float)
    m = a_values.shape[0]
    if not (0 <= k <= m - 1):
        raise ParameterError(f"k must lie in [0, M-1], got k={k}, M={m}")
    total = 0.0
    for subset in combinations(range(m), k):
        chosen = set(subset)
        term = 1.0
        for i in range(m):
            term *= a_values[i] if i in chosen else (a_values[i] + z_values[i])
        total += term
    return total
