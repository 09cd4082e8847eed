"""Closed-form accuracy bounds and the linear-MMSE machinery.

All bounds are expressed through the signal-to-noise ratio
SNR*(epsilon) = eta / sigma*(epsilon)^2 of the variance-optimal base
mechanism.  Powers such as (1 + SNR*)^M are accumulated in the log domain so
sweep extremes do not overflow.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RegimeError
from .noise import optimal_variance
from .scheme import Regime, SchemeParams

logger = logging.getLogger(__name__)

__all__ = [
    "BoundSet",
    "LmmseSolution",
    "snr_star",
    "lmse_optimal",
    "lmse_minimal_upper",
    "lmse_minimal_lower",
    "snr_prime",
    "gap",
    "gap_of_snr",
    "lmmse_weights",
    "baseline_independent_lmse",
    "compute_bounds",
]


def snr_star(epsilon: float, eta: float) -> float:
    """Signal-to-noise ratio eta / sigma*(epsilon)^2 of the optimal base noise."""
    if not (math.isfinite(eta) and eta >= 0.0):
        raise ParameterError(f"eta must be nonnegative, got {eta!r}")
    return eta / optimal_variance(epsilon)


def _log_binomial_sum(s: float, choose_n: int, k_max: int, pow_m: int) -> float:
    """log of sum_{k=0}^{k_max} C(choose_n, k) s^k / (1+s)^pow_m for s >= 0."""
    if s < 0.0:
        raise ParameterError(f"snr must be nonnegative, got {s!r}")
    log_denom = pow_m * math.log1p(s)
    if s == 0.0:
        return -log_denom
    log_s = math.log(s)
    terms = [math.lgamma(choose_n + 1) - math.lgamma(k + 1) - math.lgamma(choose_n - k + 1)
             + k * log_s for k in range(k_max + 1)]
    peak = max(terms)
    return peak + math.log(sum(math.exp(t - peak) for t in terms)) - log_denom


def lmse_optimal(epsilon: float, eta: float, m: int) -> float:
    """eta^M / (1 + SNR*(epsilon))^M: the achievable limit in the regime
    (M-1)T+1 <= N <= MT and simultaneously the converse there."""
    if m < 1:
        raise ParameterError(f"M must be >= 1, got {m!r}")
    s = snr_star(epsilon, eta)
    if eta == 0.0:
        return 0.0
    return math.exp(m * (math.log(eta) - math.log1p(s)))


def _require_minimal(m: int, t: int) -> None:
    if not (t >= 1 and t + 1 < m):
        raise RegimeError(f"minimal-regime bound needs N = T+1 < M, got M={m}, T={t}")


def lmse_minimal_upper(epsilon: float, eta: float, m: int, t: int) -> float:
    """Achievable limit with N = T+1 < M nodes:

        eta^M ((1+s)^M - M s^(M-1) - s^M) / (1+s)^M,   s = SNR*(epsilon),

    evaluated through the cancellation-free binomial form
    sum_{k=0}^{M-2} C(M,k) s^k / (1+s)^M.
    """
    _require_minimal(m, t)
    s = snr_star(epsilon, eta)
    if eta == 0.0:
        return 0.0
    return math.exp(m * math.log(eta) + _log_binomial_sum(s, m, m - 2, m))


def lmse_minimal_lower(epsilon: float, eta: float, m: int, t: int) -> float:
    """Converse with N = T+1 < M nodes:

        eta^M ((1+s)^(M-T) - s^(M-T)) / (1+s)^M
            = eta^M sum_{k=0}^{M-T-1} C(M-T,k) s^k / (1+s)^M.
    """
    _require_minimal(m, t)
    s = snr_star(epsilon, eta)
    if eta == 0.0:
        return 0.0
    return math.exp(m * math.log(eta) + _log_binomial_sum(s, m - t, m - t - 1, m))


def snr_prime(epsilon: float, eta: float, m: int, t: int) -> float:
    """Signal-to-noise ratio of the single-node residual product estimate,

        SNR' = s^(M-T) / ((1+s)^(M-T) - s^(M-T)),

    the intermediate quantity behind the minimal-regime converse."""
    _require_minimal(m, t)
    s = snr_star(epsilon, eta)
    if s == 0.0:
        return 0.0
    return 1.0 / math.expm1((m - t) * math.log1p(1.0 / s))


def gap_of_snr(s: float, m: int, t: int) -> float:
    """Multiplicative gap between the minimal-regime bounds as a function of
    the SNR, Gap(s) = ((1+s)^M - M s^(M-1) - s^M) / ((1+s)^(M-T) - s^(M-T));
    expands as 1 + T s + O(s^2) in the high-privacy limit."""
    if m < 2 or t < 1 or t >= m:
        raise ParameterError(f"gap needs M >= 2 and 1 <= T < M, got M={m}, T={t}")
    log_num = _log_binomial_sum(s, m, m - 2, 0)
    log_den = _log_binomial_sum(s, m - t, m - t - 1, 0)
    return math.exp(log_num - log_den)


def gap(epsilon: float, m: int, t: int, eta: float = 1.0) -> float:
    """Gap evaluated at SNR*(epsilon)."""
    return gap_of_snr(snr_star(epsilon, eta), m, t)


@dataclass(frozen=True)
class LmmseSolution:
    """Normal-equation solution: weights, achieved LMSE, and optionally the
    determinant-form SNR when a noise covariance is supplied."""

    weights: np.ndarray
    lmse: float
    ill_conditioned: bool
    snr_det: float | None = None
    lmse_det: float | None = None


def lmmse_weights(cov_obs, cross, target_var: float, noise_cov=None,
                  cond_threshold: float = 1e12) -> LmmseSolution:
    """Optimal linear weights for estimating a zero-mean target.

    Solves cov_obs @ w = cross; the achieved LMSE is
    target_var - cross^T w.  A singular or ill-conditioned covariance falls
    back to a pseudo-inverse solve and flags the result.  When ``noise_cov``
    is given, also exposes 1 + SNR_a = det(cov_obs)/det(noise_cov) and the
    corresponding LMSE target_var / (1 + SNR_a).
    """
    cov = np.atleast_2d(np.asarray(cov_obs, dtype=float))
    cross = np.asarray(cross, dtype=float).reshape(-1)
    if cov.shape[0] != cov.shape[1] or cov.shape[0] != cross.shape[0]:
        raise ParameterError(f"inconsistent shapes: cov {cov.shape}, cross {cross.shape}")
    if not np.allclose(cov, cov.T, rtol=1e-8, atol=0.0):
        raise ParameterError("observation covariance must be symmetric")

    cond = float(np.linalg.cond(cov))
    flagged = not math.isfinite(cond) or cond > cond_threshold
    if flagged:
        logger.warning("lmmse_weights: covariance condition %.3g above threshold; using pseudo-solve", cond)
        weights = np.linalg.lstsq(cov, cross, rcond=None)[0]
    else:
        weights = np.linalg.solve(cov, cross)
    lmse = float(target_var - cross @ weights)

    snr_det = lmse_det = None
    if noise_cov is not None:
        noise_cov = np.atleast_2d(np.asarray(noise_cov, dtype=float))
        det_ratio = np.linalg.det(cov) / np.linalg.det(noise_cov)
        snr_det = float(det_ratio - 1.0)
        lmse_det = float(target_var / det_ratio)
    return LmmseSolution(weights=weights, lmse=lmse, ill_conditioned=flagged,
                         snr_det=snr_det, lmse_det=lmse_det)


def baseline_independent_lmse(epsilon: float, eta: float, m: int, n: int) -> float:
    """Optimal-linear LMSE of the independent-noise baseline.

    Each node multiplies inputs perturbed by its own optimal staircase draw;
    the resulting node outputs are exchangeable with diagonal covariance
    (eta + sigma*(eps)^2)^M, off-diagonal eta^M, and cross-moment eta^M
    against the target product.
    """
    if n < 1:
        raise ParameterError(f"N must be >= 1, got {n!r}")
    if eta == 0.0:
        return 0.0
    diag = (eta + optimal_variance(epsilon)) ** m
    off = eta**m
    cov = np.full((n, n), off)
    np.fill_diagonal(cov, diag)
    cross = np.full(n, off)
    return lmmse_weights(cov, cross, target_var=eta**m).lmse


@dataclass(frozen=True)
class BoundSet:
    """Bundle of the closed-form bounds for one parameter point."""

    snr_star: float
    lmse_opt: float
    lmse_min_upper: float | None
    lmse_min_lower: float | None
    gap: float | None

    def to_dict(self) -> dict:
        return {
            "snr_star": self.snr_star,
            "lmse_opt": self.lmse_opt,
            "lmse_min_upper": self.lmse_min_upper,
            "lmse_min_lower": self.lmse_min_lower,
            "gap": self.gap,
        }


def compute_bounds(params: SchemeParams) -> BoundSet:
    """Evaluate every bound applicable to the given scheme parameters."""
    if params.regime is Regime.OUT_OF_SCOPE:
        raise RegimeError(f"(M={params.m}, N={params.n}, T={params.t}) is out of scope")
    s = snr_star(params.epsilon, params.eta)
    opt = lmse_optimal(params.epsilon, params.eta, params.m)
    upper = lower = gap_value = None
    if params.regime is Regime.MINIMAL:
        upper = lmse_minimal_upper(params.epsilon, params.eta, params.m, params.t)
        lower = lmse_minimal_lower(params.epsilon, params.eta, params.m, params.t)
        gap_value = gap_of_snr(s, params.m, params.t)
    return BoundSet(snr_star=s, lmse_opt=opt, lmse_min_upper=upper,
                    lmse_min_lower=lower, gap=gap_value)
