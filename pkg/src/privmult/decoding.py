"""Product decoding: coefficient recovery, symmetric sums, and estimates.

The node outputs are evaluations of the product polynomial
p(x) = prod_i p_i(x).  In the optimal regime, solving the square Vandermonde
system over the first (M-1)T+1 grid points recovers the coefficients at
indices 0, T, 2T, ..., (M-1)T; rescaling by powers of zeta1 yields the
symmetric sums C_k, a triangular map converts them into the MMSE-rescaled
sums D_k, and the alternating sum gives an estimate whose residual is the
product of the per-input estimation noises.  In the minimal regime (N = T+1)
only c_0 and c_T are recoverable and the estimate is the optimal linear
combination of c_0 and c_0 + c_T under their analytic covariance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .bounds import lmmse_weights
from .errors import ParameterError, RegimeError
from .noise import NoiseCalibration
from .scheme import EvaluationGrid, Regime, ScalingSchedule, SchemeParams

logger = logging.getLogger(__name__)

__all__ = [
    "CoefficientSet",
    "DecodedEstimate",
    "vandermonde_solve",
    "mmse_alpha",
    "mmse_residual_variance",
    "extract_symmetric_sums",
    "dk_from_ck",
    "ck_from_dk",
    "final_estimate",
    "decode_optimal_regime",
    "decode_minimal_regime",
    "decoder_vector",
]


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients recovered from ``r`` evaluations (exact for degree < r)."""

    c: np.ndarray
    r: int
    cond: float
    ill_conditioned: bool


def vandermonde_solve(points, values, cond_threshold: float = 1e12) -> CoefficientSet:
    """Solve the square Vandermonde system V c = values.

    ``points`` must be pairwise distinct.  A condition number above the
    threshold attaches a warning flag to the result instead of failing: the
    solve is still exact up to floating-point error for polynomial data.
    """
    x = np.asarray(points, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ParameterError(f"points and values must be 1-D and matching, got {x.shape} vs {y.shape}")
    if len(np.unique(x)) != len(x):
        raise ParameterError(f"points must be pairwise distinct, got {x.tolist()}")
    vander = np.vander(x, len(x), increasing=True)
    cond = float(np.linalg.cond(vander))
    flagged = not math.isfinite(cond) or cond > cond_threshold
    if flagged:
        logger.warning("vandermonde_solve: condition number %.3g above threshold %.3g", cond, cond_threshold)
    try:
        coeffs = np.linalg.solve(vander, y)
    except np.linalg.LinAlgError:
        # numerically singular despite distinct points: fall back to the
        # least-squares solution and keep the warning flag
        coeffs = np.linalg.lstsq(vander, y, rcond=None)[0]
        flagged = True
    return CoefficientSet(c=coeffs, r=len(x), cond=cond, ill_conditioned=flagged)


def mmse_alpha(eta: float, sigma_sq: float) -> float:
    """Scalar Wiener scale for estimating A from A + R: alpha = eta/(sigma^2 + eta)."""
    if not (math.isfinite(eta) and eta >= 0.0):
        raise ParameterError(f"eta must be nonnegative, got {eta!r}")
    if not (math.isfinite(sigma_sq) and sigma_sq > 0.0):
        raise ParameterError(f"sigma_sq must be positive, got {sigma_sq!r}")
    return eta / (sigma_sq + eta)


def mmse_residual_variance(eta: float, sigma_sq: float) -> float:
    """Residual second moment E[Z^2] = eta sigma^2 / (eta + sigma^2) of the
    effective noise Z in alpha (A + R) = A + Z."""
    alpha = mmse_alpha(eta, sigma_sq)
    return alpha * sigma_sq


def extract_symmetric_sums(params: SchemeParams, schedule: ScalingSchedule,
                           node_outputs, grid: EvaluationGrid) -> np.ndarray:
    """Recover the symmetric sums C_0..C_{M-1} from the node outputs.

    Uses the first (M-1)T+1 grid points, solves for the product-polynomial
    coefficients, and rescales index l*T by zeta1^-l.  For T = 1 this reads
    the coefficients 0..M-1 directly.
    """
    if params.regime is not Regime.OPTIMAL:
        raise RegimeError(f"symmetric-sum extraction needs the optimal regime, got {params.regime}")
    r = (params.m - 1) * params.t + 1
    y = np.asarray(node_outputs, dtype=float)
    if y.shape[0] < r:
        raise ParameterError(f"need at least {r} node outputs, got {y.shape[0]}")
    solved = vandermonde_solve(grid.array()[:r], y[:r])
    return np.array([solved.c[ell * params.t] / schedule.zeta1**ell for ell in range(params.m)])


def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie strictly in (0, 1), got {alpha!r}")
    return float(alpha)


def dk_from_ck(c_values, alpha: float) -> np.ndarray:
    """Invert the triangular relation C_k = sum_{u<=k} C_{k,u} D_u where
    C_{k,u} = (-1)^u alpha^(u-M) C(M-u, k-u), by forward substitution."""
    alpha = _check_alpha(alpha)
    c_values = np.asarray(c_values, dtype=float)
    m = c_values.shape[0]
    d_values = np.zeros(m)
    for k in range(m):
        acc = c_values[k]
        for u in range(k):
            acc -= (-1) ** u * alpha ** (u - m) * math.comb(m - u, k - u) * d_values[u]
        d_values[k] = acc / ((-1) ** k * alpha ** (k - m))
    return d_values


def ck_from_dk(d_values, alpha: float) -> np.ndarray:
    """Forward map D -> C (used as the round-trip oracle for dk_from_ck)."""
    alpha = _check_alpha(alpha)
    d_values = np.asarray(d_values, dtype=float)
    m = d_values.shape[0]
    return np.array([
        sum((-1) ** u * alpha ** (u - m) * math.comb(m - u, k - u) * d_values[u]
            for u in range(k + 1))
        for k in range(m)
    ])


def final_estimate(d_values) -> float:
    """Alternating sum of the D_k, signed so the estimate tracks +prod(A).

    S = sum_k (-1)^k D_k equals prod(Z) + (-1)^(M+1) prod(A); returning S for
    odd M and -S for even M makes the estimate prod(A) +/- prod(Z).
    """
    d_values = np.asarray(d_values, dtype=float)
    m = d_values.shape[0]
    signed = float(sum((-1) ** k * d_values[k] for k in range(m)))
    return signed if m % 2 == 1 else -signed


@dataclass(frozen=True)
class DecodedEstimate:
    """Decoder output: the estimate plus the intermediate quantities.

    In the optimal regime ``c_values``/``d_values`` hold C_0..C_{M-1} and
    D_0..D_{M-1}.  In the minimal regime only (C_0, C_1) are identifiable
    (from c_0 and c_T/zeta1) and ``d_values`` is None.
    """

    estimate: float
    c_values: np.ndarray
    d_values: np.ndarray | None
    alpha: float


def decode_optimal_regime(params: SchemeParams, calibration: NoiseCalibration,
                          schedule: ScalingSchedule, node_outputs,
                          grid: EvaluationGrid) -> DecodedEstimate:
    """Full optimal-regime pipeline: extract C, map to D, alternating sum."""
    alpha = mmse_alpha(params.eta, calibration.sigma_sq)
    c_values = extract_symmetric_sums(params, schedule, node_outputs, grid)
    d_values = dk_from_ck(c_values, alpha)
    return DecodedEstimate(estimate=final_estimate(d_values), c_values=c_values,
                           d_values=d_values, alpha=alpha)


def minimal_regime_weights(params: SchemeParams, calibration: NoiseCalibration,
                           schedule: ScalingSchedule) -> np.ndarray:
    """Optimal linear weights for the minimal-regime observations
    (c_0, c_0 + c_T) under their analytic second moments.

    The covariance entries are (eta + sigma^2)^M, (eta + (1+zeta1) sigma^2)^M
    and (eta + (1+zeta1)^2 sigma^2)^M; contributions of order zeta2^2 from
    the secret-sharing layer are dropped, matching the vanishing-schedule
    expansion.
    """
    eta, m = params.eta, params.m
    sigma_sq = calibration.sigma_sq
    z1 = schedule.zeta1
    cov = np.array([
        [(eta + sigma_sq) ** m, (eta + (1.0 + z1) * sigma_sq) ** m],
        [(eta + (1.0 + z1) * sigma_sq) ** m, (eta + (1.0 + z1) ** 2 * sigma_sq) ** m],
    ])
    cross = np.array([eta**m, eta**m])
    return lmmse_weights(cov, cross, target_var=eta**m).weights


def decode_minimal_regime(params: SchemeParams, calibration: NoiseCalibration,
                          schedule: ScalingSchedule, node_outputs,
                          grid: EvaluationGrid) -> DecodedEstimate:
    """Minimal-regime decoder: recover c_0 and c_T from T+1 evaluations and
    combine the observations (c_0, c_0 + c_T) with the analytic weights."""
    if params.regime is not Regime.MINIMAL:
        raise RegimeError(f"minimal-regime decoding needs N = T+1 < M, got {params.regime}")
    r = params.t + 1
    y = np.asarray(node_outputs, dtype=float)
    if y.shape[0] < r:
        raise ParameterError(f"need at least {r} node outputs, got {y.shape[0]}")
    solved = vandermonde_solve(grid.array()[:r], y[:r])
    c0 = solved.c[0]
    c_top = solved.c[params.t]
    weights = minimal_regime_weights(params, calibration, schedule)
    observations = np.array([c0, c0 + c_top])
    alpha = mmse_alpha(params.eta, calibration.sigma_sq)
    return DecodedEstimate(
        estimate=float(weights @ observations),
        c_values=np.array([c0, c_top / schedule.zeta1]),
        d_values=None,
        alpha=alpha,
    )


def decoder_vector(params: SchemeParams, calibration: NoiseCalibration,
                   schedule: ScalingSchedule, grid: EvaluationGrid,
                   decoder) -> np.ndarray:
    """Materialize a regime decoder as the vector d with estimate = d . outputs.

    Both decoders are linear functionals of the node outputs for fixed
    (params, schedule, grid), so probing with basis vectors is exact.
    """
    d = np.empty(params.n)
    for j in range(params.n):
        basis = np.zeros(params.n)
        basis[j] = 1.0
        d[j] = decoder(params, calibration, schedule, basis, grid).estimate
    return d
