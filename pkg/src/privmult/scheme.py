"""Scheme parameters, scaling schedules, grids, and the layered share encoder.

Every multiplicand i is encoded as evaluations of a degree-T polynomial

    p_i(x) = (A_i + R_i) + zeta2 * sum_t S_{i,t} x^t + zeta1 * R_i x^T   (T >= 2)
    p_i(x) = (A_i + R_i) + zeta1 * R_i x                                 (T = 1)

on N distinct grid points.  R_i is the calibrated staircase noise, the
S_{i,t} are unit-variance Laplace, and (zeta1, zeta2) follow a vanishing
schedule that separates the wanted coefficients from pollution as the
schedule index grows.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, RegimeError
from .noise import NoiseCalibration, laplace_unit_sample

logger = logging.getLogger(__name__)

__all__ = [
    "Regime",
    "SchemeParams",
    "ScalingSchedule",
    "EvaluationGrid",
    "ShareTable",
    "classify_regime",
    "make_schedule",
    "default_grid",
    "encoding_powers",
    "layer_coefficients",
    "encode",
    "node_products",
]


class Regime(enum.Enum):
    OPTIMAL = "optimal"
    MINIMAL = "minimal"
    OUT_OF_SCOPE = "out_of_scope"


def classify_regime(m: int, n: int, t: int) -> Regime:
    """Regime of an (M, N, T) triple.

    Optimal when (M-1)T+1 <= N <= MT; minimal when N = T+1 and N < M; every
    other triple is out of scope for this pipeline.
    """
    if m < 2 or n < 2 or t < 1:
        raise ParameterError(f"need M >= 2, N >= 2, T >= 1, got M={m} N={n} T={t}")
    if (m - 1) * t + 1 <= n <= m * t:
        return Regime.OPTIMAL
    if n == t + 1 and n < m:
        return Regime.MINIMAL
    return Regime.OUT_OF_SCOPE


@dataclass(frozen=True)
class SchemeParams:
    """The (M, N, T, eta, epsilon) tuple plus its regime tag.

    ``m`` multiplicands, ``n`` nodes, ``t`` colluders tolerated, ``eta`` the
    per-input variance bound, ``epsilon`` the DP budget.
    """

    m: int
    n: int
    t: int
    eta: float
    epsilon: float
    regime: Regime = None  # type: ignore[assignment]  # derived in __post_init__

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta >= 0.0):
            raise ParameterError(f"eta must be nonnegative and finite, got {self.eta!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        derived = classify_regime(self.m, self.n, self.t)
        if self.regime is None:
            object.__setattr__(self, "regime", derived)
        elif self.regime is not derived:
            raise ParameterError(f"regime {self.regime} inconsistent with (M,N,T); expected {derived}")


@dataclass(frozen=True)
class ScalingSchedule:
    """Schedule entry: index ``n`` and the derived (zeta1, zeta2).

    For T >= 2 the defaults are zeta2 = 1/n and zeta1 = n^(-beta1) with
    beta1 = (2T-1)/(2(T-1)), which satisfy zeta1/zeta2 -> 0, zeta2 -> 0 and
    zeta2^(T/(T-1))/zeta1 -> 0.  For T = 1 only zeta1 = 1/n is needed.
    """

    n: int
    zeta1: float
    zeta2: float | None
    beta1: float


def make_schedule(n: int, t: int, beta1: float | None = None) -> ScalingSchedule:
    """Build the schedule entry for index ``n`` and threshold ``t``."""
    if int(n) != n or n < 2:
        raise ParameterError(f"schedule index n must be an integer >= 2, got {n!r}")
    n = int(n)
    if t < 1:
        raise ParameterError(f"T must be >= 1, got {t!r}")
    if t == 1:
        if beta1 is not None and beta1 != 1.0:
            raise ParameterError("beta1 is not configurable for T = 1 (zeta1 = 1/n)")
        return ScalingSchedule(n=n, zeta1=1.0 / n, zeta2=None, beta1=1.0)
    upper = t / (t - 1.0)
    if beta1 is None:
        beta1 = (2.0 * t - 1.0) / (2.0 * (t - 1.0))
    if not (1.0 < beta1 < upper):
        raise ParameterError(f"beta1 must lie in (1, {upper}), got {beta1!r}")
    return ScalingSchedule(n=n, zeta1=float(n) ** (-beta1), zeta2=1.0 / n, beta1=beta1)


@dataclass(frozen=True)
class EvaluationGrid:
    """N pairwise-distinct evaluation points; distinctness makes every square
    Vandermonde submatrix used downstream invertible."""

    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) == 0:
            raise ParameterError("grid must contain at least one point")
        if len(set(pts)) != len(pts):
            raise ParameterError(f"grid points must be pairwise distinct, got {pts}")
        if not all(math.isfinite(p) for p in pts):
            raise ParameterError(f"grid points must be finite, got {pts}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


def default_grid(n: int) -> EvaluationGrid:
    """Integer grid x_j = j for j = 1..N."""
    if n < 1:
        raise ParameterError(f"N must be >= 1, got {n!r}")
    grid = EvaluationGrid(tuple(float(j) for j in range(1, n + 1)))
    cond = float(np.linalg.cond(np.vander(grid.array(), n, increasing=True)))
    logger.debug("default grid N=%d: full Vandermonde condition number %.6g", n, cond)
    return grid


def encoding_powers(grid: EvaluationGrid, t: int, npoints: int | None = None) -> np.ndarray:
    """Vandermonde block of powers 0..T over the first ``npoints`` grid points.

    Row j is (1, x_j, ..., x_j^T); this is the unweighted generator of the
    (N, T+1) real-valued GRS view of the shares.
    """
    x = grid.array()[: (npoints if npoints is not None else len(grid))]
    return np.vander(x, t + 1, increasing=True)


def layer_coefficients(inputs, noise_r, noise_s, schedule: ScalingSchedule, t: int) -> np.ndarray:
    """Per-input polynomial coefficients, lowest degree first.

    Shape (..., M, T+1): [A_i + R_i, zeta2 S_{i,1}, ..., zeta2 S_{i,T-1},
    zeta1 R_i].  Works on batched leading dimensions.
    """
    inputs = np.asarray(inputs, dtype=float)
    noise_r = np.asarray(noise_r, dtype=float)
    if t == 1:
        return np.stack([inputs + noise_r, schedule.zeta1 * noise_r], axis=-1)
    noise_s = np.asarray(noise_s, dtype=float)
    base = (inputs + noise_r)[..., None]
    mid = schedule.zeta2 * noise_s
    top = (schedule.zeta1 * noise_r)[..., None]
    return np.concatenate([base, mid, top], axis=-1)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ShareTable:
    """Noisy shares for one protocol run.

    ``shares[j, i]`` is p_i(x_j).  The realized noise is retained so tests
    and oracles can reconstruct the polynomials exactly; ``inputs`` is kept
    for verification only and is stripped in protocol mode.
    """

    shares: np.ndarray          # (N, M)
    noise_R: np.ndarray         # (M,)
    noise_S: np.ndarray         # (M, T-1); zero columns for T = 1
    inputs: np.ndarray | None   # (M,) or None after stripping

    def without_inputs(self) -> "ShareTable":
        """Drop the plaintext inputs, honoring the trust model."""
        return replace(self, inputs=None)


def encode(params: SchemeParams, calibration: NoiseCalibration,
           schedule: ScalingSchedule, grid: EvaluationGrid,
           inputs, rng: np.random.Generator) -> ShareTable:
    """Draw fresh noise and evaluate the encoding polynomials on the grid."""
    if params.regime is Regime.OUT_OF_SCOPE:
        raise RegimeError(f"(M={params.m}, N={params.n}, T={params.t}) is out of scope")
    if len(grid) < params.n:
        raise ParameterError(f"grid has {len(grid)} points but N={params.n}")
    inputs = np.asarray(inputs, dtype=float)
    if inputs.shape != (params.m,):
        raise ParameterError(f"expected {params.m} inputs, got shape {inputs.shape}")
    if not np.all(np.isfinite(inputs)):
        raise ParameterError("inputs must be finite")

    noise_r = calibration.sample(rng, size=(params.m,))
    if params.t >= 2:
        noise_s = laplace_unit_sample(rng, size=(params.m, params.t - 1))
    else:
        noise_s = np.zeros((params.m, 0))
    coeffs = layer_coefficients(inputs, noise_r, noise_s, schedule, params.t)
    powers = encoding_powers(grid, params.t, npoints=params.n)
    shares = np.einsum("jk,ik->ji", powers, coeffs)
    return ShareTable(
        shares=_freeze(shares),
        noise_R=_freeze(noise_r),
        noise_S=_freeze(noise_s),
        inputs=_freeze(inputs),
    )


def node_products(table: ShareTable) -> np.ndarray:
    """Per-node local products: V~(j) = prod_i shares[j, i], equal to the
    product polynomial evaluated at x_j."""
    return np.prod(table.shares, axis=1)
