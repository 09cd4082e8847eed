"""Additive noise mechanisms for pure differential privacy.

Implements the symmetric staircase density for unit sensitivity (piecewise
constant, geometric decay by e^-epsilon per period, a width-gamma sub-step
inside each period), its exact variance as a function of gamma, the
variance-optimal step split, and the unit-variance Laplace sampler used for
the secret-sharing layer of the encoding polynomials.

The closed-form optimum and the numerical gamma-minimization are kept as two
independent routes; ``optimal_gamma`` cross-checks one against the other and
refuses to return an inconsistent calibration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import NumericError, ParameterError

__all__ = [
    "StaircaseSpec",
    "NoiseCalibration",
    "optimal_variance",
    "optimal_gamma",
    "staircase_variance",
    "staircase_pdf",
    "staircase_sample",
    "calibrate_R_noise",
    "laplace_unit_sample",
    "laplace_unit_pdf",
    "epsilon_for_variance",
]

#: Default fraction by which the working privacy budget is tightened so that
#: the base mechanism sits strictly below the target epsilon.
DEFAULT_PRIV_SLACK = 0.01


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not math.isfinite(epsilon) or epsilon <= 0.0:
        raise ParameterError(f"epsilon must be positive and finite, got {epsilon!r}")
    return epsilon


@dataclass(frozen=True)
class StaircaseSpec:
    """Parameters of the unit-sensitivity staircase density.

    ``epsilon`` is the pure-DP budget, ``gamma`` in (0, 1] splits each unit
    period into a high step of width gamma and a low step of width 1 - gamma.
    ``delta`` is the sensitivity width and is fixed to 1: neighboring inputs
    differ by at most one unit.
    """

    epsilon: float
    gamma: float
    delta: float = 1.0

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        if not (0.0 < self.gamma <= 1.0):
            raise ParameterError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if self.delta != 1.0:
            raise ParameterError("only unit sensitivity (delta = 1) is supported")

    @property
    def normalizer(self) -> float:
        """Density value at the origin, a(gamma, epsilon)."""
        b = math.exp(-self.epsilon)
        return (1.0 - b) / (2.0 * (self.gamma + b * (1.0 - self.gamma)))


def optimal_variance(epsilon: float) -> float:
    """Smallest variance of unit-sensitivity additive noise achieving epsilon-DP.

    Closed form of the gamma-minimized staircase variance.  With
    b = e^-epsilon and t = (b(1+b)/2)^(1/3),

        sigma*(epsilon)^2 = (t^2 + b) / (1 - b)^2.

    Strictly decreasing in epsilon.  Approaches the Laplace benchmark
    2/epsilon^2 as epsilon -> 0 and decays like 2^(-2/3) e^(-2 epsilon / 3)
    in the low-privacy limit.
    """
    epsilon = _check_epsilon(epsilon)
    b = math.exp(-epsilon)
    t = (b * (1.0 + b) / 2.0) ** (1.0 / 3.0)
    return (t * t + b) / (1.0 - b) ** 2


def staircase_variance(gamma: float, epsilon: float) -> float:
    """Exact variance of the staircase density at a given step split.

    Derived by summing the geometric series of per-period second moments:
    with b = e^-epsilon and the period mass split A2 = gamma + b(1-gamma),

        Var = b(1+b)/(1-b)^2
              + (b/(1-b)) * (gamma^2 + b(1-gamma^2)) / A2
              + (gamma^3 + b(1-gamma^3)) / (3 A2).
    """
    epsilon = _check_epsilon(epsilon)
    if not (0.0 < gamma <= 1.0):
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma!r}")
    b = math.exp(-epsilon)
    a2 = gamma + b * (1.0 - gamma)
    term_lattice = b * (1.0 + b) / (1.0 - b) ** 2
    term_cross = (b / (1.0 - b)) * (gamma**2 + b * (1.0 - gamma**2)) / a2
    term_within = (gamma**3 + b * (1.0 - gamma**3)) / (3.0 * a2)
    return term_lattice + term_cross + term_within


def optimal_gamma(epsilon: float, *, rel_tol: float = 1e-3) -> float:
    """Step split minimizing the staircase variance at the given epsilon.

    Found by bounded 1-D minimization of :func:`staircase_variance`; the
    minimized value is cross-checked against :func:`optimal_variance` and a
    disagreement beyond ``rel_tol`` raises :class:`NumericError`.
    """
    epsilon = _check_epsilon(epsilon)
    result = minimize_scalar(
        lambda g: staircase_variance(g, epsilon),
        bounds=(1e-12, 1.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if not result.success:
        raise NumericError(f"gamma minimization failed at epsilon={epsilon}: {result.message}")
    gamma = float(result.x)
    achieved = float(result.fun)
    expected = optimal_variance(epsilon)
    rel = abs(achieved - expected) / expected
    if rel > rel_tol:
        raise NumericError(
            "minimized staircase variance disagrees with the closed form: "
            f"epsilon={epsilon} gamma={gamma} achieved={achieved!r} "
            f"expected={expected!r} rel={rel:.3e}"
        )
    return gamma


def staircase_pdf(x, spec: StaircaseSpec):
    """Staircase density evaluated at ``x`` (scalar or array).

    For x >= 0 with k = floor(x): a e^{-k eps} on the first sub-step
    (frac(x) < gamma) and a e^{-(k+1) eps} on the second; symmetric in x.
    """
    scalar = np.isscalar(x)
    ax = np.abs(np.asarray(x, dtype=float))
    k = np.floor(ax)
    frac = ax - k
    a = spec.normalizer
    level = np.where(frac < spec.gamma, k, k + 1.0)
    out = a * np.exp(-level * spec.epsilon)
    return float(out) if scalar else out


def staircase_sample(spec: StaircaseSpec, rng: np.random.Generator, size=None):
    """Draw from the staircase density.

    Sign is uniform; the period index is geometric with ratio e^-epsilon;
    the sub-step is picked with its conditional mass (independent of the
    period); the position within the chosen sub-interval is uniform.
    """
    b = math.exp(-spec.epsilon)
    shape = () if size is None else size
    sign = rng.integers(0, 2, size=shape) * 2 - 1
    period = rng.geometric(1.0 - b, size=shape) - 1
    p_first = spec.gamma / (spec.gamma + b * (1.0 - spec.gamma))
    first = rng.random(size=shape) < p_first
    u = rng.random(size=shape)
    magnitude = np.where(first, period + spec.gamma * u,
                         period + spec.gamma + (1.0 - spec.gamma) * u)
    out = sign * magnitude
    return float(out) if size is None else out


@dataclass(frozen=True)
class NoiseCalibration:
    """Resolved staircase calibration for the base privacy layer.

    ``eps_bar`` is the budget actually spent by the mechanism A -> A + R,
    chosen strictly below ``target_epsilon`` so the vanishing polynomial
    perturbations have headroom.  ``sigma_sq`` is the exact variance of the
    staircase at (eps_bar, gamma_star).
    """

    target_epsilon: float
    eps_bar: float
    gamma_star: float
    sigma_sq: float

    @property
    def spec(self) -> StaircaseSpec:
        return StaircaseSpec(epsilon=self.eps_bar, gamma=self.gamma_star)

    def sample(self, rng: np.random.Generator, size=None):
        """Draw base-layer noise realizations."""
        return staircase_sample(self.spec, rng, size=size)


def calibrate_R_noise(epsilon: float, priv_slack: float = DEFAULT_PRIV_SLACK) -> NoiseCalibration:
    """Calibrate the base noise strictly inside the target budget.

    Sets eps_bar = epsilon * (1 - priv_slack), takes the variance-optimal
    gamma at eps_bar, and records sigma^2 = sigma*(eps_bar)^2.  The slack must
    be strictly positive: the construction needs eps_bar < epsilon.
    """
    epsilon = _check_epsilon(epsilon)
    if not (0.0 < priv_slack < 1.0):
        raise ParameterError(f"priv_slack must lie strictly in (0, 1), got {priv_slack!r}")
    eps_bar = epsilon * (1.0 - priv_slack)
    gamma_star = optimal_gamma(eps_bar)
    return NoiseCalibration(
        target_epsilon=epsilon,
        eps_bar=eps_bar,
        gamma_star=gamma_star,
        sigma_sq=optimal_variance(eps_bar),
    )


def epsilon_for_variance(sigma_sq: float) -> float:
    """Inverse of :func:`optimal_variance`: the budget whose optimal staircase
    has the given variance.  Useful for fixtures that pin sigma^2 directly."""
    if not (math.isfinite(sigma_sq) and sigma_sq > 0.0):
        raise ParameterError(f"sigma_sq must be positive and finite, got {sigma_sq!r}")
    lo, hi = 1e-8, 1.0
    while optimal_variance(hi) > sigma_sq:
        hi *= 2.0
        if hi > 1e6:
            raise NumericError(f"no epsilon found for sigma_sq={sigma_sq!r}")
    return brentq(lambda e: optimal_variance(e) - sigma_sq, lo, hi, xtol=1e-13)


_LAPLACE_SCALE = 1.0 / math.sqrt(2.0)  # unit variance: Var = 2 b^2


def laplace_unit_sample(rng: np.random.Generator, size=None):
    """Zero-mean Laplace draw with variance exactly 1 (scale 1/sqrt(2))."""
    out = rng.laplace(0.0, _LAPLACE_SCALE, size=size)
    return float(out) if size is None else out


def laplace_unit_pdf(x):
    """Density of the unit-variance Laplace distribution."""
    x = np.asarray(x, dtype=float)
    return np.exp(-np.abs(x) / _LAPLACE_SCALE) / (2.0 * _LAPLACE_SCALE)
