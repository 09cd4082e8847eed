"""Privacy auditing: colluder-view decomposition and budget accounting.

For T >= 2 colluding nodes, the joint view of one multiplicand is an affine
image of T independent coordinates: one staircase-protected coordinate
(a vanishing perturbation of A + R) and T-1 Laplace coordinates whose noise
coefficients blow up along the schedule.  The accounted budget is the
composition of the per-coordinate budgets; it is a bound, not a tightness
claim, and the module reports the schedule index from which the bound fits
under the target epsilon.  For T = 1 the view is scalar and an analytic
density-ratio sweep bounds the realized budget directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError
from .noise import NoiseCalibration, staircase_pdf
from .scheme import EvaluationGrid, make_schedule

__all__ = [
    "ColluderView",
    "ViewDecomposition",
    "BudgetReport",
    "MarginalAudit",
    "build_colluder_view",
    "decompose_view",
    "budget_account",
    "budget_threshold_n",
    "audit_marginal",
    "audit_threshold_n",
]


@dataclass(frozen=True)
class ColluderView:
    """Linear structure of T colluding observations of one multiplicand.

    Row j of ``gbar`` is (x_j^T, x_j, x_j^2, ..., x_j^(T-1)) for the j-th
    colluding node, so the view is
    (A + R) 1 + gbar @ (zeta1 R, zeta2 S_1, ..., zeta2 S_{T-1}).
    ``gprime_dot_one[j]`` is the j-th entry of gbar^-1 @ 1.
    """

    subset: tuple[int, ...]
    points: tuple[float, ...]
    gbar: np.ndarray
    gbar_inv: np.ndarray
    gprime_dot_one: tuple[float, ...]


def build_colluder_view(grid: EvaluationGrid, subset, t: int) -> ColluderView:
    """Assemble the T x T view matrix for the given node subset (0-based)."""
    if t < 2:
        raise ParameterError("T = 1 has a scalar colluder view; use audit_marginal")
    subset = tuple(int(j) for j in subset)
    if len(subset) != t:
        raise ParameterError(f"subset must contain exactly T={t} nodes, got {subset}")
    if len(set(subset)) != len(subset):
        raise ParameterError(f"subset nodes must be distinct, got {subset}")
    if any(j < 0 or j >= len(grid) for j in subset):
        raise ParameterError(f"subset indices out of range for grid of size {len(grid)}")
    pts = np.array([grid.points[j] for j in subset])
    gbar = np.column_stack([pts**t] + [pts**k for k in range(1, t)])
    det = np.linalg.det(gbar)
    if det == 0.0:
        raise NumericError(f"view matrix singular for subset {subset}; grid points must be distinct")
    gbar_inv = np.linalg.inv(gbar)
    u = gbar_inv @ np.ones(t)
    return ColluderView(subset=subset, points=tuple(float(p) for p in pts),
                        gbar=gbar, gbar_inv=gbar_inv,
                        gprime_dot_one=tuple(float(v) for v in u))


@dataclass(frozen=True)
class ViewDecomposition:
    """Full-rank transform P with P^-1 Z = Z' in per-coordinate form.

    Z'_1 = A + (1 + zeta1/u_1) R with u_1 = gprime_dot_one[0]; for j >= 2,
    Z'_j = A + [zeta2 (u_1 + zeta1) / (zeta1 u_j)] S_{j-1}, unless u_j = 0,
    in which case the coordinate is pure scaled noise and charges no budget.
    """

    p_matrix: np.ndarray
    p_inverse: np.ndarray
    r_multiplier: float
    laplace_coefficients: tuple[float | None, ...]
    pure_noise: tuple[bool, ...]


def decompose_view(view: ColluderView, zeta1: float, zeta2: float) -> ViewDecomposition:
    """Construct the decorrelating transform for the colluder view.

    Composition of (i) gbar^-1, (ii) normalization of the first coordinate by
    u_1, and (iii) elimination of the R component from the remaining
    coordinates followed by rescaling to unit signal.
    """
    if zeta1 <= 0.0 or zeta2 <= 0.0:
        raise ParameterError(f"zeta1 and zeta2 must be positive, got {zeta1!r}, {zeta2!r}")
    t = view.gbar.shape[0]
    u = np.asarray(view.gprime_dot_one)
    u1 = u[0]
    if u1 == 0.0:
        raise NumericError("g'_1 . 1 = 0 should be impossible for distinct grid points")

    normalize = np.eye(t)
    normalize[0, 0] = 1.0 / u1
    eliminate = np.eye(t)
    rescale = np.eye(t)
    coeffs: list[float | None] = [None] * t
    pure: list[bool] = [False] * t
    for j in range(1, t):
        if u[j] == 0.0:
            # coordinate is zeta2 * S_{j-1} only: pure noise, nothing to strip
            pure[j] = True
            continue
        eliminate[j, 0] = -u[j] * u1 / (u1 + zeta1)
        signal = u[j] * zeta1 / (u1 + zeta1)
        rescale[j, j] = 1.0 / signal
        coeffs[j] = zeta2 * (u1 + zeta1) / (zeta1 * u[j])
    p_inv = rescale @ eliminate @ normalize @ view.gbar_inv
    return ViewDecomposition(
        p_matrix=np.linalg.inv(p_inv),
        p_inverse=p_inv,
        r_multiplier=1.0 + zeta1 / u1,
        laplace_coefficients=tuple(coeffs),
        pure_noise=tuple(pure),
    )


@dataclass(frozen=True)
class BudgetReport:
    """Composed privacy budget for one colluder view and schedule point."""

    eps_bar_bar: float
    laplace_terms: tuple[float, ...]
    eps_total: float
    target: float
    satisfied: bool


def budget_account(view: ColluderView | None, zeta1: float, zeta2: float | None,
                   eps_bar_bar: float, target_epsilon: float) -> BudgetReport:
    """Compose the per-coordinate budgets of the decomposed view.

    The staircase coordinate is charged eps_bar_bar; each Laplace coordinate
    with coefficient c charges sqrt(2)/c, i.e.
    sqrt(2) zeta1 |u_j| / (zeta2 |u_1 + zeta1|).  Coordinates flagged as pure
    noise charge nothing.  ``view=None`` covers T = 1 (no Laplace layer).
    """
    if eps_bar_bar <= 0.0 or target_epsilon <= 0.0:
        raise ParameterError("budgets must be positive")
    terms: list[float] = []
    if view is not None:
        if zeta2 is None:
            raise ParameterError("zeta2 is required for T >= 2 budget accounting")
        u = view.gprime_dot_one
        denom = zeta2 * abs(u[0] + zeta1)
        for j in range(1, len(u)):
            if u[j] == 0.0:
                continue
            terms.append(math.sqrt(2.0) * zeta1 * abs(u[j]) / denom)
    eps_total = float(eps_bar_bar + sum(terms))
    return BudgetReport(eps_bar_bar=float(eps_bar_bar), laplace_terms=tuple(terms),
                        eps_total=eps_total, target=float(target_epsilon),
                        satisfied=bool(eps_total <= target_epsilon))


def budget_threshold_n(grid: EvaluationGrid, subset, t: int, eps_bar_bar: float,
                       target_epsilon: float, beta1: float | None = None,
                       max_exponent: int = 60) -> int:
    """Smallest power-of-two schedule index whose composed budget fits the
    target; raises NumericError when no index up to 2^max_exponent fits."""
    view = build_colluder_view(grid, subset, t) if t >= 2 else None
    for k in range(1, max_exponent + 1):
        n = 2**k
        sched = make_schedule(n, t, beta1)
        report = budget_account(view, sched.zeta1, sched.zeta2, eps_bar_bar, target_epsilon)
        if report.satisfied:
            return n
    raise NumericError(
        f"composed budget never fits target {target_epsilon} up to n=2^{max_exponent} "
        f"(eps_bar_bar={eps_bar_bar}); increase the slack or the search range"
    )


@dataclass(frozen=True)
class MarginalAudit:
    """Result of the analytic single-coordinate density-ratio sweep."""

    eps_hat: float
    target: float
    satisfied: bool


def audit_marginal(epsilon_target: float, calibration: NoiseCalibration,
                   zeta1: float, grid_point: float, t: int = 1,
                   periods: int = 20, points_per_period: int = 160,
                   shift_count: int = 48) -> MarginalAudit:
    """Empirical budget of one node's view A + (1 + zeta1 x^T) R.

    Rescaling by the noise multiplier c = 1 + zeta1 x^T turns the view into
    the plain staircase with shift budget 1/c, so the audit takes the sup of
    the analytic density ratio over a dense grid of positions and shifts
    |s| <= 1/c and returns its log.  This is a grid sup, not a certificate.
    """
    if zeta1 < 0.0:
        raise ParameterError(f"zeta1 must be nonnegative, got {zeta1!r}")
    spec = calibration.spec
    multiplier = 1.0 + zeta1 * float(grid_point) ** t
    if multiplier <= 0.0:
        raise ParameterError(f"noise multiplier must stay positive, got {multiplier!r}")
    shift_budget = 1.0 / multiplier

    half_width = periods + 0.5
    count = int(2 * half_width * points_per_period) + 1
    # fractional offset keeps grid nodes off the exact step boundaries
    xs = np.linspace(-half_width, half_width, count) + 0.137 / points_per_period
    dens = staircase_pdf(xs, spec)
    shifts = np.linspace(shift_budget / shift_count, shift_budget, shift_count)
    best = 0.0
    for sign in (1.0, -1.0):
        shifted = staircase_pdf(xs[None, :] + sign * shifts[:, None], spec)
        best = max(best, float(np.max(dens[None, :] / shifted)))
    eps_hat = float(math.log(best))
    return MarginalAudit(eps_hat=eps_hat, target=float(epsilon_target),
                         satisfied=bool(eps_hat <= epsilon_target))


def audit_threshold_n(epsilon_target: float, calibration: NoiseCalibration,
                      grid_point: float, t: int = 1, max_exponent: int = 24) -> int:
    """Smallest power-of-two schedule index whose marginal audit fits the
    target budget."""
    for k in range(1, max_exponent + 1):
        sched = make_schedule(2**k, 1)
        audit = audit_marginal(epsilon_target, calibration, sched.zeta1, grid_point, t=t)
        if audit.satisfied:
            return 2**k
    raise NumericError(f"marginal audit never fits target {epsilon_target} up to n=2^{max_exponent}")
