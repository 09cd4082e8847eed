"""Embedded fixture suite: worked examples, identities, bounds, audits.

``run_selftest`` executes every fixture and returns a report; the CLI prints
one pass/fail line per fixture and exits nonzero on any failure.  The
optional ``corrupt_alpha`` knob perturbs the MMSE scale used inside the
triangular-decoding fixture so the suite's fault sensitivity can be
demonstrated: a 1% corruption must be detected.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass

from .auditing import audit_marginal, budget_account, budget_threshold_n, build_colluder_view
from .bounds import (baseline_independent_lmse, gap_of_snr, lmse_minimal_lower,
                     lmse_minimal_upper, lmse_optimal, snr_star)
from .config import SchemeConfig, build_pipeline
from .decoding import decode_optimal_regime, dk_from_ck, mmse_alpha
from .montecarlo import direct_Ck, direct_Dk
from .noise import calibrate_R_noise
from .scheme import encode, make_schedule, node_products

__all__ = ["SelftestCheck", "SelftestReport", "run_selftest"]


@dataclass(frozen=True)
class SelftestCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class SelftestReport:
    checks: tuple[SelftestCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks]
        lines.append("selftest: " + ("all fixtures passed" if self.passed
                                     else "FIXTURE FAILURES PRESENT"))
        return "\n".join(lines)


def _decode_fixture(m: int, n_nodes: int, t: int, seed: int, inputs, sign: float,
                    name: str, tol_scale: float) -> SelftestCheck:
    """Worked example: the decoded estimate must approach prod(A) + sign * prod(Z)
    computed from the realized noise."""
    cfg = SchemeConfig.from_dict({"M": m, "N": n_nodes, "T": t, "eta": 1.0,
                                  "epsilon": 1.0, "n": 4096})
    pipe = build_pipeline(cfg)
    rng = np.random.default_rng(seed)
    inputs = np.asarray(inputs, dtype=float)
    table = encode(pipe.params, pipe.calibration, pipe.schedule, pipe.grid, inputs, rng)
    est = decode_optimal_regime(pipe.params, pipe.calibration, pipe.schedule,
                                node_products(table), pipe.grid).estimate
    alpha = mmse_alpha(1.0, pipe.calibration.sigma_sq)
    z = alpha * (inputs + table.noise_R) - inputs
    expected = inputs.prod() + sign * z.prod()
    err = abs(est - expected)
    tol = tol_scale * pipe.schedule.zeta1
    return SelftestCheck(name, err <= tol,
                         f"|estimate - expected effective error form| = {err:.3e} (tol {tol:.3e})")


def _five_node_fixture() -> SelftestCheck:
    """Three multiplicands, five nodes, two colluders: the recovered symmetric
    sums converge to the brute-force subset sums as the schedule advances."""
    base = {"M": 3, "N": 5, "T": 2, "eta": 1.0, "epsilon": 2.0}
    errs = []
    for n in (128, 1024):
        pipe = build_pipeline(SchemeConfig.from_dict({**base, "n": n}))
        rng = np.random.default_rng(99)
        inputs = np.array([0.3, -1.2, 0.7])
        table = encode(pipe.params, pipe.calibration, pipe.schedule, pipe.grid, inputs, rng)
        decoded = decode_optimal_regime(pipe.params, pipe.calibration, pipe.schedule,
                                        node_products(table), pipe.grid)
        direct = np.array([direct_Ck(inputs, table.noise_R, k) for k in range(3)])
        errs.append(float(np.max(np.abs(decoded.c_values - direct))))
    ok = errs[1] < errs[0] and errs[1] < 0.2
    return SelftestCheck("five-node symmetric sums", ok,
                         f"max |C_hat - C| = {errs[0]:.3e} (n=128) -> {errs[1]:.3e} (n=1024)")


def _alternating_sum_fixture(corrupt: float) -> SelftestCheck:
    """Triangular decode of brute-force C must reproduce brute-force D, and
    the alternating sum must equal prod(Z) + (-1)^(M+1) prod(A)."""
    rng = np.random.default_rng(13)
    worst = 0.0
    for m in range(2, 6):
        for _ in range(50):
            a = rng.normal(size=m)
            r = rng.normal(size=m) * 2.0
            alpha_true = 1.0 / (1.0 + 2.3)
            z = alpha_true * (a + r) - a
            c = np.array([direct_Ck(a, r, k) for k in range(m)])
            d = dk_from_ck(c, alpha_true * (1.0 + corrupt))
            d_direct = np.array([direct_Dk(a, z, k) for k in range(m)])
            scale = max(1.0, float(np.max(np.abs(d_direct))))
            worst = max(worst, float(np.max(np.abs(d - d_direct))) / scale)
            lhs = sum((-1) ** k * d_direct[k] for k in range(m))
            rhs = z.prod() + (-1) ** (m + 1) * a.prod()
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return SelftestCheck("alternating-sum identity", worst <= 1e-10,
                         f"worst relative deviation {worst:.3e} (tol 1e-10)")


def _bound_ordering_fixture() -> SelftestCheck:
    ok = True
    for eps in (0.25, 0.5, 1.0, 2.0, 4.0):
        ok &= lmse_minimal_lower(eps, 1.0, 4, 1) <= lmse_minimal_upper(eps, 1.0, 4, 1)
        ok &= lmse_optimal(eps, 1.0, 3) <= baseline_independent_lmse(eps, 1.0, 3, 5)
        ok &= gap_of_snr(snr_star(eps, 1.0), 4, 2) >= 1.0
    return SelftestCheck("bound orderings", bool(ok),
                         "lower<=upper, optimal<=baseline, gap>=1 over the eps grid")


def _audit_fixture() -> SelftestCheck:
    details = []
    ok = True
    for eps in (1.0, 2.0):
        calibration = calibrate_R_noise(eps)
        sched = make_schedule(1024, 1)
        audit = audit_marginal(eps, calibration, sched.zeta1, grid_point=1.0)
        ok &= audit.satisfied
        details.append(f"T=1 eps={eps}: eps_hat={audit.eps_hat:.4f}")
    pipe = build_pipeline(SchemeConfig.from_dict(
        {"M": 3, "N": 5, "T": 2, "eta": 1.0, "epsilon": 1.0}))
    n0 = budget_threshold_n(pipe.grid, (0, 1), 2, eps_bar_bar=0.99, target_epsilon=1.0)
    sched = make_schedule(n0, 2)
    view = build_colluder_view(pipe.grid, (0, 1), 2)
    report = budget_account(view, sched.zeta1, sched.zeta2, 0.99, 1.0)
    ok &= report.satisfied
    details.append(f"T=2 budget fits at n0={n0} (eps_total={report.eps_total:.4f})")
    return SelftestCheck("privacy audits", bool(ok), "; ".join(details))


def run_selftest(corrupt_alpha: float | None = None) -> SelftestReport:
    """Run every fixture; ``corrupt_alpha`` injects a relative perturbation of
    the triangular-decode MMSE scale (fault-detection demonstration)."""
    corrupt = float(corrupt_alpha or 0.0)
    checks = (
        _decode_fixture(2, 2, 1, seed=2024, inputs=[0.8, -1.1], sign=-1.0,
                        name="two-node worked example", tol_scale=50.0),
        _decode_fixture(3, 3, 1, seed=7, inputs=[1.0, -0.5, 0.9], sign=1.0,
                        name="three-node worked example", tol_scale=200.0),
        _five_node_fixture(),
        _alternating_sum_fixture(corrupt),
        _bound_ordering_fixture(),
        _audit_fixture(),
    )
    return SelftestReport(checks=checks)
