"""Privacy-auditor tests: view assembly, decomposition, budgets, marginals."""

import math

import numpy as np
import pytest

from privmult import (EvaluationGrid, NumericError, ParameterError, SchemeParams,
                      audit_marginal, audit_threshold_n, budget_account,
                      budget_threshold_n, build_colluder_view, calibrate_R_noise,
                      decompose_view, default_grid, encode, make_schedule)


class TestBuildColluderView:
    def test_worked_two_point_example(self):
        # subset points (1, 2), T = 2: rows (x^2, x)
        view = build_colluder_view(default_grid(5), (0, 1), 2)
        np.testing.assert_allclose(view.gbar, [[1.0, 1.0], [4.0, 2.0]])
        assert np.linalg.det(view.gbar) == pytest.approx(-2.0, rel=1e-12)
        assert view.gprime_dot_one[0] == pytest.approx(-0.5, rel=1e-12)
        assert view.gprime_dot_one[1] == pytest.approx(1.5, rel=1e-12)

    def test_all_subsets_invertible_on_default_grid(self):
        from itertools import combinations
        grid = default_grid(5)
        for subset in combinations(range(5), 2):
            view = build_colluder_view(grid, subset, 2)
            assert abs(np.linalg.det(view.gbar)) > 1e-12

    def test_permuted_subset_permutes_rows(self):
        grid = default_grid(5)
        forward = build_colluder_view(grid, (1, 3), 2)
        flipped = build_colluder_view(grid, (3, 1), 2)
        np.testing.assert_allclose(flipped.gbar, forward.gbar[::-1])
        # per-ordering first coordinate is well-defined either way
        assert forward.gprime_dot_one[0] != 0.0
        assert flipped.gprime_dot_one[0] != 0.0

    def test_t1_redirected_to_marginal_audit(self):
        with pytest.raises(ParameterError):
            build_colluder_view(default_grid(3), (0,), 1)

    def test_subset_validation(self):
        grid = default_grid(5)
        with pytest.raises(ParameterError):
            build_colluder_view(grid, (0, 0), 2)
        with pytest.raises(ParameterError):
            build_colluder_view(grid, (0, 9), 2)
        with pytest.raises(ParameterError):
            build_colluder_view(grid, (0, 1, 2), 2)


class TestDecomposeView:
    def _realized_views(self, params, cal, sched, grid, subset, count, seed):
        """Colluder observations of multiplicand 1 straight from the encoder."""
        rng = np.random.default_rng(seed)
        observed, latent = [], []
        for _ in range(count):
            inputs = rng.normal(size=params.m)
            table = encode(params, cal, sched, grid, inputs, rng)
            observed.append(table.shares[list(subset), 0])
            latent.append((inputs[0], table.noise_R[0], table.noise_S[0]))
        return observed, latent

    def test_round_trip_and_coordinates(self):
        params = SchemeParams(m=3, n=5, t=2, eta=1.0, epsilon=2.0)
        cal = calibrate_R_noise(2.0)
        sched = make_schedule(16, 2)  # zeta1 = 1/64, zeta2 = 1/16
        grid = default_grid(5)
        subset = (0, 1)
        view = build_colluder_view(grid, subset, 2)
        decomp = decompose_view(view, sched.zeta1, sched.zeta2)
        assert np.linalg.matrix_rank(decomp.p_matrix) == 2
        observed, latent = self._realized_views(params, cal, sched, grid, subset, 100, 5)
        u1 = view.gprime_dot_one[0]
        for z, (a1, r1, s1) in zip(observed, latent):
            z_prime = decomp.p_inverse @ z
            # coordinate forms of the decomposition
            expected_1 = a1 + (1.0 + sched.zeta1 / u1) * r1
            expected_2 = a1 + decomp.laplace_coefficients[1] * s1[0]
            assert z_prime[0] == pytest.approx(expected_1, rel=1e-10, abs=1e-10)
            assert z_prime[1] == pytest.approx(expected_2, rel=1e-10, abs=1e-10)
            # full-rank round trip P Z' = Z
            np.testing.assert_allclose(decomp.p_matrix @ z_prime, z, rtol=1e-10, atol=1e-10)

    def test_noise_multiplier_tends_to_one(self):
        view = build_colluder_view(default_grid(5), (0, 1), 2)
        gaps = []
        for index in (4, 16, 64, 256):
            sched = make_schedule(index, 2)
            decomp = decompose_view(view, sched.zeta1, sched.zeta2)
            gaps.append(abs(decomp.r_multiplier - 1.0))
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_laplace_coefficient_diverges(self):
        view = build_colluder_view(default_grid(5), (0, 1), 2)
        coeffs = []
        for index in (4, 16, 64, 256):
            sched = make_schedule(index, 2)
            decomp = decompose_view(view, sched.zeta1, sched.zeta2)
            coeffs.append(abs(decomp.laplace_coefficients[1]))
        assert all(a < b for a, b in zip(coeffs, coeffs[1:]))

    def test_pure_noise_coordinate_flagged(self):
        # symmetric pair (-1, 1) at T = 2 gives g'_2 . 1 = 0: the second
        # coordinate is pure Laplace noise and charges no budget
        grid = EvaluationGrid((-1.0, 1.0, 2.0))
        view = build_colluder_view(grid, (0, 1), 2)
        assert view.gprime_dot_one[1] == pytest.approx(0.0, abs=1e-14)
        decomp = decompose_view(view, 1.0 / 64.0, 1.0 / 16.0)
        assert decomp.pure_noise == (False, True)
        assert decomp.laplace_coefficients[1] is None
        report = budget_account(view, 1.0 / 64.0, 1.0 / 16.0, 0.99, 1.0)
        assert report.laplace_terms == ()

    def test_zeta_validation(self):
        view = build_colluder_view(default_grid(5), (0, 1), 2)
        with pytest.raises(ParameterError):
            decompose_view(view, 0.0, 0.1)


class TestBudgetAccount:
    def test_worked_example_term(self):
        # T=2, points (1,2), zeta1=1/64, zeta2=1/16: the single Laplace term is
        # sqrt(2) (1/64) |1.5| / ((1/16) |-0.5 + 1/64|) = 1.0948750160307833
        view = build_colluder_view(default_grid(5), (0, 1), 2)
        report = budget_account(view, 1.0 / 64.0, 1.0 / 16.0,
                                eps_bar_bar=0.99, target_epsilon=1.0)
        assert len(report.laplace_terms) == 1
        assert report.laplace_terms[0] == pytest.approx(1.0948750160307833, rel=1e-12)
        assert report.eps_total == pytest.approx(0.99 + 1.0948750160307833, rel=1e-12)
        assert not report.satisfied

    def test_t1_has_no_laplace_terms(self):
        report = budget_account(None, 1.0 / 256.0, None, eps_bar_bar=1.98, target_epsilon=2.0)
        assert report.laplace_terms == ()
        assert report.eps_total == pytest.approx(1.98)
        assert report.satisfied

    def test_budget_monotone_in_schedule(self):
        view = build_colluder_view(default_grid(5), (0, 1), 2)
        totals = []
        for k in range(4, 11):
            sched = make_schedule(2**k, 2)
            totals.append(budget_account(view, sched.zeta1, sched.zeta2, 0.99, 1.0).eps_total)
        assert all(a >= b for a, b in zip(totals, totals[1:]))

    def test_budget_tends_to_eps_bar_bar(self):
        view = build_colluder_view(default_grid(5), (0, 1), 2)
        sched = make_schedule(2**30, 2)
        report = budget_account(view, sched.zeta1, sched.zeta2, 0.99, 1.0)
        assert report.eps_total == pytest.approx(0.99, abs=1e-3)

    def test_threshold_reported_and_consistent(self):
        grid = default_grid(5)
        n0 = budget_threshold_n(grid, (0, 1), 2, eps_bar_bar=0.99, target_epsilon=1.0)
        sched = make_schedule(n0, 2)
        view = build_colluder_view(grid, (0, 1), 2)
        assert budget_account(view, sched.zeta1, sched.zeta2, 0.99, 1.0).satisfied
        half = make_schedule(n0 // 2, 2)
        assert not budget_account(view, half.zeta1, half.zeta2, 0.99, 1.0).satisfied

    def test_threshold_failure_raises(self):
        grid = default_grid(5)
        with pytest.raises(NumericError):
            budget_threshold_n(grid, (0, 1), 2, eps_bar_bar=2.0, target_epsilon=1.0,
                               max_exponent=10)


class TestAuditMarginal:
    def test_unperturbed_mechanism_recovers_eps_bar(self):
        cal = calibrate_R_noise(1.0)
        audit = audit_marginal(1.0, cal, zeta1=0.0, grid_point=1.0)
        assert audit.eps_hat == pytest.approx(cal.eps_bar, abs=1e-9)

    def test_monotone_in_zeta_and_within_target(self):
        # the analytic sup is constant in zeta1 (shrinking the shift budget
        # cannot raise the one-boundary ratio), so non-strict monotonicity
        # plus the target bound is the honest check
        cal = calibrate_R_noise(1.0)
        values = [audit_marginal(1.0, cal, z, grid_point=1.0).eps_hat
                  for z in (0.0, 0.01, 0.1)]
        assert values[0] <= values[1] + 1e-12
        assert values[1] <= values[2] + 1e-12
        assert all(v <= 1.0 for v in values)

    def test_default_schedule_satisfies_target(self):
        cal = calibrate_R_noise(1.0)
        sched = make_schedule(64, 1)
        audit = audit_marginal(1.0, cal, sched.zeta1, grid_point=1.0)
        assert audit.satisfied
        assert audit.eps_hat == pytest.approx(0.99, abs=1e-6)

    def test_threshold_n_reported(self):
        cal = calibrate_R_noise(2.0)
        n0 = audit_threshold_n(2.0, cal, grid_point=1.0)
        sched = make_schedule(n0, 1)
        assert audit_marginal(2.0, cal, sched.zeta1, grid_point=1.0).satisfied

    def test_symmetry_across_multiplicands(self):
        # the construction is identical for every multiplicand index: the
        # audit takes no index and the same report covers all of them
        cal = calibrate_R_noise(1.5)
        first = audit_marginal(1.5, cal, 0.01, grid_point=2.0, t=2)
        second = audit_marginal(1.5, cal, 0.01, grid_point=2.0, t=2)
        assert first == second

    def test_negative_zeta_rejected(self):
        cal = calibrate_R_noise(1.0)
        with pytest.raises(ParameterError):
            audit_marginal(1.0, cal, -0.1, grid_point=1.0)
