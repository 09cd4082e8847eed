"""Differentially private one-round secure multiplication over the reals.

Simulates and verifies a layered polynomial-encoding scheme in which N nodes
compute the product of M private inputs under T-collusion epsilon-DP:
staircase base noise, Laplace secret-sharing layer, vanishing cancellation
layer, Vandermonde decoding, closed-form trade-off bounds, privacy auditing,
and a Monte Carlo verification harness.
"""

from .auditing import (BudgetReport, ColluderView, MarginalAudit, ViewDecomposition,
                       audit_marginal, audit_threshold_n, budget_account,
                       budget_threshold_n, build_colluder_view, decompose_view)
from .bounds import (BoundSet, LmmseSolution, baseline_independent_lmse, compute_bounds,
                     gap, gap_of_snr, lmmse_weights, lmse_minimal_lower,
                     lmse_minimal_upper, lmse_optimal, snr_prime, snr_star)
from .config import Pipeline, SchemeConfig, SweepConfig, build_pipeline
from .decoding import (CoefficientSet, DecodedEstimate, ck_from_dk, decode_minimal_regime,
                       decode_optimal_regime, decoder_vector, dk_from_ck,
                       extract_symmetric_sums, final_estimate, mmse_alpha,
                       mmse_residual_variance, vandermonde_solve)
from .errors import (ConfigError, NumericError, ParameterError, PrivMultError,
                     RegimeError)
from .experiment import TradeoffPoint, emit_csv, run_sweep, write_config_log
from .montecarlo import (InputModel, McResult, baseline_sampler, direct_Ck, direct_Dk,
                         mc_baseline_lmse, mc_lmse, mc_optimal_linear, scheme_sampler)
from .noise import (NoiseCalibration, StaircaseSpec, calibrate_R_noise,
                    epsilon_for_variance, laplace_unit_pdf, laplace_unit_sample,
                    optimal_gamma, optimal_variance, staircase_pdf, staircase_sample,
                    staircase_variance)
from .scheme import (EvaluationGrid, Regime, ScalingSchedule, SchemeParams, ShareTable,
                     classify_regime, default_grid, encode, encoding_powers,
                     layer_coefficients, make_schedule, node_products)
from .selftest import SelftestReport, run_selftest

__version__ = "0.1.0"
