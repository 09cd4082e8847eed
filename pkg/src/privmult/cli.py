"""Command-line interface.

Subcommands: ``sweep`` (trade-off curve to CSV), ``simulate`` (one verbose
protocol run), ``audit`` (privacy accounting report), ``bounds`` (closed-form
bound set as JSON), ``selftest`` (embedded fixture suite).  Flags mirror the
JSON configuration keys and override file values.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 self-test failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .auditing import (audit_marginal, audit_threshold_n, budget_account,
                       budget_threshold_n, build_colluder_view)
from .bounds import compute_bounds
from .config import SchemeConfig, SweepConfig, build_pipeline
from .errors import ConfigError, NumericError, ParameterError, RegimeError
from .experiment import emit_csv, regime_decoder, run_sweep, write_config_log
from .montecarlo import InputModel
from .scheme import encode, make_schedule, node_products
from .selftest import run_selftest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_SELFTEST = 4

_SCHEME_FLAGS = ("M", "N", "T", "eta", "epsilon", "n", "beta1", "priv_slack")


def _load_raw_config(args: argparse.Namespace) -> dict:
    raw: dict = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
        if not isinstance(raw, dict):
            raise ConfigError("configuration document must be a JSON object",
                              invariant="document_object")
    for key in _SCHEME_FLAGS + ("samples", "seed", "threads", "input_model", "out"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "eps_grid", None):
        raw["eps_grid"] = [float(tok) for tok in args.eps_grid.split(",")]
    if getattr(args, "grid", None):
        raw["grid"] = [float(tok) for tok in args.grid.split(",")]
    if getattr(args, "schemes", None):
        raw["schemes"] = args.schemes.split(",")
    return raw


def _add_scheme_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--M", type=int, help="number of multiplicands")
    parser.add_argument("--N", type=int, help="number of nodes")
    parser.add_argument("--T", type=int, help="collusion threshold")
    parser.add_argument("--eta", type=float, help="input variance bound")
    parser.add_argument("--epsilon", type=float, help="DP budget")
    parser.add_argument("--n", type=int, help="scaling-schedule index")
    parser.add_argument("--beta1", type=float, help="zeta1 exponent (T >= 2)")
    parser.add_argument("--priv-slack", dest="priv_slack", type=float,
                        help="fraction of epsilon reserved as headroom")
    parser.add_argument("--grid", help="comma-separated evaluation points")


def cmd_sweep(args: argparse.Namespace) -> int:
    config = SweepConfig.from_dict(_load_raw_config(args))
    points = run_sweep(config)
    out = config.out or "tradeoff.csv"
    emit_csv(points, out)
    log_path = write_config_log(config, out)
    print(f"wrote {len(points)} sweep rows to {out} (config log: {log_path})")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    raw = _load_raw_config(args)
    seed = raw.pop("seed", 42)
    input_kind = raw.pop("input_model", "rademacher")
    for key in ("samples", "threads", "out", "eps_grid", "schemes"):
        raw.pop(key, None)
    cfg = SchemeConfig.from_dict(raw)
    pipe = build_pipeline(cfg)
    rng = np.random.default_rng(seed)
    inputs = InputModel(kind=input_kind, variance=pipe.params.eta).sample(rng, (pipe.params.m,))
    table = encode(pipe.params, pipe.calibration, pipe.schedule, pipe.grid, inputs, rng)
    if args.protocol_mode:
        table = table.without_inputs()
    outputs = node_products(table)
    decoded = regime_decoder(pipe)(pipe.params, pipe.calibration, pipe.schedule,
                                   outputs, pipe.grid)
    document = {
        "config": cfg.to_dict(),
        "seed": seed,
        "regime": pipe.params.regime.value,
        "calibration": {
            "eps_bar": pipe.calibration.eps_bar,
            "gamma_star": pipe.calibration.gamma_star,
            "sigma_sq": pipe.calibration.sigma_sq,
        },
        "schedule": {"n": pipe.schedule.n, "zeta1": pipe.schedule.zeta1,
                     "zeta2": pipe.schedule.zeta2, "beta1": pipe.schedule.beta1},
        "grid": list(pipe.grid.points),
        "shares": table.shares.tolist(),
        "node_outputs": outputs.tolist(),
        "estimate": decoded.estimate,
        "alpha": decoded.alpha,
        "c_values": decoded.c_values.tolist(),
        "d_values": decoded.d_values.tolist() if decoded.d_values is not None else None,
    }
    if not args.protocol_mode:
        document["inputs"] = table.inputs.tolist()
        document["true_product"] = float(np.prod(table.inputs))
        document["error"] = decoded.estimate - document["true_product"]
    if not all(math.isfinite(v) for v in outputs) or not math.isfinite(decoded.estimate):
        raise NumericError("non-finite node outputs or estimate")
    print(json.dumps(document, indent=2))
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    raw = _load_raw_config(args)
    for key in ("samples", "threads", "out", "eps_grid", "schemes", "seed", "input_model"):
        raw.pop(key, None)
    cfg = SchemeConfig.from_dict(raw)
    pipe = build_pipeline(cfg)
    params, calibration = pipe.params, pipe.calibration
    eps_bar_bar = calibration.eps_bar
    n_list = ([int(tok) for tok in args.n_list.split(",")]
              if args.n_list else [16, 64, 256, 1024, 4096])

    document: dict = {
        "config": cfg.to_dict(),
        "eps_bar_bar": eps_bar_bar,
        "marginal_table": [],
    }
    worst_point = max(pipe.grid.points[: params.n], key=abs)
    for n in n_list:
        sched = make_schedule(n, params.t, cfg.beta1)
        audit = audit_marginal(params.epsilon, calibration, sched.zeta1,
                               worst_point, t=params.t)
        document["marginal_table"].append(
            {"n": n, "eps_hat": audit.eps_hat, "satisfied": audit.satisfied})
    if params.t >= 2:
        subset = tuple(range(params.t))
        view = build_colluder_view(pipe.grid, subset, params.t)
        sched = make_schedule(cfg.schedule_n, params.t, cfg.beta1)
        report = budget_account(view, sched.zeta1, sched.zeta2, eps_bar_bar, params.epsilon)
        document["budget"] = {
            "subset": list(subset),
            "n": cfg.schedule_n,
            "laplace_terms": list(report.laplace_terms),
            "eps_total": report.eps_total,
            "target": report.target,
            "satisfied": report.satisfied,
        }
        document["threshold_n"] = budget_threshold_n(
            pipe.grid, subset, params.t, eps_bar_bar, params.epsilon, cfg.beta1)
    else:
        report = budget_account(None, make_schedule(cfg.schedule_n, 1).zeta1, None,
                                eps_bar_bar, params.epsilon)
        document["budget"] = {
            "subset": [0], "n": cfg.schedule_n, "laplace_terms": [],
            "eps_total": report.eps_total, "target": report.target,
            "satisfied": report.satisfied,
        }
        document["threshold_n"] = audit_threshold_n(params.epsilon, calibration, worst_point)
    print(json.dumps(document, indent=2))
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    raw = _load_raw_config(args)
    for key in ("samples", "threads", "out", "eps_grid", "schemes", "seed", "input_model"):
        raw.pop(key, None)
    cfg = SchemeConfig.from_dict(raw)
    pipe = build_pipeline(cfg)
    document = {"config": cfg.to_dict(), "regime": pipe.params.regime.value}
    document.update(compute_bounds(pipe.params).to_dict())
    print(json.dumps(document, indent=2))
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    report = run_selftest(corrupt_alpha=args.corrupt_alpha)
    print(report.render())
    return EXIT_OK if report.passed else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privmult",
        description="Differentially private one-round secure multiplication: "
                    "simulation, bounds, audits, and trade-off sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run an epsilon sweep and emit CSV")
    _add_scheme_flags(sweep)
    sweep.add_argument("--eps-grid", dest="eps_grid", help="comma-separated epsilon values")
    sweep.add_argument("--samples", type=int, help="Monte Carlo samples per point")
    sweep.add_argument("--seed", type=int, help="base seed")
    sweep.add_argument("--threads", type=int, help="worker threads for the Monte Carlo")
    sweep.add_argument("--schemes", help="comma-separated subset of layered,independent_baseline")
    sweep.add_argument("--input-model", dest="input_model",
                       choices=("rademacher", "uniform", "gaussian"))
    sweep.add_argument("--out", help="output CSV path")
    sweep.set_defaults(func=cmd_sweep)

    simulate = sub.add_parser("simulate", help="run one protocol instance verbosely")
    _add_scheme_flags(simulate)
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--input-model", dest="input_model",
                          choices=("rademacher", "uniform", "gaussian"))
    simulate.add_argument("--protocol-mode", action="store_true",
                          help="strip plaintext inputs from the share table")
    simulate.set_defaults(func=cmd_simulate)

    audit = sub.add_parser("audit", help="privacy budget accounting report")
    _add_scheme_flags(audit)
    audit.add_argument("--n-list", dest="n_list",
                       help="comma-separated schedule indices for the marginal table")
    audit.set_defaults(func=cmd_audit)

    bounds = sub.add_parser("bounds", help="closed-form bound set as JSON")
    _add_scheme_flags(bounds)
    bounds.set_defaults(func=cmd_bounds)

    selftest = sub.add_parser("selftest", help="run the embedded fixture suite")
    selftest.add_argument("--corrupt-alpha", dest="corrupt_alpha", type=float, default=None,
                          help="inject a relative MMSE-scale perturbation (fault demo)")
    selftest.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return EXIT_CONFIG
    except (ParameterError, RegimeError) as exc:
        print(json.dumps({"error": "parameter", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(json.dumps({"error": "numeric", "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
