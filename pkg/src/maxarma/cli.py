"""Command-line surface: ingestion, simulation, measures, estimation, and the
fitting pipeline.

Every output file embeds the resolved configuration (header comment for CSV,
a "config" field for JSON) and all randomness is seed-pinned, so re-running a
command reproduces its outputs byte for byte.  Numeric text uses repr, i.e.
full double precision.

Exit codes: 0 success, 1 configuration or I/O problem, 2 argparse usage
error, 3 ingestion failure, 4 marginal-model failure, 5 estimation failure,
6 optimization failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from dataclasses import dataclass
from datetime import date
from typing import Optional

import numpy as np

from . import __version__
from .empirical import (
    InsufficientExceedancesError,
    NoExtremePairsError,
    ThresholdSpec,
    chi_hat,
    decay_change_lag,
    pearson_acf,
    theta_hat_runs,
)
from .extremal import extremal_summary
from .inference import FitError, build_moment_spec, fit, order_scan
from .margins import (
    MarginalError,
    fit_marginal,
    from_frechet,
    load_marginal_model,
    qq_data,
    save_marginal_model,
    to_frechet,
)
from .params import MaxArmaParams, ParameterError
from .simulate import SimulationConfig, simulate, to_gumbel
from .weights import compute_weights, truncation_diagnostic

DEFAULT_SEED = 0
MISSING_TOKENS = {"", "na", "nan", "null", "none"}
WINTER_MONTHS = {10, 11, 12, 1, 2, 3}

EXIT_CONFIG = 1
EXIT_INGEST = 3
EXIT_MARGINAL = 4
EXIT_ESTIMATION = 5
EXIT_OPTIMIZATION = 6


class IngestError(ValueError):
    pass


class PipelineError(RuntimeError):
    """Stage-labelled wrapper so failures map to distinct exit codes."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


STAGE_CODES = {
    "ingest": EXIT_INGEST,
    "marginal": EXIT_MARGINAL,
    "estimation": EXIT_ESTIMATION,
    "optimization": EXIT_OPTIMIZATION,
}


@dataclass(frozen=True)
class IngestResult:
    values: np.ndarray
    n_rows: int
    gap_rows: tuple
    n_filtered: int


def ingest(path, value_column, time_column=None, missing_policy="drop",
           winter_only=False, date_column=None):
    """Stream a CSV once, returning the numeric value column in file order.

    Missing cells (empty or NA-style tokens) are dropped with their row
    indices logged, or rejected outright under missing_policy="fail".  Any
    other non-numeric cell is an error.  winter_only keeps October-March rows
    based on an ISO date column.
    """
    if missing_policy not in ("drop", "fail"):
        raise IngestError(f"missing policy must be drop or fail, got {missing_policy}")
    if winter_only and date_column is None:
        date_column = time_column
    if winter_only and date_column is None:
        raise IngestError("winter filtering needs a date column")
    values = []
    gaps = []
    n_rows = 0
    n_filtered = 0
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        if value_column not in fields:
            raise IngestError(
                f"value column {value_column!r} not in file; available: {fields}"
            )
        if winter_only and date_column not in fields:
            raise IngestError(
                f"date column {date_column!r} not in file; available: {fields}"
            )
        for row_idx, row in enumerate(reader):
            n_rows += 1
            if winter_only:
                raw_date = (row[date_column] or "").strip()
                try:
                    month = date.fromisoformat(raw_date[:10]).month
                except ValueError as exc:
                    raise IngestError(f"row {row_idx}: unparseable date {raw_date!r}") from exc
                if month not in WINTER_MONTHS:
                    n_filtered += 1
                    continue
            cell = (row[value_column] or "").strip()
            if cell.lower() in MISSING_TOKENS:
                if missing_policy == "fail":
                    raise IngestError(f"row {row_idx}: missing value")
                gaps.append(row_idx)
                continue
            try:
                parsed = float(cell)
            except ValueError as exc:
                raise IngestError(f"row {row_idx}: non-numeric cell {cell!r}") from exc
            if not np.isfinite(parsed):
                raise IngestError(f"row {row_idx}: non-finite value {cell!r}")
            values.append(parsed)
    if gaps:
        print(f"ingest: dropped {len(gaps)} missing value(s) at rows {gaps[:20]}"
              + ("..." if len(gaps) > 20 else ""), file=sys.stderr)
    return IngestResult(
        values=np.asarray(values, dtype=np.float64),
        n_rows=n_rows,
        gap_rows=tuple(gaps),
        n_filtered=n_filtered,
    )


@dataclass(frozen=True)
class PipelineBundle:
    marginal: object
    frechet_series: np.ndarray
    theta_hat: object
    chi_curve: dict
    big_t: int
    qq: object
    fit_result: Optional[object]
    scan: Optional[list]


def pipeline_fit(values, marginal_u, dep_u, order=None, scan_grid=None,
                 big_t=None, omega=None, starts=20, seed=DEFAULT_SEED,
                 kappa_max=50, run_length=1, n_boot=0):
    """Marginal fit, Frechet transform, empirical measures, then the moment
    fit (single order) or order scan.  Stage failures surface as
    PipelineError with the stage name."""
    if (order is None) == (scan_grid is None):
        raise PipelineError("estimation", ValueError("pass exactly one of order, scan_grid"))
    try:
        model = fit_marginal(values, marginal_u)
        frechet = to_frechet(model, values)
        qq = qq_data(model, seed=seed)
    except MarginalError as exc:
        raise PipelineError("marginal", exc) from exc
    try:
        level = dep_u.resolve(frechet) if isinstance(dep_u, ThresholdSpec) else float(dep_u)
        theta = theta_hat_runs(frechet, level, run_length=run_length, n_boot=n_boot, seed=seed)
        curve = {}
        for k in range(1, kappa_max + 1):
            curve[k] = chi_hat(frechet, level, k)
        if big_t is None:
            min_lag = sum(order) if order else max(scan_grid[0]) + max(scan_grid[1])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                suggested = decay_change_lag(
                    {k: est.estimate for k, est in curve.items()},
                    max_lag=kappa_max,
                    min_lag=max(min_lag, 1),
                )
            big_t = max(suggested, min_lag, 1)
    except (InsufficientExceedancesError, ValueError) as exc:
        raise PipelineError("estimation", exc) from exc
    fit_result = None
    cells = None
    try:
        if order is not None:
            fit_result = fit(frechet, order, u=ThresholdSpec.absolute(level),
                             big_t=big_t, omega=omega, starts=starts, seed=seed)
        else:
            cells = order_scan(frechet, scan_grid[0], scan_grid[1],
                               ThresholdSpec.absolute(level), big_t,
                               omega=omega, starts=starts, seed=seed)
    except (FitError, InsufficientExceedancesError, NoExtremePairsError) as exc:
        raise PipelineError("optimization", exc) from exc
    return PipelineBundle(
        marginal=model,
        frechet_series=frechet,
        theta_hat=theta,
        chi_curve=curve,
        big_t=big_t,
        qq=qq,
        fit_result=fit_result,
        scan=cells,
    )


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return repr(float(value))


def _write_csv(path, columns, config, extra_header=()):
    lines = [f"# config: {json.dumps(config, sort_keys=True)}"]
    lines.extend(f"# {text}" for text in extra_header)
    lines.append(",".join(columns))
    for row in zip(*columns.values()):
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def _write_json(path, payload, config):
    payload = {"config": config, **payload}
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _load_params(path):
    try:
        with open(path) as handle:
            return MaxArmaParams.from_dict(json.load(handle))
    except OSError as exc:
        raise IngestError(f"cannot read parameter file {path}: {exc}") from exc


def _config_from_args(args, keys):
    return {key: getattr(args, key) for key in keys}


def _cmd_simulate(args):
    params = _load_params(args.params)
    config = _config_from_args(args, ["params", "n", "burn_in", "seed", "gumbel", "out"])
    sim = simulate(SimulationConfig(params=params, n=args.n, burn_in=args.burn_in,
                                    seed=args.seed))
    data = to_gumbel(sim) if args.gumbel else sim.values
    _write_csv(args.out,
               {"t": np.arange(1, args.n + 1), ("log_x" if args.gumbel else "x"): data},
               config)


def _cmd_weights(args):
    params = _load_params(args.params)
    config = _config_from_args(args, ["params", "truncation", "out"])
    ws = compute_weights(params, args.truncation)
    diag = truncation_diagnostic(params, args.truncation)
    header = [f"gamma = {ws.gamma!r}", f"truncation_diagnostic = {diag!r}"]
    if diag > 1e-6:
        header.append("warning: truncation diagnostic above 1e-6; consider a larger truncation")
    _write_csv(args.out, {"tau": np.arange(args.truncation + 1), "gamma_tau": ws.gamma_tau},
               config, header)


def _cmd_measures(args):
    params = _load_params(args.params)
    config = _config_from_args(args, ["params", "kappa_max", "truncation", "out"])
    ws = compute_weights(params, args.truncation)
    summary = extremal_summary(ws, args.kappa_max)
    kappas = sorted(summary.chi)
    _write_csv(args.out,
               {"kappa": kappas, "chi": [summary.chi[k] for k in kappas]},
               config,
               [f"theta = {summary.theta!r}", f"gamma = {ws.gamma!r}"])


def _dep_threshold(args):
    if args.u_level is not None:
        return ThresholdSpec.absolute(args.u_level)
    return ThresholdSpec.quantile(args.u_quantile)


def _cmd_estimate(args):
    result = ingest(args.infile, args.value_column, missing_policy=args.missing_policy)
    config = _config_from_args(args, ["infile", "value_column", "u_quantile", "u_level",
                                      "kappa_max", "run_length", "n_boot", "seed",
                                      "out_csv", "out_json"])
    x = result.values
    spec = _dep_threshold(args)
    level = spec.resolve(x)
    theta = theta_hat_runs(x, level, run_length=args.run_length, n_boot=args.n_boot,
                           seed=args.seed)
    curve = {k: chi_hat(x, level, k) for k in range(1, args.kappa_max + 1)}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        suggestion = decay_change_lag({k: est.estimate for k, est in curve.items()},
                                      max_lag=args.kappa_max)
    kappas = sorted(curve)
    _write_csv(args.out_csv,
               {"kappa": kappas,
                "chi_hat": [curve[k].estimate for k in kappas],
                "ci_lo": [curve[k].ci[0] for k in kappas],
                "ci_hi": [curve[k].ci[1] for k in kappas]},
               config)
    _write_json(args.out_json, {
        "u": level,
        "n": len(x),
        "n_gaps": len(result.gap_rows),
        "theta_hat": theta.estimate,
        "theta_ci": list(theta.ci) if theta.ci else None,
        "theta_counts": [theta.numerator, theta.denominator],
        "pearson_acf_1": pearson_acf(x, 1),
        "suggested_T": suggestion,
    }, config)


def _cmd_transform(args):
    result = ingest(args.infile, args.value_column, missing_policy=args.missing_policy)
    config = _config_from_args(args, ["infile", "value_column", "direction", "model",
                                      "u_quantile", "out", "save_model"])
    if args.model:
        model = load_marginal_model(args.model)
    elif args.direction == "to-frechet":
        model = fit_marginal(result.values, ThresholdSpec.quantile(args.u_quantile))
    else:
        raise IngestError("from-frechet needs --model (a fitted marginal model)")
    if args.direction == "to-frechet":
        out = to_frechet(model, result.values)
    else:
        out = from_frechet(model, result.values)
    if args.save_model:
        save_marginal_model(model, args.save_model)
    _write_csv(args.out, {"t": np.arange(1, len(out) + 1), "value": out}, config,
               [f"u_M = {model.u_m!r}", f"c = {model.c!r}", f"d = {model.d!r}"])


def _parse_order(text):
    try:
        p, q = (int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"order must be 'p,q', got {text!r}") from exc
    return (p, q)


def _moment_csv(fit_result):
    table = fit_result.moment_table
    return {
        "label": [r.label for r in table],
        "lag": [r.lag for r in table],
        "empirical": [r.empirical for r in table],
        "model": [r.model for r in table],
        "sq_error": [r.sq_error for r in table],
    }


def _cmd_fit(args):
    result = ingest(args.infile, args.value_column, missing_policy=args.missing_policy)
    config = _config_from_args(args, ["infile", "value_column", "order", "u_quantile",
                                      "marginal_quantile", "T", "omega", "starts",
                                      "seed", "kappa_max", "out_prefix"])
    bundle = pipeline_fit(result.values,
                          ThresholdSpec.quantile(args.marginal_quantile),
                          ThresholdSpec.quantile(args.u_quantile),
                          order=args.order, big_t=args.T, omega=args.omega,
                          starts=args.starts, seed=args.seed, kappa_max=args.kappa_max)
    prefix = args.out_prefix
    save_marginal_model(bundle.marginal, f"{prefix}model.json")
    _write_json(f"{prefix}fit.json", {
        "fit": bundle.fit_result.to_dict(),
        "T_used": bundle.big_t,
        "theta_hat": bundle.theta_hat.estimate,
    }, config)
    _write_csv(f"{prefix}moments.csv", _moment_csv(bundle.fit_result), config)
    qq = bundle.qq
    _write_csv(f"{prefix}qq.csv",
               {"prob": qq.probs, "model_q": qq.model_q, "empirical_q": qq.empirical_q,
                "lower": qq.lower, "upper": qq.upper},
               config)


def _cmd_order_scan(args):
    result = ingest(args.infile, args.value_column, missing_policy=args.missing_policy)
    config = _config_from_args(args, ["infile", "value_column", "p_max", "q_max",
                                      "u_quantile", "marginal_quantile", "T", "omega",
                                      "starts", "seed", "kappa_max", "out_prefix"])
    grid = (range(1, args.p_max + 1), range(0, args.q_max + 1))
    bundle = pipeline_fit(result.values,
                          ThresholdSpec.quantile(args.marginal_quantile),
                          ThresholdSpec.quantile(args.u_quantile),
                          scan_grid=grid, big_t=args.T, omega=args.omega,
                          starts=args.starts, seed=args.seed, kappa_max=args.kappa_max)
    prefix = args.out_prefix
    cells = bundle.scan
    _write_csv(f"{prefix}elbow.csv",
               {"p": [c.p for c in cells],
                "q": [c.q for c in cells],
                "objective": [c.objective for c in cells]},
               config, [f"T_used = {bundle.big_t}"])
    _write_json(f"{prefix}scan.json", {
        "T_used": bundle.big_t,
        "cells": [
            {"p": c.p, "q": c.q, "objective": c.objective,
             "fit": c.fit_result.to_dict() if c.fit_result else None,
             "error": c.error}
            for c in cells
        ],
    }, config)


def _cmd_qq(args):
    result = ingest(args.infile, args.value_column, missing_policy=args.missing_policy)
    config = _config_from_args(args, ["infile", "value_column", "u_quantile", "n_rep",
                                      "seed", "out"])
    model = fit_marginal(result.values, ThresholdSpec.quantile(args.u_quantile))
    qq = qq_data(model, n_rep=args.n_rep, seed=args.seed)
    _write_csv(args.out,
               {"prob": qq.probs, "model_q": qq.model_q, "empirical_q": qq.empirical_q,
                "lower": qq.lower, "upper": qq.upper},
               config, [f"u_M = {model.u_m!r}", f"c = {model.c!r}", f"d = {model.d!r}"])


def build_parser():
    parser = argparse.ArgumentParser(prog="maxarma",
                                     description="Stationary Max-ARMA processes: "
                                                 "extremal measures, simulation, inference")
    parser.add_argument("--version", action="version", version=f"maxarma {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(sp):
        sp.add_argument("--in", dest="infile", required=True, help="input CSV with header")
        sp.add_argument("--value-column", default="value")
        sp.add_argument("--missing-policy", choices=("drop", "fail"), default="drop")

    sp = sub.add_parser("simulate", help="simulate a Max-ARMA path on unit Frechet margins")
    sp.add_argument("--params", required=True, help="parameter JSON file")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--burn-in", dest="burn_in", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--gumbel", action="store_true", help="emit log values")
    sp.add_argument("--out", required=True)
    sp.set_defaults(handler=_cmd_simulate)

    sp = sub.add_parser("weights", help="propagation weights and innovation scale")
    sp.add_argument("--params", required=True)
    sp.add_argument("--truncation", type=int, default=100)
    sp.add_argument("--out", required=True)
    sp.set_defaults(handler=_cmd_weights)

    sp = sub.add_parser("measures", help="limiting extremal index and chi curve")
    sp.add_argument("--params", required=True)
    sp.add_argument("--kappa-max", dest="kappa_max", type=int, default=50)
    sp.add_argument("--truncation", type=int, default=100)
    sp.add_argument("--out", required=True)
    sp.set_defaults(handler=_cmd_measures)

    sp = sub.add_parser("estimate", help="empirical extremal measures of a series")
    add_input(sp)
    sp.add_argument("--u-quantile", dest="u_quantile", type=float, default=0.95)
    sp.add_argument("--u-level", dest="u_level", type=float, default=None)
    sp.add_argument("--kappa-max", dest="kappa_max", type=int, default=100)
    sp.add_argument("--run-length", dest="run_length", type=int, default=1)
    sp.add_argument("--n-boot", dest="n_boot", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--out-csv", dest="out_csv", required=True)
    sp.add_argument("--out-json", dest="out_json", required=True)
    sp.set_defaults(handler=_cmd_estimate)

    sp = sub.add_parser("transform", help="probability integral transform to/from Frechet")
    add_input(sp)
    sp.add_argument("--direction", choices=("to-frechet", "from-frechet"), required=True)
    sp.add_argument("--model", default=None, help="marginal model JSON (required from-frechet)")
    sp.add_argument("--u-quantile", dest="u_quantile", type=float, default=0.98)
    sp.add_argument("--save-model", dest="save_model", default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(handler=_cmd_transform)

    sp = sub.add_parser("fit", help="generalized-moments fit of one (p, q)")
    add_input(sp)
    sp.add_argument("--order", type=_parse_order, required=True, help="p,q")
    sp.add_argument("--u-quantile", dest="u_quantile", type=float, default=0.95)
    sp.add_argument("--marginal-quantile", dest="marginal_quantile", type=float, default=0.98)
    sp.add_argument("--T", dest="T", type=int, default=None,
                    help="maximum chi lag (default: decay-change suggestion)")
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--starts", type=int, default=20)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--kappa-max", dest="kappa_max", type=int, default=50)
    sp.add_argument("--out-prefix", dest="out_prefix", default="maxarma_")
    sp.set_defaults(handler=_cmd_fit)

    sp = sub.add_parser("order-scan", help="objective grid over (p, q) for elbow inspection")
    add_input(sp)
    sp.add_argument("--p-max", dest="p_max", type=int, default=3)
    sp.add_argument("--q-max", dest="q_max", type=int, default=4)
    sp.add_argument("--u-quantile", dest="u_quantile", type=float, default=0.95)
    sp.add_argument("--marginal-quantile", dest="marginal_quantile", type=float, default=0.98)
    sp.add_argument("--T", dest="T", type=int, default=None)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--starts", type=int, default=20)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--kappa-max", dest="kappa_max", type=int, default=50)
    sp.add_argument("--out-prefix", dest="out_prefix", default="maxarma_scan_")
    sp.set_defaults(handler=_cmd_order_scan)

    sp = sub.add_parser("qq", help="marginal tail QQ data with tolerance bounds")
    add_input(sp)
    sp.add_argument("--u-quantile", dest="u_quantile", type=float, default=0.98)
    sp.add_argument("--n-rep", dest="n_rep", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--out", required=True)
    sp.set_defaults(handler=_cmd_qq)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.handler(args)
    except IngestError as exc:
        print(f"maxarma: ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except MarginalError as exc:
        print(f"maxarma: marginal-model error: {exc}", file=sys.stderr)
        return EXIT_MARGINAL
    except (InsufficientExceedancesError, NoExtremePairsError) as exc:
        print(f"maxarma: estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except FitError as exc:
        print(f"maxarma: optimization error: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZATION
    except PipelineError as exc:
        print(f"maxarma: {exc}", file=sys.stderr)
        return STAGE_CODES.get(exc.stage, EXIT_CONFIG)
    except (ParameterError, ValueError, OSError) as exc:
        print(f"maxarma: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
