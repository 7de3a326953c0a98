"""Command-line front end.

Subcommands:

    fit       penalized pairwise fit at a given lambda, or at the CV choice (--cv)
    cv        K-fold cross-validation curve plus the refit at the chosen lambda
    compare   proposed pairwise fit next to the complete-case penalized GLM
    simulate  replicated selection-accuracy experiment for one of S1-S6

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""
import argparse
import logging
import sys
import time
from dataclasses import asdict
from functools import partial

import numpy as np
import pandas as pd

from src.config import settings
from src.core import solver
from src.core.cv import cross_validate
from src.core.errors import DataError, PairwiseSelectError
from src.core.pairwise import build_pairwise, extract_complete_cases, read_csv_table
from src.core.penalties import PenaltyKind, PenaltySpec
from src.cli import reports
from src.sim.harness import (ALL_METHODS, ALL_PENALTIES, Method, TuningConfig,
                             run_replications, tune_and_fit)
from src.sim.scenarios import SCENARIOS, Family, get_setting

logger = logging.getLogger(__name__)

PROG = "pairwise-select"


def _csv_list(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def _concavity(text):
    """``3.7`` for every concave penalty, or ``scad=3.7,mcp=2`` per penalty."""
    if text is None:
        return {}
    if "=" not in text:
        value = float(text)
        return {PenaltyKind.SCAD: value, PenaltyKind.MCP: value}
    values = {}
    for item in _csv_list(text):
        name, _, raw = item.partition("=")
        kind = PenaltyKind(name.strip().lower())
        if not kind.is_concave:
            raise ValueError(f"the {kind.value} penalty has no concavity parameter")
        values[kind] = float(raw)
    return values


def _add_output_options(parser):
    group = parser.add_argument_group("output")
    group.add_argument("--seed", type=int, default=None,
                       help="seed for every random choice (generated and recorded when omitted)")
    group.add_argument("--threads", type=int, default=-1,
                       help="parallel workers; -1 uses all cores (results do not depend on it)")
    group.add_argument("--format", dest="fmt", choices=settings.REPORT_FORMATS, default="text")
    group.add_argument("--out", default=None, help="report path (stdout when omitted)")
    group.add_argument("-v", "--verbose", action="count", default=0)
    group.add_argument("--quiet", action="store_true", help="errors only, no progress bar")


def _add_data_options(parser):
    group = parser.add_argument_group("data")
    group.add_argument("--input", required=True, help="CSV file with a header row")
    group.add_argument("--response", required=True, help="response column")
    group.add_argument("--covariates", type=_csv_list, default=None,
                       help="comma-separated covariate columns (default: all other columns)")
    group.add_argument("--na-marker", action="append", default=None,
                       help="missing-value token, repeatable (replaces NA; empty cells stay missing)")
    group.add_argument("--binarize-at", type=float, default=None,
                       help="replace y by 1{y >= value} before fitting")


def _add_tuning_options(parser, single_penalty=True):
    group = parser.add_argument_group("tuning")
    if single_penalty:
        group.add_argument("--penalty", choices=[k.value for k in PenaltyKind], required=True)
        group.add_argument("--a", type=float, default=None,
                           help=f"concavity (default {settings.SCAD_A} for scad, "
                                f"{settings.MCP_A} for mcp)")
    else:
        group.add_argument("--penalties", type=_csv_list,
                           default=[k.value for k in ALL_PENALTIES])
        group.add_argument("--a", type=_concavity, default={},
                           help="concavity: one value, or scad=A,mcp=A")
    group.add_argument("--folds", type=int, default=settings.CV_FOLDS)
    group.add_argument("--n-lambda", type=int, default=settings.N_LAMBDA)
    group.add_argument("--lambda-ratio", type=float, default=settings.LAMBDA_RATIO)


def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Penalized pairwise pseudo-likelihood variable selection "
                    "with nonignorable missing data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit at one lambda (or the CV choice)")
    _add_data_options(fit)
    _add_tuning_options(fit)
    choice = fit.add_mutually_exclusive_group(required=True)
    choice.add_argument("--lambda", dest="lam", type=float, default=None)
    choice.add_argument("--cv", action="store_true", help="choose lambda by K-fold CV")
    fit.add_argument("--standardize", action="store_true",
                     help="fit on unit-RMS pairwise columns, report on the original scale")
    _add_output_options(fit)
    fit.set_defaults(handler=cmd_fit)

    cv = sub.add_parser("cv", help="cross-validation curve and refit")
    _add_data_options(cv)
    _add_tuning_options(cv)
    cv.add_argument("--standardize", action="store_true")
    _add_output_options(cv)
    cv.set_defaults(handler=cmd_cv)

    compare = sub.add_parser("compare", help="proposed vs complete-case GLM on one data set")
    _add_data_options(compare)
    _add_tuning_options(compare, single_penalty=False)
    compare.add_argument("--family", choices=[f.value for f in Family], default="gaussian",
                         help="GLM family of the complete-case comparator")
    _add_output_options(compare)
    compare.set_defaults(handler=cmd_compare)

    simulate = sub.add_parser("simulate", help="replicated selection-accuracy experiment")
    simulate.add_argument("--setting", required=True, type=str.upper, choices=sorted(SCENARIOS))
    simulate.add_argument("--rho", type=float, default=0.0)
    simulate.add_argument("--reps", type=int, default=100)
    simulate.add_argument("--methods", type=_csv_list, default=[m.value for m in ALL_METHODS])
    simulate.add_argument("--raw-out", default=None,
                          help="also write one row per (replication, method, penalty)")
    _add_tuning_options(simulate, single_penalty=False)
    simulate.set_defaults(n_lambda=settings.SIM_N_LAMBDA)
    _add_output_options(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    return parser


def configure_logging(verbose=0, quiet=False):
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def resolve_seed(seed):
    if seed is not None:
        return int(seed)
    seed = int(np.random.SeedSequence().generate_state(1)[0])
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _na_markers(args):
    if args.na_marker is None:
        return settings.NA_MARKERS
    return ("",) + tuple(args.na_marker)


def load_cases(args):
    frame = read_csv_table(args.input)
    return extract_complete_cases(frame, args.response, args.covariates,
                                  na_markers=_na_markers(args), binarize_at=args.binarize_at)


def _manifest(args, argv, seed, config, extra=None):
    snapshot = {
        "solver": config.as_dict(),
        "folds": args.folds,
        "n_lambda": args.n_lambda,
        "lambda_ratio": args.lambda_ratio,
    }
    if hasattr(args, "input"):
        snapshot.update({
            "na_markers": list(_na_markers(args)),
            "binarize_at": args.binarize_at,
            "pair_budget": settings.PAIR_BUDGET,
        })
    snapshot.update(extra or {})
    return reports.RunManifest(
        command=[PROG] + list(argv),
        config=snapshot,
        seeds={"seed": seed},
        input_digest=reports.file_digest(args.input) if hasattr(args, "input") else None,
    )


def _require_pairs(design):
    if design.degenerate:
        raise DataError("every complete case has the same response value: no informative pairs")


def _column_names(design):
    return list(design.columns)


def _coefficient_table(design, fit):
    gamma = design.to_original_scale(fit.gamma_hat)
    table = pd.DataFrame({
        "column": _column_names(design),
        "gamma": gamma,
        "selected": (fit.gamma_hat != 0).astype(int),
    })
    if design.standardized:
        table["gamma_standardized"] = fit.gamma_hat
    return table


def _fit_results(design, cases, fit, penalty):
    columns = _column_names(design)
    return {
        "penalty": penalty.kind.value,
        "lambda": float(penalty.lam),
        "a": penalty.a,
        "standardize": design.standardized,
        "support": [columns[j] for j in fit.support],
        "objective": float(fit.objective),
        "kkt_residual": float(fit.kkt_residual),
        "lla_iterations": fit.lla_iterations,
        "n": cases.n,
        "N": cases.n_total,
        "m": design.m,
        "observed_fraction": float(cases.observed_fraction),
    }


def _run_cv(args, cases, design, config, seed, timings):
    grid = solver.lambda_path(design, args.n_lambda, args.lambda_ratio)
    start = time.perf_counter()
    result = cross_validate(cases, args.penalty, grid, K=args.folds, seed=seed, config=config,
                            a=args.a,
                            loss_factory=partial(build_pairwise, standardize=args.standardize),
                            n_jobs=args.threads)
    timings["cv"] = time.perf_counter() - start
    return result


def _emit(report, args):
    reports.write_report(report, path=args.out, fmt=args.fmt, stream=sys.stdout)
    for phase, seconds in report.manifest.timings.items():
        logger.info("%s: %.3f s", phase, seconds)


def cmd_fit(args, argv):
    seed = resolve_seed(args.seed)
    config = solver.SolverConfig()
    timings = {}

    start = time.perf_counter()
    cases = load_cases(args)
    design = build_pairwise(cases, standardize=args.standardize)
    _require_pairs(design)
    timings["build"] = time.perf_counter() - start

    lam = args.lam
    if args.cv:
        config = config.for_path()
        lam = _run_cv(args, cases, design, config, seed, timings).chosen_lambda
    penalty = PenaltySpec(args.penalty, lam, args.a)

    start = time.perf_counter()
    fit = solver.fit_penalized(design, penalty, config)
    timings["fit"] = time.perf_counter() - start

    manifest = _manifest(args, argv, seed, config, {"cv": args.cv, "standardize": args.standardize})
    manifest.timings = timings
    results = _fit_results(design, cases, fit, penalty)
    _emit(reports.Report("fit", manifest, results, _coefficient_table(design, fit)), args)


def cmd_cv(args, argv):
    seed = resolve_seed(args.seed)
    config = solver.SolverConfig().for_path()
    timings = {}

    start = time.perf_counter()
    cases = load_cases(args)
    design = build_pairwise(cases, standardize=args.standardize)
    _require_pairs(design)
    timings["build"] = time.perf_counter() - start

    cv = _run_cv(args, cases, design, config, seed, timings)
    penalty = PenaltySpec(args.penalty, cv.chosen_lambda, args.a)
    start = time.perf_counter()
    fit = solver.fit_penalized(design, penalty, config)
    timings["fit"] = time.perf_counter() - start

    results = _fit_results(design, cases, fit, penalty)
    results["chosen_lambda"] = cv.chosen_lambda
    results["folds"] = args.folds
    results["gamma"] = dict(zip(_column_names(design),
                                design.to_original_scale(fit.gamma_hat).tolist()))

    manifest = _manifest(args, argv, seed, config, {"standardize": args.standardize})
    manifest.timings = timings
    curve = pd.DataFrame({"lambda": cv.lambdas, "cv": cv.cv_values})
    _emit(reports.Report("cv", manifest, results, curve), args)


def _tuning(args):
    return TuningConfig(folds=args.folds, n_lambda=args.n_lambda,
                        lambda_ratio=args.lambda_ratio, a=dict(args.a))


def cmd_compare(args, argv):
    seed = resolve_seed(args.seed)
    config = solver.SolverConfig().for_path()
    tuning = _tuning(args)
    family = Family(args.family)
    penalties = [PenaltyKind(k) for k in args.penalties]
    cases = load_cases(args)
    columns = list(cases.columns)
    timings = {}

    rows = []
    for kind in penalties:
        for method in (Method.PROPOSED, Method.MAR_COMPLETE_CASE):
            start = time.perf_counter()
            fit, cv = tune_and_fit(cases, method, family, kind, config, tuning, seed)
            timings[f"{method.value}/{kind.value}"] = time.perf_counter() - start
            row = {
                "method": method.value,
                "penalty": kind.value,
                "lambda": cv.chosen_lambda,
                "support_size": len(fit.support),
                "intercept": fit.intercept if method is not Method.PROPOSED else np.nan,
            }
            row.update(zip(columns, fit.gamma_hat.tolist()))
            rows.append(row)

    results = {
        "family": family.value,
        "n": cases.n,
        "N": cases.n_total,
        "observed_fraction": float(cases.observed_fraction),
    }
    manifest = _manifest(args, argv, seed, config,
                         {"family": family.value, "penalties": [k.value for k in penalties],
                          "a": {k.value: v for k, v in tuning.a.items()}})
    manifest.timings = timings
    _emit(reports.Report("compare", manifest, results, pd.DataFrame(rows)), args)


def cmd_simulate(args, argv):
    if args.reps < 1:
        raise ValueError("--reps must be >= 1")
    seed = resolve_seed(args.seed)
    config = solver.SolverConfig().for_path()
    tuning = _tuning(args)
    setting = get_setting(args.setting, rho=args.rho)
    methods = [Method(m) for m in args.methods]
    penalties = [PenaltyKind(k) for k in args.penalties]

    start = time.perf_counter()
    result = run_replications(setting, methods, penalties, reps=args.reps, base_seed=seed,
                              config=config, tuning=tuning, n_jobs=args.threads,
                              progress=not args.quiet)
    elapsed = time.perf_counter() - start

    summary = pd.DataFrame([reports.plain(asdict(s)) for s in result.summaries])
    results = {
        "setting": setting.name,
        "family": setting.family.value,
        "rho": setting.rho,
        "N": setting.N,
        "p": setting.p,
        "reps": result.reps,
        "excluded": result.excluded,
    }
    extra = {
        "setting": setting.name,
        "rho": setting.rho,
        "methods": [m.value for m in methods],
        "penalties": [k.value for k in penalties],
        "a": {k.value: v for k, v in tuning.a.items()},
    }
    manifest = _manifest(args, argv, seed, config, extra)
    manifest.timings = {"simulate": elapsed}
    _emit(reports.Report("simulate", manifest, results, summary), args)

    if args.raw_out:
        raw = pd.DataFrame([{
            "rep": r.rep,
            "method": r.method.value,
            "penalty": r.penalty.value,
            "fp": r.fp,
            "fn": r.fn,
            "observed_fraction": r.observed_fraction,
            "seconds": r.seconds,
            "chosen_lambda": r.chosen_lambda,
        } for r in result.records])
        raw_manifest = _manifest(args, argv, seed, config, extra)
        reports.write_report(reports.Report("simulate-raw", raw_manifest, dict(results), raw),
                             path=args.raw_out, fmt="text")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        args.handler(args, argv)
    except PairwiseSelectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return settings.EXIT_USAGE
    return settings.EXIT_OK
