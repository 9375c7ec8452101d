#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Command line interface.

Subcommands: simulate, fit, ci, test-topk, screen, experiment.
Reports are written as JSON to --output or stdout, logs go to stderr.
Exit codes: 0 success, 2 invalid input or usage, 3 resource cap exceeded.
"""


from __future__ import annotations
import argparse
import json
import logging
import sys
import time
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__, configure_logging
from . import defaults
from . import helpers
from . import io
from .bootstrap import (
    BootstrapConfig,
    bootstrap_critical_value,
    check_trial_count
)
from .errors import ConfigError, ResourceError, ValidationError
from .experiments import ExperimentSpec, run_experiment
from .inference import (
    bonferroni_intervals,
    point_ranks,
    rank_intervals,
    sure_screening,
    top_k_test
)
from .mle import FitConfig, ScoreEstimate, fit_mle
from .model import ComparisonDataset
from .simulate import SimulationConfig, simulate
from .uq import InferenceContext, build_context, marginal_intervals, standard_errors


# CLI spellings of the bootstrap normalizers
NORMALIZER_NAMES: Dict[str, str] = {
    "sigma-hat":        "sigma-hat",
    "bonferroni":       "bonferroni-eta",
    "bonferroni-eta":   "bonferroni-eta",
    "unit":             "unit"
}


def _float_list(text: str) -> List[float]:
    return [float(item) for item in helpers.parse_items(text)]


def _int_list(text: str) -> List[int]:
    return [int(item) for item in helpers.parse_items(text)]


def build_parser() -> argparse.ArgumentParser:
    """
    Builds the argument parser with one subparser per command.
    """

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="random seed {default: 0}")
    common.add_argument("--alpha", type=float, default=None,
                        help="significance level {default: 0.05}")
    common.add_argument("--bootstrap-draws", type=int, default=None,
                        help="multiplier bootstrap draws B {default: 1000}")
    common.add_argument("--normalizer", choices=sorted(NORMALIZER_NAMES),
                        default="sigma-hat",
                        help="normalizer of the max statistic")
    common.add_argument("--c0", type=float,
                        default=defaults.BOOTSTRAP_DEFAULTS["C0"],
                        help="constant of the Bonferroni normalizer")
    common.add_argument("--kappa-max", type=float,
                        default=defaults.FIT_DEFAULTS["KAPPA_MAX"],
                        help="bound on the score range")
    common.add_argument("--items", default=None,
                        help="comma separated item identifiers")
    common.add_argument("--k", type=int, default=None, help="top-K size")
    common.add_argument("--output", default=None,
                        help="output path {default: stdout}")
    common.add_argument("--format", choices=defaults.FORMATS, default=None,
                        help="dataset format {default: detected}")
    common.add_argument("--include-timing", action="store_true",
                        help="write the wall-clock time to the report")
    common.add_argument("--log-file", default=None, help="also log to this file")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="warnings only")

    parser = argparse.ArgumentParser(
        prog="pyrankinfer",
        description="Ranking inference from top-choice multiway comparisons."
    )
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + __version__)
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    command = commands.add_parser("simulate", parents=[common],
                                  help="generate a synthetic dataset")
    command.add_argument("--config", default=None,
                         help="SimulationConfig JSON, overridden by flags")
    command.add_argument("--n", type=int, default=None)
    command.add_argument("--m-way", type=int, default=None)
    command.add_argument("--edge-prob", type=float, default=None)
    command.add_argument("--trials", type=int, default=None)
    command.add_argument("--scores", choices=("uniform", "grid"), default=None,
                         help="uniform draws in [low, high] or a grid from high to low")
    command.add_argument("--low", type=float, default=2.0)
    command.add_argument("--high", type=float, default=4.0)
    command.add_argument("--replication", type=int, default=0)
    command.add_argument("--truth-output", default=None,
                         help="write the true scores to this JSON file")
    command.set_defaults(handler=command_simulate)

    command = commands.add_parser("fit", parents=[common],
                                  help="estimate scores by maximum likelihood")
    command.add_argument("dataset")
    command.set_defaults(handler=command_fit)

    command = commands.add_parser("ci", parents=[common],
                                  help="rank confidence intervals")
    command.add_argument("dataset")
    command.add_argument("--side", choices=("two-sided", "left"),
                         default="two-sided")
    command.add_argument("--uniform", action="store_true",
                         help="left intervals simultaneous over all items")
    command.add_argument("--baseline", action="store_true",
                         help="add Bonferroni baseline intervals")
    command.set_defaults(handler=command_ci)

    command = commands.add_parser("test-topk", parents=[common],
                                  help="test whether items are in the top K")
    command.add_argument("dataset")
    command.set_defaults(handler=command_test_topk)

    command = commands.add_parser("screen", parents=[common],
                                  help="sure screening set for the top K")
    command.add_argument("dataset")
    command.set_defaults(handler=command_screen)

    command = commands.add_parser("experiment", parents=[common],
                                  help="run a Monte Carlo experiment")
    command.add_argument("--name", choices=defaults.EXPERIMENTS, required=True)
    command.add_argument("--spec", default=None,
                         help="ExperimentSpec JSON, overridden by flags")
    command.add_argument("--replications", type=int, default=None)
    command.add_argument("--workers", type=int, default=None,
                         help="worker processes, 0 for all cores")
    command.add_argument("--n", type=int, default=None)
    command.add_argument("--m-way", type=int, default=None)
    command.add_argument("--trials", type=int, default=None)
    command.add_argument("--p-grid", type=_float_list, default=None)
    command.add_argument("--l-grid", type=_int_list, default=None)
    command.add_argument("--item", type=int, default=None)
    command.set_defaults(handler=command_experiment)
    return parser


# --------------------------
# Shared argument processing
# --------------------------
def _seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else int(defaults.BOOTSTRAP_DEFAULTS["SEED"])


def _alpha(args: argparse.Namespace) -> float:
    return args.alpha if args.alpha is not None else defaults.BOOTSTRAP_DEFAULTS["ALPHA"]


def _bootstrap_config(args: argparse.Namespace, **changes: Any) -> BootstrapConfig:
    payload = {
        "draws": args.bootstrap_draws or int(defaults.BOOTSTRAP_DEFAULTS["DRAWS"]),
        "alpha": _alpha(args),
        "seed": _seed(args),
        "normalizer": NORMALIZER_NAMES[args.normalizer],
        "c0": args.c0
    }
    payload.update(changes)
    return BootstrapConfig(**payload)


def _items(dataset: ComparisonDataset, args: argparse.Namespace) -> List[int]:
    if not args.items:
        degrees = dataset.graph.degrees()
        return [item for item in range(dataset.n) if degrees[item] > 0]
    return [dataset.index_of(label) for label in helpers.parse_items(args.items)]


def _k(args: argparse.Namespace, n: int) -> int:
    if args.k is None:
        raise ConfigError("--k is required for this command.")
    if not 1 <= args.k <= n:
        raise ConfigError("--k must lie in [1, {0}].".format(n))
    return args.k


def _fit(args: argparse.Namespace) -> tuple:
    dataset = io.load_dataset(args.dataset, args.format)
    estimate = fit_mle(dataset, FitConfig(kappa_max=args.kappa_max))
    return dataset, estimate


def _context(dataset: ComparisonDataset, estimate: ScoreEstimate) -> InferenceContext:
    check_trial_count(dataset.trials, dataset.n)
    return build_context(dataset, estimate.theta_hat)


def _report(
        args: argparse.Namespace,
        dataset: ComparisonDataset,
        estimate: ScoreEstimate,
        **fields: Any) -> io.RunReport:
    config = {
        key: value for key, value in sorted(vars(args).items())
        if key not in ("handler", "started")
    }
    return io.RunReport(
        command=args.command,
        config=config,
        items=dataset.item_labels(),
        theta_hat=[float(value) for value in estimate.theta_hat.values],
        se=[
            None if not np.isfinite(value) else float(value)
            for value in standard_errors(dataset, estimate.theta_hat)
        ],
        rank_point=[int(value) for value in point_ranks(estimate)],
        alpha=_alpha(args),
        seed=_seed(args),
        **fields
    )


# -----------------
# Command functions
# -----------------
def command_simulate(args: argparse.Namespace) -> int:
    payload: Dict[str, Any] = {}
    if args.config:
        payload = SimulationConfig.load(args.config).to_dict()
    for key, value in (
            ("n", args.n), ("m_way", args.m_way), ("edge_prob", args.edge_prob),
            ("trials", args.trials), ("seed", args.seed)):
        if value is not None:
            payload[key] = value
    if args.scores == "uniform":
        payload["score_spec"] = {"kind": "uniform", "low": args.low, "high": args.high}
    elif args.scores == "grid":
        payload["score_spec"] = {"kind": "grid", "start": args.high, "stop": args.low}
    payload.setdefault("m_way", 3)
    missing = {"n", "edge_prob", "trials"} - set(payload)
    if missing:
        raise ConfigError(
            "simulate needs {0}.".format(
                ", ".join("--" + name.replace("_", "-") for name in sorted(missing))
            )
        )
    instance = simulate(SimulationConfig.from_dict(payload), args.replication)
    dataset = instance.dataset
    format = args.format or "trial-csv"
    if args.output:
        io.save_dataset(dataset, args.output, format)
    else:
        sys.stdout.write(json.dumps(io.dataset_to_dict(dataset), indent=2) + "\n")
    if args.truth_output:
        with open(args.truth_output, "w", encoding="utf-8") as handle:
            json.dump({
                "items": dataset.item_labels(),
                "theta": instance.truth.values.tolist(),
                "theta_raw": instance.truth_raw.tolist()
            }, handle, indent=2)
            handle.write("\n")
    logging.info(
        "Simulated %d edge(s) over %d item(s).", dataset.graph.num_edges, dataset.n
    )
    return defaults.EXIT_CODES["OK"]


def command_fit(args: argparse.Namespace) -> int:
    dataset, estimate = _fit(args)
    errors = standard_errors(dataset, estimate.theta_hat)
    intervals = marginal_intervals(estimate.theta_hat, errors, _alpha(args))
    components, _ = dataset.graph.connected_components()
    report = _report(
        args, dataset, estimate,
        extras={
            "score_ci": intervals.tolist(),
            "converged": estimate.converged,
            "iterations": estimate.iterations,
            "final_grad_norm": estimate.final_grad_norm,
            "objective": estimate.objective,
            "boundary_items": [dataset.item_labels()[item] for item in estimate.boundary_items],
            "non_identifiable_items": [
                dataset.item_labels()[item] for item in estimate.non_identifiable_items
            ],
            "components": int(components)
        }
    )
    return _finish(args, report)


def command_ci(args: argparse.Namespace) -> int:
    dataset, estimate = _fit(args)
    context = _context(dataset, estimate)
    items = _items(dataset, args)
    labels = dataset.item_labels()
    extras: Dict[str, Any] = {"side": args.side}
    if args.side == "two-sided" or args.uniform:
        side = "two-sided" if args.side == "two-sided" else "one-sided"
        config = _bootstrap_config(args, side=side)
        critical_value = bootstrap_critical_value(context, items, config)
        intervals = rank_intervals(estimate, context, items, critical_value, config)
        value: Optional[float] = critical_value.value
    else:
        # one item set per item, each with its own quantile
        config = _bootstrap_config(args, side="one-sided")
        intervals = []
        values = []
        for item in items:
            critical_value = bootstrap_critical_value(context, [item], config)
            intervals.extend(
                rank_intervals(estimate, context, [item], critical_value, config)
            )
            values.append(critical_value.value)
        extras["critical_values"] = values
        value = None
    if args.baseline:
        extras["baseline_ci"] = [
            [interval.lower, interval.upper] for interval in (
                bonferroni_intervals(estimate, context, item, config.alpha, args.c0)
                for item in items
            )
        ]
    report = _report(
        args, dataset, estimate,
        rank_ci=[[interval.lower, interval.upper] for interval in intervals],
        rank_items=[labels[interval.item] for interval in intervals],
        critical_value=value,
        bootstrap_draws=config.draws,
        extras=extras
    )
    return _finish(args, report)


def command_test_topk(args: argparse.Namespace) -> int:
    dataset, estimate = _fit(args)
    k = _k(args, dataset.n)
    if not args.items:
        raise ConfigError("--items is required for test-topk.")
    context = _context(dataset, estimate)
    labels = dataset.item_labels()
    config = _bootstrap_config(args, side="one-sided")
    tests = []
    intervals = []
    for item in _items(dataset, args):
        decision = top_k_test(estimate, context, item, k, config.alpha, config)
        tests.append({
            "item": labels[item],
            "k": k,
            "reject": decision.reject,
            "lower": decision.lower,
            "critical_value": decision.critical_value.value
        })
        intervals.append([decision.lower, dataset.n])
    report = _report(
        args, dataset, estimate,
        rank_ci=intervals,
        rank_items=[test["item"] for test in tests],
        bootstrap_draws=config.draws,
        extras={"tests": tests}
    )
    return _finish(args, report)


def command_screen(args: argparse.Namespace) -> int:
    dataset, estimate = _fit(args)
    k = _k(args, dataset.n)
    context = _context(dataset, estimate)
    labels = dataset.item_labels()
    config = _bootstrap_config(args, side="one-sided")
    screening = sure_screening(estimate, context, k, config.alpha, config)
    report = _report(
        args, dataset, estimate,
        rank_ci=[[bound, dataset.n] for bound in screening.lower_bounds],
        rank_items=labels,
        critical_value=screening.critical_value.value,
        bootstrap_draws=config.draws,
        extras={
            "k": k,
            "selected": [labels[item] for item in screening.selected],
            "d_hat": screening.d_hat,
            "unit_critical_value": screening.unit_critical_value.value
        }
    )
    return _finish(args, report)


def command_experiment(args: argparse.Namespace) -> int:
    overrides = {
        "n": args.n,
        "m_way": args.m_way,
        "trials": args.trials,
        "p_grid": args.p_grid,
        "l_grid": args.l_grid,
        "item": args.item,
        "replications": args.replications,
        "draws": args.bootstrap_draws,
        "alpha": args.alpha,
        "c0": args.c0,
        "seed": args.seed,
        "workers": args.workers,
        "k_values": [args.k] if args.k is not None else None,
        "output": args.output or "-"
    }
    if args.spec:
        payload = ExperimentSpec.load(args.spec).to_dict()
        if payload["name"] != args.name:
            raise ConfigError(
                "Spec file describes '{0}', not '{1}'.".format(payload["name"], args.name)
            )
        payload.update(
            {key: value for key, value in overrides.items() if value is not None}
        )
        spec = ExperimentSpec.from_dict(payload)
    else:
        spec = ExperimentSpec.preset(args.name, **overrides)
    run_experiment(spec)
    return defaults.EXIT_CODES["OK"]


def _finish(args: argparse.Namespace, report: io.RunReport) -> int:
    report.wall_clock = time.perf_counter() - args.started
    logging.info("%s finished in %.2f s.", args.command, report.wall_clock)
    io.write_report(report, args.output, args.include_timing)
    return defaults.EXIT_CODES["OK"]


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs the command line interface and returns the exit code.
    """

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return int(error.code or 0)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    configure_logging(level, args.log_file)
    args.started = time.perf_counter()
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except ValidationError as error:
        logging.error("%s", error)
        return defaults.EXIT_CODES["VALIDATION"]
    except ResourceError as error:
        logging.error("%s", error)
        return defaults.EXIT_CODES["RESOURCE"]
    except OSError as error:
        logging.error("%s", error)
        return defaults.EXIT_CODES["VALIDATION"]


if __name__ == "__main__":
    sys.exit(main())
