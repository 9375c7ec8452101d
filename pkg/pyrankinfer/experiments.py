#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module with the Monte Carlo experiment harness.

Every experiment runs a number of replications per grid cell. Their
records form one DataFrame; the result table keeps them as they are or
averages them per cell, and is written as one tidy CSV.

Replication r of cell c draws its data from the random streams keyed by
(seed, c * replications + r), so every row can be reproduced on its own
and results do not depend on the worker count.

Columns per experiment:
| rate-vs-p        p, rep, linf_err, l2_err, theory_rate
| rate-vs-L        L, rep, linf_err, l2_err, theory_rate
| normality        L, p, rep, z, delta
| pp-plot          alpha, empirical
| ci-table         normalizer, p, ec_theta, ec_rank, length, within_bonferroni
| power-table      p, k, m, rank_rejection, score_size
| screening-table  p, k, ec_theta, ec_rank, size, d_hat
| topk-recovery    p, k, budget, recovery
"""


from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import json
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from . import __version__
from . import defaults
from . import helpers
from .bootstrap import (
    BootstrapConfig,
    bootstrap_critical_value,
    observed_statistic
)
from .errors import ConfigError, NoDataError, NonIdentifiableError, ResourceError
from .inference import (
    bonferroni_intervals,
    bonferroni_thresholds,
    population_ranks,
    rank_intervals,
    screen_with,
    top_k_decision
)
from .mle import FitConfig, ScoreEstimate, fit_mle
from .simulate import SimulatedInstance, SimulationConfig, simulate
from .uq import build_context, delta_residual, information_shares


UNIFORM_SCORES = {"kind": "uniform", "low": 2.0, "high": 4.0}
GRID_SCORES = {"kind": "grid", "start": 4.0, "stop": 2.0}

# Experiments that run the multiplier bootstrap
BOOTSTRAP_EXPERIMENTS = (
    "pp-plot", "ci-table", "power-table", "screening-table"
)


@dataclass(frozen=True)
class ExperimentSpec:
    """
    Design of one experiment.

    item is 1-based. m_offsets are offsets m - K of the tested items.
    """

    name: str
    n: int = 60
    m_way: int = 3
    trials: int = 20
    edge_prob: float = 0.05
    p_grid: Tuple[float, ...] = ()
    l_grid: Tuple[int, ...] = ()
    replications: int = int(defaults.EXPERIMENT_DEFAULTS["REPLICATIONS"])
    draws: int = int(defaults.BOOTSTRAP_DEFAULTS["DRAWS"])
    alpha: float = defaults.BOOTSTRAP_DEFAULTS["ALPHA"]
    alphas: Tuple[float, ...] = ()
    item: int = 1
    k_values: Tuple[int, ...] = ()
    m_offsets: Tuple[int, ...] = ()
    c0: float = defaults.BOOTSTRAP_DEFAULTS["C0"]
    score_spec: Dict[str, Any] = field(default_factory=lambda: dict(UNIFORM_SCORES))
    seed: int = 0
    workers: int = 1
    output: Optional[str] = None

    def __post_init__(self) -> None:
        for name in ("p_grid", "l_grid", "alphas", "k_values", "m_offsets"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.name not in defaults.EXPERIMENTS:
            raise ConfigError(
                "Experiment must be one of {0}.".format(defaults.EXPERIMENTS)
            )
        if not helpers.is_positive_int(self.replications):
            raise ConfigError("replications must be at least 1.")
        if not helpers.is_positive_int(self.trials):
            raise ConfigError("trials must be a positive integer.")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1).")
        if not 1 <= self.item <= self.n:
            raise ConfigError("item must lie in [1, n].")
        needs = {
            "rate-vs-p": ("p_grid",),
            "rate-vs-L": ("l_grid",),
            "normality": ("p_grid", "l_grid"),
            "pp-plot": ("p_grid", "alphas"),
            "ci-table": ("p_grid",),
            "power-table": ("p_grid", "k_values", "m_offsets"),
            "screening-table": ("p_grid", "k_values"),
            "topk-recovery": ("p_grid", "k_values")
        }[self.name]
        for name in needs:
            if not getattr(self, name):
                raise ConfigError("{0} must not be empty.".format(name))
        if any(not helpers.is_probability(float(p)) for p in self.p_grid):
            raise ConfigError("Edge probabilities must lie in (0, 1].")
        if any(int(count) < 1 for count in self.l_grid):
            raise ConfigError("L values must be positive.")
        if any(not 0 < value < 1 for value in self.alphas):
            raise ConfigError("alphas must lie in (0, 1).")
        if any(not 1 <= k <= self.n for k in self.k_values):
            raise ConfigError("K values must lie in [1, n].")

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> ExperimentSpec:
        """
        Builds the published design of an experiment.

        Overrides set to None are ignored, so CLI arguments can be passed as is.
        """

        payload = _presets(
            name, overrides.get("n") or 60, overrides.get("m_way") or 3
        )
        payload.update(
            {key: value for key, value in overrides.items() if value is not None}
        )
        return cls(name=name, **payload)

    def cells(self) -> List[Tuple[float, int]]:
        """
        (edge probability, L) of every grid cell.
        """

        if self.name == "rate-vs-L":
            return [(self.edge_prob, int(count)) for count in self.l_grid]
        if self.name == "normality":
            return [
                (float(p), int(count))
                for count in self.l_grid for p in self.p_grid
            ]
        return [(float(p), self.trials) for p in self.p_grid]

    def workload(self) -> float:
        draws = self.draws if self.name in BOOTSTRAP_EXPERIMENTS else 1
        return float(len(self.cells())) * self.replications * draws * \
            max(trials for _, trials in self.cells())

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        for name in ("p_grid", "l_grid", "alphas", "k_values", "m_offsets"):
            payload[name] = list(payload[name])
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> ExperimentSpec:
        unknown = set(payload) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(
                "Unknown experiment fields: {0}".format(sorted(unknown))
            )
        return cls(**payload)

    def dump(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str) -> ExperimentSpec:
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def spec_hash(self) -> str:
        payload = self.to_dict()
        # Neither changes the numbers
        payload.pop("workers")
        payload.pop("output")
        return helpers.spec_hash(payload)


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """
    Result table of one experiment and the per-replication records
    it was aggregated from.
    """

    name: str
    table: pd.DataFrame
    records: pd.DataFrame
    spec_hash: str

    @property
    def columns(self) -> Tuple[str, ...]:
        return tuple(self.table.columns)

    @property
    def rows(self) -> List[Dict[str, Any]]:
        return self.table.to_dict("records")

    def column(self, name: str) -> List[Any]:
        return self.table[name].tolist()


def rate_grid(count: int = 8, low: float = 0.04, high: float = 0.18) -> np.ndarray:
    return np.linspace(low, high, count)


def _presets(name: str, n: int, m_way: int) -> Dict[str, Any]:
    """
    Published settings of every experiment.
    """

    count = int(defaults.EXPERIMENT_DEFAULTS["GRID_COUNT"])
    rates = rate_grid(
        count,
        defaults.EXPERIMENT_DEFAULTS["RATE_LOW"],
        defaults.EXPERIMENT_DEFAULTS["RATE_HIGH"]
    )
    budget = math.log(n) / math.comb(n - 1, m_way - 1)
    if name == "rate-vs-p":
        return {
            "trials": 20,
            "p_grid": tuple(float(budget / (20 * rate ** 2)) for rate in rates),
            "score_spec": dict(UNIFORM_SCORES)
        }
    if name == "rate-vs-L":
        grid = sorted({
            int(math.ceil(budget / (0.05 * rate ** 2))) for rate in rates
        })
        return {
            "edge_prob": 0.05,
            "l_grid": tuple(grid),
            "score_spec": dict(UNIFORM_SCORES)
        }
    if name == "normality":
        return {
            "l_grid": (5, 10, 20),
            "p_grid": (0.008, 0.015, 0.03),
            "item": 1,
            "score_spec": dict(UNIFORM_SCORES)
        }
    if name == "pp-plot":
        return {
            "trials": 80,
            "p_grid": (0.05,),
            "draws": 300,
            "alphas": tuple(round(0.05 * step, 2) for step in range(1, 19)),
            "item": 1,
            "score_spec": dict(UNIFORM_SCORES)
        }
    if name == "topk-recovery":
        return {
            "n": 30,
            "trials": 80,
            "p_grid": (0.02, 0.05, 0.1, 0.2),
            "k_values": (5,),
            "score_spec": {"kind": "grid", "start": 4.0, "stop": -2.0}
        }
    table = {
        "trials": 80,
        "p_grid": (0.05, 0.10, 0.15),
        "draws": 500,
        "score_spec": dict(GRID_SCORES)
    }
    if name == "ci-table":
        table["item"] = 10
    elif name == "power-table":
        table["k_values"] = (10,)
        table["m_offsets"] = (-2, -1, 0, 1, 2, 3, 4, 5)
    elif name == "screening-table":
        table["k_values"] = (5, 10, 15)
    else:
        raise ConfigError(
            "Experiment must be one of {0}.".format(defaults.EXPERIMENTS)
        )
    return table


# -------------------------------------
# Replication functions, one per design
# -------------------------------------
def _instance(
        spec: ExperimentSpec,
        edge_prob: float,
        trials: int,
        replication: int) -> Tuple[SimulatedInstance, ScoreEstimate]:
    config = SimulationConfig(
        n=spec.n,
        m_way=spec.m_way,
        edge_prob=edge_prob,
        trials=trials,
        seed=spec.seed,
        score_spec=spec.score_spec
    )
    instance = simulate(config, replication)
    kappa = max(
        defaults.FIT_DEFAULTS["KAPPA_MAX"], float(np.ptp(instance.truth_raw))
    )
    return instance, fit_mle(instance.dataset, FitConfig(kappa_max=kappa))


def _bootstrap_config(spec: ExperimentSpec, **changes: Any) -> BootstrapConfig:
    return replace(
        BootstrapConfig(
            draws=spec.draws, alpha=spec.alpha, seed=spec.seed, c0=spec.c0
        ),
        **changes
    )


def delta_ratio(instance: SimulatedInstance, estimate: ScoreEstimate) -> float:
    """
    Median over identifiable items of |delta_m| * rho_m(theta*).
    """

    data = instance.dataset
    delta = delta_residual(data, estimate.theta_hat, instance.truth)
    rho = np.sqrt(data.trials * information_shares(data, instance.truth))
    active = np.isfinite(delta)
    return float(np.median(np.abs(delta[active]) * rho[active]))


def _rate(spec, edge_prob, trials, replication) -> List[Dict[str, Any]]:
    instance, estimate = _instance(spec, edge_prob, trials, replication)
    error = estimate.theta_hat.values - instance.truth.values
    return [{
        "linf_err": float(np.max(np.abs(error))),
        "l2_err": float(np.linalg.norm(error)),
        "theory_rate": helpers.theoretical_rate(
            spec.n, spec.m_way, edge_prob, trials
        )
    }]


def _normality(spec, edge_prob, trials, replication) -> List[Dict[str, Any]]:
    instance, estimate = _instance(spec, edge_prob, trials, replication)
    item = spec.item - 1
    context = build_context(instance.dataset, estimate.theta_hat)
    z = float("nan")
    if context.identifiable[item]:
        error = estimate.theta_hat.values[item] - instance.truth.values[item]
        z = float(context.rho[item] * error)
    return [{"z": z, "delta": delta_ratio(instance, estimate)}]


def _pp_plot(spec, edge_prob, trials, replication) -> List[Dict[str, Any]]:
    instance, estimate = _instance(spec, edge_prob, trials, replication)
    item = spec.item - 1
    context = build_context(instance.dataset, estimate.theta_hat)
    config = _bootstrap_config(spec)
    rng = helpers.make_rng(spec.seed, replication, "bootstrap")
    critical_value = bootstrap_critical_value(context, [item], config, rng)
    statistic = observed_statistic(context, [item], instance.truth, config)
    return [
        {"alpha": alpha, "empirical": statistic > critical_value.quantile(alpha)}
        for alpha in spec.alphas
    ]


def _ci_table(spec, edge_prob, trials, replication) -> List[Dict[str, Any]]:
    instance, estimate = _instance(spec, edge_prob, trials, replication)
    item = spec.item - 1
    context = build_context(instance.dataset, estimate.theta_hat)
    true_rank = int(population_ranks(instance.truth)[item])
    baseline = bonferroni_intervals(estimate, context, item, spec.alpha, spec.c0)
    records = []
    for normalizer in ("sigma-hat", "bonferroni-eta"):
        config = _bootstrap_config(spec, normalizer=normalizer)
        rng = helpers.make_rng(spec.seed, replication, "bootstrap")
        critical_value = bootstrap_critical_value(context, [item], config, rng)
        interval = rank_intervals(
            estimate, context, [item], critical_value, config
        )[0]
        statistic = observed_statistic(context, [item], instance.truth, config)
        records.append({
            "normalizer": normalizer,
            "ec_theta": statistic <= critical_value.value,
            "ec_rank": interval.covers(true_rank),
            "length": interval.length,
            "within_bonferroni": float(interval.length <= baseline.length)
        })
    thresholds = bonferroni_thresholds(context, item, spec.alpha, spec.c0)
    error = estimate.theta_hat.values - instance.truth.values
    valid = np.isfinite(thresholds)
    valid[item] = False
    records.append({
        "normalizer": "bonferroni",
        "ec_theta": bool(np.all(
            np.abs(error[valid] - error[item]) <= thresholds[valid]
        )),
        "ec_rank": baseline.covers(true_rank),
        "length": baseline.length,
        "within_bonferroni": float("nan")
    })
    return records


def _power_table(spec, edge_prob, trials, replication) -> List[Dict[str, Any]]:
    instance, estimate = _instance(spec, edge_prob, trials, replication)
    context = build_context(instance.dataset, estimate.theta_hat)
    config = _bootstrap_config(spec, side="one-sided")
    true_ranks = population_ranks(instance.truth)
    records = []
    for k in spec.k_values:
        for offset in spec.m_offsets:
            item = k + offset - 1
            if not 0 <= item < spec.n or not context.identifiable[item]:
                continue
            rng = helpers.make_rng(spec.seed, replication, "bootstrap")
            critical_value = bootstrap_critical_value(context, [item], config, rng)
            decision = top_k_decision(
                estimate, context, item, k, critical_value, config
            )
            statistic = observed_statistic(context, [item], instance.truth, config)
            # Size of the score-difference test counts true top-K items only
            size = float("nan")
            if true_ranks[item] <= k:
                size = float(statistic > critical_value.value)
            records.append({
                "k": k,
                "m": item + 1,
                "rank_rejection": decision.reject,
                "score_size": size
            })
    return records


def _screening_table(spec, edge_prob, trials, replication) -> List[Dict[str, Any]]:
    instance, estimate = _instance(spec, edge_prob, trials, replication)
    context = build_context(instance.dataset, estimate.theta_hat)
    items = [int(item) for item in np.flatnonzero(context.identifiable)]
    config = _bootstrap_config(spec, side="one-sided")
    critical_value = bootstrap_critical_value(
        context, items, config,
        helpers.make_rng(spec.seed, replication, "bootstrap")
    )
    unit_value = bootstrap_critical_value(
        context, items, replace(config, normalizer="unit"),
        helpers.make_rng(spec.seed, replication, "bootstrap-unit")
    )
    statistic = observed_statistic(context, items, instance.truth, config)
    records = []
    for k in spec.k_values:
        screening = screen_with(
            estimate, context, k, critical_value, unit_value, config
        )
        truth = helpers.top_k_set(instance.truth.values, k)
        records.append({
            "k": k,
            "ec_theta": statistic <= critical_value.value,
            "ec_rank": truth <= set(screening.selected),
            "size": len(screening.selected),
            "d_hat": screening.d_hat
        })
    return records


def _topk_recovery(spec, edge_prob, trials, replication) -> List[Dict[str, Any]]:
    instance, estimate = _instance(spec, edge_prob, trials, replication)
    ordered = np.sort(instance.truth.values)[::-1]
    scale = math.comb(spec.n - 1, spec.m_way - 1) * edge_prob * trials / \
        math.log(spec.n)
    records = []
    for k in spec.k_values:
        gap = ordered[k - 1] - ordered[k] if k < spec.n else np.inf
        records.append({
            "k": k,
            "budget": float(scale * gap ** 2),
            "recovery": helpers.top_k_set(estimate.theta_hat.values, k) ==
            helpers.top_k_set(instance.truth.values, k)
        })
    return records


REPLICATORS: Dict[str, Callable[..., List[Dict[str, Any]]]] = {
    "rate-vs-p": _rate,
    "rate-vs-L": _rate,
    "normality": _normality,
    "pp-plot": _pp_plot,
    "ci-table": _ci_table,
    "power-table": _power_table,
    "screening-table": _screening_table,
    "topk-recovery": _topk_recovery
}

# Grouping keys (None keeps one row per replication) and columns of every table
TABLES: Dict[str, Tuple[Optional[Tuple[str, ...]], Tuple[str, ...]]] = {
    "rate-vs-p":        (None, ("p", "rep", "linf_err", "l2_err", "theory_rate")),
    "rate-vs-L":        (None, ("L", "rep", "linf_err", "l2_err", "theory_rate")),
    "normality":        (None, ("L", "p", "rep", "z", "delta")),
    "pp-plot":          (("alpha",), ("alpha", "empirical")),
    "ci-table":         (("normalizer", "p"), (
        "normalizer", "p", "ec_theta", "ec_rank", "length", "within_bonferroni"
    )),
    "power-table":      (("p", "k", "m"), (
        "p", "k", "m", "rank_rejection", "score_size"
    )),
    "screening-table":  (("p", "k"), (
        "p", "k", "ec_theta", "ec_rank", "size", "d_hat"
    )),
    "topk-recovery":    (("p", "k"), ("p", "k", "budget", "recovery"))
}


def _run_job(job: Tuple[ExperimentSpec, int, int]) -> List[Dict[str, Any]]:
    """
    Runs replication rep of cell number cell and tags its records.
    """

    spec, cell, rep = job
    edge_prob, trials = spec.cells()[cell]
    replication = cell * spec.replications + rep
    try:
        records = REPLICATORS[spec.name](spec, edge_prob, trials, replication)
    except (NoDataError, NonIdentifiableError) as error:
        logging.warning("Replication %d skipped: %s", replication, error)
        return []
    return [
        dict(record, p=edge_prob, L=trials, rep=rep) for record in records
    ]


def record_frame(name: str, records: List[Dict[str, Any]]) -> pd.DataFrame:
    """
    Per-replication records of an experiment as a DataFrame.
    """

    _, columns = TABLES[name]
    names = ["p", "L", "rep"] + [
        column for column in columns if column not in ("p", "L", "rep")
    ]
    return pd.DataFrame(records, columns=names)


def tabulate(name: str, records: pd.DataFrame) -> pd.DataFrame:
    """
    Result table: replication records as they are, or cell means.
    """

    keys, columns = TABLES[name]
    if records.empty:
        return pd.DataFrame(columns=list(columns))
    if keys is None:
        return records.loc[:, list(columns)].reset_index(drop=True)
    values = [column for column in columns if column not in keys]
    table = records.groupby(list(keys), sort=False)[values].mean()
    return table.reset_index().loc[:, list(columns)]


def write_csv(result: ExperimentResult, handle: TextIO) -> None:
    """
    Writes the table under a comment header with the spec hash and version.
    """

    handle.write("# experiment={0}\n".format(result.name))
    handle.write(
        "# spec_hash={0}, version={1}\n".format(result.spec_hash, __version__)
    )
    result.table.to_csv(
        handle, index=False, float_format="%.10g", lineterminator="\n"
    )


def read_csv(path: str) -> pd.DataFrame:
    """
    Reads an experiment CSV back, skipping the comment header.
    """

    return pd.read_csv(path, comment="#")


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """
    Runs every replication of spec and writes the CSV to spec.output.

    params:
        | spec: {ExperimentSpec} - experiment design
    """

    cap = defaults.EXPERIMENT_DEFAULTS["MAX_WORKLOAD"]
    if spec.workload() > cap:
        raise ResourceError(
            "Experiment workload {0:.3g} exceeds the cap of {1:.3g}.".format(
                spec.workload(), cap
            )
        )
    cells = spec.cells()
    jobs = [
        (spec, cell, rep)
        for cell in range(len(cells)) for rep in range(spec.replications)
    ]
    workers = helpers.worker_count(spec.workers)
    logging.info(
        "Running %s: %d cell(s) x %d replication(s) on %d worker(s).",
        spec.name, len(cells), spec.replications, workers
    )
    if workers == 1:
        batches = [_run_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            batches = list(executor.map(_run_job, jobs, chunksize=8))
    records = record_frame(
        spec.name, [record for batch in batches for record in batch]
    )
    result = ExperimentResult(
        name=spec.name,
        table=tabulate(spec.name, records),
        records=records,
        spec_hash=spec.spec_hash()
    )
    if spec.name == "normality":
        for row in normality_summary(result):
            logging.info(
                "normality L=%d p=%g: coverage %.3f, KS distance %.3f, "
                "delta within threshold %.3f (%d reps)",
                row["L"], row["p"], row["coverage"], row["ks"],
                row["delta_share"], row["count"]
            )
    if spec.output == "-":
        write_csv(result, sys.stdout)
    elif spec.output:
        with open(spec.output, "w", encoding="utf-8", newline="") as handle:
            write_csv(result, handle)
        logging.info("Experiment %s written to %s.", spec.name, spec.output)
    return result


def normality_summary(
        result: ExperimentResult,
        level: float = 0.05) -> List[Dict[str, Any]]:
    """
    Per (L, p) cell: coverage of |z| <= z_{1 - level/2}, the
    Kolmogorov-Smirnov distance of z to the standard normal and the share
    of replications whose delta ratio stays within the threshold.
    """

    if result.name != "normality":
        raise ConfigError("Summary needs a normality experiment.")
    bound = stats.norm.ppf(1.0 - level / 2.0)
    threshold = defaults.EXPERIMENT_DEFAULTS["DELTA_THRESHOLD"]
    table = result.table.dropna(subset=["z"])
    summary = []
    for (trials, edge_prob), cell in table.groupby(["L", "p"], sort=False):
        summary.append({
            "L": int(trials),
            "p": float(edge_prob),
            "count": int(len(cell)),
            "coverage": float((cell["z"].abs() <= bound).mean()),
            "ks": float(stats.kstest(cell["z"], "norm").statistic),
            "delta_share": float((cell["delta"] <= threshold).mean())
        })
    return summary


def fit_through_origin(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """
    Least squares slope of y = b x and its uncentered R^2.
    """

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope = float(x @ y / (x @ x))
    residual = y - slope * x
    return slope, float(1.0 - residual @ residual / (y @ y))
