#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module generating synthetic comparison data.

Each of the C(n, M) item subsets becomes an edge independently with
probability p, and every edge is compared L times with the winner drawn
from the softmax of the true scores.
"""


from __future__ import annotations
from dataclasses import asdict, dataclass, field
import itertools
import json
import logging
import math
from typing import Any, Dict, Optional, Tuple

import numpy as np

from . import defaults
from . import helpers
from .errors import ConfigError, ResourceError
from .model import (
    ComparisonDataset,
    ComparisonHypergraph,
    ScoreLike,
    ScoreVector,
    as_scores,
    edge_probabilities
)


@dataclass(frozen=True)
class SimulationConfig:
    """
    Settings of one synthetic design.

    score_spec is one of
    | {"kind": "uniform", "low": a, "high": b} - i.i.d. Uniform[a, b]
    | {"kind": "grid", "start": a, "stop": b} - a - (i - 1)(a - b)/n
    | {"kind": "explicit", "values": [...]} - given scores
    """

    n: int
    m_way: int
    edge_prob: float
    trials: int
    seed: int = 0
    score_spec: Dict[str, Any] = field(
        default_factory=lambda: {"kind": "uniform", "low": 2.0, "high": 4.0}
    )

    def __post_init__(self) -> None:
        if not helpers.is_positive_int(self.n):
            raise ConfigError("n must be a positive integer.")
        if not helpers.is_positive_int(self.m_way) or not 2 <= self.m_way <= self.n:
            raise ConfigError("m_way must lie in [2, n].")
        if not helpers.is_probability(self.edge_prob):
            raise ConfigError("edge_prob must lie in (0, 1].")
        if not helpers.is_positive_int(self.trials):
            raise ConfigError("trials must be a positive integer.")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) \
                or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer.")
        kind = self.score_spec.get("kind")
        if kind not in defaults.SCORE_KINDS:
            raise ConfigError(
                "score_spec kind must be one of {0}.".format(defaults.SCORE_KINDS)
            )
        if kind == "uniform" and not (
                float(self.score_spec["low"]) <= float(self.score_spec["high"])):
            raise ConfigError("uniform score_spec needs low <= high.")
        if kind == "explicit" and len(self.score_spec["values"]) != self.n:
            raise ConfigError("explicit score_spec needs n values.")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> SimulationConfig:
        known = {"n", "m_way", "edge_prob", "trials", "seed", "score_spec"}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(
                "Unknown simulation fields: {0}".format(sorted(unknown))
            )
        return cls(**payload)

    def dump(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str) -> SimulationConfig:
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


@dataclass(frozen=True)
class SimulatedInstance:
    """
    One replication: raw truth, its centered version and the data.
    """

    config: SimulationConfig
    replication: int
    truth_raw: np.ndarray
    truth: ScoreVector
    dataset: ComparisonDataset


def raw_scores(config: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Draws the uncentered true scores described by config.score_spec.
    """

    spec = config.score_spec
    if spec["kind"] == "uniform":
        return rng.uniform(float(spec["low"]), float(spec["high"]), config.n)
    if spec["kind"] == "grid":
        start, stop = float(spec["start"]), float(spec["stop"])
        return start - np.arange(config.n) * (start - stop) / config.n
    return np.asarray(spec["values"], dtype=float)


def sample_hypergraph(
        config: SimulationConfig,
        rng: np.random.Generator,
        max_edges: int = defaults.SIMULATION_DEFAULTS["MAX_EDGES"]
) -> ComparisonHypergraph:
    """
    Samples an M-uniform Erdos-Renyi comparison hypergraph.

    Up to ENUMERATION_LIMIT candidate subsets one uniform draw per subset
    decides inclusion. Beyond it the edge count is drawn from
    Binomial(C(n, M), p) and distinct subsets are drawn by rejection.

    params:
        | config: {SimulationConfig} - design
        | rng: {Generator} - random stream
        | max_edges: {int} - cap on the expected edge count
    """

    total = math.comb(config.n, config.m_way)
    expected = total * config.edge_prob
    if expected > max_edges:
        raise ResourceError(
            "Expected {0:.0f} edges exceeds the cap of {1}.".format(
                expected, int(max_edges)
            )
        )
    if total <= defaults.SIMULATION_DEFAULTS["ENUMERATION_LIMIT"]:
        keep = rng.random(total) < config.edge_prob
        edges = list(itertools.compress(
            itertools.combinations(range(config.n), config.m_way), keep
        ))
    else:
        if total < 2 ** 62:
            count = int(rng.binomial(total, config.edge_prob))
        else:
            # Binomial with astronomically many trials is Poisson
            count = int(rng.poisson(expected))
        chosen = set()
        edges = []
        while len(edges) < count:
            subset = tuple(sorted(
                int(item) for item in
                rng.choice(config.n, config.m_way, replace=False)
            ))
            if subset in chosen:
                continue
            chosen.add(subset)
            edges.append(subset)
    graph = ComparisonHypergraph(config.n, config.m_way, edges)
    isolated = graph.isolated_items()
    if isolated:
        logging.warning(
            "%d item(s) appear in no sampled edge.", len(isolated)
        )
    return graph


def sample_outcomes(
        graph: ComparisonHypergraph,
        truth: ScoreLike,
        trials: int,
        rng: np.random.Generator,
        item_ids: Optional[Tuple[str, ...]] = None) -> ComparisonDataset:
    """
    Draws L top-choice winners per edge from the softmax of truth.

    params:
        | graph: {ComparisonHypergraph} - compared item sets
        | truth: {ScoreLike} - true scores (a common shift is irrelevant)
        | trials: {int} - comparisons per edge L
        | rng: {Generator} - random stream
        | item_ids: {tuple} - optional user identifiers
    """

    if not helpers.is_positive_int(trials):
        raise ConfigError("trials must be a positive integer.")
    probs = edge_probabilities(graph, as_scores(truth, graph.n))
    uniforms = rng.random((graph.num_edges, trials))
    cumulative = np.cumsum(probs, axis=1)
    # Inverse CDF per trial: count cumulative bounds below the uniform
    winners = (uniforms[:, :, None] >= cumulative[:, None, :]).sum(axis=2)
    winners = np.minimum(winners, graph.m_way - 1)
    return ComparisonDataset.from_trial_level(graph, winners, item_ids)


def simulate(config: SimulationConfig, replication: int = 0) -> SimulatedInstance:
    """
    Generates truth, hypergraph and outcomes of one replication.

    Every component uses its own (seed, replication, purpose) stream.
    """

    truth_raw = raw_scores(
        config, helpers.make_rng(config.seed, replication, "truth")
    )
    kappa = max(
        defaults.SIMULATION_DEFAULTS["KAPPA_MAX"], float(np.ptp(truth_raw))
    )
    truth = ScoreVector.centered(truth_raw, kappa)
    graph = sample_hypergraph(
        config, helpers.make_rng(config.seed, replication, "graph")
    )
    item_ids = tuple(str(item + 1) for item in range(config.n))
    dataset = sample_outcomes(
        graph,
        truth,
        config.trials,
        helpers.make_rng(config.seed, replication, "outcomes"),
        item_ids
    )
    return SimulatedInstance(config, replication, truth_raw, truth, dataset)
