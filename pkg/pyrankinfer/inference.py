#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module turning score estimates into rank inference.

Ranks are 1-based and descending: the largest score has rank 1. Equal
scores are ordered by the smaller item index.

A simultaneous confidence set for the differences theta_k - theta_m
(k != m, m in M) gives rank intervals by counting the alternatives that
are significantly above and below each item:

    lower_m = 1 + #{k : theta_k - theta_m >  t_mk}
    upper_m = n - #{k : theta_k - theta_m < -t_mk}

with thresholds t_mk = eta_mk * zeta / c in score units.
"""


from __future__ import annotations
from dataclasses import dataclass, field, replace
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm

from . import helpers
from .bootstrap import (
    BootstrapConfig,
    CriticalValue,
    bootstrap_critical_value,
    normalizer_row,
    theta_factor
)
from .errors import ConfigError, ContractError, ValidationError
from .mle import ScoreEstimate
from .model import ScoreLike, as_scores
from .uq import InferenceContext


@dataclass(frozen=True)
class RankInterval:
    """
    Confidence interval [lower, upper] for the rank of one item.
    """

    item: int
    lower: int
    upper: int
    point: int
    side: str = "two-sided"

    def __post_init__(self) -> None:
        if not 1 <= self.lower <= self.point <= self.upper:
            raise ContractError(
                "Rank interval [{0}, {1}] does not contain point rank {2}."
                .format(self.lower, self.upper, self.point)
            )

    @property
    def length(self) -> int:
        return self.upper - self.lower

    def covers(self, rank: int) -> bool:
        return self.lower <= rank <= self.upper


@dataclass(frozen=True)
class TopKDecision:
    """
    Outcome of the test of H0: rank(item) <= K.
    """

    item: int
    k: int
    reject: bool
    lower: int
    critical_value: CriticalValue


@dataclass(frozen=True)
class ScreeningResult:
    """
    Sure screening set for the top-K items and the admission count D.
    """

    k: int
    selected: Tuple[int, ...]
    d_hat: int
    lower_bounds: Tuple[int, ...]
    critical_value: CriticalValue
    unit_critical_value: CriticalValue


@dataclass(frozen=True)
class RankReport:
    """
    Everything inferred about the ranks of an item set.
    """

    alpha: float
    item_set: Tuple[int, ...]
    intervals: Tuple[RankInterval, ...]
    critical_value: Optional[CriticalValue]
    test_results: Tuple[TopKDecision, ...] = ()
    screening: Optional[ScreeningResult] = None
    seeds: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        covered = tuple(sorted(interval.item for interval in self.intervals))
        if covered != tuple(sorted(self.item_set)):
            raise ContractError("Rank intervals must cover exactly the item set.")


def _scores_of(estimate: Union[ScoreEstimate, ScoreLike]) -> np.ndarray:
    if isinstance(estimate, ScoreEstimate):
        return estimate.theta_hat.values
    return as_scores(estimate)


def point_ranks(estimate: Union[ScoreEstimate, ScoreLike]) -> np.ndarray:
    """
    Empirical ranks, 1 for the largest score.
    """

    return helpers.point_ranks(_scores_of(estimate))


def population_ranks(truth: ScoreLike) -> np.ndarray:
    """
    True ranks from the true scores with the same tie rule.
    """

    return helpers.point_ranks(as_scores(truth))


def _thresholds(
        context: InferenceContext,
        m: int,
        critical_value: CriticalValue,
        c0: float) -> np.ndarray:
    eta = normalizer_row(
        context, m, critical_value.normalizer_tag, critical_value.alpha, c0
    )
    factor = theta_factor(critical_value.normalizer_tag, context.trials)
    return eta * max(critical_value.value, 0.0) / factor


def _interval(
        scores: np.ndarray,
        m: int,
        thresholds: np.ndarray,
        valid: np.ndarray,
        point: int,
        side: str) -> RankInterval:
    n = scores.size
    gaps = scores[valid] - scores[m]
    lower = 1 + int(np.count_nonzero(gaps > thresholds[valid]))
    if side == "two-sided":
        upper = n - int(np.count_nonzero(gaps < -thresholds[valid]))
    else:
        upper = n
    return RankInterval(
        item=int(m),
        lower=lower,
        upper=upper,
        point=point,
        side="two-sided" if side == "two-sided" else "left-sided"
    )


def rank_intervals(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        item_set: Iterable[int],
        critical_value: CriticalValue,
        config: BootstrapConfig) -> List[RankInterval]:
    """
    Simultaneous rank intervals for item_set from a bootstrap quantile.

    One-sided critical values give left-sided intervals [lower, n].
    Alternatives without comparisons never count as significant.

    params:
        | estimate: {ScoreEstimate} - fitted scores
        | context: {InferenceContext} - shares and residuals at the estimate
        | item_set: {Iterable[int]} - items M
        | critical_value: {CriticalValue} - quantile computed for M
        | config: {BootstrapConfig} - settings the quantile was computed with
    """

    items = tuple(sorted(set(int(item) for item in item_set)))
    if items != critical_value.item_set:
        raise ContractError(
            "Critical value was computed for items {0}, not {1}.".format(
                critical_value.item_set, items
            )
        )
    if critical_value.normalizer_tag != config.normalizer or \
            critical_value.side != config.side:
        raise ContractError(
            "Critical value uses {0}/{1}, configuration asks for {2}/{3}."
            .format(
                critical_value.normalizer_tag, critical_value.side,
                config.normalizer, config.side
            )
        )
    scores = _scores_of(estimate)
    if scores.size != context.n:
        raise ContractError("Estimate and context differ in item count.")
    points = helpers.point_ranks(scores)
    result = []
    for m in items:
        thresholds = _thresholds(context, m, critical_value, config.c0)
        valid = np.isfinite(thresholds)
        valid[m] = False
        result.append(
            _interval(scores, m, thresholds, valid, int(points[m]), config.side)
        )
    return result


def bonferroni_thresholds(
        context: InferenceContext,
        item: int,
        alpha: float,
        c0: float = 1.0) -> np.ndarray:
    """
    z_{1 - alpha/2} / rho_m + (1 + c0) sqrt(2 log n) / rho_k for every k.
    """

    if not 0 < alpha < 1:
        raise ConfigError("alpha must lie in (0, 1).")
    context.check_item(item)
    z = norm.ppf(1.0 - alpha / 2.0)
    with np.errstate(divide="ignore"):
        inverse_rho = np.where(context.identifiable, 1.0 / context.rho, np.inf)
    return z * inverse_rho[item] + \
        (1.0 + c0) * math.sqrt(2.0 * math.log(context.n)) * inverse_rho


def bonferroni_intervals(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        item: int,
        alpha: float,
        c0: float = 1.0) -> RankInterval:
    """
    Baseline two-sided interval from a sqrt(2 log n) Bonferroni bound.

    Needs no bootstrap; thresholds come from bonferroni_thresholds.
    """

    thresholds = bonferroni_thresholds(context, item, alpha, c0)
    scores = _scores_of(estimate)
    valid = np.isfinite(thresholds)
    valid[item] = False
    points = helpers.point_ranks(scores)
    return _interval(
        scores, item, thresholds, valid, int(points[item]), "two-sided"
    )


def top_k_decision(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        item: int,
        k: int,
        critical_value: CriticalValue,
        config: BootstrapConfig) -> TopKDecision:
    """
    psi = 1{lower > K} from a one-sided critical value computed for {item}.
    """

    interval = rank_intervals(estimate, context, [item], critical_value, config)[0]
    return TopKDecision(
        item=int(item),
        k=int(k),
        reject=interval.lower > k,
        lower=interval.lower,
        critical_value=critical_value
    )


def top_k_test(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        item: int,
        k: int,
        alpha: float,
        config: BootstrapConfig,
        rng: Optional[np.random.Generator] = None) -> TopKDecision:
    """
    Tests H0: rank(item) <= K against H1: rank(item) > K at level alpha.
    """

    if not 1 <= k <= context.n:
        raise ValidationError("K must lie in [1, n].")
    one_sided = replace(config, alpha=alpha, side="one-sided")
    critical_value = bootstrap_critical_value(context, [item], one_sided, rng)
    decision = top_k_decision(estimate, context, item, k, critical_value, one_sided)
    logging.info(
        "Top-%d test for item %d: lower rank bound %d, %s.",
        k, item, decision.lower, "reject" if decision.reject else "keep"
    )
    return decision


def screening_set(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        critical_value: CriticalValue,
        k: int,
        config: BootstrapConfig) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """
    Items whose left-sided lower rank bound is at most K, and all bounds.

    Items without comparisons get bound 1 and are always kept.
    """

    scores = _scores_of(estimate)
    bounds = np.ones(scores.size, dtype=int)
    for interval in rank_intervals(
            estimate, context, critical_value.item_set, critical_value, config):
        bounds[interval.item] = interval.lower
    selected = tuple(int(item) for item in np.flatnonzero(bounds <= k))
    return selected, tuple(int(bound) for bound in bounds)


def admission_count(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        unit_critical_value: CriticalValue,
        k: int,
        config: BootstrapConfig) -> int:
    """
    Estimate of D, the number of leading empirical ranks needed to hold
    the true top-K items.

    Bounds come from the unit normalizer. Items are walked in empirical
    rank order and D is the last position whose bound is at most K.
    """

    _, bounds = screening_set(estimate, context, unit_critical_value, k, config)
    order = np.argsort(point_ranks(estimate), kind="stable")
    admitted = [
        position + 1 for position, item in enumerate(order)
        if bounds[item] <= k
    ]
    return max(admitted) if admitted else 0


def sure_screening(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        k: int,
        alpha: float,
        config: BootstrapConfig,
        rng: Optional[np.random.Generator] = None,
        unit_rng: Optional[np.random.Generator] = None) -> ScreeningResult:
    """
    Screening set containing the true top-K items with probability 1 - alpha.

    Uses uniform left-sided intervals over all identifiable items, and a
    second bootstrap with the unit normalizer for the admission count.

    params:
        | estimate: {ScoreEstimate} - fitted scores
        | context: {InferenceContext} - shares and residuals at the estimate
        | k: {int} - number of top items to screen for
        | alpha: {float} - significance level
        | config: {BootstrapConfig} - draws, seed and normalizer
        | rng: {Generator} - stream of the screening bootstrap
        | unit_rng: {Generator} - stream of the unit-normalizer bootstrap
    """

    if not 1 <= k <= context.n:
        raise ValidationError("K must lie in [1, n].")
    items = [int(item) for item in np.flatnonzero(context.identifiable)]
    if len(items) < context.n:
        logging.warning(
            "%d item(s) without comparisons are kept in the screening set.",
            context.n - len(items)
        )
    one_sided = replace(config, alpha=alpha, side="one-sided")
    critical_value = bootstrap_critical_value(context, items, one_sided, rng)
    unit = replace(one_sided, normalizer="unit")
    if unit_rng is None:
        unit_rng = helpers.make_rng(config.seed, 0, "bootstrap-unit")
    unit_value = bootstrap_critical_value(context, items, unit, unit_rng)
    result = screen_with(estimate, context, k, critical_value, unit_value, one_sided)
    logging.info(
        "Screening for top-%d keeps %d item(s); admission count %d.",
        k, len(result.selected), result.d_hat
    )
    return result


def screen_with(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        k: int,
        critical_value: CriticalValue,
        unit_critical_value: CriticalValue,
        config: BootstrapConfig) -> ScreeningResult:
    """
    Screening set and admission count from precomputed one-sided quantiles.

    Both quantiles depend on the item set only, so one pair serves every K.
    """

    if not 1 <= k <= context.n:
        raise ValidationError("K must lie in [1, n].")
    one_sided = replace(config, side="one-sided")
    selected, bounds = screening_set(
        estimate, context, critical_value, k,
        replace(one_sided, normalizer=critical_value.normalizer_tag)
    )
    d_hat = admission_count(
        estimate, context, unit_critical_value, k,
        replace(one_sided, normalizer="unit")
    )
    return ScreeningResult(
        k=int(k),
        selected=selected,
        d_hat=d_hat,
        lower_bounds=bounds,
        critical_value=critical_value,
        unit_critical_value=unit_critical_value
    )


def build_rank_report(
        estimate: Union[ScoreEstimate, ScoreLike],
        context: InferenceContext,
        item_set: Sequence[int],
        config: BootstrapConfig,
        rng: Optional[np.random.Generator] = None) -> RankReport:
    """
    Runs the bootstrap for item_set and collects the rank intervals.
    """

    critical_value = bootstrap_critical_value(context, item_set, config, rng)
    intervals = rank_intervals(estimate, context, item_set, critical_value, config)
    return RankReport(
        alpha=config.alpha,
        item_set=critical_value.item_set,
        intervals=tuple(intervals),
        critical_value=critical_value,
        seeds={"bootstrap": config.seed}
    )
