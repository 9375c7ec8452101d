#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module with the Gaussian multiplier bootstrap.

For item set M the target is the maximum over m in M and k != m of the
standardized pairwise score-difference errors. Its quantiles are estimated
by resampling

    G = max_m max_k | c / L * sum_l (xi_{k,l} - xi_{m,l}) / eta_mk * w_l |

with w_l i.i.d. standard normal, shared by every pair of a draw.

Scaling ledger, with c the theta-scale factor:
| sigma-hat       eta = sigma_hat_mk          c = sqrt(L)
| unit            eta = 1                     c = sqrt(L)
| bonferroni-eta  eta = eta_tilde_mk          c = 1
eta_tilde already carries sqrt(L) through rho, hence the 1 / L multiplier
and threshold eta * zeta / c in theta units for every normalizer.
"""


from __future__ import annotations
from dataclasses import dataclass, field
import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.stats import norm

from . import defaults
from . import helpers
from .errors import ConfigError, ContractError, ValidationError
from .model import ScoreLike, as_scores
from .uq import InferenceContext


@dataclass(frozen=True)
class BootstrapConfig:
    """
    Settings of one bootstrap run.
    """

    draws: int = defaults.BOOTSTRAP_DEFAULTS["DRAWS"]
    alpha: float = defaults.BOOTSTRAP_DEFAULTS["ALPHA"]
    seed: int = defaults.BOOTSTRAP_DEFAULTS["SEED"]
    normalizer: str = "sigma-hat"
    side: str = "two-sided"
    c0: float = defaults.BOOTSTRAP_DEFAULTS["C0"]

    def __post_init__(self) -> None:
        if not helpers.is_positive_int(self.draws) or \
                self.draws < defaults.BOOTSTRAP_DEFAULTS["MIN_DRAWS"]:
            raise ConfigError(
                "draws must be an integer of at least {0}.".format(
                    int(defaults.BOOTSTRAP_DEFAULTS["MIN_DRAWS"])
                )
            )
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1).")
        if self.normalizer not in defaults.NORMALIZERS:
            raise ConfigError(
                "normalizer must be one of {0}.".format(defaults.NORMALIZERS)
            )
        if self.side not in defaults.SIDES:
            raise ConfigError("side must be one of {0}.".format(defaults.SIDES))
        if not self.c0 > 0:
            raise ConfigError("c0 must be positive.")


@dataclass(frozen=True)
class CriticalValue:
    """
    Bootstrap quantile together with the sorted draws it came from.
    """

    value: float
    draws_used: int
    item_set: Tuple[int, ...]
    normalizer_tag: str
    side: str
    alpha: float
    seed: int
    statistics: np.ndarray = field(repr=False)

    def quantile(self, alpha: float) -> float:
        """
        Critical value at another level from the same draws.
        """

        return helpers.order_statistic_quantile(self.statistics, alpha)


def theta_factor(normalizer: str, trials: int) -> float:
    """
    Factor c mapping score differences onto the statistic scale.
    """

    if normalizer == "bonferroni-eta":
        return 1.0
    return math.sqrt(trials)


def normalizer_row(
        context: InferenceContext,
        m: int,
        normalizer: str,
        alpha: float,
        c0: float) -> np.ndarray:
    """
    eta_mk for every k; infinite where k is not identifiable.
    """

    if normalizer == "sigma-hat":
        return context.sigma_row(m)
    if normalizer == "unit":
        context.check_item(m)
        return np.where(context.identifiable, 1.0, np.inf)
    context.check_item(m)
    z = norm.ppf(1.0 - alpha / 2.0)
    with np.errstate(divide="ignore"):
        inverse_rho = np.where(context.identifiable, 1.0 / context.rho, np.inf)
    bound = (1.0 + c0) * math.sqrt(2.0 * math.log(context.n))
    return z * inverse_rho[m] / bound + inverse_rho


def check_trial_count(trials: int, n: int) -> bool:
    """
    Warns when L < (log n)^2, where the bootstrap may be poorly calibrated.
    """

    if n > 1 and trials < math.log(n) ** 2:
        logging.warning(
            "L = %d is below (log n)^2 = %.1f; bootstrap critical values "
            "may be inaccurate.", trials, math.log(n) ** 2
        )
        return False
    return True


def _check_item_set(context: InferenceContext, item_set: Iterable[int]) -> Tuple[int, ...]:
    items = tuple(sorted(set(int(item) for item in item_set)))
    if not items:
        raise ValidationError("Item set must not be empty.")
    for item in items:
        context.check_item(item)
    if context.identifiable.sum() < 2:
        raise ValidationError("At least two identifiable items are needed.")
    return items


def bootstrap_statistics(
        context: InferenceContext,
        item_set: Iterable[int],
        config: BootstrapConfig,
        rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Returns the B bootstrap maxima (unsorted).

    params:
        | context: {InferenceContext} - residuals evaluated at theta_hat
        | item_set: {Iterable[int]} - items M whose ranks are inferred
        | config: {BootstrapConfig} - bootstrap settings
        | rng: {Generator} - random stream {default: seeded from config}
    """

    items = _check_item_set(context, item_set)
    if rng is None:
        rng = helpers.make_rng(config.seed, 0, "bootstrap")
    trials = context.trials
    multipliers = rng.standard_normal((config.draws, trials))
    # (B x n) weighted residual sums, shared by every pair of a draw
    projected = multipliers @ context.xi_hat
    projected *= theta_factor(config.normalizer, trials) / trials
    result = np.full(config.draws, -np.inf)
    for m in items:
        eta = normalizer_row(context, m, config.normalizer, config.alpha, config.c0)
        valid = np.isfinite(eta)
        valid[m] = False
        if not valid.any():
            continue
        if config.side == "two-sided":
            ratio = np.abs(projected[:, valid] - projected[:, [m]]) / eta[valid]
        else:
            ratio = (projected[:, [m]] - projected[:, valid]) / eta[valid]
        np.maximum(result, ratio.max(axis=1), out=result)
    return result


def bootstrap_critical_value(
        context: InferenceContext,
        item_set: Iterable[int],
        config: BootstrapConfig,
        rng: Optional[np.random.Generator] = None) -> CriticalValue:
    """
    Gaussian multiplier bootstrap (1 - alpha) quantile of the max statistic.
    """

    items = _check_item_set(context, item_set)
    statistics = np.sort(bootstrap_statistics(context, items, config, rng))
    statistics.setflags(write=False)
    value = helpers.order_statistic_quantile(statistics, config.alpha)
    logging.info(
        "Bootstrap %s/%s critical value %.4f from %d draws over %d item(s).",
        config.normalizer, config.side, value, config.draws, len(items)
    )
    return CriticalValue(
        value=value,
        draws_used=config.draws,
        item_set=items,
        normalizer_tag=config.normalizer,
        side=config.side,
        alpha=config.alpha,
        seed=config.seed,
        statistics=statistics
    )


def observed_statistic(
        context: InferenceContext,
        item_set: Iterable[int],
        truth: ScoreLike,
        config: BootstrapConfig) -> float:
    """
    Max standardized error of the pairwise differences against the truth.

    Only available in simulations. The estimate is context.theta_used.
    """

    items = _check_item_set(context, item_set)
    estimate = context.theta_used
    truth = as_scores(truth, context.n)
    if truth.size != estimate.size:
        raise ContractError("Truth and estimate differ in length.")
    error = estimate - (truth - truth.mean())
    factor = theta_factor(config.normalizer, context.trials)
    result = -np.inf
    for m in items:
        eta = normalizer_row(context, m, config.normalizer, config.alpha, config.c0)
        valid = np.isfinite(eta)
        valid[m] = False
        if not valid.any():
            continue
        # (theta_hat_k - theta_hat_m) - (theta*_k - theta*_m)
        gap = factor * (error[valid] - error[m]) / eta[valid]
        if config.side == "two-sided":
            gap = np.abs(gap)
        result = max(result, float(gap.max()))
    return result
