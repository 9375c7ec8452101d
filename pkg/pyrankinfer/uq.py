#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module with per-item uncertainty quantification.

All quantities use the canonical unordered-edge reduction. With
p_{m,e} the choice probability of item m in edge e:

    S_m       = sum_{e containing m} p_{m,e} (1 - p_{m,e})
    g^(m)     = M! S_m
    f^(m)     = M! sum_{e containing m} (p_{m,e} - ybar_{m,e})
    rho_m     = sqrt(L S_m)
    sigma_mk  = sqrt(1 / S_m + 1 / S_k)
    xi_{m,l}  = (1 / S_m) sum_{e containing m} (p_{m,e} - y^(l)_{m,e})

so f^(m) / g^(m) is the mean of xi_{m,l} over the L trials.
"""


from __future__ import annotations
from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.stats import norm

from .errors import ConfigError, MissingTrialLevelError, NonIdentifiableError
from .mle import gradient
from .model import (
    ComparisonDataset,
    ScoreLike,
    as_scores,
    edge_probabilities
)


@dataclass(frozen=True)
class InferenceContext:
    """
    Shares, standardizers and multiplier residuals evaluated at theta_used.

    Columns of non-identifiable items hold zeros in xi_hat and s_share.
    """

    s_share: np.ndarray
    rho: np.ndarray
    xi_hat: np.ndarray
    theta_used: np.ndarray
    identifiable: np.ndarray
    trials: int

    @property
    def n(self) -> int:
        return int(self.s_share.size)

    def check_item(self, item: int) -> None:
        """
        Raises NonIdentifiableError when item has degree 0.
        """

        if item < 0 or item >= self.n:
            raise NonIdentifiableError(
                item, "Item {0} is outside [0, {1}).".format(item, self.n)
            )
        if not self.identifiable[item]:
            raise NonIdentifiableError(item)

    def sigma_hat(self, m: int, k: int) -> float:
        """
        Standard deviation estimate of the score difference of m and k.
        """

        self.check_item(m)
        self.check_item(k)
        return math.sqrt(1.0 / self.s_share[m] + 1.0 / self.s_share[k])

    def sigma_row(self, m: int) -> np.ndarray:
        """
        sigma_hat(m, k) for every k; infinite for non-identifiable k.
        """

        self.check_item(m)
        with np.errstate(divide="ignore"):
            inverse = np.where(self.identifiable, 1.0 / self.s_share, np.inf)
        return np.sqrt(inverse[m] + inverse)

    def standard_errors(self) -> np.ndarray:
        """
        Marginal standard errors 1 / rho_m; NaN for non-identifiable items.
        """

        with np.errstate(divide="ignore"):
            return np.where(self.identifiable, 1.0 / self.rho, np.nan)

    def score_proxy(self) -> np.ndarray:
        """
        f^(m) / g^(m) at theta_used, the trial mean of xi_hat.
        """

        return self.xi_hat.mean(axis=0)


def information_shares(data: ComparisonDataset, theta: ScoreLike) -> np.ndarray:
    """
    S_m for every item; zero for items of degree 0.
    """

    values = as_scores(theta, data.n)
    shares = np.zeros(data.n)
    if data.graph.num_edges:
        probs = edge_probabilities(data.graph, values)
        np.add.at(shares, data.graph.members, probs * (1.0 - probs))
    return shares


def information_share(data: ComparisonDataset, theta: ScoreLike, m: int) -> float:
    """
    Canonical information share S_m(theta) = g^(m) / M!.
    """

    if data.graph.degree(m) == 0:
        raise NonIdentifiableError(m)
    return float(information_shares(data, theta)[m])


def score_direction(data: ComparisonDataset, theta: ScoreLike, m: int) -> float:
    """
    f^(m) / g^(m): the m-th gradient coordinate divided by S_m.

    The one-step proxy of theta_hat_m - theta_m is the negative of it.
    """

    share = information_share(data, theta, m)
    return float(gradient(data, theta)[m] / share)


def build_context(data: ComparisonDataset, theta: ScoreLike) -> InferenceContext:
    """
    Evaluates shares, rho and the (L x n) multiplier residuals at theta.

    params:
        | data: {ComparisonDataset} - comparisons with trial-level winners
        | theta: {ScoreLike} - scores to evaluate at, normally theta_hat
    """

    if not data.has_trial_level:
        raise MissingTrialLevelError()
    values = as_scores(theta, data.n)
    trials = data.trials
    identifiable = data.graph.degrees() > 0
    shares = information_shares(data, values)
    expected = np.zeros(data.n)
    observed = np.zeros((trials, data.n))
    if data.graph.num_edges:
        probs = edge_probabilities(data.graph, values)
        np.add.at(expected, data.graph.members, probs)
        members = data.graph.members
        winners = np.take_along_axis(members, data.trial_level, axis=1)
        trial_index = np.broadcast_to(np.arange(trials), winners.shape)
        np.add.at(observed, (trial_index.ravel(), winners.ravel()), 1.0)
    xi_hat = np.zeros((trials, data.n))
    xi_hat[:, identifiable] = (
        (expected[identifiable] - observed[:, identifiable]) /
        shares[identifiable]
    )
    rho = np.sqrt(trials * shares)
    if not identifiable.all():
        logging.warning(
            "Items %s are excluded from inference (no comparisons).",
            [int(item) for item in np.flatnonzero(~identifiable)]
        )
    theta_used = np.array(values)
    for array in (shares, rho, xi_hat, theta_used, identifiable):
        array.setflags(write=False)
    return InferenceContext(
        s_share=shares,
        rho=rho,
        xi_hat=xi_hat,
        theta_used=theta_used,
        identifiable=identifiable,
        trials=trials
    )


def score_ci(context: InferenceContext, alpha: float) -> np.ndarray:
    """
    Marginal (per-item, not simultaneous) intervals theta_m +/- z / rho_m.

    Returns an (n x 2) array; rows of non-identifiable items are NaN.
    """

    return marginal_intervals(
        context.theta_used, context.standard_errors(), alpha
    )


def standard_errors(data: ComparisonDataset, theta: ScoreLike) -> np.ndarray:
    """
    1 / rho_m from win counts alone; NaN for items of degree 0.
    """

    shares = information_shares(data, theta)
    with np.errstate(divide="ignore"):
        return np.where(shares > 0, 1.0 / np.sqrt(data.trials * shares), np.nan)


def marginal_intervals(
        theta: ScoreLike,
        errors: np.ndarray,
        alpha: float) -> np.ndarray:
    """
    (n x 2) array of theta_m -/+ z_{1 - alpha/2} * errors_m.
    """

    if not 0 < alpha <= 1:
        raise ConfigError("alpha must lie in (0, 1].")
    values = as_scores(theta, np.size(errors))
    half = norm.ppf(1.0 - alpha / 2.0) * np.asarray(errors)
    return np.column_stack((values - half, values + half))


def delta_residual(
        data: ComparisonDataset,
        theta_hat: ScoreLike,
        theta_truth: ScoreLike) -> np.ndarray:
    """
    delta = theta_hat - theta* + f^(m) / g^(m) evaluated at theta*.

    The truth is centered first. NaN marks non-identifiable items.
    """

    estimate = as_scores(theta_hat, data.n)
    truth = as_scores(theta_truth, data.n)
    truth = truth - truth.mean()
    shares = information_shares(data, truth)
    grad = gradient(data, truth)
    result = np.full(data.n, np.nan)
    active = data.graph.degrees() > 0
    result[active] = estimate[active] - truth[active] + grad[active] / shares[active]
    return result
