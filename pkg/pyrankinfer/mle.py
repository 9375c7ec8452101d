#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module computing the maximum likelihood estimate of the scores.

The loss is the canonical unordered-edge negative log-likelihood

    L(theta) = - sum_e sum_{k in e} ybar_{k,e} log p_{k,e}(theta),

which equals the ordered-tuple loss divided by M!. Both have the same
minimizer on the sum-zero subspace. It is minimized by damped Newton
iterations kept inside {1'theta = 0, |theta_i| <= kappa_max / 2}.
"""


from __future__ import annotations
from dataclasses import dataclass
import logging
from typing import Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import brentq
from scipy.special import log_softmax

from . import defaults
from .errors import ConfigError, NoDataError
from .model import (
    ComparisonDataset,
    ScoreLike,
    ScoreVector,
    as_scores,
    edge_probabilities
)


@dataclass(frozen=True)
class FitConfig:
    """
    Settings of the damped Newton solver.
    """

    grad_tol: float = defaults.FIT_DEFAULTS["GRAD_TOL"]
    max_iter: int = defaults.FIT_DEFAULTS["MAX_ITER"]
    kappa_max: float = defaults.FIT_DEFAULTS["KAPPA_MAX"]
    shrink: float = defaults.FIT_DEFAULTS["SHRINK"]
    sufficient_decrease: float = defaults.FIT_DEFAULTS["SUFFICIENT"]
    ridge: float = defaults.FIT_DEFAULTS["RIDGE"]
    max_halvings: int = defaults.FIT_DEFAULTS["MAX_HALVINGS"]

    def __post_init__(self) -> None:
        if not self.grad_tol > 0:
            raise ConfigError("grad_tol must be positive.")
        if int(self.max_iter) < 1:
            raise ConfigError("max_iter must be at least 1.")
        if not self.kappa_max > 0:
            raise ConfigError("kappa_max must be positive.")
        if not 0 < self.shrink < 1:
            raise ConfigError("shrink must lie in (0, 1).")
        if not 0 < self.sufficient_decrease < 1:
            raise ConfigError("sufficient_decrease must lie in (0, 1).")
        if self.ridge < 0:
            raise ConfigError("ridge must be nonnegative.")


@dataclass(frozen=True)
class ScoreEstimate:
    """
    Result of fit_mle.

    final_grad_norm is the sup norm of the projected gradient step
    theta - P(theta - grad), equal to the plain gradient norm whenever
    no box constraint is active.
    """

    theta_hat: ScoreVector
    converged: bool
    iterations: int
    final_grad_norm: float
    non_identifiable_items: Tuple[int, ...]
    boundary_items: Tuple[int, ...]
    objective: float


def neg_log_likelihood(data: ComparisonDataset, theta: ScoreLike) -> float:
    """
    Canonical unordered-edge loss; the ordered-tuple loss is M! times it.
    """

    values = as_scores(theta, data.n)
    if data.graph.num_edges == 0:
        return 0.0
    log_probs = log_softmax(values[data.graph.members], axis=1)
    return float(-(data.win_rates * log_probs).sum())


def gradient(data: ComparisonDataset, theta: ScoreLike) -> np.ndarray:
    """
    Exact gradient sum_{e containing m} (p_{m,e} - ybar_{m,e}).
    """

    values = as_scores(theta, data.n)
    grad = np.zeros(data.n)
    if data.graph.num_edges:
        residual = edge_probabilities(data.graph, values) - data.win_rates
        np.add.at(grad, data.graph.members, residual)
    return grad


def hessian(data: ComparisonDataset, theta: ScoreLike) -> np.ndarray:
    """
    Exact Hessian sum_e [diag(p_e) - p_e p_e'] scattered to items.
    """

    values = as_scores(theta, data.n)
    result = np.zeros((data.n, data.n))
    if data.graph.num_edges == 0:
        return result
    probs = edge_probabilities(data.graph, values)
    members = data.graph.members
    blocks = -probs[:, :, None] * probs[:, None, :]
    index = np.arange(data.graph.m_way)
    blocks[:, index, index] += probs
    np.add.at(
        result,
        (members[:, :, None], members[:, None, :]),
        blocks
    )
    return result


def _project(values: np.ndarray, half_width: float) -> np.ndarray:
    """
    Euclidean projection onto {sum x = 0, |x_i| <= half_width}.

    The projection is clip(x - c) for the shift c that zeroes the sum.
    """

    shifted = values - values.mean()
    if np.all(np.abs(shifted) <= half_width):
        return shifted

    def total(shift: float) -> float:
        return float(np.clip(values - shift, -half_width, half_width).sum())

    shift = brentq(
        total,
        values.min() - half_width,
        values.max() + half_width,
        xtol=1e-15
    )
    projected = np.clip(values - shift, -half_width, half_width)
    inside = np.abs(projected) < half_width
    if inside.any():
        projected[inside] -= projected.sum() / inside.sum()
    return projected


def fit_mle(data: ComparisonDataset, config: FitConfig = FitConfig()) -> ScoreEstimate:
    """
    Computes the sum-zero maximum likelihood estimate inside the kappa box.

    Items of degree 0 keep score 0 and are reported as non-identifiable.

    params:
        | data: {ComparisonDataset} - observed comparisons
        | config: {FitConfig} - solver settings
    """

    degrees = data.graph.degrees()
    active = np.flatnonzero(degrees > 0)
    if active.size == 0:
        raise NoDataError("No item appears in any comparison.")
    inactive = tuple(int(item) for item in np.flatnonzero(degrees == 0))
    if inactive:
        logging.warning(
            "Items %s appear in no comparison; their scores are fixed at 0.",
            list(inactive)
        )
    components, _ = data.graph.connected_components()
    if components - len(inactive) > 1:
        logging.warning(
            "Comparison hypergraph has %d connected components; scores are "
            "only comparable within a component.",
            components - len(inactive)
        )

    half_width = config.kappa_max / 2.0
    theta = np.zeros(data.n)
    objective = neg_log_likelihood(data, theta)
    converged = False
    iterations = 0
    stationarity = np.inf
    for _ in range(int(config.max_iter)):
        grad = gradient(data, theta)
        trial = theta.copy()
        trial[active] = _project(theta[active] - grad[active], half_width)
        stationarity = float(np.max(np.abs(theta - trial)))
        if stationarity <= config.grad_tol:
            converged = True
            break
        system = hessian(data, theta)[np.ix_(active, active)]
        system[np.diag_indices_from(system)] += config.ridge
        try:
            step = linalg.solve(system, -grad[active], assume_a="sym")
        except (linalg.LinAlgError, ValueError):
            step = linalg.lstsq(system, -grad[active])[0]
        if not np.all(np.isfinite(step)) or grad[active] @ step >= 0:
            step = -grad[active]
        scale = 1.0
        accepted = False
        for _ in range(int(config.max_halvings)):
            candidate = theta.copy()
            candidate[active] = _project(theta[active] + scale * step, half_width)
            value = neg_log_likelihood(data, candidate)
            decrease = grad @ (candidate - theta)
            if value <= objective + config.sufficient_decrease * decrease and \
                    value <= objective:
                accepted = True
                break
            scale *= config.shrink
        if not accepted:
            logging.debug("Line search stalled at iteration %d.", iterations)
            break
        theta = candidate
        objective = value
        iterations += 1
        logging.debug(
            "Newton iteration %d: loss %.12g, step %.3g, stationarity %.3e",
            iterations, objective, scale, stationarity
        )

    if not converged:
        grad = gradient(data, theta)
        trial = theta.copy()
        trial[active] = _project(theta[active] - grad[active], half_width)
        stationarity = float(np.max(np.abs(theta - trial)))
        converged = stationarity <= config.grad_tol
    if not converged:
        logging.warning(
            "MLE stopped after %d iteration(s) with gradient norm %.3e.",
            iterations, stationarity
        )
    boundary = tuple(
        int(item) for item in active
        if abs(theta[item]) >= half_width - 1e-8
    )
    if boundary:
        logging.warning(
            "Items %s reached the score bound +/-%.3g; the data separate them.",
            list(boundary), half_width
        )
    logging.info(
        "MLE fitted %d item(s) in %d iteration(s), loss %.6f.",
        active.size, iterations, objective
    )
    return ScoreEstimate(
        theta_hat=ScoreVector(theta, config.kappa_max),
        converged=converged,
        iterations=iterations,
        final_grad_norm=stationarity,
        non_identifiable_items=inactive,
        boundary_items=boundary,
        objective=objective
    )
