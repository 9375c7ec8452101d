#!/usr/bin/env python3
# -*- coding: utf-8 -*-


import math

import numpy as np
import pytest

from pyrankinfer import errors
from pyrankinfer import mle
from pyrankinfer import model
from pyrankinfer import uq
from pyrankinfer.simulate import SimulationConfig, simulate

from . import oracles


def single_edge(winners):
    graph = model.ComparisonHypergraph(3, 3, [(0, 1, 2)])
    return model.ComparisonDataset.from_trial_level(graph, np.array([winners]))


class TestInformationShare:
    def test_three_way_at_zero(self):
        edges = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
        graph = model.ComparisonHypergraph(4, 3, edges)
        data = model.ComparisonDataset.from_trial_level(graph, np.zeros((4, 2), dtype=int))
        assert math.isclose(uq.information_share(data, np.zeros(4), 0), 2 * 3 / 9)

    def test_pairwise_at_zero(self):
        graph = model.ComparisonHypergraph(4, 2, [(0, 1), (0, 2), (1, 3)])
        data = model.ComparisonDataset.from_trial_level(graph, np.zeros((3, 1), dtype=int))
        assert math.isclose(uq.information_share(data, np.zeros(4), 0), 2 / 4)

    def test_matches_ordered_tuples(self):
        rng = np.random.default_rng(17)
        data = oracles.random_dataset(rng, 6, 3)
        theta = rng.normal(size=6)
        shares = uq.information_shares(data, theta)
        for m in range(6):
            if data.graph.degree(m) == 0:
                continue
            assert math.isclose(
                math.factorial(3) * shares[m],
                oracles.ordered_g(data, theta, m),
                rel_tol=1e-10
            )

    def test_non_identifiable(self):
        graph = model.ComparisonHypergraph(4, 3, [(0, 1, 2)])
        data = model.ComparisonDataset.from_trial_level(graph, np.array([[0]]))
        with pytest.raises(errors.NonIdentifiableError) as info:
            uq.information_share(data, np.zeros(4), 3)
        assert info.value.item == 3

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        data = oracles.random_dataset(rng, 6, 3)
        theta = rng.normal(size=6)
        assert np.allclose(
            uq.information_shares(data, theta),
            uq.information_shares(data, theta + 2.5),
            atol=1e-12
        )


class TestScoreDirection:
    def test_all_wins(self):
        data = single_edge([0, 0, 0, 0])
        assert math.isclose(uq.score_direction(data, np.zeros(3), 0), -3.0)

    def test_balanced(self):
        data = single_edge([0, 1, 2])
        assert abs(uq.score_direction(data, np.zeros(3), 1)) < 1e-12

    def test_matches_gradient(self):
        rng = np.random.default_rng(23)
        data = oracles.random_dataset(rng, 6, 3)
        theta = rng.normal(size=6)
        grad = mle.gradient(data, theta)
        shares = uq.information_shares(data, theta)
        for m in range(6):
            if data.graph.degree(m):
                assert math.isclose(
                    uq.score_direction(data, theta, m), grad[m] / shares[m]
                )


class TestContext:
    def test_residuals(self):
        context = uq.build_context(single_edge([0, 1, 2]), np.zeros(3))
        assert np.allclose(context.xi_hat[:, 0], [-3.0, 1.5, 1.5])
        assert np.allclose(context.xi_hat[:, 1], [1.5, -3.0, 1.5])
        # Probability weighted mean over the winner is zero
        assert math.isclose((1 / 3) * -3.0 + (2 / 3) * 1.5, 0.0, abs_tol=1e-12)

    def test_residual_mean(self):
        rng = np.random.default_rng(29)
        data = oracles.random_dataset(rng, 6, 3, trials=7)
        theta = rng.normal(size=6)
        context = uq.build_context(data, theta)
        proxy = context.score_proxy()
        for m in range(6):
            if data.graph.degree(m):
                assert abs(proxy[m] - uq.score_direction(data, theta, m)) < 1e-10

    def test_missing_trial_level(self):
        data = single_edge([0, 1]).aggregated()
        with pytest.raises(errors.MissingTrialLevelError):
            uq.build_context(data, np.zeros(3))

    def test_sigma_hat(self):
        rng = np.random.default_rng(31)
        data = oracles.random_dataset(rng, 5, 3)
        context = uq.build_context(data, rng.normal(size=5))
        active = np.flatnonzero(context.identifiable)
        m, k = int(active[0]), int(active[-1])
        assert context.sigma_hat(m, k) == context.sigma_hat(k, m)
        assert math.isclose(
            context.sigma_hat(m, k),
            math.sqrt(1 / context.s_share[m] + 1 / context.s_share[k])
        )

    def test_isolated_item(self):
        graph = model.ComparisonHypergraph(4, 3, [(0, 1, 2)])
        data = model.ComparisonDataset.from_trial_level(graph, np.array([[0, 1]]))
        context = uq.build_context(data, np.zeros(4))
        assert not context.identifiable[3]
        assert np.all(context.xi_hat[:, 3] == 0.0)
        assert math.isinf(context.sigma_row(0)[3])
        with pytest.raises(errors.NonIdentifiableError):
            context.sigma_hat(0, 3)

    def test_immutable(self):
        context = uq.build_context(single_edge([0, 1]), np.zeros(3))
        with pytest.raises(ValueError):
            context.xi_hat[0, 0] = 1.0


class TestScoreIntervals:
    def test_alpha_one(self):
        context = uq.build_context(single_edge([0, 1, 2]), np.zeros(3))
        intervals = uq.score_ci(context, 1.0)
        assert np.allclose(intervals[:, 0], intervals[:, 1])

    def test_width(self):
        context = uq.build_context(single_edge([0, 1, 2, 0]), np.zeros(3))
        intervals = uq.score_ci(context, 0.05)
        width = intervals[:, 1] - intervals[:, 0]
        assert np.allclose(width, 2 * 1.959963984540054 / context.rho)

    def test_standard_errors_agree(self):
        data = single_edge([0, 1, 2, 0])
        context = uq.build_context(data, np.zeros(3))
        assert np.allclose(uq.standard_errors(data, np.zeros(3)), context.standard_errors())

    def test_bad_alpha(self):
        context = uq.build_context(single_edge([0]), np.zeros(3))
        with pytest.raises(errors.ConfigError):
            uq.score_ci(context, 0.0)


class TestDeltaResidual:
    def test_balanced(self):
        data = single_edge([0, 1, 2])
        assert np.allclose(uq.delta_residual(data, np.zeros(3), np.zeros(3)), 0.0)

    def test_isolated_is_nan(self):
        graph = model.ComparisonHypergraph(4, 2, [(0, 1)])
        data = model.ComparisonDataset.from_trial_level(graph, np.array([[0, 1]]))
        result = uq.delta_residual(data, np.zeros(4), np.zeros(4))
        assert math.isnan(result[2])
        assert result[0] == 0.0

    def test_matches_ordered_tuples(self):
        rng = np.random.default_rng(17)
        data = oracles.random_dataset(rng, 5, 3, trials=6, edge_prob=0.8)
        estimate = rng.normal(size=5)
        truth = rng.normal(size=5)
        centered = truth - truth.mean()
        result = uq.delta_residual(data, estimate, truth)
        for m in range(5):
            if not data.graph.degree(m):
                continue
            ratio = oracles.ordered_f(data, centered, m) / oracles.ordered_g(data, centered, m)
            assert math.isclose(
                result[m], estimate[m] - centered[m] + ratio, rel_tol=1e-9, abs_tol=1e-10
            )


@pytest.mark.slow
class TestMonteCarlo:
    def test_residuals_centered_at_truth(self):
        config = SimulationConfig(n=20, m_way=3, edge_prob=0.3, trials=10, seed=5)
        residuals = np.vstack([
            uq.build_context(instance.dataset, instance.truth).xi_hat
            for instance in (simulate(config, rep) for rep in range(200))
        ])
        mean = residuals.mean(axis=0)
        error = residuals.std(axis=0, ddof=1) / math.sqrt(residuals.shape[0])
        assert np.all(np.abs(mean) <= 4 * error)

    def test_score_interval_coverage(self):
        config = SimulationConfig(n=60, m_way=3, edge_prob=0.03, trials=20, seed=11)
        covered = []
        for rep in range(500):
            instance = simulate(config, rep)
            estimate = mle.fit_mle(instance.dataset)
            context = uq.build_context(instance.dataset, estimate.theta_hat)
            low, high = uq.score_ci(context, 0.05)[0]
            covered.append(low <= instance.truth.values[0] <= high)
        assert 0.93 <= np.mean(covered) <= 0.97
