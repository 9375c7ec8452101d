#!/usr/bin/env python3
# -*- coding: utf-8 -*-


import math

import numpy as np
import pytest

from pyrankinfer import errors
from pyrankinfer import model

from . import oracles


class TestScoreVector:
    def test_centered(self):
        scores = model.ScoreVector.centered([1.0, 2.0, 3.0])
        assert np.allclose(scores.values, [-1.0, 0.0, 1.0])
        assert scores.n == 3
        assert len(scores) == 3

    def test_rejects_nonzero_sum(self):
        with pytest.raises(errors.ValidationError):
            model.ScoreVector(np.array([1.0, 0.0]))

    def test_rejects_wide_range(self):
        with pytest.raises(errors.ValidationError):
            model.ScoreVector.centered([0.0, 12.0], kappa_max=10.0)

    def test_read_only(self):
        scores = model.ScoreVector.centered([1.0, 2.0])
        with pytest.raises(ValueError):
            scores.values[0] = 5.0

    def test_as_scores_length(self):
        with pytest.raises(errors.DimensionMismatchError):
            model.as_scores([0.0, 1.0], 3)


class TestEdge:
    def test_of_sorts(self):
        assert model.Edge.of([3, 1, 2]).members == (1, 2, 3)

    def test_repeated_member(self):
        with pytest.raises(errors.InvalidEdgeError):
            model.Edge.of([1, 1, 2])

    def test_unsorted(self):
        with pytest.raises(errors.InvalidEdgeError):
            model.Edge((2, 1))

    def test_contains(self):
        edge = model.Edge.of([0, 4])
        assert 4 in edge
        assert 2 not in edge
        assert edge.size == 2


class TestHypergraph:
    def test_degree(self):
        edges = [(0, 1, 2), (1, 2, 3), (0, 2, 4)]
        graph = model.ComparisonHypergraph(6, 3, edges)
        for item in range(6):
            assert model.degree(graph, item) == oracles.scan_degree(edges, item)
        assert graph.isolated_items() == [5]

    def test_duplicates_dropped(self):
        graph = model.ComparisonHypergraph(4, 2, [(0, 1), (1, 0), (2, 3)])
        assert graph.num_edges == 2

    def test_wrong_edge_size(self):
        with pytest.raises(errors.InvalidEdgeError):
            model.ComparisonHypergraph(4, 3, [(0, 1)])

    def test_item_out_of_range(self):
        with pytest.raises(errors.InvalidEdgeError):
            model.ComparisonHypergraph(3, 2, [(1, 3)])

    def test_bad_m_way(self):
        with pytest.raises(errors.ValidationError):
            model.ComparisonHypergraph(3, 4)

    def test_components(self):
        graph = model.ComparisonHypergraph(5, 2, [(0, 1), (2, 3)])
        count, labels = graph.connected_components()
        assert count == 3
        assert labels[0] == labels[1]
        assert labels[0] != labels[2]
        assert not graph.is_connected()

    def test_empty(self):
        graph = model.ComparisonHypergraph(3, 2)
        assert graph.num_edges == 0
        assert graph.isolated_items() == [0, 1, 2]


class TestDataset:
    def test_aggregate_trials(self):
        wins = model.aggregate_trials(np.array([[0, 0, 1], [2, 2, 2]]), 3)
        assert wins.tolist() == [[2, 1, 0], [0, 0, 3]]

    def test_from_trial_level(self):
        graph = model.ComparisonHypergraph(4, 3, [(0, 1, 2), (1, 2, 3)])
        data = model.ComparisonDataset.from_trial_level(
            graph, np.array([[0, 1], [2, 2]])
        )
        assert data.trials == 2
        assert data.wins.tolist() == [[1, 1, 0], [0, 0, 2]]
        assert np.allclose(data.win_rates[1], [0.0, 0.0, 1.0])
        assert data.has_trial_level
        assert not data.aggregated().has_trial_level

    def test_wins_must_sum_to_trials(self):
        graph = model.ComparisonHypergraph(3, 2, [(0, 1)])
        with pytest.raises(errors.ValidationError):
            model.ComparisonDataset(graph, 3, [[1, 1]])

    def test_trial_level_must_match_wins(self):
        graph = model.ComparisonHypergraph(3, 2, [(0, 1)])
        with pytest.raises(errors.ValidationError):
            model.ComparisonDataset(graph, 2, [[2, 0]], np.array([[0, 1]]))

    def test_item_ids(self):
        graph = model.ComparisonHypergraph(3, 2, [(0, 1)])
        data = model.ComparisonDataset(graph, 1, [[1, 0]], item_ids=["a", "b", "c"])
        assert data.index_of("c") == 2
        with pytest.raises(errors.ValidationError):
            data.index_of("d")
        plain = model.ComparisonDataset(graph, 1, [[1, 0]])
        assert plain.item_labels() == ["0", "1", "2"]

    def test_duplicate_item_ids(self):
        graph = model.ComparisonHypergraph(2, 2, [(0, 1)])
        with pytest.raises(errors.ValidationError):
            model.ComparisonDataset(graph, 1, [[1, 0]], item_ids=["a", "a"])


class TestProbabilities:
    def test_choice_probabilities(self):
        theta = [0.0, math.log(2.0), math.log(3.0)]
        probs = model.choice_probabilities(model.Edge((0, 1, 2)), theta)
        assert np.allclose(probs, [1 / 6, 2 / 6, 3 / 6])

    def test_shift_invariance(self):
        theta = np.array([0.3, -1.2, 0.9, 0.0])
        edge = model.Edge((0, 2, 3))
        assert np.allclose(
            model.choice_probabilities(edge, theta),
            model.choice_probabilities(edge, theta + 7.0)
        )

    def test_matches_direct_softmax(self):
        theta = [0.5, -0.25, 1.5, -1.75]
        graph = model.ComparisonHypergraph(4, 3, [(0, 1, 2), (0, 2, 3)])
        probs = model.edge_probabilities(graph, theta)
        for row, edge in zip(probs, graph.edges):
            expected = oracles.direct_softmax([theta[item] for item in edge.members])
            assert np.allclose(row, expected)
            assert math.isclose(row.sum(), 1.0)
