#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Brute force oracles for the test suite.

The likelihood sums over ordered M-tuples of distinct items, so every
unordered edge is visited M! times. These functions enumerate the tuples
directly and are only usable for tiny n.
"""


import itertools
import math

import numpy as np

from pyrankinfer.model import ComparisonDataset, ComparisonHypergraph


def direct_softmax(values):
    weights = [math.exp(value) for value in values]
    total = sum(weights)
    return [weight / total for weight in weights]


def _lookup(data: ComparisonDataset):
    """
    Maps every edge member set to its win rates by item.
    """

    rates = {}
    for edge, row in zip(data.graph.edges, data.win_rates):
        rates[edge.members] = dict(zip(edge.members, row))
    return rates


def ordered_loss(data: ComparisonDataset, theta) -> float:
    rates = _lookup(data)
    total = 0.0
    for tuple_ in itertools.permutations(range(data.n), data.graph.m_way):
        key = tuple(sorted(tuple_))
        if key not in rates:
            continue
        probs = direct_softmax([theta[item] for item in tuple_])
        total -= sum(
            rates[key][item] * math.log(prob)
            for item, prob in zip(tuple_, probs)
        )
    return total


def _ordered_terms(data: ComparisonDataset, theta, m: int):
    rates = _lookup(data)
    others = [item for item in range(data.n) if item != m]
    for tuple_ in itertools.permutations(others, data.graph.m_way - 1):
        key = tuple(sorted(tuple_ + (m,)))
        if key not in rates:
            continue
        denominator = math.exp(theta[m]) + sum(math.exp(theta[item]) for item in tuple_)
        yield tuple_, denominator, rates[key][m]


def ordered_f(data: ComparisonDataset, theta, m: int) -> float:
    total = 0.0
    for _, denominator, rate in _ordered_terms(data, theta, m):
        total += math.exp(theta[m]) / denominator - rate
    return data.graph.m_way * total


def ordered_g(data: ComparisonDataset, theta, m: int) -> float:
    total = 0.0
    for tuple_, denominator, _ in _ordered_terms(data, theta, m):
        total += sum(
            math.exp(theta[m] + theta[item]) / denominator ** 2
            for item in tuple_
        )
    return data.graph.m_way * total


def scan_degree(edges, item: int) -> int:
    return sum(1 for edge in edges if item in edge)


def random_dataset(
        rng: np.random.Generator,
        n: int,
        m_way: int,
        trials: int = 5,
        edge_prob: float = 0.7) -> ComparisonDataset:
    """
    Random subset of all M-subsets with uniformly drawn trial winners.
    """

    edges = [
        edge for edge in itertools.combinations(range(n), m_way)
        if rng.random() < edge_prob
    ]
    if not edges:
        edges = [tuple(range(m_way))]
    graph = ComparisonHypergraph(n, m_way, edges)
    winners = rng.integers(0, m_way, size=(graph.num_edges, trials))
    return ComparisonDataset.from_trial_level(graph, winners)
