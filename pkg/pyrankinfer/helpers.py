#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module with helper functions used in the project.
"""


from __future__ import annotations
import hashlib
import json
import math
import os
from typing import Any, List, Mapping, Sequence

import numpy as np

from . import defaults


def is_probability(value: float, allow_zero: bool = False) -> bool:
    """
    Checks whether value lies in (0, 1] or [0, 1] when allow_zero is set.
    """

    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False
    if not math.isfinite(value):
        return False
    lower_ok = value >= 0 if allow_zero else value > 0
    return lower_ok and value <= 1


def is_positive_int(value: int) -> bool:
    """
    Checks whether value is an integer greater than zero.
    """

    if isinstance(value, bool):
        return False
    return isinstance(value, (int, np.integer)) and value > 0


def make_rng(
        seed: int,
        replication: int = 0,
        purpose: str = "graph") -> np.random.Generator:
    """
    Returns an independent random stream for (seed, replication, purpose).

    The Philox generator is counter based, so streams keyed by the
    replication number do not depend on the order replications run in.

    params:
        | seed: {int} - nonnegative 64-bit seed
        | replication: {int} - replication number {default: 0}
        | purpose: {str} - key of defaults.PURPOSE_TAGS {default: "graph"}
    """

    if purpose not in defaults.PURPOSE_TAGS:
        raise KeyError("Unknown random stream purpose '{0}'.".format(purpose))
    entropy = [
        int(seed) & 0xFFFFFFFFFFFFFFFF,
        int(replication),
        defaults.PURPOSE_TAGS[purpose]
    ]
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy))
    )


def order_statistic_quantile(values: Sequence[float], alpha: float) -> float:
    """
    Returns the ceil((1 - alpha) * B)-th smallest of B values.

    This is the empirical counterpart of inf{z : P(G <= z) >= 1 - alpha}.
    """

    ordered = np.sort(np.asarray(values, dtype=float))
    count = ordered.size
    if count == 0:
        raise ValueError("Cannot take a quantile of no values.")
    # Guard against (1 - alpha) * B landing a hair above an integer
    position = int(math.ceil((1.0 - alpha) * count - 1e-9))
    position = min(max(position, 1), count)
    return float(ordered[position - 1])


def point_ranks(scores: Sequence[float]) -> np.ndarray:
    """
    Returns 1-based descending ranks, ties broken by smaller index.
    """

    values = np.asarray(scores, dtype=float)
    # lexsort sorts by the last key first
    order = np.lexsort((np.arange(values.size), -values))
    ranks = np.empty(values.size, dtype=int)
    ranks[order] = np.arange(1, values.size + 1)
    return ranks


def top_k_set(scores: Sequence[float], k: int) -> set:
    """
    Returns indexes of the k items with the largest scores.
    """

    ranks = point_ranks(scores)
    return {int(item) for item in np.flatnonzero(ranks <= k)}


def theoretical_rate(n: int, m_way: int, edge_prob: float, trials: int) -> float:
    """
    Returns sqrt(log n / (C(n - 1, M - 1) p L)), the sup-norm error rate.
    """

    return math.sqrt(
        math.log(n) / (math.comb(n - 1, m_way - 1) * edge_prob * trials)
    )


def spec_hash(payload: Mapping[str, Any]) -> str:
    """
    Returns a short sha256 digest of a JSON-serializable mapping.
    """

    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def worker_count(requested: int = 0) -> int:
    """
    Returns the number of workers, capped by RANKINFER_THREADS.

    Zero or a negative request means all available cores.
    """

    count = requested if requested > 0 else (os.cpu_count() or 1)
    cap = os.environ.get(defaults.ENV_THREADS, "").strip()
    if cap.isdigit() and int(cap) > 0:
        count = min(count, int(cap))
    return max(count, 1)


def parse_items(text: str) -> List[str]:
    """
    Splits a comma separated list of item identifiers.
    """

    return [item.strip() for item in text.split(",") if item.strip()]
