#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module with the domain types of the top-choice multiway model.

Items are compared in unordered M-item edges of a comparison hypergraph.
For every edge L independent comparisons are observed and each one reports
the single most preferred item, drawn with softmax probabilities of the
latent preference scores.

Items are indexed from 0 internally. User identifiers are kept in the
optional item_ids of a dataset.
"""


from __future__ import annotations
from dataclasses import dataclass, field
import logging
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.special import softmax

from . import defaults
from .errors import DimensionMismatchError, InvalidEdgeError, ValidationError


# Absolute tolerance of the sum-zero constraint
SUM_TOL = 1e-8


@dataclass(frozen=True)
class ScoreVector:
    """
    Preference scores on the sum-zero subspace with bounded range.
    """

    values: np.ndarray
    kappa_max: float = defaults.FIT_DEFAULTS["KAPPA_MAX"]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValidationError("Scores must be a one-dimensional vector.")
        if not np.all(np.isfinite(values)):
            raise ValidationError("Scores must be finite.")
        if abs(values.sum()) > SUM_TOL:
            raise ValidationError(
                "Scores must sum to zero, got {0:.3e}.".format(values.sum())
            )
        if values.size and np.ptp(values) > self.kappa_max + 1e-9:
            raise ValidationError(
                "Score range {0:.4f} exceeds kappa_max {1}.".format(
                    np.ptp(values), self.kappa_max
                )
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def centered(
            cls,
            values: Sequence[float],
            kappa_max: float = defaults.FIT_DEFAULTS["KAPPA_MAX"]
    ) -> ScoreVector:
        """
        Builds a score vector from raw values by subtracting their mean.
        """

        raw = np.asarray(values, dtype=float)
        return cls(raw - raw.mean(), kappa_max)

    @property
    def n(self) -> int:
        """Item count"""

        return int(self.values.size)

    def __len__(self) -> int:
        return self.n


ScoreLike = Union[ScoreVector, Sequence[float], np.ndarray]


def as_scores(scores: ScoreLike, n: Optional[int] = None) -> np.ndarray:
    """
    Returns scores as a float array and checks its length against n.

    Plain arrays are accepted so shifted or uncentered vectors can be
    evaluated; the model is invariant to a common shift.
    """

    if isinstance(scores, ScoreVector):
        values = scores.values
    else:
        values = np.asarray(scores, dtype=float)
    if values.ndim != 1:
        raise DimensionMismatchError("Scores must be a one-dimensional vector.")
    if n is not None and values.size != n:
        raise DimensionMismatchError(
            "Scores have {0} entries, expected {1}.".format(values.size, n)
        )
    return values


@dataclass(frozen=True, order=True)
class Edge:
    """
    Unordered comparison set stored as strictly increasing item indexes.
    """

    members: Tuple[int, ...]

    def __post_init__(self) -> None:
        members = tuple(int(item) for item in self.members)
        if len(members) < 2:
            raise InvalidEdgeError("Edge needs at least two members.")
        if members[0] < 0:
            raise InvalidEdgeError("Edge members must be nonnegative.")
        if any(a >= b for a, b in zip(members, members[1:])):
            raise InvalidEdgeError(
                "Edge members must be distinct and sorted: {0}".format(members)
            )
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, items: Iterable[int]) -> Edge:
        """
        Builds an edge from items in any order.
        """

        items = [int(item) for item in items]
        if len(set(items)) != len(items):
            raise InvalidEdgeError("Edge has repeated members: {0}".format(items))
        return cls(tuple(sorted(items)))

    @property
    def size(self) -> int:
        return len(self.members)

    def __contains__(self, item: int) -> bool:
        return item in self.members


class ComparisonHypergraph:
    """
    M-uniform hypergraph of the item sets that are compared.
    """

    def __init__(
            self,
            n: int,
            m_way: int,
            edges: Iterable[Union[Edge, Sequence[int]]] = ()) -> None:
        """
        Class constructor.

        Duplicate edges are dropped with a warning.

        params:
            | n: {int} - item count
            | m_way: {int} - number of items in every edge
            | edges: {Iterable} - Edge objects or sequences of item indexes
        """

        if n < 1:
            raise ValidationError("Item count must be positive.")
        if m_way < 2 or m_way > n:
            raise ValidationError(
                "Edge size must lie in [2, n], got {0}.".format(m_way)
            )
        self.__n = int(n)
        self.__m_way = int(m_way)
        unique: List[Edge] = []
        seen = set()
        duplicates = 0
        for item in edges:
            edge = item if isinstance(item, Edge) else Edge.of(item)
            if edge.size != m_way:
                raise InvalidEdgeError(
                    "Edge {0} has {1} members, expected {2}.".format(
                        edge.members, edge.size, m_way
                    )
                )
            if edge.members[-1] >= n:
                raise InvalidEdgeError(
                    "Edge {0} references an item outside [0, {1}).".format(
                        edge.members, n
                    )
                )
            if edge in seen:
                duplicates += 1
                continue
            seen.add(edge)
            unique.append(edge)
        if duplicates:
            logging.warning("Dropped %d duplicate edge(s).", duplicates)
        self.__edges = tuple(unique)
        members = np.array(
            [edge.members for edge in unique], dtype=np.int64
        ).reshape(len(unique), m_way)
        members.setflags(write=False)
        self.__members = members
        degrees = np.bincount(members.ravel(), minlength=n)
        degrees.setflags(write=False)
        self.__degrees = degrees

    def __str__(self) -> str:
        """
        Returns information about object in human readable format.
        """

        TEMPLATE = (
            "Items:         {0}\n"
            "Edge size:     {1}\n"
            "Edges:         {2}\n"
            "Isolated:      {3}\n"
        )
        return TEMPLATE.format(
            self.__n,
            self.__m_way,
            self.num_edges,
            len(self.isolated_items())
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComparisonHypergraph):
            return NotImplemented
        return (
            self.__n == other.n and
            self.__m_way == other.m_way and
            self.__edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.__n, self.__m_way, self.__edges))

    # ---------------------------------------
    # Setters and getters declaration section
    # ---------------------------------------
    @property
    def n(self) -> int:
        """Item count"""

        return self.__n

    @property
    def m_way(self) -> int:
        """Edge size M"""

        return self.__m_way

    @property
    def edges(self) -> Tuple[Edge, ...]:
        """Deduplicated edges"""

        return self.__edges

    @property
    def members(self) -> np.ndarray:
        """Read-only (edges x M) array of edge members"""

        return self.__members

    @property
    def num_edges(self) -> int:
        return len(self.__edges)

    # ----------------------------------
    # Public methods declaration section
    # ----------------------------------
    def degree(self, item: int) -> int:
        """
        Number of edges containing item.
        """

        if item < 0 or item >= self.__n:
            raise InvalidEdgeError(
                "Item {0} is outside [0, {1}).".format(item, self.__n)
            )
        return int(self.__degrees[item])

    def degrees(self) -> np.ndarray:
        """
        Degrees of all items.
        """

        return self.__degrees

    def isolated_items(self) -> List[int]:
        """
        Items that appear in no edge and so are not identifiable.
        """

        return [int(item) for item in np.flatnonzero(self.__degrees == 0)]

    def connected_components(self) -> Tuple[int, np.ndarray]:
        """
        Connected components of the items through shared edges.

        Scores are only comparable within a component.
        """

        edges = self.num_edges
        if edges == 0:
            return self.__n, np.arange(self.__n)
        rows = np.repeat(np.arange(edges), self.__m_way)
        incidence = sparse.csr_matrix(
            (np.ones(rows.size), (rows, self.__members.ravel())),
            shape=(edges, self.__n)
        )
        adjacency = incidence.T @ incidence
        return csgraph.connected_components(adjacency, directed=False)

    def is_connected(self) -> bool:
        count, _ = self.connected_components()
        return count == 1


def degree(graph: ComparisonHypergraph, item: int) -> int:
    """
    Number of edges of graph containing item.
    """

    return graph.degree(item)


def aggregate_trials(trial_level: np.ndarray, m_way: int) -> np.ndarray:
    """
    Counts wins per edge position from (edges x L) winner positions.
    """

    trial_level = np.asarray(trial_level, dtype=np.int64)
    edges = trial_level.shape[0]
    wins = np.zeros((edges, m_way), dtype=np.int64)
    if trial_level.size:
        rows = np.repeat(np.arange(edges), trial_level.shape[1])
        np.add.at(wins, (rows, trial_level.ravel()), 1)
    return wins


class ComparisonDataset:
    """
    Top-choice outcomes observed on every edge of a hypergraph.
    """

    def __init__(
            self,
            graph: ComparisonHypergraph,
            trials: int,
            wins: Union[np.ndarray, Sequence[Sequence[int]]],
            trial_level: Optional[np.ndarray] = None,
            item_ids: Optional[Sequence[str]] = None) -> None:
        """
        Class constructor.

        params:
            | graph: {ComparisonHypergraph} - compared item sets
            | trials: {int} - comparisons per edge L
            | wins: {array} - (edges x M) win counts aligned with edge members
            | trial_level: {array} - optional (edges x L) winner positions
            | item_ids: {Sequence[str]} - optional user identifiers of items
        """

        if isinstance(trials, bool) or int(trials) != trials or trials < 1:
            raise ValidationError("Trials per edge must be a positive integer.")
        self.__graph = graph
        self.__trials = int(trials)
        wins = np.array(wins, dtype=np.int64).reshape(-1, graph.m_way) \
            if np.size(wins) else np.zeros((0, graph.m_way), dtype=np.int64)
        if wins.shape != (graph.num_edges, graph.m_way):
            raise ValidationError(
                "Win counts have shape {0}, expected {1}.".format(
                    wins.shape, (graph.num_edges, graph.m_way)
                )
            )
        if np.any(wins < 0):
            raise ValidationError("Win counts must be nonnegative.")
        totals = wins.sum(axis=1)
        bad = np.flatnonzero(totals != self.__trials)
        if bad.size:
            raise ValidationError(
                "Wins of edge {0} sum to {1}, expected {2}.".format(
                    graph.edges[bad[0]].members, totals[bad[0]], self.__trials
                )
            )
        if trial_level is not None:
            trial_level = np.array(trial_level, dtype=np.int64).reshape(
                graph.num_edges, -1
            ) if np.size(trial_level) else np.zeros(
                (graph.num_edges, self.__trials), dtype=np.int64
            )
            if trial_level.shape != (graph.num_edges, self.__trials):
                raise ValidationError(
                    "Trial winners have shape {0}, expected {1}.".format(
                        trial_level.shape, (graph.num_edges, self.__trials)
                    )
                )
            if trial_level.size and (
                    trial_level.min() < 0 or
                    trial_level.max() >= graph.m_way):
                raise ValidationError("Trial winner position out of range.")
            if not np.array_equal(aggregate_trials(trial_level, graph.m_way), wins):
                raise ValidationError(
                    "Trial-level winners do not aggregate to the win counts."
                )
            trial_level.setflags(write=False)
        wins.setflags(write=False)
        self.__wins = wins
        self.__trial_level = trial_level
        if item_ids is not None:
            item_ids = tuple(str(item) for item in item_ids)
            if len(item_ids) != graph.n:
                raise ValidationError(
                    "Expected {0} item identifiers, got {1}.".format(
                        graph.n, len(item_ids)
                    )
                )
            if len(set(item_ids)) != len(item_ids):
                raise ValidationError("Item identifiers must be unique.")
        self.__item_ids = item_ids

    @classmethod
    def from_trial_level(
            cls,
            graph: ComparisonHypergraph,
            trial_level: np.ndarray,
            item_ids: Optional[Sequence[str]] = None) -> ComparisonDataset:
        """
        Builds a dataset from (edges x L) winner positions.
        """

        trial_level = np.asarray(trial_level, dtype=np.int64)
        if trial_level.ndim != 2 or trial_level.shape[0] != graph.num_edges:
            raise ValidationError(
                "Trial winners must be an (edges x L) array."
            )
        return cls(
            graph,
            trial_level.shape[1],
            aggregate_trials(trial_level, graph.m_way),
            trial_level,
            item_ids
        )

    def __str__(self) -> str:
        """
        Returns information about object in human readable format.
        """

        TEMPLATE = (
            "{0}"
            "Trials:        {1}\n"
            "Trial level:   {2}\n"
        )
        return TEMPLATE.format(
            str(self.__graph),
            self.__trials,
            "yes" if self.has_trial_level else "no"
        )

    # ---------------------------------------
    # Setters and getters declaration section
    # ---------------------------------------
    @property
    def graph(self) -> ComparisonHypergraph:
        """Comparison hypergraph"""

        return self.__graph

    @property
    def n(self) -> int:
        return self.__graph.n

    @property
    def trials(self) -> int:
        """Comparisons per edge L"""

        return self.__trials

    @property
    def wins(self) -> np.ndarray:
        """Read-only (edges x M) win counts"""

        return self.__wins

    @property
    def win_rates(self) -> np.ndarray:
        """Win frequencies wins / L"""

        return self.__wins / self.__trials

    @property
    def trial_level(self) -> Optional[np.ndarray]:
        """Read-only (edges x L) winner positions or None"""

        return self.__trial_level

    @property
    def has_trial_level(self) -> bool:
        return self.__trial_level is not None

    @property
    def item_ids(self) -> Optional[Tuple[str, ...]]:
        """User identifiers of items"""

        return self.__item_ids

    # ----------------------------------
    # Public methods declaration section
    # ----------------------------------
    def item_labels(self) -> List[str]:
        """
        User identifiers, or 0-based indexes when none were given.
        """

        if self.__item_ids is not None:
            return list(self.__item_ids)
        return [str(item) for item in range(self.n)]

    def index_of(self, label: str) -> int:
        """
        Returns the internal index of a user identifier.
        """

        labels = self.item_labels()
        if label in labels:
            return labels.index(label)
        raise ValidationError("Unknown item '{0}'.".format(label))

    def aggregated(self) -> ComparisonDataset:
        """
        Copy of the dataset without trial-level winners.
        """

        return ComparisonDataset(
            self.__graph, self.__trials, self.__wins, None, self.__item_ids
        )


def choice_probabilities(edge: Edge, scores: ScoreLike) -> np.ndarray:
    """
    Softmax of scores restricted to the members of edge.
    """

    values = as_scores(scores)
    if edge.members[-1] >= values.size:
        raise InvalidEdgeError(
            "Edge {0} references an item outside [0, {1}).".format(
                edge.members, values.size
            )
        )
    return softmax(values[list(edge.members)])


def edge_probabilities(graph: ComparisonHypergraph, scores: ScoreLike) -> np.ndarray:
    """
    Choice probabilities of every edge member, shape (edges x M).
    """

    values = as_scores(scores, graph.n)
    if graph.num_edges == 0:
        return np.zeros((0, graph.m_way))
    return softmax(values[graph.members], axis=1)
