#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module reading and writing comparison datasets and run reports.

Dataset formats:
| trial-csv      - edge declarations "# edge,<edge_id>,<item;item;...>"
|                  followed by rows of "edge_id,trial,winner"
| aggregate-csv  - rows of "edge_id,item,wins,trials"
| json           - fields n, m_way, trials, edges, wins, trial_level, item_ids

Both CSV formats may carry an "# items,<item;item;...>" line with the full
list of item identifiers, so items without comparisons survive a round trip.
Otherwise items are indexed in the order they first appear.
"""


from __future__ import annotations
import csv
from dataclasses import dataclass, field
import json
import logging
import math
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import defaults
from .errors import (
    ConfigError,
    DatasetParseError,
    MissingTrialLevelError,
    ValidationError
)
from .model import ComparisonDataset, ComparisonHypergraph, Edge


TRIAL_HEADER = ["edge_id", "trial", "winner"]
AGGREGATE_HEADER = ["edge_id", "item", "wins", "trials"]


class _ItemIndex:
    """
    Dense item indexes assigned in order of first appearance.
    """

    def __init__(self, declared: Optional[Sequence[str]] = None) -> None:
        self.__ids: List[str] = []
        self.__index: Dict[str, int] = {}
        self.__fixed = declared is not None
        for item in declared or ():
            if item in self.__index:
                raise DatasetParseError(
                    "Item '{0}' is declared twice.".format(item)
                )
            self.__index[item] = len(self.__ids)
            self.__ids.append(item)

    def get(self, item: str, line: int, edge_id: str) -> int:
        if item not in self.__index:
            if self.__fixed:
                raise DatasetParseError(
                    "Item '{0}' is not declared.".format(item), line, edge_id
                )
            self.__index[item] = len(self.__ids)
            self.__ids.append(item)
        return self.__index[item]

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(self.__ids)


def _read_rows(path: str) -> List[Tuple[int, List[str]]]:
    """
    Returns (line number, fields) of every nonblank line.
    """

    with open(path, "r", encoding="utf-8", newline="") as handle:
        lines = handle.read().splitlines()
    rows = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        rows.append((number, [cell.strip() for cell in next(csv.reader([line]))]))
    if not rows:
        raise DatasetParseError("File is empty.", 1)
    return rows


def _split_preamble(
        rows: List[Tuple[int, List[str]]]
) -> Tuple[Optional[List[str]], List[Tuple[int, List[str]]], List[Tuple[int, List[str]]]]:
    """
    Splits rows into the declared items, "# edge" declarations and data.
    """

    declared = None
    edges = []
    data = []
    for number, cells in rows:
        head = cells[0]
        if head.startswith("#"):
            tag = head.lstrip("#").strip()
            if tag == "items" and len(cells) == 2:
                declared = [item for item in cells[1].split(";") if item]
            elif tag == "edge":
                if len(cells) != 3:
                    raise DatasetParseError(
                        "Edge declaration needs '# edge,<edge_id>,<items>'.",
                        number
                    )
                edges.append((number, cells[1:]))
            continue
        data.append((number, cells))
    return declared, edges, data


def _check_header(
        data: List[Tuple[int, List[str]]],
        header: List[str]) -> List[Tuple[int, List[str]]]:
    if not data:
        raise DatasetParseError("File has no header row.", 1)
    number, cells = data[0]
    if cells != header:
        raise DatasetParseError(
            "Expected header '{0}', got '{1}'.".format(
                ",".join(header), ",".join(cells)
            ),
            number
        )
    return data[1:]


def _parse_int(text: str, what: str, line: int, edge_id: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise DatasetParseError(
            "{0} '{1}' is not an integer.".format(what, text), line, edge_id
        ) from None


def _merge_edges(
        members: List[Tuple[int, ...]],
        edge_ids: List[str],
        lines: List[int],
        outcomes: List[Any],
        combine) -> Tuple[
            List[Tuple[int, ...]], List[str], List[int], List[Any], List[List[str]]
        ]:
    """
    Merges edges over the same item set with combine(first, second).

    The last list holds the ids merged into every kept edge.
    """

    position: Dict[Tuple[int, ...], int] = {}
    merged_members, merged_ids, merged_lines, merged = [], [], [], []
    sources: List[List[str]] = []
    duplicates = 0
    for edge, edge_id, line, outcome in zip(members, edge_ids, lines, outcomes):
        if edge in position:
            index = position[edge]
            merged[index] = combine(merged[index], outcome)
            sources[index].append(edge_id)
            duplicates += 1
            continue
        position[edge] = len(merged)
        merged_members.append(edge)
        merged_ids.append(edge_id)
        merged_lines.append(line)
        merged.append(outcome)
        sources.append([edge_id])
    if duplicates:
        logging.warning(
            "Merged %d duplicate edge(s) by summing their outcomes.", duplicates
        )
    return merged_members, merged_ids, merged_lines, merged, sources


def _common_trials(
        counts: List[int],
        edge_ids: List[str],
        lines: List[int],
        sources: List[List[str]]) -> int:
    trials = counts[0]
    for position, count in enumerate(counts):
        if count == trials:
            continue
        merged = [index for index in (0, position) if len(sources[index]) > 1]
        if not merged:
            raise DatasetParseError(
                "Edge has {0} trials, other edges have {1}.".format(count, trials),
                lines[position],
                edge_ids[position]
            )
        culprit = merged[-1]
        raise DatasetParseError(
            "Edge has {0} trials after merging duplicate edges {1}, "
            "other edges have {2}.".format(
                counts[culprit],
                ", ".join(sources[culprit]),
                count if culprit == 0 else trials
            ),
            lines[culprit],
            edge_ids[culprit]
        )
    return trials


def _build(
        index: _ItemIndex,
        members: List[Tuple[int, ...]]) -> ComparisonHypergraph:
    n = len(index.ids)
    return ComparisonHypergraph(n, len(members[0]), [Edge(edge) for edge in members])


def _load_trial_csv(path: str) -> ComparisonDataset:
    declared, declarations, data = _split_preamble(_read_rows(path))
    data = _check_header(data, TRIAL_HEADER)
    if not declarations:
        raise DatasetParseError("No '# edge' declarations found.", 1)
    index = _ItemIndex(declared)
    order: Dict[str, int] = {}
    raw_members: List[List[int]] = []
    for number, (edge_id, items) in declarations:
        if edge_id in order:
            raise DatasetParseError("Edge is declared twice.", number, edge_id)
        labels = [item for item in items.split(";") if item]
        if len(set(labels)) != len(labels):
            raise DatasetParseError("Edge repeats an item.", number, edge_id)
        if raw_members and len(labels) != len(raw_members[0]):
            raise DatasetParseError(
                "Edge has {0} items, expected {1}.".format(
                    len(labels), len(raw_members[0])
                ),
                number,
                edge_id
            )
        if len(labels) < 2:
            raise DatasetParseError("Edge needs at least two items.", number, edge_id)
        order[edge_id] = len(raw_members)
        raw_members.append([index.get(item, number, edge_id) for item in labels])
    lines = [number for number, _ in declarations]
    edge_ids = [edge_id for _, (edge_id, _) in declarations]

    winners: List[Dict[int, int]] = [dict() for _ in raw_members]
    for number, cells in data:
        if len(cells) != 3:
            raise DatasetParseError("Expected 3 fields.", number)
        edge_id, trial_text, winner = cells
        if edge_id not in order:
            raise DatasetParseError("Edge is not declared.", number, edge_id)
        position = order[edge_id]
        trial = _parse_int(trial_text, "Trial", number, edge_id)
        if trial < 1 or trial in winners[position]:
            raise DatasetParseError(
                "Trial {0} is repeated or not positive.".format(trial),
                number,
                edge_id
            )
        item = index.get(winner, number, edge_id)
        if item not in raw_members[position]:
            raise DatasetParseError(
                "Winner '{0}' is not a member of the edge.".format(winner),
                number,
                edge_id
            )
        winners[position][trial] = item

    sequences = []
    for position, edge_id in enumerate(edge_ids):
        trials = winners[position]
        if sorted(trials) != list(range(1, len(trials) + 1)) or not trials:
            raise DatasetParseError(
                "Trials must be numbered 1..L without gaps.",
                lines[position],
                edge_id
            )
        sequences.append([trials[trial] for trial in sorted(trials)])

    members = [tuple(sorted(edge)) for edge in raw_members]
    members, edge_ids, lines, sequences, sources = _merge_edges(
        members, edge_ids, lines, sequences, lambda first, second: first + second
    )
    trials = _common_trials(
        [len(sequence) for sequence in sequences], edge_ids, lines, sources
    )
    graph = _build(index, members)
    trial_level = np.array([
        [edge.index(item) for item in sequence]
        for edge, sequence in zip(members, sequences)
    ], dtype=np.int64).reshape(len(members), trials)
    return ComparisonDataset.from_trial_level(graph, trial_level, index.ids)


def _load_aggregate_csv(path: str) -> ComparisonDataset:
    declared, _, data = _split_preamble(_read_rows(path))
    data = _check_header(data, AGGREGATE_HEADER)
    if not data:
        raise DatasetParseError("File has no data rows.", 1)
    index = _ItemIndex(declared)
    order: Dict[str, int] = {}
    edge_ids: List[str] = []
    lines: List[int] = []
    counts: List[Dict[int, int]] = []
    totals: List[int] = []
    for number, cells in data:
        if len(cells) != 4:
            raise DatasetParseError("Expected 4 fields.", number)
        edge_id, label, wins_text, trials_text = cells
        wins = _parse_int(wins_text, "Wins", number, edge_id)
        trials = _parse_int(trials_text, "Trials", number, edge_id)
        if wins < 0 or trials < 1:
            raise DatasetParseError(
                "Wins must be nonnegative and trials positive.", number, edge_id
            )
        if edge_id not in order:
            order[edge_id] = len(edge_ids)
            edge_ids.append(edge_id)
            lines.append(number)
            counts.append({})
            totals.append(trials)
        position = order[edge_id]
        if trials != totals[position]:
            raise DatasetParseError(
                "Trials differ within the edge.", number, edge_id
            )
        item = index.get(label, number, edge_id)
        if item in counts[position]:
            raise DatasetParseError(
                "Item '{0}' is repeated in the edge.".format(label), number, edge_id
            )
        counts[position][item] = wins

    size = len(counts[0])
    for position, edge_id in enumerate(edge_ids):
        if len(counts[position]) != size:
            raise DatasetParseError(
                "Edge has {0} items, expected {1}.".format(
                    len(counts[position]), size
                ),
                lines[position],
                edge_id
            )
        if sum(counts[position].values()) != totals[position]:
            raise DatasetParseError(
                "Wins sum to {0}, expected {1}.".format(
                    sum(counts[position].values()), totals[position]
                ),
                lines[position],
                edge_id
            )
    if size < 2:
        raise DatasetParseError("Edges need at least two items.", lines[0], edge_ids[0])

    members = [tuple(sorted(edge)) for edge in counts]
    outcomes = [
        ([counts[position][item] for item in edge], totals[position])
        for position, edge in enumerate(members)
    ]
    members, edge_ids, lines, outcomes, sources = _merge_edges(
        members, edge_ids, lines, outcomes,
        lambda first, second: (
            [a + b for a, b in zip(first[0], second[0])], first[1] + second[1]
        )
    )
    trials = _common_trials(
        [total for _, total in outcomes], edge_ids, lines, sources
    )
    graph = _build(index, members)
    wins = np.array([row for row, _ in outcomes], dtype=np.int64)
    return ComparisonDataset(graph, trials, wins, None, index.ids)


def _load_json(path: str) -> ComparisonDataset:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if not text.strip():
        raise DatasetParseError("File is empty.", 1)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as error:
        raise DatasetParseError(error.msg, error.lineno) from None
    missing = {"n", "m_way", "trials", "edges", "wins"} - set(payload)
    if missing:
        raise DatasetParseError(
            "Missing dataset fields: {0}".format(sorted(missing))
        )
    try:
        graph = ComparisonHypergraph(
            int(payload["n"]), int(payload["m_way"]), payload["edges"]
        )
        if graph.num_edges != len(payload["edges"]):
            raise DatasetParseError(
                "Duplicate edges are not allowed in JSON datasets."
            )
        return ComparisonDataset(
            graph,
            int(payload["trials"]),
            payload["wins"],
            payload.get("trial_level"),
            payload.get("item_ids")
        )
    except DatasetParseError:
        raise
    except (ValidationError, TypeError, ValueError) as error:
        raise DatasetParseError(str(error)) from None


def detect_format(path: str) -> str:
    """
    Guesses the dataset format from the extension or the header row.
    """

    if path.lower().endswith(".json"):
        return "json"
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if stripped == ",".join(AGGREGATE_HEADER):
                return "aggregate-csv"
            break
    return "trial-csv"


def load_dataset(path: str, format: Optional[str] = None) -> ComparisonDataset:
    """
    Reads and validates a comparison dataset.

    params:
        | path: {str} - file to read
        | format: {str} - one of defaults.FORMATS {default: detected}
    """

    if format is None:
        format = detect_format(path)
    if format not in defaults.FORMATS:
        raise ConfigError(
            "format must be one of {0}.".format(defaults.FORMATS)
        )
    if not os.path.isfile(path):
        raise ValidationError("Dataset file '{0}' does not exist.".format(path))
    loader = {
        "trial-csv": _load_trial_csv,
        "aggregate-csv": _load_aggregate_csv,
        "json": _load_json
    }[format]
    dataset = loader(path)
    logging.info(
        "Loaded %d item(s), %d edge(s), L = %d from %s.",
        dataset.n, dataset.graph.num_edges, dataset.trials, path
    )
    return dataset


def dataset_to_dict(dataset: ComparisonDataset) -> Dict[str, Any]:
    """
    JSON payload with the field names of ComparisonDataset.
    """

    return {
        "n": dataset.n,
        "m_way": dataset.graph.m_way,
        "trials": dataset.trials,
        "edges": [list(edge.members) for edge in dataset.graph.edges],
        "wins": dataset.wins.tolist(),
        "trial_level": dataset.trial_level.tolist()
        if dataset.has_trial_level else None,
        "item_ids": list(dataset.item_ids)
        if dataset.item_ids is not None else None
    }


def save_dataset(
        dataset: ComparisonDataset,
        path: str,
        format: str = "trial-csv") -> None:
    """
    Writes a dataset; trial-csv needs trial-level winners.
    """

    if format not in defaults.FORMATS:
        raise ConfigError(
            "format must be one of {0}.".format(defaults.FORMATS)
        )
    if format == "json":
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(dataset_to_dict(dataset), handle, indent=2)
            handle.write("\n")
        return
    if format == "trial-csv" and not dataset.has_trial_level:
        raise MissingTrialLevelError()
    labels = dataset.item_labels()
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["# items", ";".join(labels)])
        if format == "trial-csv":
            for number, edge in enumerate(dataset.graph.edges, start=1):
                writer.writerow([
                    "# edge",
                    "e{0}".format(number),
                    ";".join(labels[item] for item in edge.members)
                ])
            writer.writerow(TRIAL_HEADER)
            for number, edge in enumerate(dataset.graph.edges, start=1):
                for trial, position in enumerate(dataset.trial_level[number - 1], 1):
                    writer.writerow([
                        "e{0}".format(number),
                        trial,
                        labels[edge.members[position]]
                    ])
        else:
            writer.writerow(AGGREGATE_HEADER)
            for number, edge in enumerate(dataset.graph.edges, start=1):
                for item, wins in zip(edge.members, dataset.wins[number - 1]):
                    writer.writerow([
                        "e{0}".format(number),
                        labels[item],
                        int(wins),
                        dataset.trials
                    ])
    logging.info("Saved %s dataset to %s.", format, path)


def top_choice_from_rankings(
        rankings: Sequence[Sequence[int]],
        graph: ComparisonHypergraph,
        trials: int,
        rng: np.random.Generator,
        item_ids: Optional[Sequence[str]] = None) -> ComparisonDataset:
    """
    Converts full rankings into top-choice comparisons on a hypergraph.

    For every edge L users are drawn (without replacement when there are
    enough of them) and each reports the edge member it ranks highest.

    params:
        | rankings: {Sequence} - one permutation of range(n) per user, best first
        | graph: {ComparisonHypergraph} - item sets to compare
        | trials: {int} - users sampled per edge L
        | rng: {Generator} - random stream
        | item_ids: {Sequence[str]} - optional user identifiers of items
    """

    if trials < 1:
        raise ConfigError("trials must be a positive integer.")
    positions = np.empty((len(rankings), graph.n), dtype=np.int64)
    for user, ranking in enumerate(rankings):
        ranking = [int(item) for item in ranking]
        if sorted(ranking) != list(range(graph.n)):
            raise ValidationError(
                "Ranking of user {0} is not a permutation of the items.".format(user)
            )
        positions[user, ranking] = np.arange(graph.n)
    if not len(rankings):
        raise ValidationError("At least one ranking is needed.")
    replace = len(rankings) < trials
    if replace:
        logging.warning(
            "Only %d ranking(s) for L = %d; users are sampled with replacement.",
            len(rankings), trials
        )
    trial_level = np.empty((graph.num_edges, trials), dtype=np.int64)
    for row, members in enumerate(graph.members):
        users = rng.choice(len(rankings), trials, replace=replace)
        trial_level[row] = np.argmin(positions[np.ix_(users, members)], axis=1)
    return ComparisonDataset.from_trial_level(graph, trial_level, item_ids)


def _clean(value: Any) -> Any:
    """
    Replaces NaN and infinities by None for strict JSON.
    """

    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if isinstance(value, dict):
        return {key: _clean(item) for key, item in value.items()}
    return value


@dataclass
class RunReport:
    """
    Result of one CLI command in the report JSON layout.
    """

    command: str
    config: Dict[str, Any]
    items: List[str]
    theta_hat: List[float]
    se: List[Optional[float]]
    rank_point: List[int]
    alpha: float
    seed: int
    rank_ci: List[List[int]] = field(default_factory=list)
    rank_items: List[str] = field(default_factory=list)
    critical_value: Optional[float] = None
    bootstrap_draws: Optional[int] = None
    extras: Dict[str, Any] = field(default_factory=dict)
    version: str = __version__
    wall_clock: Optional[float] = None

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        payload = {
            "command": self.command,
            "config": self.config,
            "items": list(self.items),
            "theta_hat": [float(value) for value in self.theta_hat],
            "se": [None if value is None else float(value) for value in self.se],
            "rank_point": [int(value) for value in self.rank_point],
            "rank_ci": [[int(low), int(high)] for low, high in self.rank_ci],
            "rank_items": list(self.rank_items),
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "bootstrap_draws": self.bootstrap_draws,
            "seed": self.seed,
            "extras": self.extras,
            "version": self.version
        }
        if include_timing:
            payload["wall_clock"] = self.wall_clock
        return _clean(payload)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> RunReport:
        known = set(cls.__dataclass_fields__)
        unknown = set(payload) - known
        if unknown:
            raise ConfigError("Unknown report fields: {0}".format(sorted(unknown)))
        return cls(**payload)

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(
            self.to_dict(include_timing), indent=2, sort_keys=True
        ) + "\n"


def write_report(
        report: RunReport,
        path: Optional[str] = None,
        include_timing: bool = False) -> None:
    """
    Writes report JSON to path, or to stdout when path is None.
    """

    text = report.to_json(include_timing)
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    logging.info("Report written to %s.", path)


def read_report(path: str) -> RunReport:
    with open(path, "r", encoding="utf-8") as handle:
        return RunReport.from_dict(json.load(handle))
