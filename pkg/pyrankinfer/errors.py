#!/usr/bin/env python3
# -*- coding: utf-8 -*-


"""
Python module with exceptions raised by the library.

Validation errors map to CLI exit code 2, resource errors to exit code 3.
"""


from __future__ import annotations
from typing import Optional


class RankInferError(Exception):
    """
    Base class for every error raised by the library.
    """


class ValidationError(RankInferError, ValueError):
    """
    Input data or configuration is not acceptable.
    """


class ResourceError(RankInferError):
    """
    Requested work would exceed a configured resource cap.
    """


class ConfigError(ValidationError):
    """
    Configuration value is out of its allowed range.
    """


class InvalidEdgeError(ValidationError):
    """
    Edge has repeated, unsorted or out of range members.
    """


class DimensionMismatchError(ValidationError):
    """
    Score vector and dataset disagree on the number of items.
    """


class NoDataError(ValidationError):
    """
    Dataset has no comparisons to fit.
    """


class ContractError(ValidationError):
    """
    Arguments were produced under incompatible settings.
    """


class NonIdentifiableError(ValidationError):
    """
    Item never appears in any comparison.
    """

    def __init__(self, item: int, message: Optional[str] = None) -> None:
        """
        Class constructor.

        params:
            | item: {int} - index of the item with degree 0
            | message: {str} - optional message
        """

        self.item = item
        super().__init__(
            message or
            "Item {0} appears in no comparison and is not identifiable."
            .format(item)
        )


class MissingTrialLevelError(ValidationError):
    """
    Multiplier bootstrap needs per-trial winners.
    """

    def __init__(self) -> None:
        super().__init__(
            "Dataset holds aggregated win counts only. The multiplier "
            "bootstrap needs per-trial winners: load a trial CSV or a JSON "
            "dataset with 'trial_level', or simulate with trial-level output."
        )


class DatasetParseError(ValidationError):
    """
    Dataset file could not be parsed.
    """

    def __init__(
            self,
            message: str,
            line: Optional[int] = None,
            edge_id: Optional[str] = None) -> None:
        """
        Class constructor.

        params:
            | message: {str} - description of the problem
            | line: {int} - 1-based line number in the file
            | edge_id: {str} - identifier of the offending edge
        """

        self.line = line
        self.edge_id = edge_id
        prefix = ""
        if line is not None:
            prefix += "line {0}: ".format(line)
        if edge_id is not None:
            prefix += "edge '{0}': ".format(edge_id)
        super().__init__(prefix + message)
