"""Shared exception types."""

from __future__ import annotations


class CausalSeqError(Exception):
    """Base class for all package errors."""


class RowParseError(CausalSeqError):
    """A raw input row could not be parsed. Carries the 1-based row number."""

    def __init__(self, row: int, message: str) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row


class EmptyDatasetError(CausalSeqError):
    """Input produced no events at all."""


class ConfigError(CausalSeqError):
    """A configuration value is out of its documented range."""


class CatalogError(CausalSeqError):
    """An event type is unknown to the catalog in use."""


class InsufficientDataError(CausalSeqError):
    """Too few rows for a statistical operation. Carries the required minimum."""

    def __init__(self, required: int, got: int) -> None:
        super().__init__(f"need at least {required} rows, got {got}")
        self.required = required
        self.got = got


class NumericError(CausalSeqError):
    """A numerical kernel failed (e.g. singular matrix after regularization)."""


class GraphError(CausalSeqError):
    """Graph-structural precondition violated (cycles, unknown nodes)."""
