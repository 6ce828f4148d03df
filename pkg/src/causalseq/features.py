"""Prefix expansion of sessions into the tabular dataset that discovery consumes.

A length-n session becomes its n prefixes; each prefix becomes one table row
holding per-type event counts. Row order is session order, then prefix length,
so temporal information survives the tabular transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CatalogError
from .events import EventCatalog, Session

__all__ = ["FeatureTable", "prefix_expand", "bag_of_words", "build_table"]


@dataclass(frozen=True)
class FeatureTable:
    """Rows of per-type counts; one row per session prefix.

    ``rows`` is an (n_rows, catalog_size) integer array. ``row_origin[r]`` is
    the ``((parent_id, session_index), prefix_length)`` that produced row r;
    synthetic tables built straight from an array leave it empty.
    """

    rows: np.ndarray
    catalog_size: int
    row_origin: tuple[tuple[tuple[str, int], int], ...] = ()

    def __post_init__(self) -> None:
        if self.rows.ndim != 2 or self.rows.shape[1] != self.catalog_size:
            raise ValueError("rows must be (n, catalog_size)")
        if self.row_origin and len(self.row_origin) != self.rows.shape[0]:
            raise ValueError("row_origin must align with rows")

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])

    def constant_columns(self) -> list[int]:
        """Indices of zero-variance columns, which discovery must skip."""
        if self.n_rows == 0:
            return list(range(self.catalog_size))
        return [
            j
            for j in range(self.catalog_size)
            if np.all(self.rows[:, j] == self.rows[0, j])
        ]

    @classmethod
    def from_array(cls, rows: np.ndarray) -> "FeatureTable":
        rows = np.asarray(rows)
        return cls(rows=rows, catalog_size=rows.shape[1])

    def to_csv(self, labels: list[str] | None = None) -> str:
        """Debugging export; not a stable public format."""
        header = ",".join(labels or [f"c{j}" for j in range(self.catalog_size)])
        lines = [header]
        lines.extend(",".join(str(int(v)) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"


def prefix_expand(session: Session) -> list[list[int]]:
    """Return the event-type prefixes [s_1 .. s_n] of a session."""
    types = [ev.type for ev in session.events]
    return [types[: i + 1] for i in range(len(types))]


def bag_of_words(prefix: list[int], catalog: EventCatalog) -> np.ndarray:
    """Count vector over the catalog: counts[k] = multiplicity of type k."""
    counts = np.zeros(len(catalog), dtype=np.int64)
    for t in prefix:
        if not 0 <= t < len(catalog):
            raise CatalogError(f"type index {t} outside catalog of size {len(catalog)}")
        counts[t] += 1
    return counts


def build_table(
    sessions: list[Session],
    catalog: EventCatalog,
    *,
    binary: bool = False,
) -> FeatureTable:
    """Stack the bag-of-words rows of every session's prefixes.

    With ``binary=True`` counts collapse to presence indicators (a sensitivity
    mode; counts are the default because they preserve repetition).
    """
    rows: list[np.ndarray] = []
    origin: list[tuple[tuple[str, int], int]] = []
    for session in sessions:
        counts = np.zeros(len(catalog), dtype=np.int64)
        for i, ev in enumerate(session.events):
            if not 0 <= ev.type < len(catalog):
                raise CatalogError(
                    f"type index {ev.type} outside catalog of size {len(catalog)}"
                )
            counts[ev.type] += 1
            rows.append(counts.copy())
            origin.append((session.key, i + 1))
    if not rows:
        return FeatureTable(
            rows=np.zeros((0, len(catalog)), dtype=np.int64),
            catalog_size=len(catalog),
        )
    matrix = np.stack(rows)
    if binary:
        matrix = (matrix > 0).astype(np.int64)
    return FeatureTable(
        rows=matrix, catalog_size=len(catalog), row_origin=tuple(origin)
    )
