"""Event model: parse, validate, and preprocess raw records into sequences and sessions.

Raw rows (sequence_id, timestamp, event_type) become a :class:`Dataset`: a stable
event-type catalog, per-sequence event lists sorted by time, and optionally the
session slices produced by :func:`sessionize`. All operations are pure; every
transform returns a new dataset.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from bisect import bisect_right
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

from .errors import CatalogError, ConfigError, EmptyDatasetError, RowParseError

__all__ = [
    "EventCatalog",
    "Event",
    "EventSequence",
    "Session",
    "Dataset",
    "Provenance",
    "RawRecord",
    "LevelEvent",
    "parse_events",
    "merge_consecutive",
    "filter_noise",
    "sessionize",
    "sessionize_dataset",
    "derive_level_events",
    "preprocess",
    "read_csv",
    "write_csv",
    "read_jsonl",
    "dataset_to_json",
    "dataset_from_json",
]


@dataclass(frozen=True)
class EventCatalog:
    """Ordered, immutable registry of event-type labels.

    The ordering is load-bearing: feature-vector columns and graph node ids are
    catalog indices, so the order must stay stable for a dataset's lifetime.
    """

    types: tuple[str, ...]
    colors: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if len(set(self.types)) != len(self.types):
            raise ValueError("catalog type labels must be unique")
        if self.colors is not None and len(self.colors) != len(self.types):
            raise ValueError("colors must align with types")

    def __len__(self) -> int:
        return len(self.types)

    def index_of(self, label: str) -> int:
        try:
            return self.types.index(label)
        except ValueError:
            raise CatalogError(f"unknown event type {label!r}") from None

    def color_of(self, index: int) -> int:
        return self.colors[index] if self.colors is not None else index


@dataclass(frozen=True)
class Event:
    """One occurrence: a catalog type index at a millisecond timestamp."""

    type: int
    timestamp: int
    attrs: Mapping[str, str] | None = None


@dataclass(frozen=True)
class EventSequence:
    """Events of one entity, sorted ascending by timestamp (stable on ties)."""

    id: str
    events: tuple[Event, ...]


@dataclass(frozen=True)
class Session:
    """A contiguous slice of a sequence delimited by time-interval gaps."""

    parent_id: str
    index: int
    events: tuple[Event, ...]

    @property
    def key(self) -> tuple[str, int]:
        return (self.parent_id, self.index)


@dataclass(frozen=True)
class Provenance:
    source: str
    config_hash: str


@dataclass(frozen=True)
class Dataset:
    """A catalog plus its sequences, and the sessions once sessionized."""

    catalog: EventCatalog
    sequences: tuple[EventSequence, ...]
    sessions: tuple[Session, ...] = ()
    provenance: Provenance | None = None

    def __post_init__(self) -> None:
        m = len(self.catalog)
        for holder in (*self.sequences, *self.sessions):
            for ev in holder.events:
                if not 0 <= ev.type < m:
                    raise CatalogError(
                        f"event type index {ev.type} outside catalog of size {m}"
                    )

    def type_counts(self) -> list[int]:
        """Global occurrence count per catalog type."""
        counts = [0] * len(self.catalog)
        for seq in self.sequences:
            for ev in seq.events:
                counts[ev.type] += 1
        return counts


@dataclass(frozen=True)
class RawRecord:
    """One unparsed input row."""

    sequence_id: str
    timestamp: object
    event_type: str
    attrs: Mapping[str, str] | None = None


@dataclass(frozen=True)
class LevelEvent:
    """A derived level-transition event record, ready for :func:`parse_events`."""

    timestamp: int
    event_type: str


def _parse_timestamp(value: object) -> int:
    """Accept integer epoch-milliseconds or an ISO-8601 string; return ms."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value != int(value):
            raise ValueError(f"non-integer millisecond timestamp {value!r}")
        return int(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return int(text)
        except ValueError:
            pass
        try:
            dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
        except ValueError:
            raise ValueError(f"unparseable timestamp {value!r}") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp() * 1000)
    raise ValueError(f"unparseable timestamp {value!r}")


def parse_events(records: Iterable[RawRecord | tuple]) -> Dataset:
    """Build a Dataset from raw rows.

    The catalog is built from distinct event_type values in first-seen order;
    events are grouped by sequence_id (sequences ordered by first appearance)
    and sorted ascending by timestamp, stable on ties.

    Raises :class:`RowParseError` with the 1-based row number on a malformed
    row, and :class:`EmptyDatasetError` when no rows were given.
    """
    types: list[str] = []
    type_index: dict[str, int] = {}
    by_sequence: dict[str, list[Event]] = {}

    row_no = 0
    for record in records:
        row_no += 1
        if not isinstance(record, RawRecord):
            record = RawRecord(*record)
        if not record.sequence_id:
            raise RowParseError(row_no, "empty sequence_id")
        if not record.event_type:
            raise RowParseError(row_no, "empty event_type")
        try:
            ts = _parse_timestamp(record.timestamp)
        except ValueError as exc:
            raise RowParseError(row_no, str(exc)) from None
        label = str(record.event_type)
        if label not in type_index:
            type_index[label] = len(types)
            types.append(label)
        by_sequence.setdefault(str(record.sequence_id), []).append(
            Event(type=type_index[label], timestamp=ts, attrs=record.attrs)
        )

    if row_no == 0:
        raise EmptyDatasetError("no input rows")

    catalog = EventCatalog(types=tuple(types))
    sequences = tuple(
        EventSequence(id=sid, events=tuple(sorted(evs, key=lambda e: e.timestamp)))
        for sid, evs in by_sequence.items()
    )
    return Dataset(catalog=catalog, sequences=sequences)


def merge_consecutive(seq: EventSequence) -> EventSequence:
    """Collapse maximal runs of identical event types to the run's first event."""
    merged: list[Event] = []
    for ev in seq.events:
        if merged and merged[-1].type == ev.type:
            continue
        merged.append(ev)
    return replace(seq, events=tuple(merged))


def filter_noise(ds: Dataset, min_type_count: int) -> Dataset:
    """Drop event types occurring fewer than ``min_type_count`` times globally.

    The catalog is rebuilt (original relative order preserved) and every event
    is remapped to the new indices; sequences emptied by filtering are dropped.
    """
    if min_type_count < 0:
        raise ConfigError("min_type_count must be >= 0")
    if min_type_count == 0:
        return ds

    counts = ds.type_counts()
    keep = [i for i in range(len(ds.catalog)) if counts[i] >= min_type_count]
    if len(keep) == len(ds.catalog):
        return ds
    remap = {old: new for new, old in enumerate(keep)}

    new_catalog = EventCatalog(
        types=tuple(ds.catalog.types[i] for i in keep),
        colors=tuple(ds.catalog.colors[i] for i in keep) if ds.catalog.colors else None,
    )
    new_sequences = []
    for seq in ds.sequences:
        events = tuple(
            replace(ev, type=remap[ev.type]) for ev in seq.events if ev.type in remap
        )
        if events:
            new_sequences.append(replace(seq, events=events))
    return Dataset(
        catalog=new_catalog,
        sequences=tuple(new_sequences),
        sessions=(),
        provenance=ds.provenance,
    )


def sessionize(seq: EventSequence, interval_ms: int) -> list[Session]:
    """Split a sequence into sessions wherever the inter-event gap exceeds ``interval_ms``.

    The boundary is strict: a gap of exactly ``interval_ms`` stays in-session.
    Concatenating the returned sessions reproduces the sequence's event list.
    """
    if interval_ms <= 0:
        raise ConfigError("interval_ms must be > 0")
    sessions: list[Session] = []
    current: list[Event] = []
    for ev in seq.events:
        if current and ev.timestamp - current[-1].timestamp > interval_ms:
            sessions.append(Session(seq.id, len(sessions), tuple(current)))
            current = []
        current.append(ev)
    if current:
        sessions.append(Session(seq.id, len(sessions), tuple(current)))
    return sessions


def sessionize_dataset(ds: Dataset, interval_ms: int) -> Dataset:
    """Sessionize every sequence; sessions stored in sequence order."""
    sessions: list[Session] = []
    for seq in ds.sequences:
        sessions.extend(sessionize(seq, interval_ms))
    return replace(ds, sessions=tuple(sessions))


def derive_level_events(
    series: Sequence[tuple[int, float]],
    thresholds: Sequence[float],
    labels: Sequence[str],
) -> list[LevelEvent]:
    """Turn a numeric time series into level-transition events.

    ``thresholds`` must be strictly ascending and ``labels`` one longer: value v
    falls in band ``bisect(thresholds, v)``. One event ``"to <label>"`` is
    emitted at each sample whose band strictly exceeds the previous sample's
    band; decreases are ignored.
    """
    thresholds = list(thresholds)
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ConfigError("thresholds must be strictly ascending")
    if len(labels) != len(thresholds) + 1:
        raise ConfigError("need exactly one label per band")

    out: list[LevelEvent] = []
    prev_band: int | None = None
    for ts, value in series:
        band = bisect_right(thresholds, value)
        if prev_band is not None and band > prev_band:
            out.append(LevelEvent(timestamp=ts, event_type=f"to {labels[band]}"))
        prev_band = band
    return out


def preprocess(
    ds: Dataset,
    *,
    min_type_count: int,
    interval_ms: int,
    source: str = "",
) -> Dataset:
    """Standard pipeline: merge consecutive duplicates, filter noise, sessionize."""
    merged = replace(
        ds, sequences=tuple(merge_consecutive(seq) for seq in ds.sequences)
    )
    filtered = filter_noise(merged, min_type_count)
    if not filtered.sequences:
        raise EmptyDatasetError("all sequences removed by noise filtering")
    out = sessionize_dataset(filtered, interval_ms)
    config_hash = hashlib.sha256(
        json.dumps(
            {"min_type_count": min_type_count, "interval_ms": interval_ms},
            sort_keys=True,
        ).encode()
    ).hexdigest()[:16]
    return replace(
        out, provenance=Provenance(source=source or "", config_hash=config_hash)
    )


# -- input formats -----------------------------------------------------------

def read_csv(text: str | io.TextIOBase) -> list[RawRecord]:
    """Read rows from CSV with columns sequence_id,timestamp,event_type[,attr.*]."""
    handle = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.DictReader(handle)
    if reader.fieldnames is None:
        return []
    required = {"sequence_id", "timestamp", "event_type"}
    missing = required - set(reader.fieldnames)
    if missing:
        raise RowParseError(1, f"missing columns: {sorted(missing)}")
    attr_cols = [c for c in reader.fieldnames if c.startswith("attr.")]
    records = []
    for row in reader:
        attrs = {c[len("attr."):]: row[c] for c in attr_cols if row.get(c)}
        records.append(
            RawRecord(
                sequence_id=row["sequence_id"],
                timestamp=row["timestamp"],
                event_type=row["event_type"],
                attrs=attrs or None,
            )
        )
    return records


def write_csv(ds: Dataset) -> str:
    """Serialize a dataset's events to the standard CSV input format."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["sequence_id", "timestamp", "event_type"])
    for seq in ds.sequences:
        for ev in seq.events:
            writer.writerow([seq.id, ev.timestamp, ds.catalog.types[ev.type]])
    return out.getvalue()


def read_jsonl(text: str | io.TextIOBase) -> list[RawRecord]:
    """Read rows from JSON-lines: one event object per line."""
    handle = io.StringIO(text) if isinstance(text, str) else text
    records = []
    for line_no, line in enumerate(handle, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RowParseError(line_no, f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise RowParseError(line_no, "expected a JSON object")
        try:
            records.append(
                RawRecord(
                    sequence_id=str(obj["sequence_id"]),
                    timestamp=obj["timestamp"],
                    event_type=str(obj["event_type"]),
                    attrs=obj.get("attrs"),
                )
            )
        except KeyError as exc:
            raise RowParseError(line_no, f"missing field {exc.args[0]!r}") from None
    return records


# -- persistence -------------------------------------------------------------

def dataset_to_json(ds: Dataset) -> dict:
    """JSON document with explicit catalog ordering."""
    return {
        "catalog": list(ds.catalog.types),
        "colors": list(ds.catalog.colors) if ds.catalog.colors else None,
        "sequences": [
            {
                "id": seq.id,
                "events": [
                    {
                        "type": ev.type,
                        "timestamp": ev.timestamp,
                        **({"attrs": dict(ev.attrs)} if ev.attrs else {}),
                    }
                    for ev in seq.events
                ],
            }
            for seq in ds.sequences
        ],
        "sessions": [
            {
                "parent_id": s.parent_id,
                "index": s.index,
                "events": [
                    {"type": ev.type, "timestamp": ev.timestamp} for ev in s.events
                ],
            }
            for s in ds.sessions
        ],
        "provenance": (
            {"source": ds.provenance.source, "config_hash": ds.provenance.config_hash}
            if ds.provenance
            else None
        ),
    }


def dataset_from_json(doc: Mapping) -> Dataset:
    catalog = EventCatalog(
        types=tuple(doc["catalog"]),
        colors=tuple(doc["colors"]) if doc.get("colors") else None,
    )
    sequences = tuple(
        EventSequence(
            id=s["id"],
            events=tuple(
                Event(
                    type=e["type"],
                    timestamp=e["timestamp"],
                    attrs=e.get("attrs"),
                )
                for e in s["events"]
            ),
        )
        for s in doc["sequences"]
    )
    sessions = tuple(
        Session(
            parent_id=s["parent_id"],
            index=s["index"],
            events=tuple(
                Event(type=e["type"], timestamp=e["timestamp"]) for e in s["events"]
            ),
        )
        for s in doc.get("sessions", [])
    )
    prov = doc.get("provenance")
    return Dataset(
        catalog=catalog,
        sequences=sequences,
        sessions=sessions,
        provenance=Provenance(**prov) if prov else None,
    )
