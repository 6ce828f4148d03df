"""Frequent sequential patterns and their relation to causal subgraphs.

Mining follows prefix-projected growth: a pattern's support is the fraction
of sequences containing it as an order-preserving, not necessarily
contiguous, subsequence, counted once per sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError, GraphError
from .events import EventSequence
from .graph import CausalEdge, CausalGraph

__all__ = [
    "SequentialPattern",
    "Subgraph",
    "mine_patterns",
    "match_sequences",
    "ancestors_subgraph",
    "explained_by",
]

DEFAULT_MIN_SUPPORT = 0.1
DEFAULT_MAX_LEN = 8


@dataclass(frozen=True)
class SequentialPattern:
    """An ordered list of event types with its group support."""

    events: tuple[int, ...]
    support: float
    count: int

    def __post_init__(self) -> None:
        if not 0 < self.support <= 1:
            raise ValueError(f"support must be in (0, 1], got {self.support}")
        if self.count < 1:
            raise ValueError("count must be positive")

    def to_json(self) -> dict:
        return {
            "events": list(self.events),
            "support": self.support,
            "count": self.count,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SequentialPattern":
        return cls(
            events=tuple(int(e) for e in data["events"]),
            support=float(data["support"]),
            count=int(data["count"]),
        )


@dataclass(frozen=True)
class Subgraph:
    """A node subset of a causal graph with its induced directed edges."""

    nodes: frozenset[int]
    edges: tuple[CausalEdge, ...]

    def __post_init__(self) -> None:
        for e in self.edges:
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise ValueError(f"edge {e.src}->{e.dst} endpoint outside node set")

    def causes_of(self, node: int) -> tuple[int, ...]:
        return tuple(sorted(e.src for e in self.edges if e.dst == node))

    def to_json(self) -> dict:
        return {
            "nodes": sorted(self.nodes),
            "edges": [
                {"src": e.src, "dst": e.dst, "strength": e.strength}
                for e in sorted(self.edges, key=lambda e: (e.src, e.dst))
            ],
        }


def _as_type_lists(
    sequences: Iterable[EventSequence | Sequence[int]],
) -> list[list[int]]:
    out: list[list[int]] = []
    for seq in sequences:
        if isinstance(seq, EventSequence):
            out.append([ev.type for ev in seq.events])
        else:
            out.append(list(seq))
    return out


def _contains(haystack: Sequence[int], needle: Sequence[int]) -> bool:
    it = iter(haystack)
    return all(any(x == want for x in it) for want in needle)


def mine_patterns(
    sequences: Iterable[EventSequence | Sequence[int]],
    min_support: float = DEFAULT_MIN_SUPPORT,
    max_len: int = DEFAULT_MAX_LEN,
) -> list[SequentialPattern]:
    """All patterns up to max_len whose support reaches min_support.

    Output order: support descending, then length descending, then
    lexicographic on the event lists.
    """
    if not 0 < min_support <= 1:
        raise ConfigError(f"min_support must be in (0, 1], got {min_support}")
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")

    data = _as_type_lists(sequences)
    n = len(data)
    if n == 0:
        return []

    found: list[SequentialPattern] = []

    def grow(prefix: tuple[int, ...], projected: list[list[int]]) -> None:
        # Count each extension item once per projected suffix.
        counts: dict[int, int] = {}
        for suffix in projected:
            for item in set(suffix):
                counts[item] = counts.get(item, 0) + 1
        for item in sorted(counts):
            count = counts[item]
            if count / n < min_support:
                continue
            pattern = prefix + (item,)
            found.append(
                SequentialPattern(events=pattern, support=count / n, count=count)
            )
            if len(pattern) < max_len:
                nxt = []
                for suffix in projected:
                    try:
                        cut = suffix.index(item)
                    except ValueError:
                        continue
                    nxt.append(suffix[cut + 1 :])
                grow(pattern, nxt)

    grow((), data)
    found.sort(key=lambda p: (-p.support, -len(p.events), p.events))
    return found


def match_sequences(
    pattern: SequentialPattern | Sequence[int],
    sequences: Iterable[EventSequence],
) -> list[str]:
    """Ids of sequences containing the pattern as a subsequence."""
    events = tuple(pattern.events if isinstance(pattern, SequentialPattern) else pattern)
    out = []
    for seq in sequences:
        types = [ev.type for ev in seq.events]
        if _contains(types, events):
            out.append(seq.id)
    return out


def ancestors_subgraph(graph: CausalGraph, target: int) -> Subgraph:
    """The target, all its ancestors, and every edge among them."""
    if not 0 <= target < graph.n_nodes:
        raise GraphError(f"target {target} outside graph of {graph.n_nodes} nodes")
    parents = graph.parents_map()
    keep = {target}
    frontier = [target]
    while frontier:
        v = frontier.pop()
        for p in parents[v]:
            if p not in keep:
                keep.add(p)
                frontier.append(p)
    edges = tuple(
        e for e in graph.edges if e.src in keep and e.dst in keep
    )
    return Subgraph(nodes=frozenset(keep), edges=edges)


def explained_by(
    pattern: SequentialPattern | Sequence[int], sub: Subgraph
) -> bool:
    """Whether the subgraph accounts for the pattern's event order.

    Every pattern event must be a subgraph node, and any occurrence of an
    event with at least one cause inside the subgraph must be preceded by
    one of those causes.
    """
    events = tuple(pattern.events if isinstance(pattern, SequentialPattern) else pattern)
    for i, ev in enumerate(events):
        if ev not in sub.nodes:
            return False
        causes = sub.causes_of(ev)
        if causes and not set(causes) & set(events[:i]):
            return False
    return True
