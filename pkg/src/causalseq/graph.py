"""Directed causal graph over event types, with per-edge strengths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import GraphError

__all__ = ["CausalEdge", "CausalGraph"]


@dataclass(frozen=True)
class CausalEdge:
    """src causes dst; strength is the |partial correlation| of the surviving test."""

    src: int
    dst: int
    strength: float


@dataclass(frozen=True)
class CausalGraph:
    """A DAG whose nodes are catalog indices 0..n_nodes-1."""

    n_nodes: int
    edges: tuple[CausalEdge, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        seen: set[tuple[int, int]] = set()
        for e in self.edges:
            if e.src == e.dst:
                raise GraphError(f"self edge at node {e.src}")
            if not (0 <= e.src < self.n_nodes and 0 <= e.dst < self.n_nodes):
                raise GraphError(f"edge ({e.src},{e.dst}) outside node range")
            if not 0.0 <= e.strength <= 1.0:
                raise GraphError(f"edge strength {e.strength} outside [0,1]")
            if (e.src, e.dst) in seen:
                raise GraphError(f"duplicate edge ({e.src},{e.dst})")
            seen.add((e.src, e.dst))
        if self.labels is not None and len(self.labels) != self.n_nodes:
            raise GraphError("labels must align with nodes")
        if self._has_cycle():
            raise GraphError("graph has a directed cycle")

    def _has_cycle(self) -> bool:
        indeg = [0] * self.n_nodes
        for e in self.edges:
            indeg[e.dst] += 1
        frontier = [v for v in range(self.n_nodes) if indeg[v] == 0]
        done = 0
        children = self.children_map()
        while frontier:
            v = frontier.pop()
            done += 1
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    frontier.append(c)
        return done != self.n_nodes

    def edge_set(self) -> set[tuple[int, int]]:
        return {(e.src, e.dst) for e in self.edges}

    def parents(self, v: int) -> list[int]:
        return sorted(e.src for e in self.edges if e.dst == v)

    def children(self, v: int) -> list[int]:
        return sorted(e.dst for e in self.edges if e.src == v)

    def parents_map(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for e in self.edges:
            out[e.dst].append(e.src)
        for lst in out:
            lst.sort()
        return out

    def children_map(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for e in self.edges:
            out[e.src].append(e.dst)
        for lst in out:
            lst.sort()
        return out

    def label_of(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v)

    def to_json(self) -> dict:
        return {
            "nodes": [
                {"id": v, "label": self.label_of(v)} for v in range(self.n_nodes)
            ],
            "edges": [
                {"src": e.src, "dst": e.dst, "strength": e.strength}
                for e in sorted(self.edges, key=lambda e: (e.src, e.dst))
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "CausalGraph":
        nodes = doc["nodes"]
        labels: tuple[str, ...] | None = tuple(n["label"] for n in nodes)
        if labels == tuple(str(v) for v in range(len(nodes))):
            # serialized default labels; keep the unlabeled form so
            # to_json/from_json round-trips exactly
            labels = None
        return cls(
            n_nodes=len(nodes),
            edges=tuple(
                CausalEdge(e["src"], e["dst"], e["strength"]) for e in doc["edges"]
            ),
            labels=labels,
        )

    @classmethod
    def from_edge_list(
        cls,
        n_nodes: int,
        edges: Iterable[tuple[int, int]],
        *,
        strength: float = 1.0,
        labels: tuple[str, ...] | None = None,
    ) -> "CausalGraph":
        return cls(
            n_nodes=n_nodes,
            edges=tuple(CausalEdge(s, d, strength) for s, d in edges),
            labels=labels,
        )
