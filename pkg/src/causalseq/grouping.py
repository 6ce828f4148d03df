"""Iterative state detection over sessions.

Alternates two phases: fit one causal graph and generative model per group
(formulating), then move every session to the group whose model explains it
best (grouping).  Groups that fall below a minimum size are dissolved, so
the number of states can shrink but never grow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from sklearn.cluster import DBSCAN

from .discovery import Diagnostics, discover
from .errors import ConfigError, EmptyDatasetError
from .events import Dataset, EventCatalog, EventSequence, Session
from .graph import CausalGraph

__all__ = [
    "SequenceEmbedding",
    "GraphModel",
    "GroupAssignment",
    "CausalStateSet",
    "StateConfig",
    "embed_sequence",
    "initial_clusters",
    "fit_generative",
    "session_loglik",
    "assign",
    "detect_states",
]

# Smoothed probability for parent patterns never seen during fitting.
UNSEEN_PROB = 0.5
DEFAULT_MIN_GROUP = 5


@dataclass(frozen=True)
class SequenceEmbedding:
    """L2-normalized event-type frequency vector of one full sequence."""

    vector: np.ndarray

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=np.float64)
        object.__setattr__(self, "vector", vec)
        norm = float(np.linalg.norm(vec))
        if vec.any() and abs(norm - 1.0) > 1e-9:
            raise ValueError(f"embedding norm {norm}, expected 1")


def embed_sequence(seq: EventSequence, catalog: EventCatalog) -> SequenceEmbedding:
    counts = np.zeros(len(catalog.types), dtype=np.float64)
    for ev in seq.events:
        counts[ev.type] += 1.0
    norm = np.linalg.norm(counts)
    if norm > 0:
        counts /= norm
    return SequenceEmbedding(vector=counts)


def initial_clusters(
    embeddings: Sequence[SequenceEmbedding], eps: float, min_pts: int
) -> np.ndarray:
    """Density-based clustering of sequence embeddings.

    Returns one group label per embedding, labels contiguous from 0.
    Noise points are attached to the nearest cluster centroid; when no
    cluster forms at all (or there are fewer points than min_pts) every
    sequence lands in a single group.
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise ConfigError(f"min_pts must be >= 1, got {min_pts}")
    n = len(embeddings)
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    if n < min_pts:
        return np.zeros(n, dtype=np.intp)

    points = np.stack([e.vector for e in embeddings])
    labels = DBSCAN(eps=eps, min_samples=min_pts, metric="euclidean").fit_predict(points)

    clusters = sorted(set(labels) - {-1})
    if not clusters:
        return np.zeros(n, dtype=np.intp)

    relabel = {old: new for new, old in enumerate(clusters)}
    out = np.empty(n, dtype=np.intp)
    centroids = np.stack([points[labels == old].mean(axis=0) for old in clusters])
    for i, lab in enumerate(labels):
        if lab == -1:
            dists = np.linalg.norm(centroids - points[i], axis=1)
            out[i] = int(np.argmin(dists))
        else:
            out[i] = relabel[lab]
    return out


def _session_steps(session: Session) -> list[set[int]]:
    """Events grouped by timestamp, ascending; each step is a set of type indices."""
    steps: list[set[int]] = []
    last_ts: int | None = None
    for ev in session.events:
        if last_ts is None or ev.timestamp != last_ts:
            steps.append({ev.type})
            last_ts = ev.timestamp
        else:
            steps[-1].add(ev.type)
    return steps


@dataclass(frozen=True)
class GraphModel:
    """Stepwise generative model: per node, P(node fires at a step) conditioned
    on which of its parents have appeared in any earlier step."""

    graph: CausalGraph
    parents: tuple[tuple[int, ...], ...]
    cpt: tuple[Mapping[int, float], ...]

    def prob(self, node: int, mask: int) -> float:
        return self.cpt[node].get(mask, UNSEEN_PROB)


def _presence_mask(parents: tuple[int, ...], present: set[int]) -> int:
    mask = 0
    for bit, p in enumerate(parents):
        if p in present:
            mask |= 1 << bit
    return mask


def fit_generative(graph: CausalGraph, sessions: Sequence[Session]) -> GraphModel:
    """Tally fire/no-fire counts per node and parent-presence pattern,
    Laplace add-1 smoothed."""
    if not sessions:
        raise EmptyDatasetError("fit_generative requires at least one session")
    n = graph.n_nodes
    parents = tuple(graph.parents(v) for v in range(n))
    fires: list[dict[int, int]] = [{} for _ in range(n)]
    totals: list[dict[int, int]] = [{} for _ in range(n)]

    for session in sessions:
        present: set[int] = set()
        for step in _session_steps(session):
            for v in range(n):
                mask = _presence_mask(parents[v], present)
                totals[v][mask] = totals[v].get(mask, 0) + 1
                if v in step:
                    fires[v][mask] = fires[v].get(mask, 0) + 1
            present |= step

    cpt = tuple(
        {mask: (fires[v].get(mask, 0) + 1) / (total + 2) for mask, total in totals[v].items()}
        for v in range(n)
    )
    return GraphModel(graph=graph, parents=parents, cpt=cpt)


def session_loglik(model: GraphModel, session: Session) -> float:
    total = 0.0
    present: set[int] = set()
    n = model.graph.n_nodes
    for step in _session_steps(session):
        for v in range(n):
            p = model.prob(v, _presence_mask(model.parents[v], present))
            total += math.log(p if v in step else 1.0 - p)
        present |= step
    return total


def assign(session: Session, models: Sequence[GraphModel]) -> int:
    """Index of the model with the highest log-likelihood; ties go to the
    lowest index."""
    if not models:
        raise ConfigError("assign requires at least one model")
    best = 0
    best_ll = -math.inf
    for g, model in enumerate(models):
        ll = session_loglik(model, session)
        if ll > best_ll:
            best, best_ll = g, ll
    return best


@dataclass(frozen=True)
class GroupAssignment:
    """Session-to-group map plus per-group session counts."""

    groups: Mapping[tuple[str, int], int]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.groups and sum(self.counts) != len(self.groups):
            raise ValueError("group counts do not sum to session total")
        for key, g in self.groups.items():
            if not 0 <= g < len(self.counts):
                raise ValueError(f"session {key} assigned to out-of-range group {g}")

    def group_of(self, session: Session) -> int:
        return self.groups[session.key]


@dataclass(frozen=True)
class CausalStateSet:
    """Final detection result: one causal graph per surviving group."""

    graphs: tuple[CausalGraph, ...]
    assignment: GroupAssignment
    iterations: int
    converged: bool

    def __post_init__(self) -> None:
        if not self.graphs:
            raise ValueError("state set requires at least one graph")
        if len(self.assignment.counts) != len(self.graphs):
            raise ValueError("one count per graph required")

    def to_json(self) -> dict:
        assignment = [
            {"sequence": pid, "session": idx, "group": g}
            for (pid, idx), g in sorted(self.assignment.groups.items())
        ]
        return {
            "graphs": [g.to_json() for g in self.graphs],
            "assignment": assignment,
            "counts": list(self.assignment.counts),
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CausalStateSet":
        graphs = tuple(CausalGraph.from_json(g) for g in data["graphs"])
        groups = {
            (entry["sequence"], int(entry["session"])): int(entry["group"])
            for entry in data["assignment"]
        }
        return cls(
            graphs=graphs,
            assignment=GroupAssignment(groups=groups, counts=tuple(data["counts"])),
            iterations=int(data["iterations"]),
            converged=bool(data["converged"]),
        )


@dataclass(frozen=True)
class StateConfig:
    alpha: float = 0.05
    eps: float = 0.3
    min_pts: int = 5
    max_iter: int = 20
    max_cond_size: int = 3
    binary: bool = False
    min_group_size: int = DEFAULT_MIN_GROUP

    def __post_init__(self) -> None:
        if self.max_iter < 0:
            raise ConfigError(f"max_iter must be >= 0, got {self.max_iter}")
        if self.min_group_size < 1:
            raise ConfigError(f"min_group_size must be >= 1, got {self.min_group_size}")


def _formulate(
    sessions_by_group: list[list[Session]],
    catalog: EventCatalog,
    config: StateConfig,
    diagnostics: Diagnostics | None,
) -> tuple[list[CausalGraph], list[GraphModel]]:
    graphs: list[CausalGraph] = []
    models: list[GraphModel] = []
    for members in sessions_by_group:
        try:
            graph = discover(
                members,
                catalog,
                alpha=config.alpha,
                max_cond_size=config.max_cond_size,
                binary=config.binary,
                diagnostics=diagnostics,
            )
        except EmptyDatasetError:
            graph = CausalGraph(n_nodes=len(catalog.types), edges=())
        graphs.append(graph)
        models.append(fit_generative(graph, members))
    return graphs, models


def _split(sessions: Sequence[Session], labels: Sequence[int], k: int) -> list[list[Session]]:
    by_group: list[list[Session]] = [[] for _ in range(k)]
    for session, g in zip(sessions, labels):
        by_group[g].append(session)
    return by_group


def detect_states(ds: Dataset, config: StateConfig | None = None) -> CausalStateSet:
    """Run the full formulating/grouping loop over a sessionized dataset."""
    config = config or StateConfig()
    sessions = list(ds.sessions)
    if not sessions:
        raise EmptyDatasetError("detect_states requires a sessionized dataset")

    embeddings = [embed_sequence(seq, ds.catalog) for seq in ds.sequences]
    seq_labels = initial_clusters(embeddings, config.eps, config.min_pts)
    label_of = {seq.id: int(lab) for seq, lab in zip(ds.sequences, seq_labels)}
    labels = [label_of[s.parent_id] for s in sessions]

    # Initial groups may be empty at session level; keep only populated ones.
    present = sorted(set(labels))
    relabel = {old: new for new, old in enumerate(present)}
    labels = [relabel[g] for g in labels]
    k = len(present)

    graphs, models = _formulate(_split(sessions, labels, k), ds.catalog, config, None)
    iterations = 0
    converged = False

    for _ in range(config.max_iter):
        iterations += 1
        new_labels = [assign(s, models) for s in sessions]

        counts = [0] * k
        for g in new_labels:
            counts[g] += 1
        survivors = [g for g in range(k) if counts[g] >= config.min_group_size]
        if not survivors:
            warnings.warn(
                "all groups fell below the minimum size; falling back to a single group",
                stacklevel=2,
            )
            survivors = [min(range(k), key=lambda g: (-counts[g], g))]
        dissolved = len(survivors) < k
        if dissolved:
            surviving_models = [models[g] for g in survivors]
            remap = {old: new for new, old in enumerate(survivors)}
            moved = []
            for i, g in enumerate(new_labels):
                if g in remap:
                    moved.append(remap[g])
                else:
                    moved.append(assign(sessions[i], surviving_models))
            new_labels = moved
            k = len(survivors)

        if not dissolved and new_labels == labels:
            converged = True
            break
        labels = new_labels
        graphs, models = _formulate(_split(sessions, labels, k), ds.catalog, config, None)

    counts = [0] * k
    for g in labels:
        counts[g] += 1
    assignment = GroupAssignment(
        groups={s.key: g for s, g in zip(sessions, labels)},
        counts=tuple(counts),
    )
    return CausalStateSet(
        graphs=tuple(graphs),
        assignment=assignment,
        iterations=iterations,
        converged=converged,
    )
