"""Synthetic sequence generator with known causal structure, plus recovery scoring.

Sequences are sampled stepwise from a noisy-OR parent model over a DAG:
at every step each event type fires independently with probability

    p = 1 - (1 - p_base) * prod over active parents of (1 - p_act)

where a parent counts as active once it has occurred earlier in the
sequence. Mixtures draw each sequence from one of several DAGs and
remember the true state, so pipeline output can be scored against it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_rand_score

from .errors import ConfigError
from .events import Dataset, Event, EventCatalog, EventSequence
from .graph import CausalEdge, CausalGraph

__all__ = [
    "GroundTruth",
    "RecoveryScore",
    "majority_labels",
    "random_dag",
    "sample_sequences",
    "score_recovery",
]

STEP_MS = 1000
REDRAW_LIMIT = 100


@dataclass(frozen=True)
class GroundTruth:
    """Everything needed to score a detection run against the generator."""

    dags: tuple[CausalGraph, ...]
    mixture: tuple[int, ...]
    labels: tuple[int, ...]
    sequence_ids: tuple[str, ...]
    p_base: tuple[float, ...]
    p_act: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.sequence_ids):
            raise ValueError("labels must align with sequence_ids")
        if sum(self.mixture) != len(self.labels):
            raise ValueError("mixture counts must sum to sequence count")

    def to_json(self) -> dict:
        return {
            "dags": [g.to_json() for g in self.dags],
            "mixture": list(self.mixture),
            "labels": list(self.labels),
            "sequence_ids": list(self.sequence_ids),
            "p_base": list(self.p_base),
            "p_act": list(self.p_act),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "GroundTruth":
        return cls(
            dags=tuple(CausalGraph.from_json(g) for g in doc["dags"]),
            mixture=tuple(doc["mixture"]),
            labels=tuple(doc["labels"]),
            sequence_ids=tuple(doc["sequence_ids"]),
            p_base=tuple(doc["p_base"]),
            p_act=tuple(doc["p_act"]),
        )


@dataclass(frozen=True)
class RecoveryScore:
    edge_precision: float
    edge_recall: float
    edge_f1: float
    ari: float

    def to_json(self) -> dict:
        return {
            "edge_precision": self.edge_precision,
            "edge_recall": self.edge_recall,
            "edge_f1": self.edge_f1,
            "ari": self.ari,
        }


def random_dag(n_nodes: int, edge_prob: float, seed: int) -> CausalGraph:
    """Random DAG: upper-triangular edges under a random node permutation."""
    if n_nodes < 1:
        raise ConfigError("n_nodes must be >= 1")
    if not 0.0 <= edge_prob <= 1.0:
        raise ConfigError("edge_prob must be in [0, 1]")
    rng = np.random.default_rng(seed)
    perm = [int(v) for v in rng.permutation(n_nodes)]
    edges = []
    for a in range(n_nodes):
        for b in range(a + 1, n_nodes):
            if rng.random() < edge_prob:
                edges.append((perm[a], perm[b]))
    return CausalGraph(
        n_nodes=n_nodes,
        edges=tuple(CausalEdge(s, d, 1.0) for s, d in sorted(edges)),
    )


def _per_node(value: float | Sequence[float], n: int, name: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        out = (float(value),) * n
    else:
        out = tuple(float(v) for v in value)
        if len(out) != n:
            raise ConfigError(f"{name} must have one entry per node")
    if any(not 0.0 <= v <= 1.0 for v in out):
        raise ConfigError(f"{name} entries must be probabilities")
    return out


def _draw_sequence(
    dag: CausalGraph,
    length: int,
    p_base: tuple[float, ...],
    p_act: tuple[float, ...],
    rng: np.random.Generator,
) -> list[int]:
    parents = dag.parents_map()
    occurred: set[int] = set()
    fired: list[int] = []
    for _ in range(length):
        step: list[int] = []
        for v in range(dag.n_nodes):
            miss = 1.0 - p_base[v]
            for parent in parents[v]:
                if parent in occurred:
                    miss *= 1.0 - p_act[v]
            if rng.random() < 1.0 - miss:
                step.append(v)
        fired.extend(step)
        occurred.update(step)
    return fired


def sample_sequences(
    dags: Sequence[CausalGraph],
    n_per_state: int | Sequence[int],
    length: int,
    seed: int,
    *,
    p_base: float | Sequence[float] = 0.05,
    p_act: float | Sequence[float] = 0.9,
) -> tuple[Dataset, GroundTruth]:
    """Sample sequences from a mixture of DAGs; returns data plus ground truth.

    Per-sequence generators are derived from (seed, sequence index), so the
    draw for one sequence never depends on any other. A sequence that comes
    out empty is redrawn from the same generator a bounded number of times;
    if nothing can ever fire it stays empty rather than looping forever.
    """
    if not dags:
        raise ConfigError("need at least one DAG")
    if length < 1:
        raise ConfigError("length must be >= 1")
    n_nodes = dags[0].n_nodes
    if any(g.n_nodes != n_nodes for g in dags):
        raise ConfigError("all DAGs must share one node set")
    if isinstance(n_per_state, int):
        mixture = (n_per_state,) * len(dags)
    else:
        mixture = tuple(int(c) for c in n_per_state)
        if len(mixture) != len(dags):
            raise ConfigError("need one sequence count per DAG")
    base = _per_node(p_base, n_nodes, "p_base")
    act = _per_node(p_act, n_nodes, "p_act")

    catalog = EventCatalog(types=tuple(f"e{i}" for i in range(n_nodes)))
    sequences: list[EventSequence] = []
    labels: list[int] = []
    seq_no = 0
    for state, count in enumerate(mixture):
        for _ in range(count):
            rng = np.random.default_rng([seed, seq_no])
            fired = _draw_sequence(dags[state], length, base, act, rng)
            for _ in range(REDRAW_LIMIT):
                if fired:
                    break
                fired = _draw_sequence(dags[state], length, base, act, rng)
            events = tuple(
                Event(type=v, timestamp=(k + 1) * STEP_MS)
                for k, v in enumerate(fired)
            )
            sequences.append(EventSequence(id=f"s{state}-{seq_no:04d}", events=events))
            labels.append(state)
            seq_no += 1

    dataset = Dataset(catalog=catalog, sequences=tuple(sequences))
    truth = GroundTruth(
        dags=tuple(dags),
        mixture=mixture,
        labels=tuple(labels),
        sequence_ids=tuple(s.id for s in sequences),
        p_base=base,
        p_act=act,
    )
    return dataset, truth


def _edge_prf(
    true_edges: set[tuple[int, int]], det_edges: set[tuple[int, int]]
) -> tuple[float, float, float]:
    if not true_edges and not det_edges:
        return 1.0, 1.0, 1.0
    tp = len(true_edges & det_edges)
    precision = tp / len(det_edges) if det_edges else 0.0
    recall = tp / len(true_edges) if true_edges else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


def majority_labels(
    truth: GroundTruth, session_groups: Mapping[tuple[str, int], int]
) -> list[int]:
    """Per-sequence detected label: majority vote over its sessions' groups.

    Ties go to the lowest group index; a sequence with no sessions at all
    maps to group 0.
    """
    votes: dict[str, Counter] = {}
    for (parent_id, _), group in session_groups.items():
        votes.setdefault(parent_id, Counter())[group] += 1
    out = []
    for sid in truth.sequence_ids:
        counter = votes.get(sid)
        if not counter:
            out.append(0)
            continue
        best = max(counter.items(), key=lambda kv: (kv[1], -kv[0]))
        out.append(best[0])
    return out


def score_recovery(
    truth: GroundTruth,
    detected_graphs: Sequence[CausalGraph],
    session_groups: Mapping[tuple[str, int], int],
) -> RecoveryScore:
    """Score detected graphs and groups against the generator's ground truth.

    Detected graphs are matched to true states by Hungarian assignment on
    directed-edge F1; precision/recall/F1 are then averaged over
    max(true state count, detected state count), so unmatched extras on
    either side contribute zero. ARI compares true sequence labels with
    majority-vote detected sequence labels and is relabeling-invariant.
    """
    if not detected_graphs:
        raise ConfigError("detected graph list must be nonempty")
    true_sets = [g.edge_set() for g in truth.dags]
    det_sets = [g.edge_set() for g in detected_graphs]
    f1_matrix = np.zeros((len(true_sets), len(det_sets)))
    for a, te in enumerate(true_sets):
        for b, de in enumerate(det_sets):
            f1_matrix[a, b] = _edge_prf(te, de)[2]
    rows, cols = linear_sum_assignment(-f1_matrix)
    slots = max(len(true_sets), len(det_sets))
    precision = recall = f1 = 0.0
    for a, b in zip(rows, cols):
        p, r, f = _edge_prf(true_sets[a], det_sets[b])
        precision += p
        recall += r
        f1 += f
    predicted = majority_labels(truth, session_groups)
    ari = float(adjusted_rand_score(list(truth.labels), predicted))
    return RecoveryScore(
        edge_precision=precision / slots,
        edge_recall=recall / slots,
        edge_f1=f1 / slots,
        ari=ari,
    )
