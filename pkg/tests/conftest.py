from __future__ import annotations

from causalseq import CausalEdge, CausalGraph, Event, EventCatalog, EventSequence, Session


def make_sequence(sid: str, types: list[int], times: list[int] | None = None) -> EventSequence:
    if times is None:
        times = [(k + 1) * 1000 for k in range(len(types))]
    events = tuple(Event(type=v, timestamp=t) for v, t in zip(types, times))
    return EventSequence(id=sid, events=events)


def make_session(types: list[int], parent: str = "s", index: int = 0,
                 times: list[int] | None = None) -> Session:
    if times is None:
        times = [(k + 1) * 1000 for k in range(len(types))]
    events = tuple(Event(type=v, timestamp=t) for v, t in zip(types, times))
    return Session(parent_id=parent, index=index, events=events)


def catalog_of(n: int) -> EventCatalog:
    return EventCatalog(types=tuple(chr(ord("a") + k) for k in range(n)))


def graph_of(n: int, edges: list[tuple[int, int]], strength: float = 0.5) -> CausalGraph:
    return CausalGraph(
        n_nodes=n,
        edges=tuple(CausalEdge(src=s, dst=d, strength=strength) for s, d in edges),
    )


# Benchmark DAGs for structure-recovery scoring. All three are 5-node graphs
# mixing the chain, fork, and collider motifs; they differ in which node plays
# the mediator and in index labeling, so the discovery scan visits them in
# different orders.
RECOVERY_DAGS: dict[str, list[tuple[int, int]]] = {
    "chain_flavored": [(4, 1), (1, 0), (4, 2), (0, 2), (4, 3), (0, 3)],
    "fork_flavored": [(0, 2), (2, 1), (0, 3), (1, 3), (0, 4), (1, 4)],
    "collider_flavored": [(0, 4), (4, 1), (0, 2), (1, 2), (0, 3), (1, 3)],
}

# Directed-edge-disjoint pair for the state-mixture benchmark.
MIXTURE_DAG_A: list[tuple[int, int]] = RECOVERY_DAGS["chain_flavored"]
MIXTURE_DAG_B: list[tuple[int, int]] = [(2, 3), (3, 0), (2, 1), (0, 1), (2, 4), (0, 4)]
