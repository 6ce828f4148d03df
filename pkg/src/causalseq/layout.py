"""Geometry for the views: graph columns, glyph statistics, and the
force-relaxed sequential-flow layout.

Vertical order comes from the causal graph (ranks); forces adjust only the
horizontal coordinates, preserving chain, fork, and common-effect
structures. New force kinds can be appended to the force list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import GraphError
from .events import EventCatalog, EventSequence
from .graph import CausalGraph
from .patterns import SequentialPattern

__all__ = [
    "GlyphStats",
    "FlowConfig",
    "FlowLayout",
    "topo_order",
    "topo_order_edges",
    "causal_order_columns",
    "glyph_stats",
    "flow_layout",
    "force_step",
    "chain_force",
    "fork_force",
    "v_force",
    "DEFAULT_FORCES",
]


def topo_order_edges(n_nodes: int, edges: Iterable[tuple[int, int]]) -> list[int]:
    """Kahn's algorithm; ties broken by ascending node index."""
    children: dict[int, list[int]] = {v: [] for v in range(n_nodes)}
    indegree = [0] * n_nodes
    edge_list = list(edges)
    for src, dst in edge_list:
        children[src].append(dst)
        indegree[dst] += 1

    order: list[int] = []
    ready = sorted(v for v in range(n_nodes) if indegree[v] == 0)
    while ready:
        v = ready.pop(0)
        order.append(v)
        changed = False
        for c in children[v]:
            indegree[c] -= 1
            if indegree[c] == 0:
                ready.append(c)
                changed = True
        if changed:
            ready.sort()
    if len(order) < n_nodes:
        placed = set(order)
        src, dst = next(
            (s, d) for s, d in edge_list if s not in placed and d not in placed
        )
        raise GraphError(f"cycle detected through edge {src}->{dst}")
    return order


def topo_order(graph: CausalGraph) -> list[int]:
    return topo_order_edges(graph.n_nodes, [(e.src, e.dst) for e in graph.edges])


def causal_order_columns(graph: CausalGraph) -> dict[int, int]:
    """Longest-path depth from any root; roots and isolated nodes sit at 0."""
    parents = graph.parents_map()
    column = {v: 0 for v in range(graph.n_nodes)}
    for v in topo_order(graph):
        if parents[v]:
            column[v] = 1 + max(column[p] for p in parents[v])
    return column


@dataclass(frozen=True)
class GlyphStats:
    """Donut-glyph numbers for one event type within a group."""

    frequency: float
    quarter_dist: tuple[float, float, float, float]
    type_color: int

    def __post_init__(self) -> None:
        if self.frequency > 0:
            total = sum(self.quarter_dist)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"quarter_dist sums to {total}, expected 1")

    def to_json(self) -> dict:
        return {
            "frequency": self.frequency,
            "quarter_dist": list(self.quarter_dist),
            "type_color": self.type_color,
        }


def glyph_stats(
    sequences: Iterable[EventSequence], event_type: int, catalog: EventCatalog
) -> GlyphStats:
    """Frequency of the type among all group occurrences, plus its
    within-sequence quartile distribution."""
    total_events = 0
    occurrences = 0
    quarters = [0, 0, 0, 0]
    for seq in sequences:
        length = len(seq.events)
        total_events += length
        for i, ev in enumerate(seq.events):
            if ev.type == event_type:
                occurrences += 1
                quarters[(4 * i) // length] += 1
    color = catalog.colors[event_type] if catalog.colors is not None else event_type
    if occurrences == 0:
        return GlyphStats(
            frequency=0.0, quarter_dist=(0.0, 0.0, 0.0, 0.0), type_color=color
        )
    dist = tuple(q / occurrences for q in quarters)
    return GlyphStats(
        frequency=occurrences / total_events,
        quarter_dist=dist,  # type: ignore[arg-type]
        type_color=color,
    )


@dataclass(frozen=True)
class FlowConfig:
    k_chain: float = 0.5
    min_angle_deg: float = 30.0
    damping: float = 0.5
    max_step: float = 1.0
    row_height: float = 1.0
    # Spread pushes on a node that is also a chain middle are scaled by this
    # factor. The midpoint rule for chain middles is a hard guarantee while
    # angle spread is best effort, so when the two compete the chain has to
    # dominate the force balance.
    chain_deference: float = 0.25
    tol: float = 1e-3
    max_iter: int = 300


@dataclass(frozen=True)
class Structures:
    """Graph shapes, restricted to the laid-out nodes, that forces preserve."""

    chains: tuple[tuple[int, int, int], ...]  # (parent, middle, child)
    forks: tuple[tuple[int, tuple[int, ...]], ...]  # (parent, children)
    vees: tuple[tuple[int, tuple[int, ...]], ...]  # (child, parents)


ForceFn = Callable[[np.ndarray, np.ndarray, Structures, FlowConfig], np.ndarray]


def _spread(
    xs: np.ndarray,
    ys: np.ndarray,
    apex: int,
    members: tuple[int, ...],
    cfg: FlowConfig,
    soft: frozenset[int] = frozenset(),
) -> np.ndarray:
    """Push each member pair apart about the apex until both apex-member
    angles reach min_angle; pairs already spread at least that far feel
    nothing, so valid configurations are fixed points.

    Each push carries an equal and opposite reaction on the apex. That makes
    every interaction momentum-free, so when competing structures want
    incompatible spreads the contested nodes meet in a force balance instead
    of chasing each other's moving bounds without end. The push saturates at
    one row height of crowding; without the cap, deeply crowded nodes take
    clamp-sized steps that overshoot the balance point and cycle forever.

    Pushes are split evenly across the structure's pairs so a many-member
    apex accumulates at most one pair's worth of stiffness. Without the
    split, wide structures make the damped update overshoot harder each
    step and relaxation rings instead of settling. Zero-force configurations
    are unaffected, the split only rescales nonzero pushes.

    Members in `soft` (chain middles) get their pushes scaled down by
    cfg.chain_deference: the chain midpoint rule is a hard guarantee while
    angle spread is best effort, so spread must not drag a chain middle far
    off its midpoint when both cannot hold."""
    force = np.zeros_like(xs)
    tan_a = math.tan(math.radians(cfg.min_angle_deg))
    n_pairs = len(members) * (len(members) - 1) // 2
    gain = cfg.k_chain / n_pairs if n_pairs else cfg.k_chain
    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            # Left slot goes to the currently-left member; index breaks ties.
            if (xs[a], a) <= (xs[b], b):
                left, right = a, b
            else:
                left, right = b, a
            crowd_left = xs[left] - (xs[apex] - tan_a * abs(ys[left] - ys[apex]))
            crowd_right = (xs[apex] + tan_a * abs(ys[right] - ys[apex])) - xs[right]
            if crowd_left > 0:
                push = gain * min(crowd_left, cfg.row_height)
                if left in soft:
                    push *= cfg.chain_deference
                force[left] -= push
                force[apex] += push
            if crowd_right > 0:
                push = gain * min(crowd_right, cfg.row_height)
                if right in soft:
                    push *= cfg.chain_deference
                force[right] += push
                force[apex] -= push
    return force


def chain_force(
    xs: np.ndarray, ys: np.ndarray, structures: Structures, cfg: FlowConfig
) -> np.ndarray:
    """Pull each chain's middle node toward the x-midpoint of its neighbors.

    The endpoints take half the reaction each, so the interaction is
    momentum-free like the spread forces and relaxation cannot pick up a
    steady drift when structures compete."""
    force = np.zeros_like(xs)
    for parent, mid, child in structures.chains:
        target = (xs[parent] + xs[child]) / 2.0
        pull = cfg.k_chain * (target - xs[mid])
        force[mid] += pull
        force[parent] -= pull / 2.0
        force[child] -= pull / 2.0
    return force


def fork_force(
    xs: np.ndarray, ys: np.ndarray, structures: Structures, cfg: FlowConfig
) -> np.ndarray:
    force = np.zeros_like(xs)
    soft = frozenset(mid for _, mid, _ in structures.chains)
    for parent, children in structures.forks:
        force += _spread(xs, ys, parent, children, cfg, soft)
    return force


def v_force(
    xs: np.ndarray, ys: np.ndarray, structures: Structures, cfg: FlowConfig
) -> np.ndarray:
    force = np.zeros_like(xs)
    soft = frozenset(mid for _, mid, _ in structures.chains)
    for child, parents in structures.vees:
        force += _spread(xs, ys, child, parents, cfg, soft)
    return force


DEFAULT_FORCES: tuple[ForceFn, ...] = (chain_force, fork_force, v_force)


def force_step(
    xs: np.ndarray,
    ys: np.ndarray,
    structures: Structures,
    cfg: FlowConfig,
    forces: Sequence[ForceFn] = DEFAULT_FORCES,
) -> np.ndarray:
    """One damped Euler update; returns new positions."""
    total = np.zeros_like(xs)
    for f in forces:
        total += f(xs, ys, structures, cfg)
    step = np.clip(cfg.damping * total, -cfg.max_step, cfg.max_step)
    return xs + step


@dataclass(frozen=True)
class FlowLayout:
    """Converged geometry for one pattern: one node per distinct event."""

    events: tuple[int, ...]
    ranks: tuple[int, ...]
    xs: tuple[float, ...]
    bar_lengths: tuple[int, ...]
    flows: tuple[tuple[int, int, int], ...]  # (cause event, effect event, slot)
    iterations: int
    converged: bool

    def to_json(self) -> dict:
        return {
            "nodes": [
                {
                    "event": ev,
                    "rank": rank,
                    "x": x,
                    "bar_length": bar,
                }
                for ev, rank, x, bar in zip(
                    self.events, self.ranks, self.xs, self.bar_lengths
                )
            ],
            "flows": [
                {"src": src, "dst": dst, "slot": slot} for src, dst, slot in self.flows
            ],
        }


def _structures(
    nodes: Sequence[int],
    parents: Mapping[int, tuple[int, ...]],
    children: Mapping[int, tuple[int, ...]],
) -> Structures:
    keep = set(nodes)
    chains = []
    forks = []
    vees = []
    for v in nodes:
        ps = tuple(p for p in parents[v] if p in keep)
        cs = tuple(c for c in children[v] if c in keep)
        if len(ps) == 1 and len(cs) == 1:
            chains.append((ps[0], v, cs[0]))
        if len(cs) >= 2:
            forks.append((v, cs))
        if len(ps) >= 2:
            vees.append((v, ps))
    return Structures(chains=tuple(chains), forks=tuple(forks), vees=tuple(vees))


def flow_layout(
    pattern: SequentialPattern | Sequence[int],
    graph: CausalGraph,
    cfg: FlowConfig | None = None,
    forces: Sequence[ForceFn] = DEFAULT_FORCES,
) -> FlowLayout:
    cfg = cfg or FlowConfig()
    events = tuple(pattern.events if isinstance(pattern, SequentialPattern) else pattern)

    missing = sorted({ev for ev in events if not 0 <= ev < graph.n_nodes})
    if missing:
        raise GraphError(f"pattern events {missing} missing from graph")

    # One layout node per distinct event; first occurrence fixes initial x.
    nodes: list[int] = []
    first_pos: dict[int, int] = {}
    for i, ev in enumerate(events):
        if ev not in first_pos:
            first_pos[ev] = i
            nodes.append(ev)

    order = topo_order(graph)
    ranked = [v for v in order if v in first_pos]
    rank_of = {v: r for r, v in enumerate(ranked)}

    parents = graph.parents_map()
    children = graph.children_map()
    structures = _structures(ranked, parents, children)

    index_of = {v: i for i, v in enumerate(ranked)}
    xs = np.array([float(first_pos[v]) for v in ranked])
    ys = np.array([rank_of[v] * cfg.row_height for v in ranked])

    def remap(s: Structures) -> Structures:
        return Structures(
            chains=tuple(
                (index_of[a], index_of[b], index_of[c]) for a, b, c in s.chains
            ),
            forks=tuple(
                (index_of[p], tuple(index_of[c] for c in cs)) for p, cs in s.forks
            ),
            vees=tuple(
                (index_of[c], tuple(index_of[p] for p in ps)) for c, ps in s.vees
            ),
        )

    structures = remap(structures)
    iterations = 0
    converged = False
    prev_xs = xs
    for _ in range(cfg.max_iter):
        iterations += 1
        new_xs = force_step(xs, ys, structures, cfg, forces)
        disp = float(np.max(np.abs(new_xs - xs))) if len(xs) else 0.0
        # Two consecutive steps that nearly cancel are an antiphase cycle of
        # the damped update; on dense graphs it can hold a constant amplitude
        # forever. Averaging the cycle's endpoints lands on its axis, which
        # turns the neutral mode into a decaying one. Monotone progress has
        # |new - prev| about twice disp, so it never trips this.
        if disp >= cfg.tol and float(np.max(np.abs(new_xs - prev_xs))) < 0.25 * disp:
            new_xs = (new_xs + xs) / 2.0
        prev_xs, xs = xs, new_xs
        if disp < cfg.tol:
            converged = True
            break
    if not len(xs):
        converged = True

    # Relaxation balances chain straightness against angle spread, and on
    # graphs where both cannot hold it can leave a chain middle past the
    # slope bound. The bound is a hard guarantee of the output geometry
    # while spread is best effort, so finish by clipping each middle into
    # the band around its endpoints' midpoint. Clipping one middle can
    # shift the band of an adjacent chain, so sweep until nothing moves.
    for _ in range(8 + len(structures.chains)):
        moved = False
        for a, v, c in structures.chains:
            mid = (xs[a] + xs[c]) / 2.0
            half = 0.25 * abs(xs[c] - xs[a])
            if xs[v] < mid - half:
                xs[v] = mid - half
                moved = True
            elif xs[v] > mid + half:
                xs[v] = mid + half
                moved = True
        if not moved:
            break

    keep = set(ranked)
    bar_lengths = []
    flows = []
    for v in ranked:
        causes = sorted(
            (p for p in parents[v] if p in keep), key=lambda p: rank_of[p]
        )
        bar_lengths.append(len(causes))
        for slot, p in enumerate(causes):
            flows.append((p, v, slot))

    return FlowLayout(
        events=tuple(ranked),
        ranks=tuple(rank_of[v] for v in ranked),
        xs=tuple(float(x) for x in xs),
        bar_lengths=tuple(bar_lengths),
        flows=tuple(flows),
        iterations=iterations,
        converged=converged,
    )
