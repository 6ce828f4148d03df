"""Constraint-based structure discovery over prefix count features.

The pipeline is the classic three-stage constraint approach: estimate a
correlation matrix from the feature table, prune a complete skeleton with
level-wise conditional independence tests, then orient what can be oriented
and keep only the directed part.

Determinism contract: every loop below iterates nodes, edges and candidate
conditioning sets in sorted order, so identical inputs yield identical
graphs and identical diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm

from .errors import InsufficientDataError, NumericError
from .events import EventCatalog, Session
from .features import FeatureTable, build_table
from .graph import CausalEdge, CausalGraph

__all__ = [
    "CITestResult",
    "CorrelationMatrix",
    "Diagnostics",
    "SkeletonResult",
    "ci_test",
    "correlation_matrix",
    "discover",
    "orient_edges",
    "partial_correlation",
    "pc_skeleton",
]

MIN_ROWS = 4
RIDGE = 1e-8
RHO_CLAMP = 1e-12


class Diagnostics:
    """Append-only log of structured events, serializable as JSON lines.

    Collected kinds: ``skipped_test`` (sample too small for the Fisher
    transform), ``orientation_conflict`` (two v-structures disagree on an
    edge direction) and ``cycle_repair`` (edge dropped to restore acyclicity).
    """

    def __init__(self) -> None:
        self.events: list[dict] = []

    def log(self, kind: str, **data: object) -> None:
        self.events.append({"kind": kind, **data})

    def of_kind(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["kind"] == kind]

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True) for e in self.events)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson correlations of the feature columns plus the sample count.

    Zero-variance columns cannot carry correlation; their off-diagonal
    entries are fixed at 0 and the column indices recorded in ``constant``.
    """

    matrix: np.ndarray
    n: int
    constant: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(m, m.T, atol=1e-10):
            raise ValueError("correlation matrix must be symmetric")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def correlation_matrix(table: FeatureTable) -> CorrelationMatrix:
    if table.n_rows < MIN_ROWS:
        raise InsufficientDataError(MIN_ROWS, table.n_rows)
    data = table.rows.astype(np.float64)
    constant = frozenset(table.constant_columns())
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(data, rowvar=False)
    corr = np.atleast_2d(corr)
    for c in constant:
        corr[c, :] = 0.0
        corr[:, c] = 0.0
        corr[c, c] = 1.0
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    return CorrelationMatrix(matrix=corr, n=table.n_rows, constant=constant)


def _precision(sub: np.ndarray) -> np.ndarray:
    """Invert a correlation submatrix, retrying once with a small ridge."""
    for attempt in (0, 1):
        mat = sub if attempt == 0 else sub + RIDGE * np.eye(sub.shape[0])
        try:
            prec = np.linalg.inv(mat)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(prec)) and prec[0, 0] > 0 and prec[1, 1] > 0:
            return prec
    raise NumericError(
        f"correlation submatrix of size {sub.shape[0]} is singular"
    )


def partial_correlation(
    corr: CorrelationMatrix, i: int, j: int, cond: Iterable[int] = ()
) -> float:
    """Correlation of columns i and j given the columns in ``cond``.

    Computed from the precision matrix of the submatrix over {i, j} | cond.
    An empty conditioning set returns the plain Pearson entry unchanged.
    """
    cond = sorted(cond)
    if i == j or i in cond or j in cond:
        raise ValueError("i, j and the conditioning set must be disjoint")
    if not cond:
        return float(corr.matrix[i, j])
    idx = [i, j, *cond]
    sub = corr.matrix[np.ix_(idx, idx)]
    prec = _precision(sub)
    rho = -prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1])
    if not math.isfinite(rho) or abs(rho) > 1.0 + 1e-6:
        raise NumericError(
            f"partial correlation for ({i},{j}|{cond}) is not numerically stable"
        )
    return float(min(1.0, max(-1.0, rho)))


@dataclass(frozen=True)
class CITestResult:
    independent: bool
    p_value: float
    statistic: float
    skipped: bool = False


def ci_test(rho: float, n: int, cond_size: int, alpha: float) -> CITestResult:
    """Fisher z-transform test of zero partial correlation.

    With fewer than cond_size + 4 samples the reference distribution is
    undefined; the test is skipped and the pair conservatively treated as
    dependent, so no edge is ever removed on evidence that thin.
    """
    dof = n - cond_size - 3
    if dof <= 0:
        return CITestResult(
            independent=False, p_value=float("nan"), statistic=float("nan"),
            skipped=True,
        )
    bound = 1.0 - RHO_CLAMP
    r = min(bound, max(-bound, rho))
    z = math.atanh(r)
    statistic = math.sqrt(dof) * abs(z)
    threshold = float(norm.ppf(1.0 - alpha / 2.0))
    p_value = float(2.0 * norm.sf(statistic))
    return CITestResult(
        independent=statistic <= threshold,
        p_value=p_value,
        statistic=statistic,
    )


@dataclass
class SkeletonResult:
    """Undirected skeleton plus the evidence needed to orient it."""

    n_nodes: int
    edges: set[tuple[int, int]]            # sorted pairs (i < j)
    sepsets: dict[tuple[int, int], frozenset[int]]
    strengths: dict[tuple[int, int], float]
    corr: CorrelationMatrix
    tests_run: int = 0

    def neighbors(self, v: int) -> set[int]:
        out = set()
        for a, b in self.edges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return out


def pc_skeleton(
    table: FeatureTable,
    *,
    alpha: float = 0.05,
    max_cond_size: int = 3,
    diagnostics: Diagnostics | None = None,
) -> SkeletonResult:
    """Prune a complete graph by level-wise conditional independence tests.

    Level l tests every surviving edge (ascending pair order) against
    size-l conditioning sets drawn from the current neighbors of i and
    then of j, subsets in lexicographic order. The first independence
    verdict deletes the edge immediately and records the separating set.
    Constant columns start with no edges at all.
    """
    corr = correlation_matrix(table)
    m = corr.size
    active = [v for v in range(m) if v not in corr.constant]
    edges: set[tuple[int, int]] = set(combinations(active, 2))
    adj: dict[int, set[int]] = {v: set() for v in range(m)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    sepsets: dict[tuple[int, int], frozenset[int]] = {}
    strengths: dict[tuple[int, int], float] = {}
    tests_run = 0

    for level in range(max_cond_size + 1):
        if all(len(adj[v]) <= level for v in range(m)):
            break
        for pair in sorted(edges):
            i, j = pair
            candidates: list[tuple[int, ...]] = []
            seen: set[tuple[int, ...]] = set()
            for base in (adj[i] - {j}, adj[j] - {i}):
                for sub in combinations(sorted(base), level):
                    if sub not in seen:
                        seen.add(sub)
                        candidates.append(sub)
            removed = False
            for cond in candidates:
                rho = partial_correlation(corr, i, j, cond)
                result = ci_test(rho, corr.n, level, alpha)
                tests_run += 1
                if result.skipped:
                    if diagnostics is not None:
                        diagnostics.log(
                            "skipped_test", i=i, j=j, cond=list(cond),
                            n=corr.n, cond_size=level,
                        )
                    continue
                if result.independent:
                    sepsets[pair] = frozenset(cond)
                    removed = True
                    break
                strengths[pair] = abs(rho)
            if removed:
                edges.discard(pair)
                adj[i].discard(j)
                adj[j].discard(i)
                strengths.pop(pair, None)

    return SkeletonResult(
        n_nodes=m, edges=edges, sepsets=sepsets, strengths=strengths,
        corr=corr, tests_run=tests_run,
    )


def _meek_closure(
    edges: set[tuple[int, int]],
    oriented: dict[tuple[int, int], tuple[int, int]],
) -> None:
    """Apply the four Meek propagation rules until no edge changes."""

    def adjacent(a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in edges

    def directed(a: int, b: int) -> bool:
        return oriented.get((min(a, b), max(a, b))) == (a, b)

    def undirected(a: int, b: int) -> bool:
        return adjacent(a, b) and (min(a, b), max(a, b)) not in oriented

    nodes = sorted({v for e in edges for v in e})
    changed = True
    while changed:
        changed = False
        for pair in sorted(edges):
            if pair in oriented:
                continue
            for x, y in (pair, pair[::-1]):
                orient = False
                # R1: c -> x, c and y non-adjacent: x -> y.
                for c in nodes:
                    if c != y and directed(c, x) and not adjacent(c, y):
                        orient = True
                        break
                # R2: x -> c -> y: x -> y.
                if not orient:
                    for c in nodes:
                        if directed(x, c) and directed(c, y):
                            orient = True
                            break
                # R3: x - c -> y and x - d -> y with c, d non-adjacent: x -> y.
                if not orient:
                    found = [
                        c for c in nodes
                        if c != y and undirected(x, c) and directed(c, y)
                    ]
                    for c, d in combinations(found, 2):
                        if not adjacent(c, d):
                            orient = True
                            break
                # R4: x - c -> d -> y with c, y non-adjacent: x -> y.
                if not orient:
                    for c in nodes:
                        if c == y or not undirected(x, c) or adjacent(c, y):
                            continue
                        if any(
                            directed(c, d) and directed(d, y)
                            for d in nodes
                            if d not in (x, y)
                        ):
                            orient = True
                            break
                if orient:
                    oriented[pair] = (x, y)
                    changed = True
                    break


def _break_cycles(
    arcs: set[tuple[int, int]],
    strengths: dict[tuple[int, int], float],
    diagnostics: Diagnostics | None,
) -> None:
    """Remove the weakest edge of each directed cycle until none remain."""

    def find_cycle() -> list[tuple[int, int]] | None:
        children: dict[int, list[int]] = {}
        for s, d in sorted(arcs):
            children.setdefault(s, []).append(d)
        color: dict[int, int] = {}
        stack_path: list[int] = []

        def dfs(v: int) -> list[tuple[int, int]] | None:
            color[v] = 1
            stack_path.append(v)
            for c in children.get(v, ()):
                if color.get(c, 0) == 0:
                    found = dfs(c)
                    if found is not None:
                        return found
                elif color.get(c) == 1:
                    k = stack_path.index(c)
                    loop = stack_path[k:] + [c]
                    return list(zip(loop, loop[1:]))
            stack_path.pop()
            color[v] = 2
            return None

        for v in sorted({n for a in arcs for n in a}):
            if color.get(v, 0) == 0:
                found = dfs(v)
                if found is not None:
                    return found
        return None

    while True:
        cycle = find_cycle()
        if cycle is None:
            return
        victim = min(
            cycle,
            key=lambda e: (strengths.get((min(e), max(e)), 0.0), e),
        )
        arcs.discard(victim)
        if diagnostics is not None:
            diagnostics.log(
                "cycle_repair", src=victim[0], dst=victim[1],
                strength=strengths.get((min(victim), max(victim)), 0.0),
                cycle=[list(e) for e in cycle],
            )


def orient_edges(
    skeleton: SkeletonResult,
    *,
    labels: tuple[str, ...] | None = None,
    diagnostics: Diagnostics | None = None,
) -> CausalGraph:
    """Orient the skeleton and keep only the edges with a settled direction.

    V-structures are found first from non-adjacent pairs with a common
    neighbor outside their separating set; conflicting collider claims on
    one edge keep the first orientation and log the rest. Meek's rules
    then propagate directions, every still-undirected edge is dropped,
    and any directed cycle is repaired by removing its weakest edge.
    """
    edges = set(skeleton.edges)
    oriented: dict[tuple[int, int], tuple[int, int]] = {}

    def claim(src: int, dst: int) -> None:
        pair = (min(src, dst), max(src, dst))
        prev = oriented.get(pair)
        if prev is None:
            oriented[pair] = (src, dst)
        elif prev != (src, dst):
            if diagnostics is not None:
                diagnostics.log(
                    "orientation_conflict",
                    kept=[prev[0], prev[1]], rejected=[src, dst],
                )

    adj: dict[int, set[int]] = {v: set() for v in range(skeleton.n_nodes)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    for i, j in combinations(range(skeleton.n_nodes), 2):
        if (i, j) in edges:
            continue
        sepset = skeleton.sepsets.get((i, j), frozenset())
        for k in sorted(adj[i] & adj[j]):
            if k not in sepset:
                claim(i, k)
                claim(j, k)

    _meek_closure(edges, oriented)

    arcs = {oriented[pair] for pair in edges if pair in oriented}
    _break_cycles(arcs, skeleton.strengths, diagnostics)

    return CausalGraph(
        n_nodes=skeleton.n_nodes,
        edges=tuple(
            CausalEdge(s, d, skeleton.strengths.get((min(s, d), max(s, d)), 0.0))
            for s, d in sorted(arcs)
        ),
        labels=labels,
    )


def discover(
    sessions: Sequence[Session],
    catalog: EventCatalog,
    *,
    alpha: float = 0.05,
    max_cond_size: int = 3,
    binary: bool = False,
    diagnostics: Diagnostics | None = None,
) -> CausalGraph:
    """Full discovery pass: feature table, skeleton, orientation."""
    table = build_table(sessions, catalog, binary=binary)
    skeleton = pc_skeleton(
        table, alpha=alpha, max_cond_size=max_cond_size, diagnostics=diagnostics,
    )
    return orient_edges(
        skeleton, labels=tuple(catalog.types), diagnostics=diagnostics,
    )
