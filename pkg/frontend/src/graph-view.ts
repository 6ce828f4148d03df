import type { CausalGraph, GraphCard, GraphsPayload } from "./api";
import type { EdgeRef, ViewState } from "./state";

// Visual constants; the service fixes all relative geometry, these only scale it.
export const FADE_OPACITY = 0.25;
const GLYPH_RADIUS_MIN = 6;
const GLYPH_RADIUS_SPAN = 14;
const EDGE_WIDTH_MIN = 1;
const EDGE_WIDTH_SPAN = 5;

export interface DonutSector {
  /** Start angle as a fraction of a full turn. */
  start: number;
  sweep: number;
}

export interface GlyphView {
  node: number;
  label: string;
  color: number;
  column: number;
  radius: number;
  sectors: DonutSector[];
  opacity: number;
}

export interface EdgeView {
  src: number;
  dst: number;
  width: number;
  opacity: number;
}

export interface CardView {
  index: number;
  count: number;
  /** Statistics bar as a share of the largest group count. */
  bar: number;
  highlighted: boolean;
  glyphs: GlyphView[];
  edges: EdgeView[];
}

export interface GraphViewModel {
  cards: CardView[];
  /** Graph indices containing the hovered edge, in render order. */
  highlighted: number[];
  converged: boolean;
  empty: boolean;
  error: string | null;
}

export function containsEdge(graph: CausalGraph, edge: EdgeRef): boolean {
  return graph.edges.some((e) => e.src === edge.src && e.dst === edge.dst);
}

/** Ancestor closure of a node over the graph's edges, including the node. */
export function ancestorsOf(graph: CausalGraph, node: number): Set<number> {
  const incoming = new Map<number, number[]>();
  for (const e of graph.edges) {
    const parents = incoming.get(e.dst);
    if (parents) {
      parents.push(e.src);
    } else {
      incoming.set(e.dst, [e.src]);
    }
  }
  const seen = new Set<number>([node]);
  const stack = [node];
  while (stack.length) {
    const cur = stack.pop()!;
    for (const parent of incoming.get(cur) ?? []) {
      if (!seen.has(parent)) {
        seen.add(parent);
        stack.push(parent);
      }
    }
  }
  return seen;
}

/**
 * Node set a card keeps at full opacity under the active selection, or null
 * when no selection is active. A subgraph applies as-is to every card; a
 * target keeps its own ancestor closure per card, so the same event can fade
 * differently in graphs with different edges.
 */
function keptNodes(card: GraphCard, state: ViewState): Set<number> | null {
  if (state.subgraph !== null) {
    return new Set(state.subgraph);
  }
  if (state.target !== null) {
    return ancestorsOf(card.graph, state.target);
  }
  return null;
}

function sectorsOf(quarters: number[]): DonutSector[] {
  const sectors: DonutSector[] = [];
  let start = 0;
  for (const q of quarters) {
    sectors.push({ start, sweep: q });
    start += q;
  }
  return sectors;
}

function orderCards(cards: GraphCard[], state: ViewState): GraphCard[] {
  const ordered = [...cards];
  if (state.graphSort === "count") {
    ordered.sort((a, b) => b.count - a.count || a.index - b.index);
  } else {
    ordered.sort((a, b) => a.index - b.index);
  }
  return ordered;
}

export function buildGraphView(
  payload: GraphsPayload | null,
  state: ViewState,
  error: string | null,
): GraphViewModel {
  if (!payload) {
    return { cards: [], highlighted: [], converged: false, empty: false, error };
  }
  const maxCount = payload.graphs.reduce((m, c) => Math.max(m, c.count), 0);
  const highlighted: number[] = [];
  const cards = orderCards(payload.graphs, state).map((card) => {
    const hit = state.hover !== null && containsEdge(card.graph, state.hover);
    if (hit) {
      highlighted.push(card.index);
    }
    const kept = keptNodes(card, state);
    const glyphs = card.graph.nodes.map((node, i) => {
      const glyph = card.glyphs[i];
      if (!glyph) {
        throw new Error(`graph ${card.index} has no glyph for node ${node.id}`);
      }
      return {
        node: node.id,
        label: node.label,
        color: glyph.type_color,
        column: card.columns[String(node.id)] ?? 0,
        radius: GLYPH_RADIUS_MIN + glyph.frequency * GLYPH_RADIUS_SPAN,
        sectors: sectorsOf(glyph.quarter_dist),
        opacity: kept === null || kept.has(node.id) ? 1 : FADE_OPACITY,
      };
    });
    const edges = card.graph.edges.map((e) => ({
      src: e.src,
      dst: e.dst,
      width: EDGE_WIDTH_MIN + e.strength * EDGE_WIDTH_SPAN,
      opacity:
        kept === null || (kept.has(e.src) && kept.has(e.dst)) ? 1 : FADE_OPACITY,
    }));
    return {
      index: card.index,
      count: card.count,
      bar: maxCount > 0 ? card.count / maxCount : 0,
      highlighted: hit,
      glyphs,
      edges,
    };
  });
  return {
    cards,
    highlighted,
    converged: payload.converged,
    empty: payload.graphs.length === 0,
    error,
  };
}
