import type { FlowPayload, Pattern, PatternsPayload } from "./api";
import type { ViewState } from "./state";

// Pixel scales applied to server coordinates; relative geometry is the server's.
const FLOW_X_SCALE = 80;
const FLOW_ROW_HEIGHT = 28;
const FLOW_BAR_UNIT = 10;

export interface FlowNodeView {
  event: number;
  label: string;
  x: number;
  y: number;
  /** Sankey bar length in pixels; hasBar is false when the event has no causes. */
  bar: number;
  hasBar: boolean;
}

export interface FlowLinkView {
  src: number;
  dst: number;
  slot: number;
}

export interface FlowView {
  nodes: FlowNodeView[];
  links: FlowLinkView[];
}

export interface PatternRow {
  id: string;
  index: number;
  events: number[];
  labels: string[];
  count: number;
  support: number;
  /** Statistics bar as a share of the largest count in the listing. */
  bar: number;
  selected: boolean;
  flow: FlowView | null;
  /** Non-null after a failed flow fetch; renders as an inline retry affordance. */
  flowError: string | null;
}

export interface SequentialViewModel {
  rows: PatternRow[];
  empty: boolean;
  error: string | null;
}

export function buildFlowView(payload: FlowPayload, catalog: string[]): FlowView {
  const nodes = payload.nodes.map((n) => ({
    event: n.event,
    label: catalog[n.event] ?? String(n.event),
    x: n.x * FLOW_X_SCALE,
    y: n.rank * FLOW_ROW_HEIGHT,
    bar: n.bar_length * FLOW_BAR_UNIT,
    hasBar: n.bar_length > 0,
  }));
  const links = payload.flows.map((f) => ({ src: f.src, dst: f.dst, slot: f.slot }));
  return { nodes, links };
}

function orderPatterns(patterns: Pattern[], state: ViewState): Pattern[] {
  const ordered = [...patterns];
  if (state.patternSort === "count") {
    ordered.sort((a, b) => b.count - a.count || a.index - b.index);
  } else {
    ordered.sort((a, b) => a.index - b.index);
  }
  return ordered;
}

export function buildSequentialView(
  patterns: PatternsPayload | null,
  flows: Record<string, FlowPayload>,
  flowErrors: Record<string, string>,
  catalog: string[],
  state: ViewState,
  error: string | null,
): SequentialViewModel {
  if (state.graph === null || !patterns) {
    return { rows: [], empty: true, error };
  }
  const maxCount = patterns.patterns.reduce((m, p) => Math.max(m, p.count), 0);
  const rows = orderPatterns(patterns.patterns, state).map((p) => {
    const flow = flows[p.id];
    return {
      id: p.id,
      index: p.index,
      events: [...p.events],
      labels: p.events.map((ev) => catalog[ev] ?? String(ev)),
      count: p.count,
      support: p.support,
      bar: maxCount > 0 ? p.count / maxCount : 0,
      selected: state.pattern === p.id,
      flow: flow ? buildFlowView(flow, catalog) : null,
      flowError: flowErrors[p.id] ?? null,
    };
  });
  return { rows, empty: rows.length === 0, error };
}
