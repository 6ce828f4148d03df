export type GraphSort = "count" | "index";
export type PatternSort = "count" | "index";

export interface EdgeRef {
  src: number;
  dst: number;
}

/**
 * Selection state shared by the three coordinated views.
 *
 * Subgraph and target are mutually exclusive filter modes: a subgraph is an
 * explicit node set, a target filters to the ancestors of one event. Setting
 * either clears the other. The selected pattern is scoped to the selected
 * graph, so transitions that change the graph or the filter drop it.
 */
export interface ViewState {
  graph: number | null;
  subgraph: number[] | null;
  target: number | null;
  pattern: string | null;
  hover: EdgeRef | null;
  graphSort: GraphSort;
  patternSort: PatternSort;
}

export function initialState(): ViewState {
  return {
    graph: null,
    subgraph: null,
    target: null,
    pattern: null,
    hover: null,
    graphSort: "count",
    patternSort: "count",
  };
}

export function withGraph(state: ViewState, graph: number): ViewState {
  // pattern ids name a row of one graph's listing; they do not carry across
  return { ...state, graph, pattern: null };
}

export function withSubgraph(state: ViewState, nodes: number[]): ViewState {
  return { ...state, subgraph: [...nodes], target: null, pattern: null };
}

export function withTarget(state: ViewState, node: number): ViewState {
  return { ...state, target: node, subgraph: null, pattern: null };
}

export function withPattern(state: ViewState, pattern: string | null): ViewState {
  return { ...state, pattern };
}

export function withHover(state: ViewState, edge: EdgeRef | null): ViewState {
  return { ...state, hover: edge };
}

export function cleared(state: ViewState): ViewState {
  return { ...state, subgraph: null, target: null, pattern: null, hover: null };
}
