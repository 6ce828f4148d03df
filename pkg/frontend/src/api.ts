/** Response body shapes served by the analysis service. */

export interface GraphNode {
  id: number;
  label: string;
}

export interface GraphEdge {
  src: number;
  dst: number;
  strength: number;
}

export interface CausalGraph {
  nodes: GraphNode[];
  edges: GraphEdge[];
}

/**
 * Per-event donut glyph statistics. quarter_dist fractions sum to 1, or are
 * all zero for a type that never occurs in the group.
 */
export interface NodeGlyph {
  frequency: number;
  quarter_dist: number[];
  type_color: number;
}

export interface GraphCard {
  index: number;
  graph: CausalGraph;
  count: number;
  /** Node id (as string key) to layout column. */
  columns: Record<string, number>;
  /** Aligned with graph.nodes: glyphs[i] describes nodes[i]. */
  glyphs: NodeGlyph[];
}

export interface GraphsPayload {
  graphs: GraphCard[];
  converged: boolean;
  iterations: number;
}

/** Body of a graphs?edge=src,dst query: indices of graphs containing the edge. */
export interface EdgeHits {
  graphs: number[];
}

export interface Pattern {
  id: string;
  index: number;
  events: number[];
  count: number;
  support: number;
}

export interface PatternsPayload {
  patterns: Pattern[];
}

export interface FlowNode {
  event: number;
  rank: number;
  x: number;
  /** Number of upstream causes; zero means no bar is drawn. */
  bar_length: number;
}

export interface FlowLink {
  src: number;
  dst: number;
  slot: number;
}

export interface FlowPayload {
  nodes: FlowNode[];
  flows: FlowLink[];
}

export interface SequencesPayload {
  ids: string[];
}

export interface SequenceEvent {
  timestamp: number;
  type: number;
  attrs?: Record<string, number>;
}

export interface DatasetSequence {
  id: string;
  events: SequenceEvent[];
}

export interface DatasetPayload {
  catalog: string[];
  colors: number[] | null;
  provenance: Record<string, unknown> | null;
  sequences: DatasetSequence[];
}

export interface AnalysisTiming {
  queued_at: number | null;
  started_at: number | null;
  finished_at: number | null;
}

export interface AnalysisRecord {
  id: string;
  dataset_id: string;
  status: string;
  config: Record<string, unknown>;
  config_hash: string;
  timing: AnalysisTiming;
  error: string | null;
  result: unknown;
}

/** All non-200 responses carry this body. */
export interface ErrorBody {
  error: string;
}
