import type {
  AnalysisRecord,
  DatasetPayload,
  FlowPayload,
  GraphsPayload,
  Pattern,
  PatternsPayload,
  SequencesPayload,
} from "./api";
import { ApiClient, ApiError } from "./client";
import type { PatternFilter, Transport } from "./client";
import { buildDataView } from "./data-view";
import type { DataViewModel } from "./data-view";
import { buildGraphView, containsEdge } from "./graph-view";
import type { GraphViewModel } from "./graph-view";
import { buildSequentialView } from "./sequential-view";
import type { SequentialViewModel } from "./sequential-view";
import {
  cleared,
  initialState,
  withGraph,
  withHover,
  withPattern,
  withSubgraph,
  withTarget,
} from "./state";
import type { EdgeRef, GraphSort, PatternSort, ViewState } from "./state";

interface LoadedData {
  record: AnalysisRecord | null;
  dataset: DatasetPayload | null;
  graphs: GraphsPayload | null;
  patterns: PatternsPayload | null;
  sequences: SequencesPayload | null;
  flows: Record<string, FlowPayload>;
  flowErrors: Record<string, string>;
}

function emptyData(): LoadedData {
  return {
    record: null,
    dataset: null,
    graphs: null,
    patterns: null,
    sequences: null,
    flows: {},
    flowErrors: {},
  };
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

/**
 * Single owner of the view state and every server payload behind the three
 * coordinated views. All mutations funnel through here, so after any await
 * the views render one consistent ViewState.
 *
 * Fetches are keyed by a version counter: every selection change bumps it,
 * and a response is applied only if no newer mutation happened while it was
 * in flight. Failed fetches keep the previous payloads and surface the error,
 * so a render never mixes halves of two selections.
 */
export class Explorer {
  readonly client: ApiClient;
  state: ViewState = initialState();
  error: string | null = null;
  /** Set when the service no longer knows the analysis; prompt a reload. */
  staleAnalysis = false;

  private data: LoadedData = emptyData();
  private version = 0;

  constructor(transport: Transport, analysisId: string) {
    this.client = new ApiClient(transport, analysisId);
  }

  async load(): Promise<void> {
    this.state = initialState();
    this.data = emptyData();
    this.staleAnalysis = false;
    const v = this.bump();
    await this.fetchInto(v, async () => {
      const record = await this.client.analysis();
      if (record.status !== "done") {
        throw new ApiError(409, `analysis is ${record.status}`);
      }
      const [dataset, graphs, sequences] = await Promise.all([
        this.client.dataset(record.dataset_id),
        this.client.graphs(),
        this.client.sequences(),
      ]);
      return { record, dataset, graphs, sequences };
    });
  }

  hover(edge: EdgeRef | null): void {
    this.state = withHover(this.state, edge);
  }

  /** Indices of loaded graphs containing the edge, ascending. */
  graphsContaining(edge: EdgeRef): number[] {
    if (!this.data.graphs) {
      return [];
    }
    return this.data.graphs.graphs
      .filter((card) => containsEdge(card.graph, edge))
      .map((card) => card.index)
      .sort((a, b) => a - b);
  }

  async selectGraph(graph: number): Promise<void> {
    if (!this.data.graphs?.graphs.some((card) => card.index === graph)) {
      return;
    }
    this.state = withGraph(this.state, graph);
    await this.refresh();
  }

  async selectSubgraph(nodes: number[]): Promise<void> {
    this.state = withSubgraph(this.state, nodes);
    await this.refresh();
  }

  async selectTarget(node: number): Promise<void> {
    this.state = withTarget(this.state, node);
    await this.refresh();
  }

  async selectPattern(pattern: string | null): Promise<void> {
    if (pattern !== null && !this.findPattern(pattern)) {
      return;
    }
    this.state = withPattern(this.state, pattern);
    const v = this.bump();
    await this.fetchInto(v, async () => ({
      sequences: await this.client.sequences(pattern ?? undefined),
    }));
  }

  async clearSelection(): Promise<void> {
    this.state = cleared(this.state);
    await this.refresh();
  }

  setGraphSort(sort: GraphSort): void {
    this.state = { ...this.state, graphSort: sort };
  }

  setPatternSort(sort: PatternSort): void {
    this.state = { ...this.state, patternSort: sort };
  }

  /** Fetch the flow layout for one pattern row; errors stay on that row. */
  async expandPattern(patternId: string): Promise<void> {
    const pattern = this.findPattern(patternId);
    const graph = this.state.graph;
    if (!pattern || graph === null) {
      return;
    }
    const v = this.version;
    try {
      const flow = await this.client.flow(graph, pattern.index);
      if (v !== this.version) {
        return;
      }
      const flowErrors = { ...this.data.flowErrors };
      delete flowErrors[patternId];
      this.data = {
        ...this.data,
        flows: { ...this.data.flows, [patternId]: flow },
        flowErrors,
      };
    } catch (err) {
      if (v !== this.version) {
        return;
      }
      this.data = {
        ...this.data,
        flowErrors: { ...this.data.flowErrors, [patternId]: describe(err) },
      };
    }
  }

  async retryFlow(patternId: string): Promise<void> {
    await this.expandPattern(patternId);
  }

  currentPattern(): Pattern | null {
    return this.state.pattern === null ? null : this.findPattern(this.state.pattern);
  }

  graphView(): GraphViewModel {
    return buildGraphView(this.data.graphs, this.state, this.error);
  }

  sequentialView(): SequentialViewModel {
    return buildSequentialView(
      this.data.patterns,
      this.data.flows,
      this.data.flowErrors,
      this.data.dataset?.catalog ?? [],
      this.state,
      this.error,
    );
  }

  dataView(page: number = 0): DataViewModel {
    return buildDataView(
      this.data.dataset,
      this.data.sequences,
      this.currentPattern(),
      this.error,
      page,
    );
  }

  private findPattern(patternId: string): Pattern | null {
    return this.data.patterns?.patterns.find((p) => p.id === patternId) ?? null;
  }

  private filter(): PatternFilter | undefined {
    if (this.state.subgraph !== null) {
      return { subgraph: this.state.subgraph };
    }
    if (this.state.target !== null) {
      return { target: this.state.target };
    }
    return undefined;
  }

  /** Re-query patterns and sequences for the current selection. */
  private async refresh(): Promise<void> {
    const graph = this.state.graph;
    const filter = this.filter();
    const pattern = this.state.pattern ?? undefined;
    const v = this.bump();
    await this.fetchInto(v, async () => {
      const [patterns, sequences] = await Promise.all([
        graph === null
          ? Promise.resolve<PatternsPayload | null>(null)
          : this.client.patterns(graph, filter),
        this.client.sequences(pattern),
      ]);
      // expanded flows belong to the previous listing; drop them with it
      return { patterns, sequences, flows: {}, flowErrors: {} };
    });
  }

  private bump(): number {
    this.version += 1;
    return this.version;
  }

  private async fetchInto(
    v: number,
    work: () => Promise<Partial<LoadedData>>,
  ): Promise<void> {
    try {
      const patch = await work();
      if (v !== this.version) {
        return;
      }
      this.data = { ...this.data, ...patch };
      this.error = null;
    } catch (err) {
      if (v !== this.version) {
        return;
      }
      if (
        err instanceof ApiError &&
        err.status === 404 &&
        err.message.startsWith("unknown analysis")
      ) {
        this.staleAnalysis = true;
      }
      this.error = describe(err);
    }
  }
}
