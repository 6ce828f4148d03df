import type {
  AnalysisRecord,
  DatasetPayload,
  EdgeHits,
  ErrorBody,
  FlowPayload,
  GraphsPayload,
  PatternsPayload,
  SequencesPayload,
} from "./api";

export interface TransportResponse {
  status: number;
  body: unknown;
}

/** Minimal GET transport so tests can replace the network with canned payloads. */
export interface Transport {
  get(url: string): Promise<TransportResponse>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Fetch-backed transport for the browser build. */
export class HttpTransport implements Transport {
  constructor(private readonly base: string = "") {}

  async get(url: string): Promise<TransportResponse> {
    const resp = await fetch(this.base + url);
    return { status: resp.status, body: await resp.json() };
  }
}

function unwrap<T>(resp: TransportResponse): T {
  if (resp.status !== 200) {
    const body = resp.body as Partial<ErrorBody> | null;
    const detail =
      body && typeof body.error === "string"
        ? body.error
        : `request failed with status ${resp.status}`;
    throw new ApiError(resp.status, detail);
  }
  return resp.body as T;
}

export interface PatternFilter {
  subgraph?: number[];
  target?: number;
}

/** Typed wrapper over the service routes for one analysis. */
export class ApiClient {
  constructor(
    private readonly transport: Transport,
    readonly analysisId: string,
  ) {}

  private async getJson<T>(url: string): Promise<T> {
    return unwrap<T>(await this.transport.get(url));
  }

  async analysis(): Promise<AnalysisRecord> {
    return this.getJson(`/analyses/${this.analysisId}`);
  }

  async dataset(datasetId: string): Promise<DatasetPayload> {
    return this.getJson(`/datasets/${datasetId}`);
  }

  async graphs(): Promise<GraphsPayload> {
    const payload = await this.getJson<GraphsPayload>(
      `/analyses/${this.analysisId}/graphs`,
    );
    if (!Array.isArray(payload.graphs)) {
      throw new ApiError(0, "malformed graphs payload");
    }
    return payload;
  }

  /** The service takes the edge as one comma separated query parameter. */
  async graphsWithEdge(src: number, dst: number): Promise<EdgeHits> {
    return this.getJson(`/analyses/${this.analysisId}/graphs?edge=${src},${dst}`);
  }

  async patterns(group: number, filter?: PatternFilter): Promise<PatternsPayload> {
    const parts: string[] = [];
    if (filter?.subgraph !== undefined) {
      parts.push(`subgraph=${filter.subgraph.join(",")}`);
    }
    if (filter?.target !== undefined) {
      parts.push(`target=${filter.target}`);
    }
    const query = parts.length ? `?${parts.join("&")}` : "";
    const payload = await this.getJson<PatternsPayload>(
      `/analyses/${this.analysisId}/graphs/${group}/patterns${query}`,
    );
    if (!Array.isArray(payload.patterns)) {
      throw new ApiError(0, "malformed patterns payload");
    }
    return payload;
  }

  async flow(group: number, patternIndex: number): Promise<FlowPayload> {
    return this.getJson(
      `/analyses/${this.analysisId}/graphs/${group}/patterns/${patternIndex}/flow`,
    );
  }

  async sequences(patternId?: string): Promise<SequencesPayload> {
    const query = patternId === undefined ? "" : `?pattern=${patternId}`;
    const payload = await this.getJson<SequencesPayload>(
      `/analyses/${this.analysisId}/sequences${query}`,
    );
    if (!Array.isArray(payload.ids)) {
      throw new ApiError(0, "malformed sequences payload");
    }
    return payload;
  }
}
