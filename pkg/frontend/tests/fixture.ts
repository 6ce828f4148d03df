import { readFileSync } from "node:fs";
import { expect } from "vitest";
import type { Transport, TransportResponse } from "../src/client";
import { Explorer } from "../src/explorer";

export interface FixtureEntry {
  url: string;
  status: number;
  body: unknown;
}

export interface FixtureFile {
  analysis_id: string;
  dataset_id: string;
  responses: FixtureEntry[];
}

// Canned responses recorded from a live service run by the backend test suite.
export const fixture: FixtureFile = JSON.parse(
  readFileSync(new URL("../fixtures/api_fixture.json", import.meta.url), "utf8"),
) as FixtureFile;

export function fixtureBody<T>(url: string): T {
  const entry = fixture.responses.find((r) => r.url === url);
  if (!entry) {
    throw new Error(`fixture has no entry for ${url}`);
  }
  return structuredClone(entry.body) as T;
}

export function fixtureUrls(match: (url: string) => boolean): string[] {
  return fixture.responses.map((r) => r.url).filter(match);
}

export const urls = {
  analysis: `/analyses/${fixture.analysis_id}`,
  dataset: `/datasets/${fixture.dataset_id}`,
  graphs: `/analyses/${fixture.analysis_id}/graphs`,
  edge: (src: number, dst: number) =>
    `/analyses/${fixture.analysis_id}/graphs?edge=${src},${dst}`,
  patterns: (group: number, query: string = "") =>
    `/analyses/${fixture.analysis_id}/graphs/${group}/patterns${query}`,
  flow: (group: number, index: number) =>
    `/analyses/${fixture.analysis_id}/graphs/${group}/patterns/${index}/flow`,
  sequences: (query: string = "") =>
    `/analyses/${fixture.analysis_id}/sequences${query}`,
};

export class FixtureTransport implements Transport {
  readonly requested: string[] = [];
  private readonly byUrl = new Map<string, { status: number; body: unknown }>();

  constructor(file: FixtureFile = fixture) {
    for (const entry of file.responses) {
      this.byUrl.set(entry.url, { status: entry.status, body: entry.body });
    }
  }

  async get(url: string): Promise<TransportResponse> {
    this.requested.push(url);
    const hit = this.byUrl.get(url);
    if (!hit) {
      throw new Error(`no canned response for ${url}`);
    }
    return { status: hit.status, body: structuredClone(hit.body) };
  }
}

/** Holds responses for matching urls until released; for staleness tests. */
export class GatedTransport implements Transport {
  private waiting: { url: string; release: () => void }[] = [];

  constructor(
    private readonly inner: Transport,
    private readonly held: (url: string) => boolean,
  ) {}

  async get(url: string): Promise<TransportResponse> {
    if (this.held(url)) {
      await new Promise<void>((resolve) => {
        this.waiting.push({ url, release: resolve });
      });
    }
    return this.inner.get(url);
  }

  pendingUrls(): string[] {
    return this.waiting.map((w) => w.url);
  }

  releaseAll(): void {
    const pending = this.waiting;
    this.waiting = [];
    for (const w of pending) {
      w.release();
    }
  }
}

/** Fails matching urls a fixed number of times, then delegates. */
export class FlakyTransport implements Transport {
  constructor(
    private readonly inner: Transport,
    private readonly match: (url: string) => boolean,
    private failures: number,
  ) {}

  async get(url: string): Promise<TransportResponse> {
    if (this.failures > 0 && this.match(url)) {
      this.failures -= 1;
      return { status: 500, body: { error: "temporary failure" } };
    }
    return this.inner.get(url);
  }
}

export async function loadedExplorer(transport?: Transport): Promise<Explorer> {
  const explorer = new Explorer(transport ?? new FixtureTransport(), fixture.analysis_id);
  await explorer.load();
  expect(explorer.error).toBeNull();
  return explorer;
}

export async function tick(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}
