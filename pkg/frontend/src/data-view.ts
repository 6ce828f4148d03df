import type { DatasetPayload, Pattern, SequencesPayload } from "./api";

/** Listings beyond this many rows render page by page. */
export const DATA_PAGE_SIZE = 500;

export interface EventMark {
  timestamp: number;
  type: number;
  /** Tooltip content: type label plus timestamp. */
  label: string;
  color: number;
  /** Position along the row's time axis in [0, 1]. */
  x: number;
  matched: boolean;
}

export interface SequenceRow {
  id: string;
  events: EventMark[];
}

export interface DataViewModel {
  /** Rows of the current page; equals the full listing when it fits one page. */
  rows: SequenceRow[];
  /** Size of the whole listing, before pagination. */
  total: number;
  page: number;
  pageCount: number;
  error: string | null;
}

/**
 * Greedy leftmost embedding of the pattern in the event type stream. Returns
 * the matched event positions, or null when the pattern does not embed.
 */
export function matchPositions(types: number[], pattern: number[]): number[] | null {
  const positions: number[] = [];
  let next = 0;
  for (let i = 0; i < types.length && next < pattern.length; i++) {
    if (types[i] === pattern[next]) {
      positions.push(i);
      next += 1;
    }
  }
  return next === pattern.length ? positions : null;
}

export function buildDataView(
  dataset: DatasetPayload | null,
  sequences: SequencesPayload | null,
  selected: Pattern | null,
  error: string | null,
  page: number = 0,
  pageSize: number = DATA_PAGE_SIZE,
): DataViewModel {
  if (!dataset || !sequences) {
    return { rows: [], total: 0, page: 0, pageCount: 0, error };
  }
  const byId = new Map(dataset.sequences.map((seq) => [seq.id, seq]));
  const total = sequences.ids.length;
  const pageCount = Math.ceil(total / pageSize);
  const current = Math.min(Math.max(page, 0), Math.max(pageCount - 1, 0));
  const rows: SequenceRow[] = [];
  for (const id of sequences.ids.slice(current * pageSize, (current + 1) * pageSize)) {
    const seq = byId.get(id);
    if (!seq) {
      continue;
    }
    const times = seq.events.map((ev) => ev.timestamp);
    const t0 = Math.min(...times);
    const span = Math.max(...times) - t0;
    const matched = new Set(
      selected ? (matchPositions(seq.events.map((ev) => ev.type), selected.events) ?? []) : [],
    );
    rows.push({
      id,
      events: seq.events.map((ev, i) => ({
        timestamp: ev.timestamp,
        type: ev.type,
        label: `${dataset.catalog[ev.type] ?? ev.type} @ ${ev.timestamp}`,
        color: dataset.colors ? (dataset.colors[ev.type] ?? ev.type) : ev.type,
        x: span > 0 ? (ev.timestamp - t0) / span : 0,
        matched: matched.has(i),
      })),
    });
  }
  return { rows, total, page: current, pageCount, error };
}
