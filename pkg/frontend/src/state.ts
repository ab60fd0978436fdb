/** Viewer state: filters, range, selection, paging. Serializable to the URL. */

import type { Bundle, LogWindow, SummaryRow, WindowRecord } from "./bundle.js";

export interface TimeRange {
  from: string | null; // RFC-3339 instant or null for open end
  to: string | null;
}

export interface ViewerState {
  jobId: string | null;
  signals: Set<string>;
  faults: Set<string>;
  entityTypes: Set<string>;
  query: string;
  range: TimeRange;
  selectedNode: number | null;
  page: number; // diagnosis window cursor, 0-based
}

export function emptyState(): ViewerState {
  return {
    jobId: null,
    signals: new Set(),
    faults: new Set(),
    entityTypes: new Set(),
    query: "",
    range: { from: null, to: null },
    selectedNode: null,
    page: 0,
  };
}

// URL keys kept short so shared links stay readable
export function stateToQuery(state: ViewerState): string {
  const params = new URLSearchParams();
  if (state.jobId) params.set("job_id", state.jobId);
  if (state.signals.size) params.set("signals", [...state.signals].sort().join(","));
  if (state.faults.size) params.set("faults", [...state.faults].sort().join(","));
  if (state.entityTypes.size) params.set("etypes", [...state.entityTypes].sort().join(","));
  if (state.query) params.set("q", state.query);
  if (state.range.from) params.set("from", state.range.from);
  if (state.range.to) params.set("to", state.range.to);
  if (state.selectedNode !== null) params.set("node", String(state.selectedNode));
  if (state.page) params.set("page", String(state.page));
  return params.toString();
}

export function stateFromQuery(search: string): ViewerState {
  const params = new URLSearchParams(search);
  const split = (key: string) =>
    new Set((params.get(key) ?? "").split(",").filter((s) => s.length > 0));
  const node = params.get("node");
  const page = Number(params.get("page") ?? "0");
  return {
    jobId: params.get("job_id"),
    signals: split("signals"),
    faults: split("faults"),
    entityTypes: split("etypes"),
    query: params.get("q") ?? "",
    range: { from: params.get("from"), to: params.get("to") },
    selectedNode: node === null ? null : Number(node),
    page: Number.isFinite(page) && page > 0 ? Math.floor(page) : 0,
  };
}

/** Row passes every active filter; inactive filters pass everything. */
export function rowMatches(row: SummaryRow, state: ViewerState): boolean {
  if (state.signals.size && !state.signals.has(row.golden)) return false;
  if (state.faults.size && !row.faults.some((f) => state.faults.has(f))) return false;
  if (state.entityTypes.size && !row.entities.some((e) => state.entityTypes.has(e.type))) {
    return false;
  }
  if (state.selectedNode !== null && row.template_id !== state.selectedNode) return false;
  if (state.query && !row.text.toLowerCase().includes(state.query.toLowerCase())) return false;
  return true;
}

export function filterSummary(bundle: Bundle, state: ViewerState): SummaryRow[] {
  return bundle.summary.filter((row) => rowMatches(row, state));
}

export type MatchKind = "text" | "entity" | null;

/** Search hits record text or named-entity text; callers show which one. */
export function recordMatch(record: WindowRecord, row: SummaryRow | undefined, query: string): MatchKind {
  if (!query) return "text";
  const needle = query.toLowerCase();
  if (record.text.toLowerCase().includes(needle)) return "text";
  if (row && row.entities.some((e) => e.text.toLowerCase().includes(needle))) return "entity";
  return null;
}

function inRange(ts: string, range: TimeRange): boolean {
  if (range.from && ts < range.from) return false;
  if (range.to && ts > range.to) return false;
  return true;
}

export function windowVisible(window: LogWindow, bundle: Bundle, state: ViewerState): boolean {
  if (!inRange(window.window_start, state.range)) return false;
  if (state.selectedNode !== null) {
    if (!window.records.some((r) => r.template_id === state.selectedNode)) return false;
  }
  if (state.query) {
    const byId = summaryIndex(bundle);
    if (!window.records.some((r) => recordMatch(r, byId.get(r.template_id), state.query))) {
      return false;
    }
  }
  return true;
}

export function filterWindows(bundle: Bundle, state: ViewerState): LogWindow[] {
  return bundle.diagnosis.filter((w) => windowVisible(w, bundle, state));
}

const indexCache = new WeakMap<Bundle, Map<number, SummaryRow>>();

export function summaryIndex(bundle: Bundle): Map<number, SummaryRow> {
  let index = indexCache.get(bundle);
  if (!index) {
    index = new Map(bundle.summary.map((row) => [row.template_id, row]));
    indexCache.set(bundle, index);
  }
  return index;
}
