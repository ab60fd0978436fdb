/** Typed view of the analysis bundle plus a strict loader. */

export const SCHEMA_VERSION = "1";

export const SIGNALS = [
  "latency",
  "traffic",
  "error",
  "saturation",
  "availability",
  "information",
] as const;

export type Signal = (typeof SIGNALS)[number];

// everything except plain information makes a record problematic
export const PROBLEMATIC: ReadonlySet<string> = new Set(
  SIGNALS.filter((s) => s !== "information"),
);

export const FAULTS = [
  "memory",
  "network",
  "authentication",
  "io",
  "device",
  "application",
  "other",
] as const;

export interface Entity {
  type: string;
  start: number;
  end: number;
  text: string;
}

export interface SummaryRow {
  template_id: number;
  text: string;
  golden: Signal;
  faults: string[];
  entities: Entity[];
  frequency: number;
  first_seen: string | null;
  last_seen: string | null;
}

export interface WindowRecord {
  record_id: number;
  file: string;
  line_start: number;
  line_end: number;
  ts: string;
  template_id: number;
  golden: Signal;
  faults: string[];
  text: string;
}

export interface LogWindow {
  window_start: string;
  granularity: number;
  trigger_signals: string[];
  total_records: number;
  truncated: boolean;
  records: WindowRecord[];
}

export interface TemporalBucket {
  bucket_start: string;
  counts: Record<string, number>;
}

export interface CausalNode {
  template_id: number;
  text: string;
  golden: Signal;
}

export interface CausalEdge {
  from: number;
  to: number;
  lag: number;
  f: number;
  p: number;
}

export interface Palette {
  signals: Record<string, string>;
  entities: Record<string, string>;
}

export interface BundleMeta {
  run_id: string;
  schema_version: string;
  inputs: string[];
  config_digest: string;
  config: Record<string, Record<string, unknown>>;
  counters: {
    lines_processed: number;
    templates_discovered: number;
    classifier_calls: Record<string, number>;
    summary_rows: number;
    reduction: number;
  };
  palette: Palette;
}

export interface Bundle {
  meta: BundleMeta;
  summary: SummaryRow[];
  diagnosis: LogWindow[];
  temporal: TemporalBucket[];
  causal: {
    nodes: CausalNode[];
    edges: CausalEdge[];
    params: Record<string, unknown>;
  };
  warnings: string[];
}

export class BundleLoadError extends Error {
  constructor(
    message: string,
    readonly foundVersion: string | null = null,
  ) {
    super(message);
    this.name = "BundleLoadError";
  }
}

const SECTIONS = ["meta", "summary", "diagnosis", "temporal", "causal", "warnings"];

/** Parse and sanity-check a bundle; throws BundleLoadError with version details. */
export function parseBundle(raw: unknown): Bundle {
  let data: unknown = raw;
  if (typeof raw === "string") {
    try {
      data = JSON.parse(raw);
    } catch (exc) {
      throw new BundleLoadError(`not JSON: ${(exc as Error).message}`);
    }
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new BundleLoadError("bundle must be a JSON object");
  }
  const record = data as Record<string, unknown>;
  for (const key of SECTIONS) {
    if (!(key in record)) throw new BundleLoadError(`missing section: ${key}`);
  }
  const meta = record.meta as Record<string, unknown> | undefined;
  const version = meta && typeof meta.schema_version === "string" ? meta.schema_version : null;
  if (version !== SCHEMA_VERSION) {
    throw new BundleLoadError(
      `unsupported schema version ${version ?? "(absent)"}, viewer expects ${SCHEMA_VERSION}`,
      version,
    );
  }
  return record as unknown as Bundle;
}

export function signalColor(bundle: Bundle, signal: string): string {
  return bundle.meta.palette.signals[signal] ?? "#6b7280";
}

export function entityColor(bundle: Bundle, type: string): string {
  return bundle.meta.palette.entities[type] ?? "#7c3aed";
}
