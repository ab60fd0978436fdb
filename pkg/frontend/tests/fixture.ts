/** Deterministic case-study-shaped bundle for component tests. */

import type {
  Bundle,
  CausalEdge,
  CausalNode,
  LogWindow,
  SummaryRow,
  TemporalBucket,
} from "../src/bundle.js";

const PALETTE = {
  signals: {
    latency: "#f59e0b",
    traffic: "#3b82f6",
    error: "#ef4444",
    saturation: "#8b5cf6",
    availability: "#f97316",
    information: "#6b7280",
  },
  entities: {
    DateTime: "#0ea5e9",
    Level: "#e11d48",
    ProcessID: "#10b981",
    ErrorCode: "#dc2626",
    URL: "#2563eb",
    Cause: "#b91c1c",
    Symptom: "#c2410c",
    NVPair: "#7c3aed",
    FileOrDir: "#047857",
  },
};

// 74 templates: the first three mirror the timeout -> suspend -> broken chain
const SIGNAL_PLAN: [string, number][] = [
  ["error", 18],
  ["latency", 9],
  ["traffic", 5],
  ["saturation", 7],
  ["availability", 6],
  ["information", 29],
];

function instant(day: number, hour = 0, minute = 0, second = 0): string {
  const pad = (n: number, w = 2) => String(n).padStart(w, "0");
  return `2024-07-${pad(day)}T${pad(hour)}:${pad(minute)}:${pad(second)}.000Z`;
}

export function caseStudyBundle(): Bundle {
  const rows: SummaryRow[] = [];
  let templateId = 0;
  for (const [signal, count] of SIGNAL_PLAN) {
    for (let i = 0; i < count; i += 1) {
      const id = templateId;
      templateId += 1;
      const entities =
        signal === "error" && i < 12
          ? [{ type: "ErrorCode", start: 0, end: 5, text: `E${String(id).padStart(4, "0")}` }]
          : [];
      rows.push({
        template_id: id,
        text:
          signal === "error" && i < 12
            ? `E${String(id).padStart(4, "0")} ${signal} template ${id} raised`
            : `${signal} template ${id} event body`,
        golden: signal as SummaryRow["golden"],
        faults: signal === "error" ? ["application"] : ["other"],
        entities,
        frequency: 3 + id,
        first_seen: instant(1),
        last_seen: instant(10),
      });
    }
  }

  // the causal chain uses dedicated templates with recognizable bodies
  const chainNodes: CausalNode[] = [
    { template_id: 29, text: "client request timeout after 30s", golden: "latency" },
    { template_id: 16, text: "device controller suspend entered", golden: "error" },
    { template_id: 10, text: "pipeline broken: downstream unreachable", golden: "error" },
  ];
  for (const node of chainNodes) {
    const row = rows.find((r) => r.template_id === node.template_id)!;
    row.text = node.text;
    row.golden = node.golden;
    row.entities = [];
    if (node.template_id === 16) {
      // entity text mentions the session; the record text will not
      row.text = "device controller suspend entered session_id=99";
      row.entities = [{ type: "NVPair", start: 34, end: 47, text: "session_id=99" }];
    }
  }
  const edges: CausalEdge[] = [
    { from: 29, to: 16, lag: 1, f: 24.1, p: 0.0004 },
    { from: 16, to: 10, lag: 2, f: 18.7, p: 0.0011 },
  ];

  // four windows; two mention sessions (one by text, one via an entity)
  const windowOf = (day: number, records: LogWindow["records"]): LogWindow => ({
    window_start: instant(day, 9, 0, 0),
    granularity: 60,
    trigger_signals: ["error"],
    total_records: records.length,
    truncated: false,
    records,
  });
  const record = (
    id: number,
    day: number,
    template: number,
    golden: string,
    text: string,
  ): LogWindow["records"][number] => ({
    record_id: id,
    file: "node7/app.log",
    line_start: id * 3 + 1,
    line_end: id * 3 + 1,
    ts: instant(day, 9, 0, id % 50),
    template_id: template,
    golden: golden as LogWindow["records"][number]["golden"],
    faults: golden === "error" ? ["application"] : ["other"],
    text,
  });
  const diagnosis: LogWindow[] = [
    windowOf(2, [
      record(1, 2, 0, "error", "Session 4f2a terminated unexpectedly"),
      record(2, 2, 18, "latency", "request slow on shard 4"),
    ]),
    windowOf(5, [
      record(3, 5, 16, "error", "device controller suspend entered"),
      record(4, 5, 29, "latency", "client request timeout after 30s"),
    ]),
    windowOf(6, [record(5, 6, 1, "error", "E0001 error template 1 raised")]),
    windowOf(8, [record(6, 8, 10, "error", "pipeline broken: downstream unreachable")]),
  ];

  // daily buckets with a sharp error escalation after July 4th
  const temporal: TemporalBucket[] = [];
  for (let day = 1; day <= 10; day += 1) {
    temporal.push({
      bucket_start: instant(day),
      counts: {
        information: 40,
        error: day <= 4 ? 2 : 2 + (day - 4) * 15,
        latency: day <= 4 ? 1 : 6,
      },
    });
  }

  return {
    meta: {
      run_id: "a3c1f2e4b5d60718",
      schema_version: "1",
      inputs: ["fixture/dump"],
      config_digest: "0".repeat(16),
      config: {},
      counters: {
        lines_processed: rows.reduce((acc, r) => acc + r.frequency, 0),
        templates_discovered: rows.length,
        classifier_calls: { gsc: rows.length, fcp: rows.length, ner: rows.length },
        summary_rows: rows.length,
        reduction: 0.97,
      },
      palette: PALETTE,
    },
    summary: [...rows].sort(
      (a, b) => a.frequency - b.frequency || a.template_id - b.template_id,
    ),
    diagnosis,
    temporal,
    causal: {
      nodes: chainNodes,
      edges,
      params: { interval: 60, max_lag: 3, alpha: 0.05, difference: false },
    },
    warnings: [],
  };
}

/** Minimal variant with one temporal bucket and no causal edges. */
export function tinyBundle(): Bundle {
  const bundle = caseStudyBundle();
  return {
    ...bundle,
    temporal: [bundle.temporal[0]!],
    causal: { nodes: [bundle.causal.nodes[0]!], edges: [], params: bundle.causal.params },
  };
}
