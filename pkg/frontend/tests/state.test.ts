import { describe, expect, it } from "vitest";

import { parseBundle, BundleLoadError } from "../src/bundle.js";
import {
  emptyState,
  filterSummary,
  filterWindows,
  stateFromQuery,
  stateToQuery,
} from "../src/state.js";
import { caseStudyBundle } from "./fixture.js";

describe("viewer state", () => {
  it("round-trips through the URL query string", () => {
    const state = emptyState();
    state.jobId = "abc123";
    state.signals.add("error").add("latency");
    state.faults.add("network");
    state.entityTypes.add("ErrorCode");
    state.query = "Session 4f2a";
    state.range = { from: "2024-07-04T00:00:00.000Z", to: null };
    state.selectedNode = 16;
    state.page = 3;

    const back = stateFromQuery(stateToQuery(state));
    expect(back).toEqual(state);
  });

  it("parses an empty query to the empty state", () => {
    expect(stateFromQuery("")).toEqual(emptyState());
  });

  it("filters only narrow, never grow, the row set", () => {
    const bundle = caseStudyBundle();
    const all = filterSummary(bundle, emptyState());
    expect(all).toHaveLength(bundle.summary.length);

    const state = emptyState();
    state.signals.add("error");
    const narrowed = filterSummary(bundle, state);
    expect(narrowed.length).toBeLessThan(all.length);
    const allIds = new Set(all.map((r) => r.template_id));
    expect(narrowed.every((r) => allIds.has(r.template_id))).toBe(true);

    state.faults.add("application");
    const narrower = filterSummary(bundle, state);
    expect(narrower.length).toBeLessThanOrEqual(narrowed.length);
  });

  it("filter composition is commutative", () => {
    const bundle = caseStudyBundle();
    const ab = emptyState();
    ab.signals.add("error");
    ab.entityTypes.add("ErrorCode");

    const ba = emptyState();
    ba.entityTypes.add("ErrorCode");
    ba.signals.add("error");

    const idsAb = filterSummary(bundle, ab).map((r) => r.template_id);
    const idsBa = filterSummary(bundle, ba).map((r) => r.template_id);
    expect(idsAb).toEqual(idsBa);
  });

  it("range filter hides diagnosis windows outside the brush", () => {
    const bundle = caseStudyBundle();
    const state = emptyState();
    expect(filterWindows(bundle, state)).toHaveLength(4);
    state.range = { from: "2024-07-04T00:00:00.000Z", to: "2024-07-07T00:00:00.000Z" };
    const visible = filterWindows(bundle, state);
    expect(visible.map((w) => w.window_start.slice(8, 10))).toEqual(["05", "06"]);
  });

  it("rejects a bundle with the wrong schema version, reporting it", () => {
    const bundle = caseStudyBundle() as unknown as { meta: { schema_version: string } };
    bundle.meta.schema_version = "9";
    let caught: BundleLoadError | null = null;
    try {
      parseBundle(JSON.stringify(bundle));
    } catch (exc) {
      caught = exc as BundleLoadError;
    }
    expect(caught).toBeInstanceOf(BundleLoadError);
    expect(caught!.foundVersion).toBe("9");
    expect(caught!.message).toContain("9");
  });

  it("rejects a bundle missing a section", () => {
    const bundle = caseStudyBundle() as unknown as Record<string, unknown>;
    delete bundle.temporal;
    expect(() => parseBundle(JSON.stringify(bundle))).toThrow(/missing section: temporal/);
  });
});
