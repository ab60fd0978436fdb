/**
 * Headless end-to-end: a real job service (the Python package over HTTP),
 * a real scheduled analysis job, and the real viewer DOM on top of it.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync, mkdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import { JobsvcClient } from "../src/api.js";
import type { Bundle } from "../src/bundle.js";

const CORPUS = [
  "2024-03-01 10:00:00 INFO Session 81f2 opened for user 7",
  "2024-03-01 10:00:02 INFO heartbeat ok from node 3",
  "2024-03-01 10:00:05 ERROR Session 81f2 terminated unexpectedly",
  "2024-03-01 10:00:09 ERROR disk write failed on /dev/sda1",
  "2024-03-01 10:01:10 WARN request timed out upstream after 30s",
  "2024-03-01 10:01:30 INFO heartbeat ok from node 4",
  "2024-03-01 10:02:00 ERROR connection refused by upstream",
].join("\n") + "\n";

let proc: ChildProcess;
let workDir: string;
let baseUrl: string;
let jobId: string;
let client: JobsvcClient;

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "viewer-e2e-"));
  const corpusDir = join(workDir, "dump");
  mkdirSync(corpusDir);
  writeFileSync(join(corpusDir, "app.log"), CORPUS);

  proc = spawn("python3", [join(__dirname, "e2e_server.py"), join(workDir, "svc")], {
    stdio: ["ignore", "pipe", "inherit"],
  });
  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("service never printed its port")), 20000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      const match = /PORT (\d+)/.exec(chunk.toString());
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    proc.on("exit", (code) => reject(new Error(`service exited early: ${code}`)));
  });
  baseUrl = `http://127.0.0.1:${port}`;
  client = new JobsvcClient(baseUrl);

  // schedule a real analysis over the corpus and wait for it to finish
  const scheduled = await fetch(`${baseUrl}/schedule`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ path: corpusDir }),
  });
  expect(scheduled.status).toBe(200);
  jobId = ((await scheduled.json()) as { job_id: string }).job_id;
  for (let i = 0; i < 200; i += 1) {
    const status = await client.query(jobId);
    if (status.status === "completed") return;
    if (status.status === "failed") throw new Error(`job failed: ${status.error}`);
    await sleep(50);
  }
  throw new Error("job never completed");
}, 30000);

afterAll(() => {
  proc?.kill("SIGINT");
  rmSync(workDir, { recursive: true, force: true });
});

describe("viewer against a live job service", () => {
  it("loads, filters, searches, and round-trips feedback", async () => {
    document.body.innerHTML = '<div id="app"></div>';
    localStorage.clear();
    const app = new App(document.getElementById("app")!, {
      baseUrl,
      search: `?job_id=${jobId}`,
      pushState: () => {},
    });
    await app.start();

    // bundle arrived from the service and rendered
    const bundle = app.bundle as Bundle;
    expect(bundle.meta.counters.lines_processed).toBe(7);
    expect(document.querySelector(".run-banner")!.textContent).toContain("7 lines");
    const allRows = document.querySelectorAll(".pane-summary tbody tr");
    expect(allRows.length).toBe(bundle.summary.length);

    // golden=error filter shows exactly the error templates
    document.querySelector<HTMLButtonElement>('.pane-summary button[data-chip="error"]')!.click();
    const errorRows = document.querySelectorAll(".pane-summary tbody tr");
    expect(errorRows.length).toBe(bundle.summary.filter((r) => r.golden === "error").length);
    expect(errorRows.length).toBeGreaterThan(0);
    document.querySelector<HTMLButtonElement>('.pane-summary button[data-chip="error"]')!.click();

    // causal hover on any node reveals its representative line
    const node = document.querySelector<SVGGElement>(".pane-causal .causal-node");
    if (node) {
      node.dispatchEvent(new Event("mouseenter"));
      const tooltip = document.querySelector<HTMLElement>(".causal-tooltip")!;
      expect(tooltip.hasAttribute("hidden")).toBe(false);
      expect(tooltip.textContent!.length).toBeGreaterThan(0);
      node.dispatchEvent(new Event("mouseleave"));
    } else {
      expect(document.querySelector(".pane-causal .empty-state")).not.toBeNull();
    }

    // diagnosis search narrows to the window containing the Session records
    const windowsBefore = Number(
      /of (\d+)/.exec(document.querySelector(".page-label")!.textContent!)![1],
    );
    expect(windowsBefore).toBeGreaterThan(1);
    const search = document.querySelector<HTMLInputElement>(".diagnosis-search")!;
    search.value = "Session";
    search.dispatchEvent(new Event("input"));
    expect(document.querySelector(".page-label")!.textContent).toContain("window 1 of 1");
    expect(document.querySelector(".pane-diagnosis .window-records")!.textContent).toContain(
      "Session 81f2 terminated unexpectedly",
    );

    // feedback round-trips: POST lands in the service's aggregate
    document.querySelector<HTMLInputElement>('input[name=q1][value="yes"]')!.checked = true;
    document.querySelector<HTMLInputElement>('input[name=q2][value="6-15m"]')!.checked = true;
    document.querySelector<HTMLTextAreaElement>(".q3")!.value = "found the failing disk fast";
    document
      .querySelector("form")!
      .dispatchEvent(new Event("submit", { cancelable: true }));
    await sleep(200);
    expect(document.querySelector(".feedback-status")!.textContent).toMatch(/thank you/i);

    const aggregate = await client.feedbackAggregate();
    expect(aggregate.count).toBe(1);
    expect(aggregate.useful_rate).toBe(1);
    expect(aggregate.q2_histogram["6-15m"]).toBe(1);
  }, 30000);
});
