/** Temporal trend: one overlaid series per golden signal, with range brush. */

import { SIGNALS, signalColor, type Bundle } from "./bundle.js";
import { clear, el, svg } from "./dom.js";
import type { StateChange } from "./summary.js";
import type { ViewerState } from "./state.js";

const WIDTH = 760;
const HEIGHT = 180;
const PAD = { left: 40, right: 10, top: 10, bottom: 22 };

function xOf(index: number, total: number): number {
  const span = WIDTH - PAD.left - PAD.right;
  return PAD.left + (total <= 1 ? span / 2 : (index / (total - 1)) * span);
}

export function renderTemporal(
  root: HTMLElement,
  bundle: Bundle,
  state: ViewerState,
  onChange: StateChange,
): void {
  clear(root);
  root.append(el("h2", { text: "Temporal trend" }));
  const buckets = bundle.temporal;
  if (buckets.length === 0) {
    root.append(el("div", { class: "empty-state", text: "No timestamped records." }));
    return;
  }

  const maxCount = Math.max(
    1,
    ...buckets.map((b) => Math.max(0, ...Object.values(b.counts))),
  );
  const yOf = (count: number) =>
    HEIGHT - PAD.bottom - (count / maxCount) * (HEIGHT - PAD.top - PAD.bottom);

  const chart = svg("svg", {
    class: "temporal-chart",
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    width: String(WIDTH),
    height: String(HEIGHT),
    role: "img",
  });

  chart.append(
    svg("line", {
      x1: String(PAD.left), y1: String(HEIGHT - PAD.bottom),
      x2: String(WIDTH - PAD.right), y2: String(HEIGHT - PAD.bottom),
      stroke: "#94a3b8",
    }),
  );

  for (const signal of SIGNALS) {
    const points = buckets
      .map((b, i) => `${xOf(i, buckets.length)},${yOf(b.counts[signal] ?? 0)}`)
      .join(" ");
    if (buckets.length === 1) {
      chart.append(
        svg("circle", {
          class: "temporal-point",
          "data-signal": signal,
          cx: String(xOf(0, 1)),
          cy: String(yOf(buckets[0]!.counts[signal] ?? 0)),
          r: "3",
          fill: signalColor(bundle, signal),
        }),
      );
    } else {
      chart.append(
        svg("polyline", {
          class: "temporal-series",
          "data-signal": signal,
          points,
          fill: "none",
          stroke: signalColor(bundle, signal),
          "stroke-width": "1.5",
        }),
      );
    }
  }

  // brush shading and annotation line for the active range
  const stamps = buckets.map((b) => b.bucket_start);
  const indexAtOrAfter = (instant: string) => {
    const i = stamps.findIndex((s) => s >= instant);
    return i === -1 ? stamps.length - 1 : i;
  };
  if (state.range.from || state.range.to) {
    const fromX = state.range.from ? xOf(indexAtOrAfter(state.range.from), buckets.length) : PAD.left;
    const toX = state.range.to ? xOf(indexAtOrAfter(state.range.to), buckets.length) : WIDTH - PAD.right;
    chart.append(
      svg("rect", {
        class: "brush-region",
        x: String(Math.min(fromX, toX)),
        y: String(PAD.top),
        width: String(Math.abs(toX - fromX)),
        height: String(HEIGHT - PAD.top - PAD.bottom),
        fill: "#0ea5e9",
        "fill-opacity": "0.12",
      }),
    );
    if (state.range.from) {
      chart.append(
        svg("line", {
          class: "annotation-line",
          x1: String(fromX), y1: String(PAD.top),
          x2: String(fromX), y2: String(HEIGHT - PAD.bottom),
          stroke: "#0ea5e9",
          "stroke-dasharray": "4 2",
        }),
      );
    }
  }

  const legend = el("div", { class: "legend" });
  for (const signal of SIGNALS) {
    const item = el("span", { class: "legend-item", text: signal });
    item.style.color = signalColor(bundle, signal);
    legend.append(item);
  }

  // brush controls: pick a from/to bucket; propagates to diagnosis paging
  const fromSelect = el("select", { class: "brush-from" });
  const toSelect = el("select", { class: "brush-to" });
  fromSelect.append(el("option", { value: "", text: "start" }));
  toSelect.append(el("option", { value: "", text: "end" }));
  for (const stamp of stamps) {
    fromSelect.append(el("option", { value: stamp, text: stamp }));
    toSelect.append(el("option", { value: stamp, text: stamp }));
  }
  fromSelect.value = state.range.from ?? "";
  toSelect.value = state.range.to ?? "";
  const apply = () =>
    onChange((s) => {
      s.range = { from: fromSelect.value || null, to: toSelect.value || null };
      s.page = 0;
    });
  fromSelect.addEventListener("change", apply);
  toSelect.addEventListener("change", apply);
  const clearButton = el("button", { type: "button", class: "brush-clear", text: "clear range" });
  clearButton.addEventListener("click", () =>
    onChange((s) => {
      s.range = { from: null, to: null };
      s.page = 0;
    }),
  );

  root.append(
    chart,
    legend,
    el("div", { class: "brush-bar" }, [
      el("label", { text: "from " }, [fromSelect]),
      el("label", { text: " to " }, [toSelect]),
      clearButton,
    ]),
  );
}
