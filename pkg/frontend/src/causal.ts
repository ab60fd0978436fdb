/** Causal graph: layered left-to-right DAG, deterministic for screenshots. */

import { signalColor, type Bundle, type CausalNode } from "./bundle.js";
import { clear, el, svg } from "./dom.js";
import { summaryIndex, type ViewerState } from "./state.js";
import { highlightedText, type StateChange } from "./summary.js";

const NODE_R = 14;
const LAYER_GAP = 150;
const ROW_GAP = 70;
const PAD = 40;

export interface LaidOutNode extends CausalNode {
  x: number;
  y: number;
  layer: number;
}

/**
 * Longest-path layering with template_id as the only tie-break, so the same
 * bundle always renders the same picture. Cycles are cut by ignoring edges
 * that point into an already-finalized layer during relaxation.
 */
export function layeredLayout(bundle: Bundle): LaidOutNode[] {
  const nodes = [...bundle.causal.nodes].sort((a, b) => a.template_id - b.template_id);
  const layer = new Map<number, number>(nodes.map((n) => [n.template_id, 0]));
  const ids = new Set(layer.keys());
  const edges = bundle.causal.edges.filter((e) => ids.has(e.from) && ids.has(e.to));
  // n passes bound relaxation, so a cycle cannot loop forever
  for (let pass = 0; pass < nodes.length; pass += 1) {
    let moved = false;
    for (const edge of edges) {
      const want = (layer.get(edge.from) ?? 0) + 1;
      if (want > (layer.get(edge.to) ?? 0) && want < nodes.length) {
        layer.set(edge.to, want);
        moved = true;
      }
    }
    if (!moved) break;
  }
  const byLayer = new Map<number, CausalNode[]>();
  for (const node of nodes) {
    const l = layer.get(node.template_id) ?? 0;
    if (!byLayer.has(l)) byLayer.set(l, []);
    byLayer.get(l)!.push(node);
  }
  const out: LaidOutNode[] = [];
  for (const [l, members] of [...byLayer.entries()].sort((a, b) => a[0] - b[0])) {
    members.forEach((node, i) => {
      out.push({ ...node, layer: l, x: PAD + l * LAYER_GAP, y: PAD + i * ROW_GAP });
    });
  }
  return out.sort((a, b) => a.template_id - b.template_id);
}

export function renderCausal(
  root: HTMLElement,
  bundle: Bundle,
  state: ViewerState,
  onChange: StateChange,
): void {
  clear(root);
  root.append(el("h2", { text: "Causal graph" }));
  if (bundle.causal.nodes.length === 0) {
    root.append(el("div", { class: "empty-state", text: "No causal relationships found." }));
    return;
  }

  const laid = layeredLayout(bundle);
  const at = new Map(laid.map((n) => [n.template_id, n]));
  const width = Math.max(...laid.map((n) => n.x)) + PAD + NODE_R;
  const height = Math.max(...laid.map((n) => n.y)) + PAD;

  const chart = svg("svg", {
    class: "causal-chart",
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
  });
  const defs = svg("defs");
  const marker = svg("marker", {
    id: "arrow",
    viewBox: "0 0 8 8",
    refX: "8",
    refY: "4",
    markerWidth: "6",
    markerHeight: "6",
    orient: "auto-start-reverse",
  });
  marker.append(svg("path", { d: "M0,0 L8,4 L0,8 z", fill: "#475569" }));
  defs.append(marker);
  chart.append(defs);

  const tooltip = el("div", { class: "causal-tooltip", hidden: "hidden" });

  for (const edge of bundle.causal.edges) {
    const from = at.get(edge.from);
    const to = at.get(edge.to);
    if (!from || !to) continue;
    const dx = to.x - from.x;
    const dy = to.y - from.y;
    const len = Math.hypot(dx, dy) || 1;
    const trim = (n: number) => NODE_R * (n / len);
    const line = svg("line", {
      class: "causal-edge",
      "data-from": String(edge.from),
      "data-to": String(edge.to),
      x1: String(from.x + trim(dx)),
      y1: String(from.y + trim(dy)),
      x2: String(to.x - trim(dx)),
      y2: String(to.y - trim(dy)),
      stroke: "#475569",
      "stroke-width": "1.5",
      "marker-end": "url(#arrow)",
    });
    const title = svg("title");
    title.textContent = `t${edge.from} -> t${edge.to}  lag ${edge.lag}, p ${edge.p.toExponential(2)}`;
    line.append(title);
    chart.append(line);
  }

  const rows = summaryIndex(bundle);
  for (const node of laid) {
    const group = svg("g", {
      class: "causal-node",
      "data-template-id": String(node.template_id),
      transform: `translate(${node.x},${node.y})`,
    });
    const circle = svg("circle", {
      r: String(NODE_R),
      fill: signalColor(bundle, node.golden),
      stroke: state.selectedNode === node.template_id ? "#0f172a" : "#ffffff",
      "stroke-width": state.selectedNode === node.template_id ? "3" : "1.5",
    });
    const label = svg("text", {
      y: String(NODE_R + 14),
      "text-anchor": "middle",
      "font-size": "11",
    });
    label.textContent = `t${node.template_id}`;
    group.append(circle, label);

    group.addEventListener("mouseenter", () => {
      clear(tooltip);
      tooltip.removeAttribute("hidden");
      const row = rows.get(node.template_id);
      const header = el("div", {
        class: "tooltip-signal",
        text: `t${node.template_id} (${node.golden})`,
      });
      header.style.color = signalColor(bundle, node.golden);
      const body = el("div", { class: "tooltip-text" });
      if (row) body.append(highlightedText(bundle, row));
      else body.textContent = node.text;
      tooltip.append(header, body);
    });
    group.addEventListener("mouseleave", () => tooltip.setAttribute("hidden", "hidden"));
    group.addEventListener("click", () =>
      onChange((s) => {
        s.selectedNode = s.selectedNode === node.template_id ? null : node.template_id;
        s.page = 0;
      }),
    );
    chart.append(group);
  }

  root.append(chart, tooltip);
}
