import { describe, expect, it } from "vitest";

import { layeredLayout, renderCausal } from "../src/causal.js";
import { emptyState, filterSummary, type ViewerState } from "../src/state.js";
import { caseStudyBundle, tinyBundle } from "./fixture.js";

function mount(state: ViewerState, bundle = caseStudyBundle()) {
  const root = document.createElement("div");
  const onChange = (mutate: (s: ViewerState) => void) => {
    mutate(state);
    renderCausal(root, bundle, state, onChange);
  };
  renderCausal(root, bundle, state, onChange);
  return { bundle, root, state };
}

describe("causal graph", () => {
  it("renders the three-node chain with two directed edges", () => {
    const { root } = mount(emptyState());
    expect(root.querySelectorAll(".causal-node")).toHaveLength(3);
    const edges = [...root.querySelectorAll(".causal-edge")];
    expect(edges).toHaveLength(2);
    const pairs = edges.map((e) => `${e.getAttribute("data-from")}->${e.getAttribute("data-to")}`);
    expect(pairs.sort()).toEqual(["16->10", "29->16"]);
  });

  it("edge tooltips carry lag and p", () => {
    const { root } = mount(emptyState());
    const first = root.querySelector('.causal-edge[data-from="29"] title')!;
    expect(first.textContent).toContain("lag 1");
    expect(first.textContent).toContain("p 4.00e-4");
  });

  it("layout is deterministic and layered along the chain", () => {
    const bundle = caseStudyBundle();
    const once = layeredLayout(bundle);
    const twice = layeredLayout(caseStudyBundle());
    expect(twice).toEqual(once);
    const layerOf = new Map(once.map((n) => [n.template_id, n.layer]));
    expect(layerOf.get(29)).toBe(0);
    expect(layerOf.get(16)).toBe(1);
    expect(layerOf.get(10)).toBe(2);
  });

  it("hovering a node reveals the representative line with entities", () => {
    const { root } = mount(emptyState());
    const tooltip = root.querySelector<HTMLElement>(".causal-tooltip")!;
    expect(tooltip.hasAttribute("hidden")).toBe(true);

    const node = root.querySelector('.causal-node[data-template-id="16"]')!;
    node.dispatchEvent(new Event("mouseenter"));
    expect(tooltip.hasAttribute("hidden")).toBe(false);
    expect(tooltip.textContent).toContain("device controller suspend entered");
    const mark = tooltip.querySelector("mark.entity")!;
    expect(mark.textContent).toBe("session_id=99");

    node.dispatchEvent(new Event("mouseleave"));
    expect(tooltip.hasAttribute("hidden")).toBe(true);
  });

  it("nodes are colored by golden signal from the palette", () => {
    const { root } = mount(emptyState());
    const latencyNode = root.querySelector('.causal-node[data-template-id="29"] circle')!;
    expect(latencyNode.getAttribute("fill")).toBe("#f59e0b");
    const errorNode = root.querySelector('.causal-node[data-template-id="16"] circle')!;
    expect(errorNode.getAttribute("fill")).toBe("#ef4444");
  });

  it("clicking a node filters the summary to that template", () => {
    const state = emptyState();
    const { bundle, root } = mount(state);
    root
      .querySelector<SVGGElement>('.causal-node[data-template-id="16"]')!
      .dispatchEvent(new Event("click"));
    expect(state.selectedNode).toBe(16);
    const rows = filterSummary(bundle, state);
    expect(rows.map((r) => r.template_id)).toEqual([16]);
    // clicking again clears the selection
    root
      .querySelector<SVGGElement>('.causal-node[data-template-id="16"]')!
      .dispatchEvent(new Event("click"));
    expect(state.selectedNode).toBeNull();
  });

  it("renders an isolated node without edges", () => {
    const { root } = mount(emptyState(), tinyBundle());
    expect(root.querySelectorAll(".causal-node")).toHaveLength(1);
    expect(root.querySelectorAll(".causal-edge")).toHaveLength(0);
  });

  it("shows a message for an empty graph", () => {
    const bundle = caseStudyBundle();
    bundle.causal = { nodes: [], edges: [], params: bundle.causal.params };
    const { root } = mount(emptyState(), bundle);
    expect(root.querySelector(".empty-state")!.textContent).toMatch(/No causal/);
  });
});
