/** Summary table: one row per template, ascending frequency, filter chips. */

import { FAULTS, SIGNALS, entityColor, signalColor, type Bundle, type SummaryRow } from "./bundle.js";
import { clear, el } from "./dom.js";
import { filterSummary, type ViewerState } from "./state.js";

export type StateChange = (mutate: (state: ViewerState) => void) => void;

function chip(label: string, color: string, active: boolean, onToggle: () => void): HTMLElement {
  const node = el("button", {
    class: `chip${active ? " chip-active" : ""}`,
    type: "button",
    text: label,
    "data-chip": label,
  });
  node.style.setProperty("--chip-color", color);
  node.style.borderColor = color;
  if (active) node.style.background = color;
  node.addEventListener("click", onToggle);
  return node;
}

function entityTypesIn(bundle: Bundle): string[] {
  const seen = new Set<string>();
  for (const row of bundle.summary) for (const e of row.entities) seen.add(e.type);
  return [...seen].sort();
}

/** Row text with entity spans wrapped in colored marks. */
export function highlightedText(bundle: Bundle, row: SummaryRow): DocumentFragment {
  const fragment = document.createDocumentFragment();
  let cursor = 0;
  const spans = [...row.entities].sort((a, b) => a.start - b.start);
  for (const entity of spans) {
    if (entity.start < cursor) continue; // overlapping span, keep the first
    fragment.append(row.text.slice(cursor, entity.start));
    const mark = el("mark", {
      class: "entity",
      text: row.text.slice(entity.start, entity.end),
      title: entity.type,
      "data-entity-type": entity.type,
    });
    mark.style.background = entityColor(bundle, entity.type);
    fragment.append(mark);
    cursor = entity.end;
  }
  fragment.append(row.text.slice(cursor));
  return fragment;
}

export function renderSummary(
  root: HTMLElement,
  bundle: Bundle,
  state: ViewerState,
  onChange: StateChange,
): void {
  clear(root);
  const rows = filterSummary(bundle, state);

  const toggle = (set: Set<string>, value: string) => () =>
    onChange((s) => {
      const target =
        set === state.signals ? s.signals : set === state.faults ? s.faults : s.entityTypes;
      if (target.has(value)) target.delete(value);
      else target.add(value);
    });

  const chips = el("div", { class: "chip-bar" });
  for (const signal of SIGNALS) {
    chips.append(
      chip(signal, signalColor(bundle, signal), state.signals.has(signal), toggle(state.signals, signal)),
    );
  }
  for (const fault of FAULTS) {
    chips.append(chip(fault, "#64748b", state.faults.has(fault), toggle(state.faults, fault)));
  }
  for (const etype of entityTypesIn(bundle)) {
    chips.append(
      chip(etype, entityColor(bundle, etype), state.entityTypes.has(etype), toggle(state.entityTypes, etype)),
    );
  }

  const search = el("input", {
    class: "summary-search",
    type: "search",
    placeholder: "Filter templates and diagnosis records...",
    value: state.query,
  });
  search.addEventListener("input", () => onChange((s) => void (s.query = search.value)));

  const count = el("div", {
    class: "summary-count",
    text: `${rows.length} of ${bundle.summary.length} templates`,
  });

  const table = el("table", { class: "summary-table" });
  table.append(
    el("thead", {}, [
      el("tr", {}, [
        el("th", { text: "freq" }),
        el("th", { text: "signal" }),
        el("th", { text: "faults" }),
        el("th", { text: "representative line" }),
      ]),
    ]),
  );
  const body = el("tbody");
  for (const row of rows) {
    const signalCell = el("td", {}, [
      el("span", { class: "signal-dot", "data-signal": row.golden, text: row.golden }),
    ]);
    (signalCell.firstChild as HTMLElement).style.color = signalColor(bundle, row.golden);
    const textCell = el("td", { class: "template-text" });
    textCell.append(highlightedText(bundle, row));
    const tr = el("tr", { class: "summary-row", "data-template-id": String(row.template_id) }, [
      el("td", { text: String(row.frequency) }),
      signalCell,
      el("td", { text: row.faults.join(", ") }),
      textCell,
    ]);
    if (state.selectedNode === row.template_id) tr.classList.add("row-selected");
    body.append(tr);
  }
  table.append(body);

  root.append(el("h2", { text: "Summary" }), chips, search, count, table);
}
