/** Diagnosis windows: chronological pagination plus keyword search. */

import { signalColor, type Bundle } from "./bundle.js";
import { clear, el } from "./dom.js";
import { filterWindows, recordMatch, summaryIndex, type ViewerState } from "./state.js";
import type { StateChange } from "./summary.js";

export function renderDiagnosis(
  root: HTMLElement,
  bundle: Bundle,
  state: ViewerState,
  onChange: StateChange,
): void {
  clear(root);
  root.append(el("h2", { text: "Diagnosis" }));

  const search = el("input", {
    class: "diagnosis-search",
    type: "search",
    placeholder: "Search record text and named entities...",
    value: state.query,
  });
  search.addEventListener("input", () =>
    onChange((s) => {
      s.query = search.value;
      s.page = 0;
    }),
  );
  root.append(el("div", { class: "search-bar" }, [search]));

  const windows = filterWindows(bundle, state);
  if (windows.length === 0) {
    root.append(el("div", { class: "empty-state", text: "No matching windows." }));
    return;
  }

  const page = Math.min(state.page, windows.length - 1);
  const window = windows[page]!;
  const rows = summaryIndex(bundle);

  const head = el("div", { class: "window-head" }, [
    el("span", { class: "window-start", text: window.window_start }),
    el("span", {
      class: "window-meta",
      text: ` ${window.total_records} records, triggers: ${[...window.trigger_signals].sort().join(", ")}`,
    }),
  ]);

  const list = el("ol", { class: "window-records" });
  for (const record of window.records) {
    const kind = recordMatch(record, rows.get(record.template_id), state.query);
    const line = el("li", {
      class: "window-record",
      "data-record-id": String(record.record_id),
      "data-golden": record.golden,
    });
    line.style.color = signalColor(bundle, record.golden);
    const location = el("span", {
      class: "record-location",
      text: `${record.file}:${record.line_start}${
        record.line_end > record.line_start ? "-" + record.line_end : ""
      } `,
    });
    const text = el("span", { class: "record-text", text: record.text });
    line.append(location, text);
    if (state.query && kind) {
      // which side of the search matched: the raw text or an entity value
      line.append(el("span", { class: "match-kind", text: ` [${kind} match]` }));
    }
    if (state.query && !kind) line.classList.add("record-dim");
    list.append(line);
  }
  if (window.truncated) {
    list.append(el("li", { class: "window-truncated", text: "... window truncated" }));
  }

  const prev = el("button", { type: "button", class: "page-prev", text: "previous" });
  const next = el("button", { type: "button", class: "page-next", text: "next window" });
  if (page === 0) prev.setAttribute("disabled", "disabled");
  if (page >= windows.length - 1) next.setAttribute("disabled", "disabled");
  prev.addEventListener("click", () => onChange((s) => void (s.page = Math.max(0, page - 1))));
  next.addEventListener("click", () => onChange((s) => void (s.page = page + 1)));
  const pager = el("div", { class: "pager" }, [
    prev,
    el("span", { class: "page-label", text: ` window ${page + 1} of ${windows.length} ` }),
    next,
  ]);

  root.append(head, list, pager);
}
