/** Composition root: load a bundle, keep state in the URL, render sections. */

import { FeedbackOutbox, JobsvcClient } from "./api.js";
import { BundleLoadError, parseBundle, type Bundle } from "./bundle.js";
import { renderCausal } from "./causal.js";
import { renderDiagnosis } from "./diagnosis.js";
import { clear, el } from "./dom.js";
import { renderFeedback } from "./feedback.js";
import { emptyState, stateFromQuery, stateToQuery, type ViewerState } from "./state.js";
import { renderSummary } from "./summary.js";
import { renderTemporal } from "./temporal.js";

export interface AppOptions {
  baseUrl?: string; // job service origin; defaults to same origin
  search?: string; // initial query string, defaults to location.search
  pushState?: (query: string) => void;
}

export class App {
  readonly root: HTMLElement;
  state: ViewerState;
  bundle: Bundle | null = null;
  client: JobsvcClient;
  outbox: FeedbackOutbox;
  private pushState: (query: string) => void;

  private sections: Record<string, HTMLElement>;

  constructor(root: HTMLElement, options: AppOptions = {}) {
    this.root = root;
    this.state = stateFromQuery(options.search ?? globalThis.location?.search ?? "");
    this.client = new JobsvcClient(options.baseUrl ?? globalThis.location?.origin ?? "http://127.0.0.1:8080");
    this.outbox = new FeedbackOutbox(this.client);
    this.pushState =
      options.pushState ??
      ((query) => globalThis.history?.replaceState(null, "", query ? `?${query}` : location.pathname));
    this.sections = {
      load: el("section", { class: "pane-load" }),
      summary: el("section", { class: "pane-summary" }),
      temporal: el("section", { class: "pane-temporal" }),
      causal: el("section", { class: "pane-causal" }),
      diagnosis: el("section", { class: "pane-diagnosis" }),
      feedback: el("section", { class: "pane-feedback" }),
    };
    clear(root);
    root.append(...Object.values(this.sections));
    this.renderLoader();
  }

  /** Fetch from jobsvc when ?job_id= is present; otherwise offer file drop. */
  async start(): Promise<void> {
    this.renderLoader();
    if (this.state.jobId) {
      try {
        this.setBundle(await this.client.bundle(this.state.jobId));
      } catch (exc) {
        this.renderLoadError(exc as Error);
      }
    }
  }

  loadFromText(text: string): void {
    try {
      this.setBundle(parseBundle(text));
    } catch (exc) {
      this.renderLoadError(exc as Error);
    }
  }

  setBundle(bundle: Bundle): void {
    this.bundle = bundle;
    this.renderLoader();
    this.renderAll();
    // rendered once per bundle so filter changes cannot wipe a half-typed form
    if (this.state.jobId) {
      renderFeedback(this.sections.feedback!, this.state.jobId, this.outbox);
    } else {
      clear(this.sections.feedback!);
      this.sections.feedback!.append(
        el("div", { class: "empty-state", text: "Feedback needs a job context (?job_id=...)." }),
      );
    }
  }

  onChange = (mutate: (state: ViewerState) => void): void => {
    mutate(this.state);
    this.pushState(stateToQuery(this.state));
    this.renderAll();
  };

  renderAll(): void {
    if (!this.bundle) return;
    renderSummary(this.sections.summary!, this.bundle, this.state, this.onChange);
    renderTemporal(this.sections.temporal!, this.bundle, this.state, this.onChange);
    renderCausal(this.sections.causal!, this.bundle, this.state, this.onChange);
    renderDiagnosis(this.sections.diagnosis!, this.bundle, this.state, this.onChange);
  }

  private renderLoader(): void {
    const pane = this.sections.load!;
    clear(pane);
    if (this.bundle) {
      const meta = this.bundle.meta;
      pane.append(
        el("div", { class: "run-banner" }, [
          el("strong", { text: `run ${meta.run_id}` }),
          el("span", {
            text:
              ` ${meta.counters.lines_processed} lines, ` +
              `${meta.counters.templates_discovered} templates, ` +
              `${(meta.counters.reduction * 100).toFixed(1)}% reduction`,
          }),
        ]),
      );
      if (this.bundle.warnings.length) {
        pane.append(
          el("details", { class: "warnings" }, [
            el("summary", { text: `${this.bundle.warnings.length} warnings` }),
            el("ul", {}, this.bundle.warnings.map((w) => el("li", { text: w }))),
          ]),
        );
      }
      return;
    }
    const drop = el("div", { class: "drop-zone" }, [
      el("p", { text: "Drop a bundle JSON file here, or pass ?job_id= to load from the job service." }),
    ]);
    const input = el("input", { type: "file", accept: ".json,application/json", class: "file-pick" });
    input.addEventListener("change", () => {
      const file = input.files?.[0];
      if (file) void file.text().then((text) => this.loadFromText(text));
    });
    drop.addEventListener("dragover", (event) => event.preventDefault());
    drop.addEventListener("drop", (event) => {
      event.preventDefault();
      const file = event.dataTransfer?.files?.[0];
      if (file) void file.text().then((text) => this.loadFromText(text));
    });
    drop.append(input);
    pane.append(drop);
  }

  private renderLoadError(error: Error): void {
    const pane = this.sections.load!;
    clear(pane);
    const box = el("div", { class: "load-error" }, [
      el("h2", { text: "Could not load bundle" }),
      el("p", { class: "load-error-message", text: error.message }),
    ]);
    if (error instanceof BundleLoadError && error.foundVersion !== null) {
      box.append(
        el("p", {
          class: "load-error-version",
          text: `bundle schema version: ${error.foundVersion}`,
        }),
      );
    }
    pane.append(box);
  }
}

export function mountApp(root: HTMLElement, options: AppOptions = {}): App {
  const app = new App(root, options);
  void app.start();
  return app;
}
