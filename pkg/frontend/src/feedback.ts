/** Three-question feedback form with optimistic submit and offline retry. */

import type { FeedbackEntry, FeedbackOutbox } from "./api.js";
import { clear, el } from "./dom.js";

const Q2_OPTIONS: [FeedbackEntry["q2_time_saved"], string][] = [
  ["none", "None"],
  ["1-5m", "1-5 minutes"],
  ["6-15m", "6-15 minutes"],
  [">30m", "More than 30 minutes"],
];

export function renderFeedback(root: HTMLElement, jobId: string, outbox: FeedbackOutbox): void {
  clear(root);
  root.append(el("h2", { text: "Feedback" }));

  const status = el("div", { class: "feedback-status" });
  const banner = el("div", { class: "retry-banner", hidden: "hidden" });
  const retry = el("button", { type: "button", class: "retry-button", text: "retry now" });
  banner.append(
    el("span", { text: "Could not reach the job service; your answers are saved locally. " }),
    retry,
  );

  const q1 = el("fieldset", { class: "q1" }, [
    el("legend", { text: "Was the final output useful?" }),
  ]);
  for (const value of ["yes", "no"] as const) {
    const input = el("input", { type: "radio", name: "q1", value });
    q1.append(el("label", {}, [input, ` ${value}`]));
  }

  const q2 = el("fieldset", { class: "q2" }, [
    el("legend", { text: "How much diagnosis time did it save?" }),
  ]);
  for (const [value, label] of Q2_OPTIONS) {
    const input = el("input", { type: "radio", name: "q2", value });
    q2.append(el("label", {}, [input, ` ${label}`]));
  }

  const q3 = el("textarea", {
    class: "q3",
    name: "q3",
    rows: "3",
    placeholder: "Anything else? (optional)",
  });

  const submit = el("button", { type: "submit", class: "feedback-submit", text: "Submit" });
  const form = el("form", { class: "feedback-form" }, [
    q1,
    q2,
    el("fieldset", { class: "q3-wrap" }, [el("legend", { text: "Comments" }), q3]),
    submit,
    status,
    banner,
  ]);

  const picked = (name: string): string | null => {
    const checked = form.querySelector<HTMLInputElement>(`input[name=${name}]:checked`);
    return checked ? checked.value : null;
  };

  const deliver = async (entry: FeedbackEntry) => {
    status.textContent = "Submitted, thank you."; // optimistic; retained on failure
    banner.setAttribute("hidden", "hidden");
    const delivered = await outbox.submit(entry).catch((exc: Error) => {
      status.textContent = `Rejected: ${exc.message}`;
      return true; // rejection is terminal, nothing pending
    });
    if (!delivered) banner.removeAttribute("hidden");
  };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const q1Value = picked("q1");
    const q2Value = picked("q2");
    if (!q1Value || !q2Value) {
      status.textContent = "Answer the first two questions to submit.";
      return;
    }
    void deliver({
      job_id: jobId,
      q1_useful: q1Value as FeedbackEntry["q1_useful"],
      q2_time_saved: q2Value as FeedbackEntry["q2_time_saved"],
      q3_text: q3.value,
    });
  });

  retry.addEventListener("click", () => {
    void outbox.flush().then((allDelivered) => {
      if (allDelivered) {
        banner.setAttribute("hidden", "hidden");
        status.textContent = "Delivered.";
      }
    });
  });

  root.append(form);
}
