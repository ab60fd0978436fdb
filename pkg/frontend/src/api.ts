/** HTTP client for the job service plus an offline-tolerant feedback outbox. */

import { parseBundle, type Bundle } from "./bundle.js";

export interface JobStatus {
  job_id: string;
  status: "scheduled" | "running" | "completed" | "failed";
  error: string | null;
  [key: string]: unknown;
}

export interface FeedbackEntry {
  job_id: string;
  q1_useful: "yes" | "no";
  q2_time_saved: "none" | "1-5m" | "6-15m" | ">30m";
  q3_text: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function getJson(url: string): Promise<unknown> {
  const response = await fetch(url);
  const body = await response.text();
  if (!response.ok) {
    let detail = body;
    try {
      detail = String((JSON.parse(body) as { error?: string }).error ?? body);
    } catch {
      // plain-text error body
    }
    throw new ApiError(response.status, detail);
  }
  return JSON.parse(body);
}

export class JobsvcClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string, jobId?: string): string {
    const u = new URL(path, this.baseUrl);
    if (jobId) u.searchParams.set("job_id", jobId);
    return u.toString();
  }

  async query(jobId: string): Promise<JobStatus> {
    return (await getJson(this.url("/query", jobId))) as JobStatus;
  }

  async bundle(jobId: string): Promise<Bundle> {
    return parseBundle(await getJson(this.url("/bundle", jobId)));
  }

  async postFeedback(entry: FeedbackEntry): Promise<void> {
    const response = await fetch(this.url("/feedback"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(entry),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
  }

  async feedbackAggregate(): Promise<{
    count: number;
    useful_rate: number | null;
    q2_histogram: Record<string, number>;
  }> {
    return (await getJson(this.url("/feedback"))) as {
      count: number;
      useful_rate: number | null;
      q2_histogram: Record<string, number>;
    };
  }
}

const OUTBOX_KEY = "logan.feedback.outbox";

/**
 * Feedback submission with offline retention.
 *
 * Entries are keyed by job_id (one per job, last write wins). A failed POST
 * keeps the entry pending in localStorage; flush() retries everything.
 */
export class FeedbackOutbox {
  constructor(
    private client: JobsvcClient,
    private storage: Storage = globalThis.localStorage,
  ) {}

  private load(): Record<string, FeedbackEntry> {
    try {
      return JSON.parse(this.storage.getItem(OUTBOX_KEY) ?? "{}") as Record<
        string,
        FeedbackEntry
      >;
    } catch {
      return {};
    }
  }

  private save(pending: Record<string, FeedbackEntry>): void {
    this.storage.setItem(OUTBOX_KEY, JSON.stringify(pending));
  }

  pending(): FeedbackEntry[] {
    return Object.values(this.load());
  }

  /** Returns true when delivered, false when retained for retry. */
  async submit(entry: FeedbackEntry): Promise<boolean> {
    const pending = this.load();
    pending[entry.job_id] = entry; // last write wins per job
    this.save(pending);
    return this.flush(entry.job_id);
  }

  /** Retry pending entries; optionally just one job. Returns all-delivered. */
  async flush(onlyJobId?: string): Promise<boolean> {
    const pending = this.load();
    let allDelivered = true;
    for (const [jobId, entry] of Object.entries(pending)) {
      if (onlyJobId && jobId !== onlyJobId) continue;
      try {
        await this.client.postFeedback(entry);
        delete pending[jobId];
        this.save(pending);
      } catch (exc) {
        if (exc instanceof ApiError && exc.status < 500) {
          // the service rejected it; retrying identical bytes cannot help
          delete pending[jobId];
          this.save(pending);
          throw exc;
        }
        allDelivered = false;
      }
    }
    return allDelivered;
  }
}
