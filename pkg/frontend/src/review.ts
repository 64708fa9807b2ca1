import { ApiError, NetworkError } from "./api.js";
import type {
  NextResponse,
  Progress,
  ReviewExample,
  SpanRejection,
  VerdictPayload,
  VerdictResponse,
} from "./types.js";

export type QueuePhase = "loading" | "reviewing" | "done" | "error";

/** The two calls the queue needs; injected so tests can stub the server. */
export interface QueueApi {
  next(): Promise<NextResponse>;
  submit(qaId: string, verdict: VerdictPayload): Promise<VerdictResponse>;
}

export interface QueueState {
  phase: QueuePhase;
  example: ReviewExample | null;
  progress: Progress | null;
  rejection: SpanRejection | null;
  errorMessage: string | null;
  hasPendingVerdict: boolean;
  doneCounts: { reviewed: number; total: number } | null;
}

const isSpanRejection = (detail: unknown): detail is SpanRejection =>
  typeof detail === "object" &&
  detail !== null &&
  (detail as { error?: unknown }).error === "span_mismatch";

const describe = (err: unknown): string =>
  err instanceof Error ? err.message : String(err);

/**
 * Sequential review queue: one example on screen, a verdict moves to the
 * next. A verdict that fails with a network error is retained locally and
 * resubmitted by retry(); a server-side span rejection surfaces its
 * expected-vs-actual detail and drops the verdict so the reviewer can fix
 * the selection.
 */
export class ReviewQueue {
  private phase: QueuePhase = "loading";
  private example: ReviewExample | null = null;
  private progress: Progress | null = null;
  private rejection: SpanRejection | null = null;
  private errorMessage: string | null = null;
  private pending: { qaId: string; verdict: VerdictPayload } | null = null;
  private doneCounts: { reviewed: number; total: number } | null = null;

  constructor(private readonly api: QueueApi) {}

  get state(): QueueState {
    return {
      phase: this.phase,
      example: this.example,
      progress: this.progress,
      rejection: this.rejection,
      errorMessage: this.errorMessage,
      hasPendingVerdict: this.pending !== null,
      doneCounts: this.doneCounts,
    };
  }

  async load(): Promise<QueueState> {
    this.phase = "loading";
    this.rejection = null;
    this.errorMessage = null;
    try {
      const next = await this.api.next();
      if (next.done) {
        this.phase = "done";
        this.example = null;
        this.doneCounts = {
          reviewed: next.reviewed ?? 0,
          total: next.total ?? 0,
        };
      } else {
        this.phase = "reviewing";
        this.example = next.example ?? null;
      }
    } catch (err) {
      this.phase = "error";
      this.errorMessage = describe(err);
    }
    return this.state;
  }

  async submit(verdict: VerdictPayload): Promise<QueueState> {
    if (!this.example) {
      return this.state;
    }
    this.pending = { qaId: this.example.qa_id, verdict };
    return this.flush();
  }

  /** Resubmit a verdict kept after a network failure, or reload the queue. */
  async retry(): Promise<QueueState> {
    if (this.pending) {
      return this.flush();
    }
    return this.load();
  }

  private async flush(): Promise<QueueState> {
    if (!this.pending) {
      return this.load();
    }
    const { qaId, verdict } = this.pending;
    this.rejection = null;
    this.errorMessage = null;
    try {
      const response = await this.api.submit(qaId, verdict);
      this.pending = null;
      this.progress = response.progress;
      return this.load();
    } catch (err) {
      if (err instanceof NetworkError) {
        this.phase = "reviewing";
        this.errorMessage =
          "could not reach the server; the verdict was kept for retry";
      } else if (
        err instanceof ApiError &&
        err.status === 400 &&
        isSpanRejection(err.detail)
      ) {
        this.pending = null;
        this.phase = "reviewing";
        this.rejection = err.detail;
      } else {
        this.pending = null;
        this.phase = "reviewing";
        this.errorMessage = describe(err);
      }
      return this.state;
    }
  }
}
