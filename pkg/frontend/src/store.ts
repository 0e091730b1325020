import { ApiClient, ApiError } from "./api";
import { gainCurve, type GainPoint } from "./gain";
import type { DocPayload, Label, QrelsMode, SessionState } from "./types";

export interface QueuedJudgment {
  docId: string;
  label: Label;
}

type Listener = () => void;

/**
 * Client-side session state: mirrors the server, advancing optimistically
 * while judgments are in flight and queuing them while offline.
 *
 * Invariants: a doc is enqueued at most once (idempotency by doc id), the
 * queue flushes strictly in judgment order, and every server response
 * replaces the local state snapshot wholesale.
 */
export class SessionStore {
  state: SessionState | null = null;
  currentDoc: DocPayload | null = null;
  pendingDocs: DocPayload[] = [];
  queue: QueuedJudgment[] = [];
  offline = false;
  lastError: string | null = null;

  private flushing = false;
  private judgedLocally = new Set<string>();
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get phase(): string {
    return this.state?.phase ?? "idle";
  }

  async start(topicId: string, clientToken?: string, budget?: number): Promise<void> {
    this.state = await this.api.createSession(topicId, clientToken, budget);
    this.queue = [];
    this.judgedLocally = new Set(this.state.judged.map((j) => j.doc_id));
    this.currentDoc = null;
    this.pendingDocs = [];
    this.notify();
    await this.advance();
  }

  async refresh(): Promise<void> {
    if (!this.state) return;
    this.state = await this.api.getSession(this.state.session_id);
    this.notify();
  }

  /**
   * Judge the displayed document. Optimistic: the next pending document
   * renders immediately while the submission flushes in the background.
   * Re-judging the same doc (double click, key repeat) is a no-op.
   */
  async judge(label: Label): Promise<void> {
    const doc = this.currentDoc;
    if (!doc || !this.state) return;
    if (this.judgedLocally.has(doc.doc_id)) return;
    this.judgedLocally.add(doc.doc_id);
    this.queue.push({ docId: doc.doc_id, label });
    this.pendingDocs = this.pendingDocs.filter((d) => d.doc_id !== doc.doc_id);
    this.currentDoc = this.pendingDocs[0] ?? null;
    this.notify();
    await this.flush();
    if (!this.offline && this.currentDoc === null) {
      await this.advance();
    }
  }

  /** Send queued judgments one at a time, oldest first. */
  async flush(): Promise<void> {
    if (this.flushing || !this.state) return;
    this.flushing = true;
    try {
      while (this.queue.length > 0) {
        const next = this.queue[0]!;
        try {
          this.state = await this.api.submitJudgments(this.state.session_id, [
            { doc_id: next.docId, label: next.label },
          ]);
          this.queue.shift();
          this.offline = false;
          this.lastError = null;
          this.notify();
        } catch (err) {
          if (err instanceof ApiError) {
            // the server already has this judgment: acknowledged
            if (err.status === 422 && err.message.includes("already")) {
              this.queue.shift();
              continue;
            }
            this.lastError = err.message;
            this.queue.shift();
            this.notify();
            continue;
          }
          // network failure: stay queued, preserve order, retry on reconnect
          this.offline = true;
          this.notify();
          return;
        }
      }
    } finally {
      this.flushing = false;
    }
  }

  async reconnect(): Promise<void> {
    this.offline = false;
    await this.flush();
    if (!this.offline) {
      await this.refresh();
      if (this.currentDoc === null) await this.advance();
    }
  }

  /** Show the next pending doc, fetching a new batch when needed. */
  async advance(): Promise<void> {
    if (!this.state) return;
    const remaining = this.pendingDocs.filter((d) => !this.judgedLocally.has(d.doc_id));
    if (remaining.length > 0) {
      this.pendingDocs = remaining;
      this.currentDoc = remaining[0] ?? null;
      this.notify();
      return;
    }
    if (this.state.phase !== "seeding" && this.state.phase !== "active") {
      this.currentDoc = null;
      this.notify();
      return;
    }
    try {
      const docs = await this.api.nextBatch(this.state.session_id);
      this.pendingDocs = docs;
      this.currentDoc = docs[0] ?? null;
      // serving charges the budget server-side; resync the snapshot
      await this.refresh();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
        this.currentDoc = null;
        this.pendingDocs = [];
      } else if (!(err instanceof ApiError)) {
        this.offline = true;
      } else {
        this.lastError = err.message;
      }
    }
    this.notify();
  }

  /** Cumulative relevant-found curve: server log plus unflushed queue. */
  gainPoints(): GainPoint[] {
    if (!this.state) return [];
    const labels = this.state.judged.map((j) => j.label);
    for (const queued of this.queue) labels.push(queued.label);
    return gainCurve(labels);
  }

  exportQrels(mode: QrelsMode): Promise<string> {
    if (!this.state) return Promise.reject(new Error("no session"));
    return this.api.exportQrels(this.state.session_id, mode);
  }
}
