import type { DocPayload, Label, QrelsMode, SessionState, TopicInfo } from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Error reported by the service as {code, message}. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin client for the /v1 judging API; the only way the UI touches data. */
export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let code = "error";
      let message = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { code?: string; message?: string };
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  async topics(): Promise<TopicInfo[]> {
    const body = await this.request<{ topics: TopicInfo[] }>("/v1/topics");
    return body.topics;
  }

  createSession(topicId: string, clientToken?: string, budget?: number): Promise<SessionState> {
    return this.request<SessionState>("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ topic_id: topicId, client_token: clientToken ?? null, budget: budget ?? null }),
    });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request<SessionState>(`/v1/sessions/${sessionId}`);
  }

  async nextBatch(sessionId: string): Promise<DocPayload[]> {
    const body = await this.request<{ docs: DocPayload[] }>(`/v1/sessions/${sessionId}/next-batch`);
    return body.docs;
  }

  submitJudgments(
    sessionId: string,
    judgments: Array<{ doc_id: string; label: Label }>,
  ): Promise<SessionState> {
    return this.request<SessionState>(`/v1/sessions/${sessionId}/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ judgments }),
    });
  }

  async exportQrels(sessionId: string, mode: QrelsMode): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/sessions/${sessionId}/qrels?mode=${mode}`);
    if (!response.ok) {
      throw new ApiError(response.status, "error", `HTTP ${response.status}`);
    }
    return response.text();
  }
}
