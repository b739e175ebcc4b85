/** Typed client for the workflow service. Every method maps to exactly one
 * documented endpoint; nothing here caches or invents state. */

export interface SessionState {
  id: string;
  task: string;
  exclude: string[];
  limit: number;
  phase: string;
  rag_picks: string[];
  drafts: string[];
  attempts: number;
  executor_notes: string[];
  reviewer_notes: string[];
  feedback: string;
  graph_source: string | null;
  sensor_draft: string | null;
  sensor_attempts: number;
  sensor_notes: string[];
  mapping: string | null;
  prompts: Record<string, string> | null;
  bundle: Record<string, unknown> | null;
  failure: string | null;
  attempt_tuple: [number, number, number];
  status: "running" | "awaiting-human" | "done" | "failed";
}

export interface StepOutcome {
  kind: "advanced" | "awaiting-human" | "completed" | "failed";
  gate: string | null;
  view: Record<string, unknown> | null;
  bundle: Record<string, unknown> | null;
  reason: string | null;
}

export interface SessionEnvelope {
  id: string;
  status: string;
  created: number;
  updated: number;
  state: Record<string, unknown>;
}

export interface FeedbackBody {
  gate: "graph" | "sensor";
  action: "approve" | "revise" | "edit";
  feedback?: string;
  code?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public body: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorFrom(res: Response): Promise<ApiError> {
  let body: unknown = null;
  let code = `http-${res.status}`;
  let message = res.statusText || `request failed with ${res.status}`;
  try {
    body = await res.json();
    const err = (body as { error?: { code?: string; message?: string } }).error;
    if (err) {
      code = err.code ?? code;
      message = err.message ?? message;
    }
  } catch {
    // non-JSON error body; the status line is all we have
  }
  return new ApiError(res.status, code, message, body);
}

export class Client {
  constructor(
    private base: string,
    private token: string | null = null,
    private fetchFn: FetchLike = fetch,
  ) {
    this.base = base.replace(/\/$/, "");
  }

  setToken(token: string | null): void {
    this.token = token;
  }

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["content-type"] = "application/json";
    if (this.token) h["authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method,
      headers: this.headers(body !== undefined),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) throw await errorFrom(res);
    return (await res.json()) as T;
  }

  createSession(task: string, dataset?: unknown[]): Promise<{ session_id: string }> {
    const body: Record<string, unknown> = { task_description: task };
    if (dataset !== undefined) body.dataset = dataset;
    return this.request("POST", "/sessions", body);
  }

  listSessions(): Promise<SessionEnvelope[]> {
    return this.request("GET", "/sessions");
  }

  getState(id: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${id}/state`);
  }

  step(id: string): Promise<StepOutcome> {
    return this.request("POST", `/sessions/${id}/step`);
  }

  feedback(id: string, body: FeedbackBody): Promise<SessionState> {
    return this.request("POST", `/sessions/${id}/feedback`, body);
  }

  mapping(id: string, text: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${id}/mapping`, { text });
  }

  /** Raw notebook bytes, passed through untouched. */
  async exportNotebook(id: string): Promise<ArrayBuffer> {
    const res = await this.fetchFn(this.base + `/sessions/${id}/export.ipynb`, {
      method: "GET",
      headers: this.headers(false),
    });
    if (!res.ok) throw await errorFrom(res);
    return res.arrayBuffer();
  }
}
