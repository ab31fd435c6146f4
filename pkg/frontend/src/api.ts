/**
 * Thin fetch client for the review service.
 *
 * Every mutation goes through these methods; the UI holds no state the
 * server does not. Errors carry the server's structured {code, message,
 * details} body so callers can surface it verbatim.
 */

import type {
  JobView,
  ObjectDescriptionInput,
  SessionSummary,
  SessionView,
  SimulateRequest,
  VerdictRequest,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: Record<string, unknown>;

  constructor(
    status: number,
    code: string,
    message: string,
    details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.details = details;
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ReviewApi {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  /**
   * baseUrl is "" when the bundle is served by the service itself and an
   * absolute origin when talking to a remote server (tests do this).
   */
  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // wrap the global so the call is not made through a bare class property
    // (browsers reject an unbound window.fetch)
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.url(path), init);
    } catch (e) {
      throw new ApiError(0, "network_error", String(e));
    }
    if (!resp.ok) {
      throw await this.errorFrom(resp);
    }
    return (await resp.json()) as T;
  }

  private async errorFrom(resp: Response): Promise<ApiError> {
    let code = "error";
    let message = `${resp.status} ${resp.statusText}`;
    let details: Record<string, unknown> = {};
    try {
      const body = (await resp.json()) as Record<string, unknown>;
      if (typeof body.code === "string") code = body.code;
      if (typeof body.message === "string") message = body.message;
      if (body.details && typeof body.details === "object") {
        details = body.details as Record<string, unknown>;
      }
    } catch {
      // non-JSON error body: keep the HTTP status line
    }
    return new ApiError(resp.status, code, message, details);
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? "{}" : JSON.stringify(body),
    });
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return this.request("/api/sessions");
  }

  createSession(
    description: ObjectDescriptionInput,
    assetPath?: string,
  ): Promise<SessionView> {
    const body: Record<string, unknown> = { description };
    if (assetPath) body.asset_path = assetPath;
    return this.post("/api/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request(`/api/sessions/${encodeURIComponent(sessionId)}`);
  }

  annotate(sessionId: string): Promise<SessionView> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/annotate`);
  }

  /** Accepted with 202; the returned job is queued, poll getJob until done. */
  simulate(sessionId: string, req: SimulateRequest = {}): Promise<JobView> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/simulate`, req);
  }

  getJob(jobId: string): Promise<JobView> {
    return this.request(`/api/jobs/${encodeURIComponent(jobId)}`);
  }

  frameUrl(jobId: string, k: number): string {
    return this.url(`/api/jobs/${encodeURIComponent(jobId)}/frames/${k}`);
  }

  trajectoryUrl(jobId: string): string {
    return this.url(`/api/jobs/${encodeURIComponent(jobId)}/trajectory`);
  }

  /** Raw PNG bytes of one rendered frame. */
  async fetchFrame(jobId: string, k: number): Promise<ArrayBuffer> {
    const resp = await this.fetchFn(this.frameUrl(jobId, k));
    if (!resp.ok) throw await this.errorFrom(resp);
    return resp.arrayBuffer();
  }

  submitVerdict(sessionId: string, req: VerdictRequest): Promise<SessionView> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/verdict`, req);
  }

  requery(sessionId: string): Promise<SessionView> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/requery`);
  }

  /** Direct parameter edit; bypasses the annotation model. */
  overrideParameters(
    sessionId: string,
    materials: Record<string, Record<string, unknown>>,
  ): Promise<SessionView> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/override`, {
      materials,
    });
  }
}
