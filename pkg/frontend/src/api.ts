// Thin fetch wrapper around the diagnosis service. One method per
// endpoint, no retries, no caching; errors carry the HTTP status and
// whatever detail the server sent.

import type {
  EvidenceAction,
  InconsistencyReport,
  JobStatus,
  NetworkDetail,
  NetworkSummary,
  PosteriorPayload,
  Rankings,
  SessionSummary,
} from "./types.js";

export interface ApiConfig {
  baseUrl: string;
  token?: string;
  // injectable for tests; defaults to the global fetch
  fetchFn?: typeof fetch;
}

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchFn: typeof fetch;

  constructor(config: ApiConfig) {
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.token = config.token;
    this.fetchFn = config.fetchFn ?? fetch;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["content-type"] = "application/json";
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(response.status, payload?.detail ?? payload?.errors ?? payload);
    }
    return payload as T;
  }

  ingest(document: unknown): Promise<NetworkSummary> {
    return this.request("POST", "/networks", document);
  }

  network(networkId: string): Promise<NetworkDetail> {
    return this.request("GET", `/networks/${networkId}`);
  }

  inconsistencies(networkId: string): Promise<InconsistencyReport> {
    return this.request("GET", `/networks/${networkId}/inconsistencies`);
  }

  compile(networkId: string, opts: { force?: boolean; group_size?: number } = {}): Promise<NetworkSummary> {
    return this.request("POST", `/networks/${networkId}/compile`, opts);
  }

  startRecommendation(networkId: string, overrides: Record<string, number> = {}): Promise<JobStatus> {
    return this.request("POST", `/networks/${networkId}/recommendations`, overrides);
  }

  job(jobId: string): Promise<JobStatus> {
    return this.request("GET", `/recommendations/${jobId}`);
  }

  /** Poll a recommendation job until it leaves queued/running. */
  async pollJob(jobId: string, intervalMs = 500, timeoutMs = 600_000): Promise<JobStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.job(jobId);
      if (status.status === "done" || status.status === "failed") return status;
      if (Date.now() > deadline) throw new ApiError(408, `job ${jobId} still ${status.status}`);
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  openSession(networkId: string): Promise<SessionSummary> {
    return this.request("POST", "/sessions", { network_id: networkId });
  }

  session(sessionId: string): Promise<SessionSummary> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  applyEvidence(sessionId: string, failureId: string, action: EvidenceAction): Promise<PosteriorPayload> {
    return this.request("POST", `/sessions/${sessionId}/evidence`, {
      failure_id: failureId,
      action,
    });
  }

  posteriors(sessionId: string): Promise<PosteriorPayload> {
    return this.request("GET", `/sessions/${sessionId}/posteriors`);
  }

  rankings(sessionId: string): Promise<Rankings> {
    return this.request("GET", `/sessions/${sessionId}/rankings`);
  }

  prefill(sessionId: string, cellId: string): Promise<PosteriorPayload> {
    return this.request("POST", `/sessions/${sessionId}/prefill`, { cell_id: cellId });
  }

  reroll(sessionId: string): Promise<PosteriorPayload> {
    return this.request("POST", `/sessions/${sessionId}/reroll`);
  }
}
