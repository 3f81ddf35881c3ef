// Thin typed client for the aiuflow service. The emulator talks to the
// server exclusively through this module.

import type {
  DeviceDoc,
  HistoryResponse,
  OutcomeDoc,
  OutcomeResponse,
  PageDoc,
  PagesResponse,
  PlanDoc,
  StartResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "HttpError";
  let message = `${response.status}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(private readonly base: string) {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  listSpecs(): Promise<string[]> {
    return this.get("/specs");
  }

  listDevices(): Promise<DeviceDoc[]> {
    return this.get("/devices");
  }

  getPlan(spec: string, device: string): Promise<PlanDoc> {
    const query = new URLSearchParams({ spec, device });
    return this.get(`/plan?${query}`);
  }

  startSession(spec: string, device: string): Promise<StartResponse> {
    return this.post("/sessions", { spec, device });
  }

  getPages(sessionId: string, node?: string, page?: number): Promise<PagesResponse> {
    const query = new URLSearchParams();
    if (node !== undefined) query.set("node", node);
    if (page !== undefined) query.set("page", String(page));
    const suffix = query.size ? `?${query}` : "";
    return this.get(`/sessions/${sessionId}/pages${suffix}`);
  }

  submitOutcome(
    sessionId: string,
    node: string,
    outcome: OutcomeDoc,
  ): Promise<OutcomeResponse> {
    return this.post(`/sessions/${sessionId}/outcome`, { node, outcome });
  }

  getDetail(
    sessionId: string,
    node: string,
    row: number,
    page = 1,
  ): Promise<PageDoc> {
    const query = new URLSearchParams({
      node,
      row: String(row),
      page: String(page),
    });
    return this.get(`/sessions/${sessionId}/detail?${query}`);
  }

  getHistory(sessionId: string): Promise<HistoryResponse> {
    return this.get(`/sessions/${sessionId}/history`);
  }
}
