// Thin typed client over the review API. All artifact mutations go through
// POST /edits with an expected version (compare-and-set).

import type { ConflictBundle, EditCommand, ScenarioRow } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

async function parseError(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  listPending(): Promise<{ scenarios: ScenarioRow[] }> {
    return this.get("/api/scenarios?status=awaiting_human");
  }

  bundle(id: string): Promise<ConflictBundle> {
    return this.get(`/api/scenarios/${id}/bundle`);
  }

  status(id: string): Promise<{ id: string; state: string; round: number }> {
    return this.get(`/api/scenarios/${id}/status`);
  }

  submitEdit(
    id: string,
    command: EditCommand,
    expectedVersion: number,
    provenance: "human" | "automated" = "human",
  ): Promise<ConflictBundle> {
    return this.post(`/api/scenarios/${id}/edits`, {
      command,
      provenance,
      expected_version: expectedVersion,
    });
  }

  revalidate(id: string): Promise<{ id: string; state: string }> {
    return this.post(`/api/scenarios/${id}/revalidate`);
  }

  discard(id: string): Promise<{ id: string; state: string }> {
    return this.post(`/api/scenarios/${id}/discard`);
  }
}
