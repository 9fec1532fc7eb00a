// Thin fetch client for the service API. The base URL is the only
// configuration the console has.

import type {
  AskRequestBody,
  AskResponse,
  DatasetCreated,
  EvalResponse,
  SchemaPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(public baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await resp.json().catch(() => null);
    if (!resp.ok && resp.status !== 422 && resp.status !== 503) {
      const detail = body && typeof body === "object" && "error" in body ? body.error : resp.statusText;
      throw new ApiError(resp.status, String(detail));
    }
    return body as T;
  }

  health(): Promise<{ status: string; db_fingerprint: string; backends: string[] }> {
    return this.request("/api/health");
  }

  schema(): Promise<SchemaPayload> {
    return this.request("/api/schema");
  }

  // 503 still carries the full trace; callers render it like any response.
  ask(body: AskRequestBody): Promise<AskResponse> {
    return this.request("/api/ask", { method: "POST", body: JSON.stringify(body) });
  }

  createDataset(nSingle: number, nTwo: number, seed: number): Promise<DatasetCreated> {
    return this.request("/api/datasets", {
      method: "POST",
      body: JSON.stringify({ n_single: nSingle, n_two: nTwo, seed }),
    });
  }

  evaluate(datasetId: string, settings: string[], backend?: string): Promise<EvalResponse> {
    return this.request("/api/eval", {
      method: "POST",
      body: JSON.stringify({ dataset_id: datasetId, settings, backend }),
    });
  }
}
