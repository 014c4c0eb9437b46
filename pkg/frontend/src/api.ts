import type { ApiError, BatchResponse, ImputeRequest, ImputeResult, ModelInfo } from "./types";

// Thrown when the service answers with an error body; carries the
// machine code so the UI can render it inline.
export class ServiceError extends Error {
  code: string;
  status: number;

  constructor(status: number, err: ApiError) {
    super(err.message);
    this.code = err.code;
    this.status = status;
  }
}

let nextId = 1;

export function newRequestId(): number {
  return nextId++;
}

async function readJson(res: Response): Promise<any> {
  const body = await res.json();
  if (!res.ok) {
    const err: ApiError = body && body.error
      ? body.error
      : { code: `HTTP${res.status}`, message: res.statusText };
    throw new ServiceError(res.status, err);
  }
  return body;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  async modelInfo(): Promise<ModelInfo> {
    return readJson(await fetch(`${this.baseUrl}/v1/model`));
  }

  async imputePoint(req: ImputeRequest): Promise<ImputeResult> {
    const res = await fetch(`${this.baseUrl}/v1/impute`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req)
    });
    return readJson(res);
  }

  // rows go up as JSON; the service also takes CSV but parsing
  // client-side first gives the preview and keeps one code path
  async imputeBatch(rows: ImputeRequest[]): Promise<BatchResponse> {
    const res = await fetch(`${this.baseUrl}/v1/impute/batch`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(rows)
    });
    return readJson(res);
  }
}
