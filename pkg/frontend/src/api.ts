/** Typed client for the classification service's JSON API. */

export interface ClassifyResponse {
  predicted_label: string;
  probabilities: number[];
  attention_weights: number[];
  model_id: string;
  latency_ms: number | null;
}

export interface ModelInfo {
  model_id: string;
  config: Record<string, unknown>;
  parameter_count: number;
  labels: string[];
  max_request_bytes: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorMessage(res: Response): Promise<string> {
  try {
    const body: unknown = await res.json();
    if (typeof body === "object" && body !== null &&
        typeof (body as { error?: unknown }).error === "string") {
      return (body as { error: string }).error;
    }
  } catch {
    // non-JSON error body; fall through to the generic message
  }
  return `request failed with status ${res.status}`;
}

function isNumberArray(x: unknown): x is number[] {
  return Array.isArray(x) &&
    x.every((v) => typeof v === "number" && Number.isFinite(v));
}

export async function fetchModelInfo(base: string): Promise<ModelInfo> {
  const res = await fetch(`${base}/model`);
  if (!res.ok) throw new ApiError(await errorMessage(res), res.status);
  const body = await res.json() as Partial<ModelInfo>;
  if (typeof body.model_id !== "string" || !Array.isArray(body.labels) ||
      !body.labels.every((l) => typeof l === "string")) {
    throw new ApiError("malformed /model response", res.status);
  }
  return body as ModelInfo;
}

/** Forwards the uploaded bytes unchanged; the service detects the format. */
export async function classifyBlob(base: string, blob: Blob): Promise<ClassifyResponse> {
  const res = await fetch(`${base}/classify`, {
    method: "POST",
    headers: { "content-type": "application/octet-stream" },
    body: await blob.arrayBuffer(),
  });
  if (!res.ok) throw new ApiError(await errorMessage(res), res.status);
  const body = await res.json() as Partial<ClassifyResponse>;
  if (typeof body.predicted_label !== "string" ||
      typeof body.model_id !== "string" ||
      !isNumberArray(body.probabilities) ||
      !isNumberArray(body.attention_weights)) {
    throw new ApiError("malformed /classify response", res.status);
  }
  return body as ClassifyResponse;
}
