import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, classifyBlob, fetchModelInfo } from "../src/api.js";

const RESULT = {
  predicted_label: "PG",
  probabilities: [0.1, 0.7, 0.1, 0.1],
  attention_weights: Array(20).fill(0.05),
  model_id: "ck-abc123",
  latency_ms: 12.5,
};

const INFO = {
  model_id: "ck-abc123",
  config: { sequence_length: 20 },
  parameter_count: 105284,
  labels: ["G", "PG", "PG-13", "R"],
  max_request_bytes: 67108864,
};

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => vi.unstubAllGlobals());

describe("classifyBlob", () => {
  it("posts the file bytes unchanged and parses the result", async () => {
    const calls: { url: string; init: RequestInit }[] = [];
    vi.stubGlobal("fetch", async (url: string, init: RequestInit) => {
      calls.push({ url, init });
      return jsonResponse(RESULT);
    });
    const bytes = new Uint8Array([70, 83, 81, 49, 9, 9]);
    const out = await classifyBlob("http://svc:8000", new Blob([bytes]));
    expect(out).toEqual(RESULT);
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://svc:8000/classify");
    expect(calls[0].init.method).toBe("POST");
    const sent = new Uint8Array(calls[0].init.body as ArrayBuffer);
    expect([...sent]).toEqual([...bytes]);
  });

  it("surfaces the server's 400 message", async () => {
    vi.stubGlobal("fetch", async () => jsonResponse({ error: "bad magic" }, 400));
    const err = await classifyBlob("http://svc", new Blob([1 as never]))
      .then(() => null, (e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).message).toBe("bad magic");
    expect((err as ApiError).status).toBe(400);
  });

  it("falls back to a generic message for non-JSON error bodies", async () => {
    vi.stubGlobal("fetch", async () => new Response("boom", { status: 502 }));
    await expect(classifyBlob("http://svc", new Blob([])))
      .rejects.toThrow("request failed with status 502");
  });

  it("rejects structurally malformed success bodies", async () => {
    const broken = { ...RESULT, probabilities: "high" };
    vi.stubGlobal("fetch", async () => jsonResponse(broken));
    await expect(classifyBlob("http://svc", new Blob([])))
      .rejects.toThrow("malformed /classify response");
  });

  it("rejects non-finite probability entries", async () => {
    const broken = { ...RESULT, probabilities: [0.5, Infinity, 0.2, 0.1] };
    vi.stubGlobal("fetch", async () => jsonResponse(broken));
    await expect(classifyBlob("http://svc", new Blob([])))
      .rejects.toThrow("malformed /classify response");
  });
});

describe("fetchModelInfo", () => {
  it("fetches and validates the model description", async () => {
    vi.stubGlobal("fetch", async (url: string) => {
      expect(url).toBe("http://svc:8000/model");
      return jsonResponse(INFO);
    });
    const info = await fetchModelInfo("http://svc:8000");
    expect(info.labels).toEqual(["G", "PG", "PG-13", "R"]);
    expect(info.parameter_count).toBe(105284);
  });

  it("rejects a response missing the label set", async () => {
    vi.stubGlobal("fetch", async () => jsonResponse({ model_id: "x" }));
    await expect(fetchModelInfo("http://svc"))
      .rejects.toThrow("malformed /model response");
  });

  it("propagates connection-level failures", async () => {
    vi.stubGlobal("fetch", async () => {
      throw new TypeError("fetch failed");
    });
    await expect(fetchModelInfo("http://svc")).rejects.toThrow("fetch failed");
  });
});
