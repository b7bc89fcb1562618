import type { AssessmentResponse } from "../src/types.js";

/** Deterministic in-memory Storage double. */
export class MemoryStorage implements Storage {
  private map = new Map<string, string>();

  get length(): number {
    return this.map.size;
  }
  clear(): void {
    this.map.clear();
  }
  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }
  key(index: number): string | null {
    return [...this.map.keys()][index] ?? null;
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/**
 * fetch double that replays the recorded API payloads: GET /healthz and
 * POST /v1/assess routed by the submitted mode field.
 */
export function recordedFetch(fixtures: {
  closed: AssessmentResponse;
  open: AssessmentResponse;
  healthz: unknown;
}): typeof fetch {
  const calls: { url: string; mode?: string }[] = [];
  const fn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    if (url.endsWith("/healthz")) {
      calls.push({ url });
      return jsonResponse(fixtures.healthz);
    }
    if (url.endsWith("/v1/assess")) {
      const form = init?.body as FormData;
      const mode = String(form.get("mode"));
      calls.push({ url, mode });
      if (mode === "closed" && !form.get("target_text")) {
        return jsonResponse({ detail: "closed mode requires target_text" }, 400);
      }
      return jsonResponse(mode === "closed" ? fixtures.closed : fixtures.open);
    }
    throw new Error(`unexpected request: ${url}`);
  }) as typeof fetch;
  (fn as unknown as { calls: typeof calls }).calls = calls;
  return fn;
}

export function wavBlob(): Blob {
  return new Blob([new Uint8Array([82, 73, 70, 70, 0, 0, 0, 0])], { type: "audio/wav" });
}
