import type { AssessmentResponse, Mode } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`assessment service error ${status}: ${detail}`);
  }
}

/** Closed mode needs a target sentence; open mode must not send one. */
export function validateRequest(mode: Mode, targetText: string): string | null {
  if (mode === "closed" && targetText.trim() === "") {
    return "Closed mode needs the target sentence you are reading.";
  }
  if (mode === "open" && targetText.trim() !== "") {
    return "Open mode must not send a target sentence.";
  }
  return null;
}

export class AssessmentClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  async health(): Promise<{ status: string }> {
    const res = await this.fetchFn(`${this.baseUrl}/healthz`);
    if (!res.ok) throw new ApiError(res.status, "health check failed");
    return res.json();
  }

  async assess(audio: Blob, mode: Mode, targetText?: string): Promise<AssessmentResponse> {
    const problem = validateRequest(mode, targetText ?? "");
    if (problem) throw new Error(problem);
    const form = new FormData();
    form.append("audio", audio, "attempt.wav");
    form.append("mode", mode);
    if (mode === "closed" && targetText) form.append("target_text", targetText);
    const res = await this.fetchFn(`${this.baseUrl}/v1/assess`, {
      method: "POST",
      body: form,
    });
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return res.json();
  }
}
