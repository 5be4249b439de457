import type { FieldError, HealthResponse, PredictResponse, ServiceErrorBody } from "./types";

/**
 * Error raised for any non-2xx service answer.  `fieldErrors` is filled
 * for 422 validation responses, `code` for the structured 4xx/5xx bodies
 * (url_refused, decode_error, image_fetch_failed, model_unavailable).
 */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly code: string | null = null,
    readonly fieldErrors: FieldError[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseFor(response: Response): Promise<never> {
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // non-JSON body (proxy error page etc.); fall through to the generic message
  }
  if (response.status === 422 && body && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: FieldError[] }).detail;
    const msg = detail.map((e) => `${e.loc.join(".")}: ${e.msg}`).join("; ");
    throw new ApiError(422, msg || "invalid request", null, detail);
  }
  if (body && typeof body === "object" && "error" in body && "message" in body) {
    const err = body as ServiceErrorBody;
    throw new ApiError(response.status, err.message, err.error);
  }
  throw new ApiError(response.status, `service answered ${response.status}`);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async health(): Promise<HealthResponse> {
    const response = await fetch(this.url("/api/v1/health"));
    if (!response.ok) await raiseFor(response);
    return response.json();
  }

  /** Classify a headline with an uploaded image file. */
  async predictFile(headline: string, image: File): Promise<PredictResponse> {
    const form = new FormData();
    form.append("headline", headline);
    form.append("image", image);
    const response = await fetch(this.url("/api/v1/predict"), {
      method: "POST",
      body: form,
    });
    if (!response.ok) await raiseFor(response);
    return response.json();
  }

  /** Classify a headline with a server-side fetched image URL. */
  async predictUrl(headline: string, imageUrl: string): Promise<PredictResponse> {
    const response = await fetch(this.url("/api/v1/predict"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ headline, image_url: imageUrl }),
    });
    if (!response.ok) await raiseFor(response);
    return response.json();
  }
}

/**
 * Resolve the service origin: an explicit global set by the hosting page
 * wins, otherwise same-origin (the dev server proxies /api there).
 */
export function resolveBaseUrl(): string {
  const override = (globalThis as { MMFND_API_BASE?: unknown }).MMFND_API_BASE;
  return typeof override === "string" ? override : "";
}
