/** Wire types for the classifier service (see /api/v1 endpoints). */

export type Label = "fake" | "not_fake";

export interface PredictResponse {
  label: Label;
  probabilities: Record<Label, number>;
  model_version: string;
  latency_ms: number;
}

export interface HealthResponse {
  status: "ok";
  model_version: string;
}

/** One entry of a 422 validation body, FastAPI style. */
export interface FieldError {
  loc: (string | number)[];
  msg: string;
  type: string;
}

/** Non-422 error bodies carry a machine code plus a human message. */
export interface ServiceErrorBody {
  error: string;
  message: string;
}
