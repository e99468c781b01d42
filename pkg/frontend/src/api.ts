/** Typed client for the review API.
 *
 * Every write carries the `X-Clinician-Id` header the server requires.
 * HTTP errors become `ApiError` (409 specifically `ConflictError`) with the
 * server's `detail` string, so callers can surface the server's own words.
 */
import type {
  AssessmentRecord,
  FeedbackBody,
  PatientSummary,
  SaliencyManifest,
  StudySummary,
  VideoManifest,
  ViewName,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export class ConflictError extends ApiError {
  constructor(detail: string) {
    super(409, detail);
    this.name = "ConflictError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || `status ${response.status}`;
  }
}

export interface ApiClientOptions {
  clinicianId: string;
  /** Prefix for every request; "" means same-origin relative URLs. */
  baseUrl?: string;
  /** Injectable for tests; defaults to the global fetch. */
  fetchFn?: FetchLike;
}

export class ApiClient {
  readonly clinicianId: string;
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(options: ApiClientOptions) {
    this.clinicianId = options.clinicianId;
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.fetchFn = options.fetchFn ?? ((input, init) => fetch(input, init));
  }

  /** Absolute form of a server-relative media path (frame/overlay URLs). */
  resolveUrl(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "X-Clinician-Id": this.clinicianId };
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.resolveUrl(path), init);
    if (!response.ok) {
      const detail = await errorDetail(response);
      throw response.status === 409 ? new ConflictError(detail) : new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async listPatients(): Promise<PatientSummary[]> {
    const body = await this.request<{ patients: PatientSummary[] }>("GET", "/patients");
    return body.patients;
  }

  async patientSegments(patientId: string): Promise<AssessmentRecord[]> {
    const body = await this.request<{ segments: AssessmentRecord[] }>(
      "GET",
      `/patients/${encodeURIComponent(patientId)}/segments`,
    );
    return body.segments;
  }

  async nextPending(): Promise<AssessmentRecord | null> {
    const body = await this.request<{ record: AssessmentRecord | null }>(
      "GET",
      "/records/next-pending",
    );
    return body.record;
  }

  getRecord(recordId: number): Promise<AssessmentRecord> {
    return this.request("GET", `/records/${recordId}`);
  }

  saveRecord(recordId: number, edits: Record<string, unknown>): Promise<AssessmentRecord> {
    return this.request("POST", `/records/${recordId}/save`, { edits });
  }

  submitRecord(
    recordId: number,
    edits: Record<string, unknown> | null,
  ): Promise<AssessmentRecord> {
    return this.request("POST", `/records/${recordId}/submit`, { edits });
  }

  postFeedback(recordId: number, feedback: FeedbackBody): Promise<unknown> {
    return this.request("POST", `/records/${recordId}/feedback`, feedback);
  }

  videoManifest(segmentId: string, view: ViewName): Promise<VideoManifest> {
    return this.request(
      "GET",
      `/segments/${encodeURIComponent(segmentId)}/video?view=${view}`,
    );
  }

  /** Overlay manifest for one view, or null when none was exported. */
  async saliencyManifest(segmentId: string, view: ViewName): Promise<SaliencyManifest | null> {
    try {
      return await this.request<SaliencyManifest>(
        "GET",
        `/segments/${encodeURIComponent(segmentId)}/saliency?view=${view}`,
      );
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) return null;
      throw error;
    }
  }

  studySummary(): Promise<StudySummary> {
    return this.request("GET", "/study/summary");
  }
}
