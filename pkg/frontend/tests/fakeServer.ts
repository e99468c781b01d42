/** In-memory stand-in for the review API, faithful to its JSON contract:
 * same routes, same envelope shapes, same status codes (422 missing header
 * or bad view, 404 unknown resources, 409 submit conflicts), so the client
 * and UI are exercised against realistic responses with countable calls. */
import type { FetchLike } from "../src/api.js";
import type { AssessmentRecord, PhaseScore } from "../src/types.js";

export const LIKERT = ["accuracy", "usability", "interpretability", "clinical_relevance"];

let nextFeedbackId = 1;

export function makePhases(): PhaseScore[] {
  return [
    {
      phase: "initiation",
      score: 1,
      display_score: 3,
      impairments: ["movement_initiation_quality"],
    },
    {
      phase: "grasping",
      score: 0,
      display_score: 2,
      impairments: ["wrist_hand_aperture", "digit_positioning"],
    },
    { phase: "transporting", score: 1, display_score: 3, impairments: [] },
    { phase: "releasing", score: 1, display_score: 3, impairments: [] },
  ];
}

export function makeRecord(
  recordId: number,
  overrides: Partial<AssessmentRecord> = {},
): AssessmentRecord {
  return {
    record_id: recordId,
    segment_id: `seg_${String(recordId).padStart(4, "0")}`,
    patient_id: "patient_01",
    task_score: 1,
    display_score: 3,
    execution_time: 2.2,
    phase_scores: makePhases(),
    quality: { wrist_hand_aperture: 0.31, trunk_stabilization: 0.88 },
    model_provenance: { strategy: "late" },
    review_state: "pending",
    clinician_edits: null,
    created_at: "2026-08-19T10:00:00Z",
    updated_at: "2026-08-19T10:00:00Z",
    ...overrides,
  };
}

export interface SegmentMedia {
  views: string[];
  frameCount: number;
  fps: number;
  /** views that have an exported saliency overlay sequence */
  saliencyViews: string[];
}

export interface FakeServer {
  fetchFn: FetchLike;
  calls: string[];
  records: Map<number, AssessmentRecord>;
  feedback: Array<Record<string, unknown>>;
  media: Map<string, SegmentMedia>;
  /** When set, matching requests fail once with this status, then heal. */
  failNext: { pattern: RegExp; status: number } | null;
  countCalls: (pattern: RegExp) => number;
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function detail(status: number, message: string): Response {
  return json(status, { detail: message });
}

const VIEW_NAMES = ["ipsilateral", "contralateral", "top"];

export function makeFakeServer(records: AssessmentRecord[]): FakeServer {
  const server: FakeServer = {
    calls: [],
    records: new Map(records.map((r) => [r.record_id, structuredClone(r)])),
    feedback: [],
    media: new Map(),
    failNext: null,
    fetchFn: undefined as unknown as FetchLike,
    countCalls: (pattern) => server.calls.filter((c) => pattern.test(c)).length,
  };
  for (const record of records) {
    server.media.set(record.segment_id, {
      views: [...VIEW_NAMES],
      frameCount: 40,
      fps: 30,
      saliencyViews: ["ipsilateral"],
    });
  }

  server.fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, "http://fake");
    const method = (init?.method ?? "GET").toUpperCase();
    const call = `${method} ${url.pathname}${url.search}`;
    server.calls.push(call);

    if (server.failNext !== null && server.failNext.pattern.test(call)) {
      const status = server.failNext.status;
      server.failNext = null;
      return detail(status, "synthetic failure");
    }

    const headers = new Headers(init?.headers);
    const clinician = headers.get("X-Clinician-Id");
    const body = init?.body ? (JSON.parse(init.body as string) as Record<string, unknown>) : {};
    const path = url.pathname;

    if (method === "GET" && path === "/patients") {
      const byPatient = new Map<string, { n: number; pending: number }>();
      for (const record of server.records.values()) {
        const entry = byPatient.get(record.patient_id) ?? { n: 0, pending: 0 };
        entry.n += 1;
        if (record.review_state === "pending") entry.pending += 1;
        byPatient.set(record.patient_id, entry);
      }
      return json(200, {
        patients: [...byPatient.entries()]
          .sort(([a], [b]) => a.localeCompare(b))
          .map(([patient_id, entry]) => ({
            patient_id,
            segment_count: entry.n,
            pending_count: entry.pending,
          })),
      });
    }

    let match = path.match(/^\/patients\/([^/]+)\/segments$/);
    if (method === "GET" && match) {
      const segments = [...server.records.values()].filter(
        (r) => r.patient_id === decodeURIComponent(match![1]!),
      );
      if (segments.length === 0) return detail(404, `no segments for patient ${match[1]}`);
      return json(200, { patient_id: match[1], segments });
    }

    if (method === "GET" && path === "/records/next-pending") {
      const pending = [...server.records.values()]
        .filter((r) => r.review_state === "pending")
        .sort((a, b) => a.record_id - b.record_id);
      return json(200, { record: pending[0] ?? null });
    }

    match = path.match(/^\/records\/(\d+)$/);
    if (method === "GET" && match) {
      const record = server.records.get(Number(match[1]));
      return record ? json(200, record) : detail(404, `no record ${match[1]}`);
    }

    match = path.match(/^\/records\/(\d+)\/(save|submit|feedback)$/);
    if (method === "POST" && match) {
      if (!clinician) return detail(422, "X-Clinician-Id header required");
      const record = server.records.get(Number(match[1]));
      if (!record) return detail(404, `no record ${match[1]}`);
      const action = match[2];

      if (action === "feedback") {
        const problems: string[] = [];
        const likert = (body["likert"] ?? {}) as Record<string, unknown>;
        for (const dim of Object.keys(likert)) {
          if (!LIKERT.includes(dim)) problems.push(`unknown likert dimensions ['${dim}']`);
        }
        for (const [dim, value] of Object.entries(likert)) {
          if (!Number.isInteger(value) || (value as number) < 1 || (value as number) > 5) {
            problems.push(`likert ${dim}=${String(value)} outside 1..5`);
          }
        }
        const missing = LIKERT.filter((dim) => likert[dim] === undefined);
        if (missing.length > 0) problems.push(`missing likert dimensions ${JSON.stringify(missing)}`);
        const manual = body["manual_task_score"];
        if (manual !== null && manual !== undefined && manual !== 2 && manual !== 3) {
          problems.push(`manual_task_score ${String(manual)} outside display domain {2,3}`);
        }
        if (problems.length > 0) return detail(422, problems.join("; "));
        const stored = {
          feedback_id: nextFeedbackId++,
          clinician_id: clinician,
          record_id: record.record_id,
          likert,
          manual_task_score: manual ?? null,
          free_text: body["free_text"] ?? "",
          themes: body["themes"] ?? [],
          created_at: "2026-08-19T11:00:00Z",
        };
        server.feedback.push(stored);
        return json(200, stored);
      }

      if (record.review_state === "submitted") {
        return detail(
          409,
          action === "save"
            ? "record already submitted; cannot save"
            : `record ${record.record_id} was already submitted; cannot submit`,
        );
      }
      const edits = body["edits"] as Record<string, unknown> | null | undefined;
      if (action === "save") {
        record.clinician_edits = { ...(edits ?? {}) };
        record.review_state = "saved";
      } else {
        if (edits !== null && edits !== undefined) record.clinician_edits = { ...edits };
        record.review_state = "submitted";
      }
      record.updated_at = "2026-08-19T12:00:00Z";
      return json(200, record);
    }

    match = path.match(/^\/segments\/([^/]+)\/video$/);
    if (method === "GET" && match) {
      const segmentId = decodeURIComponent(match[1]!);
      const media = server.media.get(segmentId);
      if (!media) return detail(404, `no segment ${segmentId}`);
      const view = url.searchParams.get("view") ?? "";
      if (!VIEW_NAMES.includes(view)) return detail(422, `unknown view '${view}'`);
      if (!media.views.includes(view)) {
        return detail(404, `segment ${segmentId} has no ${view} view`);
      }
      return json(200, {
        segment_id: segmentId,
        view,
        fps: media.fps,
        frame_count: media.frameCount,
        frames: Array.from(
          { length: media.frameCount },
          (_, i) => `/segments/${segmentId}/frames/${i}?view=${view}`,
        ),
      });
    }

    match = path.match(/^\/segments\/([^/]+)\/saliency$/);
    if (method === "GET" && match) {
      const segmentId = decodeURIComponent(match[1]!);
      const media = server.media.get(segmentId);
      if (!media) return detail(404, `no segment ${segmentId}`);
      const view = url.searchParams.get("view") ?? "";
      if (!VIEW_NAMES.includes(view)) return detail(422, `unknown view '${view}'`);
      if (!media.saliencyViews.includes(view)) {
        return detail(404, `no saliency export for segment ${segmentId} view ${view}`);
      }
      const sampled = [0, 13, 26, 39].filter((i) => i < media.frameCount);
      return json(200, {
        segment_id: segmentId,
        view,
        layer: "mixed_4b",
        target_class: 1,
        is_zero: false,
        heatmap: "heatmaps.npz",
        frames: sampled.map((source, step) => ({
          overlay: `overlay_${String(step).padStart(4, "0")}.png`,
          clip_step: step,
          source_frame: source,
          url: `/segments/${segmentId}/saliency/overlay_${String(step).padStart(4, "0")}.png?view=${view}`,
        })),
      });
    }

    if (method === "GET" && path === "/study/summary") {
      const byState: Record<string, number> = {};
      for (const record of server.records.values()) {
        byState[record.review_state] = (byState[record.review_state] ?? 0) + 1;
      }
      return json(200, {
        records: { total: server.records.size, by_state: byState },
        agreement: null,
        feedback: { responses: server.feedback.length, likert: {}, themes: {} },
      });
    }

    return detail(404, `unrouted: ${method} ${path}`);
  };

  return server;
}
