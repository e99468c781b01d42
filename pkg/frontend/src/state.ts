/** Dashboard state and actions.
 *
 * The store holds exactly (server data, local drafts, transient UI state);
 * the view layer renders it without computing any score.  Local edits never
 * touch the server record until an explicit save or submit, and a submit
 * conflict keeps the local draft intact so nothing typed is lost.
 */
import { ApiClient, ApiError, ConflictError } from "./api.js";
import {
  LIKERT_DIMENSIONS,
  type AssessmentRecord,
  type FeedbackBody,
  type LikertDimension,
  type PatientSummary,
  type SaliencyEntry,
  type SaliencyManifest,
  type VideoManifest,
  type ViewName,
} from "./types.js";

/** Clinician edits persisted in the record's `clinician_edits` field. */
export interface RecordDraft {
  notes: string;
  /** Manual correction of the displayed task score, or null to keep it. */
  task_score_override: 2 | 3 | null;
}

/** Study questionnaire, kept local until submission. */
export interface FeedbackDraft {
  likert: Partial<Record<LikertDimension, number>>;
  manual_task_score: 2 | 3 | null;
  free_text: string;
}

export interface Banner {
  kind: "error" | "info";
  message: string;
  /** Present when the failed action can be retried as-is. */
  retry?: () => Promise<void>;
}

export interface DashboardState {
  patients: PatientSummary[];
  selectedPatient: string | null;
  segments: AssessmentRecord[];
  record: AssessmentRecord | null;
  view: ViewName;
  video: VideoManifest | null;
  frameIndex: number;
  overlayEnabled: boolean;
  saliency: SaliencyManifest | null;
  draft: RecordDraft;
  feedback: FeedbackDraft;
  /** Per-field validation messages keyed like "likert.accuracy". */
  validation: Record<string, string>;
  banner: Banner | null;
  queueEmpty: boolean;
  busy: boolean;
}

export function emptyDraft(): RecordDraft {
  return { notes: "", task_score_override: null };
}

export function emptyFeedback(): FeedbackDraft {
  return { likert: {}, manual_task_score: null, free_text: "" };
}

function initialState(): DashboardState {
  return {
    patients: [],
    selectedPatient: null,
    segments: [],
    record: null,
    view: "ipsilateral",
    video: null,
    frameIndex: 0,
    overlayEnabled: false,
    saliency: null,
    draft: emptyDraft(),
    feedback: emptyFeedback(),
    validation: {},
    banner: null,
    queueEmpty: false,
    busy: false,
  };
}

/** Rebuild the local draft from a record's server-side `clinician_edits`. */
export function draftFromRecord(record: AssessmentRecord): RecordDraft {
  const edits = record.clinician_edits ?? {};
  const notes = typeof edits["notes"] === "string" ? (edits["notes"] as string) : "";
  const override = edits["task_score_override"];
  return {
    notes,
    task_score_override: override === 2 || override === 3 ? override : null,
  };
}

function draftToEdits(draft: RecordDraft): Record<string, unknown> {
  return { notes: draft.notes, task_score_override: draft.task_score_override };
}

/** Whether the clinician touched the questionnaire at all. */
export function feedbackAttached(feedback: FeedbackDraft): boolean {
  return (
    Object.keys(feedback.likert).length > 0 ||
    feedback.manual_task_score !== null ||
    feedback.free_text.trim() !== ""
  );
}

/** Per-field messages; empty object means the draft may be submitted. */
export function validateFeedback(feedback: FeedbackDraft): Record<string, string> {
  if (!feedbackAttached(feedback)) return {};
  const messages: Record<string, string> = {};
  for (const dimension of LIKERT_DIMENSIONS) {
    const value = feedback.likert[dimension];
    if (value === undefined) {
      messages[`likert.${dimension}`] = "required: rate 1–5";
    } else if (!Number.isInteger(value) || value < 1 || value > 5) {
      messages[`likert.${dimension}`] = "must be a whole number from 1 to 5";
    }
  }
  return messages;
}

function feedbackBody(feedback: FeedbackDraft): FeedbackBody {
  return {
    likert: { ...feedback.likert } as Record<string, number>,
    manual_task_score: feedback.manual_task_score,
    free_text: feedback.free_text,
    themes: [],
  };
}

/** The overlay shown at a video frame: the latest one at or before it. */
export function overlayForFrame(
  saliency: SaliencyManifest | null,
  frameIndex: number,
): SaliencyEntry | null {
  if (saliency === null) return null;
  let best: SaliencyEntry | null = null;
  for (const entry of saliency.frames) {
    if (entry.source_frame <= frameIndex && (best === null || entry.source_frame > best.source_frame)) {
      best = entry;
    }
  }
  return best;
}

type Listener = (state: DashboardState) => void;

export class DashboardStore {
  readonly state: DashboardState = initialState();
  private readonly listeners = new Set<Listener>();

  constructor(private readonly client: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** Run a server call with busy flagging and a retryable error banner. */
  private async guarded(action: () => Promise<void>): Promise<void> {
    this.state.busy = true;
    this.state.banner = null;
    this.emit();
    try {
      await action();
    } catch (error) {
      this.state.banner = {
        kind: "error",
        message: error instanceof Error ? error.message : String(error),
        retry: () => this.guarded(action),
      };
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  /** Load the record named in the URL hash (a reload), else the queue head. */
  async init(): Promise<void> {
    await this.guarded(async () => {
      this.state.patients = await this.client.listPatients();
      const restored =
        typeof window === "undefined"
          ? null
          : window.location.hash.match(/^#record\/(\d+)$/);
      if (restored !== null) {
        await this.loadRecordObject(await this.client.getRecord(Number(restored[1])));
      } else {
        await this.loadRecordObject(await this.client.nextPending());
      }
    });
  }

  async selectPatient(patientId: string): Promise<void> {
    await this.guarded(async () => {
      this.state.selectedPatient = patientId;
      this.state.segments = await this.client.patientSegments(patientId);
    });
  }

  async openRecord(recordId: number): Promise<void> {
    await this.guarded(async () => {
      await this.loadRecordObject(await this.client.getRecord(recordId));
    });
  }

  async openNextPending(): Promise<void> {
    await this.guarded(async () => {
      await this.loadRecordObject(await this.client.nextPending());
    });
  }

  /** Install a fetched record and pull the media for the current view. */
  private async loadRecordObject(record: AssessmentRecord | null): Promise<void> {
    if (typeof window !== "undefined") {
      window.location.hash = record === null ? "" : `record/${record.record_id}`;
    }
    if (record === null) {
      this.state.record = null;
      this.state.video = null;
      this.state.saliency = null;
      this.state.queueEmpty = true;
      return;
    }
    this.state.record = record;
    this.state.queueEmpty = false;
    this.state.draft = draftFromRecord(record);
    this.state.feedback = emptyFeedback();
    this.state.validation = {};
    this.state.frameIndex = 0;
    await this.refreshMedia();
  }

  /** Fetch the video manifest (and overlays if enabled) for the view. */
  private async refreshMedia(): Promise<void> {
    const record = this.state.record;
    if (record === null) return;
    this.state.video = await this.client.videoManifest(record.segment_id, this.state.view);
    this.state.frameIndex = Math.min(
      this.state.frameIndex,
      Math.max(0, this.state.video.frame_count - 1),
    );
    this.state.saliency = this.state.overlayEnabled
      ? await this.client.saliencyManifest(record.segment_id, this.state.view)
      : null;
  }

  /** Switch camera view: re-requests only the media, never the record. */
  async setView(view: ViewName): Promise<void> {
    if (view === this.state.view || this.state.record === null) return;
    await this.guarded(async () => {
      this.state.view = view;
      await this.refreshMedia();
    });
  }

  async toggleOverlay(): Promise<void> {
    await this.guarded(async () => {
      this.state.overlayEnabled = !this.state.overlayEnabled;
      const record = this.state.record;
      if (this.state.overlayEnabled && record !== null) {
        this.state.saliency = await this.client.saliencyManifest(
          record.segment_id,
          this.state.view,
        );
      } else {
        this.state.saliency = null;
      }
    });
  }

  setFrame(frameIndex: number): void {
    const count = this.state.video?.frame_count ?? 0;
    if (count === 0) return;
    this.state.frameIndex = Math.max(0, Math.min(count - 1, frameIndex));
    this.emit();
  }

  stepFrame(delta: number): void {
    this.setFrame(this.state.frameIndex + delta);
  }

  /** Local edits: update state only; the server copy changes on save/submit. */
  editDraft(patch: Partial<RecordDraft>): void {
    Object.assign(this.state.draft, patch);
    this.emit();
  }

  editFeedback(patch: Partial<FeedbackDraft>): void {
    if (patch.likert !== undefined) {
      this.state.feedback.likert = { ...this.state.feedback.likert, ...patch.likert };
      for (const dimension of Object.keys(patch.likert)) {
        delete this.state.validation[`likert.${dimension}`];
      }
    }
    if (patch.manual_task_score !== undefined) {
      this.state.feedback.manual_task_score = patch.manual_task_score;
    }
    if (patch.free_text !== undefined) {
      this.state.feedback.free_text = patch.free_text;
    }
    this.emit();
  }

  setLikert(dimension: LikertDimension, value: number | null): void {
    if (value === null) {
      delete this.state.feedback.likert[dimension];
      delete this.state.validation[`likert.${dimension}`];
      this.emit();
      return;
    }
    this.editFeedback({ likert: { [dimension]: value } });
  }

  /** POST the draft; the record stays open ("save and keep working"). */
  async saveDraft(): Promise<void> {
    const record = this.state.record;
    if (record === null) return;
    await this.guarded(async () => {
      this.state.record = await this.client.saveRecord(
        record.record_id,
        draftToEdits(this.state.draft),
      );
      this.state.banner = { kind: "info", message: "Draft saved." };
    });
  }

  /**
   * Validate locally, then submit (attaching the questionnaire when filled)
   * and move on to the next pending record.  Validation failures never reach
   * the network; a concurrent-submission conflict is surfaced and the local
   * draft is preserved.
   */
  async submitFlow(): Promise<void> {
    const record = this.state.record;
    if (record === null) return;
    const messages = validateFeedback(this.state.feedback);
    if (Object.keys(messages).length > 0) {
      this.state.validation = messages;
      this.state.banner = {
        kind: "error",
        message: "Complete the highlighted questionnaire fields before submitting.",
      };
      this.emit();
      return;
    }
    this.state.validation = {};
    this.state.busy = true;
    this.state.banner = null;
    this.emit();
    try {
      if (feedbackAttached(this.state.feedback)) {
        await this.client.postFeedback(record.record_id, feedbackBody(this.state.feedback));
      }
      await this.client.submitRecord(record.record_id, draftToEdits(this.state.draft));
      await this.loadRecordObject(await this.client.nextPending());
    } catch (error) {
      if (error instanceof ConflictError) {
        // Someone else finalized this record; keep every local edit.
        this.state.banner = {
          kind: "error",
          message: `Not submitted: ${error.detail}. Your draft is preserved below.`,
        };
        try {
          this.state.record = await this.client.getRecord(record.record_id);
        } catch {
          // The stale copy is still shown; the banner already explains.
        }
      } else if (error instanceof ApiError || error instanceof Error) {
        this.state.banner = {
          kind: "error",
          message: error.message,
          retry: () => this.submitFlow(),
        };
      }
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }
}
