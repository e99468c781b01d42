/** Pure view layer: (state) -> DOM.
 *
 * Every number shown here is read verbatim from an API field; the only
 * transformations are string formatting.  Interactive elements carry stable
 * ids / data attributes that `app.ts` wires to store actions.
 */
import type { ApiClient } from "./api.js";
import { overlayForFrame, type DashboardState } from "./state.js";
import { LIKERT_DIMENSIONS, VIEWS, type PhaseScore } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else if (key === "text") node.textContent = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function titleCase(snake: string): string {
  return snake.replaceAll("_", " ");
}

function renderBanner(state: DashboardState): HTMLElement {
  const host = el("div", { id: "banner-host" });
  if (state.banner === null) return host;
  const banner = el("div", {
    class: `banner banner-${state.banner.kind}`,
    role: state.banner.kind === "error" ? "alert" : "status",
  });
  banner.append(el("span", { class: "banner-message", text: state.banner.message }));
  if (state.banner.retry !== undefined) {
    banner.append(el("button", { id: "banner-retry", type: "button", text: "Retry" }));
  }
  host.append(banner);
  return host;
}

function renderHeader(state: DashboardState): HTMLElement {
  const patientOptions = [
    el("option", { value: "", text: "Select patient…" }),
    ...state.patients.map((p) =>
      el("option", {
        value: p.patient_id,
        text: `${p.patient_id} (${p.pending_count} of ${p.segment_count} pending)`,
        ...(p.patient_id === state.selectedPatient ? { selected: "selected" } : {}),
      }),
    ),
  ];
  const segmentList = el(
    "ul",
    { id: "segment-list" },
    state.segments.map((record) =>
      el("li", {}, [
        el("button", {
          type: "button",
          class: "segment-link",
          "data-record-id": String(record.record_id),
          text: `${record.segment_id} · ${record.review_state}`,
        }),
      ]),
    ),
  );
  return el("header", { class: "dashboard-header" }, [
    el("h1", { text: "ARAT review" }),
    el("div", { class: "queue-controls" }, [
      el("select", { id: "patient-select" }, patientOptions),
      el("button", {
        id: "next-pending-button",
        type: "button",
        text: "Next pending (n)",
      }),
    ]),
    segmentList,
  ]);
}

function renderPhaseRow(phase: PhaseScore): HTMLElement {
  const chips = el("td", { class: "impairment-cell" });
  if (phase.impairments.length === 0) {
    chips.append(el("span", { class: "chip chip-none", text: "none observed" }));
  } else {
    for (const criterion of phase.impairments) {
      chips.append(
        el("span", { class: "chip", "data-criterion": criterion, text: titleCase(criterion) }),
      );
    }
  }
  return el("tr", { class: "phase-row", "data-phase": phase.phase }, [
    el("td", { class: "phase-name", text: titleCase(phase.phase) }),
    el("td", { class: "phase-score", text: String(phase.display_score) }),
    chips,
  ]);
}

function renderRecordPanel(state: DashboardState): HTMLElement {
  const record = state.record;
  if (record === null) {
    return el("section", { id: "record-panel", class: "empty" }, [
      el("p", {
        class: "empty-message",
        text: state.queueEmpty
          ? "No pending assessments. The review queue is empty."
          : "No record loaded.",
      }),
    ]);
  }
  const table = el("table", { class: "phase-table" }, [
    el("thead", {}, [
      el("tr", {}, [
        el("th", { text: "Phase" }),
        el("th", { text: "Score" }),
        el("th", { text: "Observed impairments" }),
      ]),
    ]),
    el("tbody", {}, record.phase_scores.map(renderPhaseRow)),
  ]);
  const qualityItems = Object.entries(record.quality).map(([criterion, probability]) =>
    el("li", { "data-criterion": criterion }, [
      el("span", { text: `${titleCase(criterion)}: ` }),
      el("span", { class: "quality-probability", text: probability.toFixed(2) }),
    ]),
  );
  return el("section", { id: "record-panel" }, [
    el("h2", { text: `Segment ${record.segment_id}` }),
    el("dl", { class: "record-facts" }, [
      el("dt", { text: "Patient" }),
      el("dd", { id: "fact-patient", text: record.patient_id }),
      el("dt", { text: "Review state" }),
      el("dd", { id: "fact-state", class: `state-${record.review_state}`, text: record.review_state }),
      el("dt", { text: "Task score" }),
      el("dd", { id: "fact-task-score", text: String(record.display_score) }),
      el("dt", { text: "Execution time" }),
      el("dd", { id: "fact-execution-time", text: `${record.execution_time.toFixed(2)} s` }),
    ]),
    table,
    qualityItems.length > 0
      ? el("details", { class: "quality-panel", open: "open" }, [
          el("summary", { text: "Criterion satisfaction probabilities" }),
          el("ul", { class: "quality-list" }, qualityItems),
        ])
      : el("span", {}),
  ]);
}

function renderPlayer(state: DashboardState, client: ApiClient): HTMLElement {
  const record = state.record;
  const player = el("section", { id: "player" });
  if (record === null) return player;

  const viewButtons = VIEWS.map((view) =>
    el("button", {
      type: "button",
      class: view === state.view ? "view-button active" : "view-button",
      "data-view": view,
      text: view,
      ...(view === state.view ? { disabled: "disabled" } : {}),
    }),
  );
  player.append(el("div", { class: "view-switch" }, viewButtons));

  const video = state.video;
  if (video === null || video.frame_count === 0) {
    player.append(el("p", { class: "player-note", text: "No video for this view." }));
    return player;
  }
  const stage = el("div", { class: "frame-stage" });
  stage.append(
    el("img", {
      id: "frame-image",
      alt: `${state.view} view frame ${state.frameIndex}`,
      src: client.resolveUrl(video.frames[state.frameIndex]!),
    }),
  );
  if (state.overlayEnabled) {
    const entry = overlayForFrame(state.saliency, state.frameIndex);
    if (entry !== null) {
      stage.append(
        el("img", {
          id: "overlay-image",
          class: "overlay",
          alt: "saliency overlay",
          src: client.resolveUrl(entry.url),
        }),
      );
    } else {
      stage.append(
        el("p", {
          class: "overlay-unavailable",
          text: "No saliency overlay exported for this view.",
        }),
      );
    }
  }
  player.append(stage);
  player.append(
    el("div", { class: "frame-controls" }, [
      el("button", { id: "frame-prev", type: "button", text: "◀" }),
      el("span", {
        id: "frame-position",
        text: `frame ${state.frameIndex + 1} / ${video.frame_count} @ ${video.fps} fps`,
      }),
      el("button", { id: "frame-next", type: "button", text: "▶" }),
      el("label", { class: "overlay-toggle" }, [
        (() => {
          const box = el("input", { id: "overlay-toggle", type: "checkbox" });
          box.checked = state.overlayEnabled;
          return box;
        })(),
        "saliency overlay",
      ]),
    ]),
  );
  return player;
}

function renderValidation(state: DashboardState, key: string): HTMLElement {
  const message = state.validation[key];
  return el("span", {
    id: `msg-${key.replaceAll(".", "-")}`,
    class: message ? "validation-message active" : "validation-message",
    text: message ?? "",
  });
}

function renderReviewForm(state: DashboardState): HTMLElement {
  const record = state.record;
  const form = el("section", { id: "review-form" });
  if (record === null) return form;

  const notes = el("textarea", {
    id: "draft-notes",
    rows: "3",
    placeholder: "Clinical notes for this assessment…",
  });
  notes.value = state.draft.notes;

  const override = el("select", { id: "draft-score" }, [
    el("option", { value: "", text: `keep automated score (${record.display_score})` }),
    el("option", { value: "2", text: "correct to 2" }),
    el("option", { value: "3", text: "correct to 3" }),
  ]);
  override.value = state.draft.task_score_override === null ? "" : String(state.draft.task_score_override);

  const likertRows = LIKERT_DIMENSIONS.map((dimension) => {
    const select = el("select", { id: `likert-${dimension}`, "data-dimension": dimension }, [
      el("option", { value: "", text: "—" }),
      ...[1, 2, 3, 4, 5].map((value) => el("option", { value: String(value), text: String(value) })),
    ]);
    const current = state.feedback.likert[dimension];
    select.value = current === undefined ? "" : String(current);
    return el("div", { class: "likert-row" }, [
      el("label", { for: `likert-${dimension}`, text: titleCase(dimension) }),
      select,
      renderValidation(state, `likert.${dimension}`),
    ]);
  });

  const manual = el("select", { id: "feedback-manual" }, [
    el("option", { value: "", text: "no manual score" }),
    el("option", { value: "2", text: "2" }),
    el("option", { value: "3", text: "3" }),
  ]);
  manual.value = state.feedback.manual_task_score === null ? "" : String(state.feedback.manual_task_score);

  const freeText = el("textarea", {
    id: "feedback-text",
    rows: "2",
    placeholder: "Study feedback (optional)…",
  });
  freeText.value = state.feedback.free_text;

  const submitted = record.review_state === "submitted";
  const save = el("button", { id: "save-button", type: "button", text: "Save draft" });
  const submit = el("button", {
    id: "submit-button",
    type: "button",
    text: "Submit & next (s)",
  });
  save.disabled = state.busy || submitted;
  submit.disabled = state.busy || submitted;

  form.append(
    el("h2", { text: "Review" }),
    el("label", { for: "draft-notes", text: "Notes" }),
    notes,
    el("label", { for: "draft-score", text: "Task score correction" }),
    override,
    el("fieldset", { class: "feedback-fieldset" }, [
      el("legend", { text: "Study questionnaire (attach by filling any field)" }),
      ...likertRows,
      el("label", { for: "feedback-manual", text: "Your manual task score" }),
      manual,
      el("label", { for: "feedback-text", text: "Comments" }),
      freeText,
    ]),
    el("div", { class: "actions" }, [save, submit]),
    submitted ? el("p", { class: "submitted-note", text: "This record has been submitted." }) : el("span", {}),
  );
  return form;
}

/** Build the whole dashboard DOM for a state snapshot. */
export function renderApp(state: DashboardState, client: ApiClient): HTMLElement {
  const root = el("div", { class: "dashboard" });
  root.append(
    renderHeader(state),
    renderBanner(state),
    el("main", { class: "dashboard-main" }, [
      renderRecordPanel(state),
      renderPlayer(state, client),
      renderReviewForm(state),
    ]),
  );
  return root;
}
