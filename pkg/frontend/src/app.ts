/** Wiring: mounts the dashboard, routes DOM events to store actions, and
 * re-renders on every store change (restoring focus so typing survives). */
import { ApiClient } from "./api.js";
import { renderApp } from "./render.js";
import { DashboardStore } from "./state.js";
import { VIEWS, type LikertDimension, type ViewName } from "./types.js";

function parseScore(value: string): 2 | 3 | null {
  return value === "2" ? 2 : value === "3" ? 3 : null;
}

export interface Dashboard {
  store: DashboardStore;
  /** Detach listeners (used by tests mounting several dashboards). */
  destroy: () => void;
}

export function mountDashboard(root: HTMLElement, client: ApiClient): Dashboard {
  const store = new DashboardStore(client);

  const rerender = () => {
    const active = document.activeElement as HTMLElement | null;
    const activeId = active?.id ?? null;
    const selection =
      active instanceof HTMLTextAreaElement || active instanceof HTMLInputElement
        ? ([active.selectionStart, active.selectionEnd] as [number | null, number | null])
        : null;
    root.replaceChildren(renderApp(store.state, client));
    if (activeId !== null && /^[A-Za-z][\w-]*$/.test(activeId)) {
      const restored = root.querySelector<HTMLElement>(`#${activeId}`);
      restored?.focus();
      if (
        selection !== null &&
        (restored instanceof HTMLTextAreaElement || restored instanceof HTMLInputElement)
      ) {
        restored.setSelectionRange(selection[0], selection[1]);
      }
    }
  };
  const unsubscribe = store.subscribe(rerender);

  const onClick = (event: Event) => {
    const target = (event.target as HTMLElement).closest("button");
    if (target === null) return;
    if (target.id === "next-pending-button") void store.openNextPending();
    else if (target.id === "save-button") void store.saveDraft();
    else if (target.id === "submit-button") void store.submitFlow();
    else if (target.id === "banner-retry") void store.state.banner?.retry?.();
    else if (target.id === "frame-prev") store.stepFrame(-1);
    else if (target.id === "frame-next") store.stepFrame(1);
    else if (target.dataset["view"] !== undefined) {
      const view = target.dataset["view"];
      if ((VIEWS as readonly string[]).includes(view!)) void store.setView(view as ViewName);
    } else if (target.dataset["recordId"] !== undefined) {
      void store.openRecord(Number(target.dataset["recordId"]));
    }
  };

  const onChange = (event: Event) => {
    const target = event.target as HTMLElement;
    if (target instanceof HTMLSelectElement) {
      if (target.id === "patient-select" && target.value !== "") {
        void store.selectPatient(target.value);
      } else if (target.id === "draft-score") {
        store.editDraft({ task_score_override: parseScore(target.value) });
      } else if (target.id === "feedback-manual") {
        store.editFeedback({ manual_task_score: parseScore(target.value) });
      } else if (target.dataset["dimension"] !== undefined) {
        const dimension = target.dataset["dimension"] as LikertDimension;
        store.setLikert(dimension, target.value === "" ? null : Number(target.value));
      }
    } else if (target instanceof HTMLInputElement && target.id === "overlay-toggle") {
      void store.toggleOverlay();
    }
  };

  const onInput = (event: Event) => {
    const target = event.target as HTMLElement;
    if (!(target instanceof HTMLTextAreaElement)) return;
    if (target.id === "draft-notes") store.editDraft({ notes: target.value });
    else if (target.id === "feedback-text") store.editFeedback({ free_text: target.value });
  };

  const typingIn = (node: EventTarget | null): boolean =>
    node instanceof HTMLTextAreaElement ||
    node instanceof HTMLInputElement ||
    node instanceof HTMLSelectElement;

  const onKeydown = (event: KeyboardEvent) => {
    if (typingIn(event.target) || event.altKey || event.ctrlKey || event.metaKey) return;
    if (event.key === "n") void store.openNextPending();
    else if (event.key === "s") void store.submitFlow();
  };

  root.addEventListener("click", onClick);
  root.addEventListener("change", onChange);
  root.addEventListener("input", onInput);
  root.ownerDocument.addEventListener("keydown", onKeydown);

  rerender();
  return {
    store,
    destroy: () => {
      unsubscribe();
      root.removeEventListener("click", onClick);
      root.removeEventListener("change", onChange);
      root.removeEventListener("input", onInput);
      root.ownerDocument.removeEventListener("keydown", onKeydown);
    },
  };
}

/** Browser entry point: mount on #app against the same-origin API. */
export function main(): void {
  const root = document.getElementById("app");
  if (root === null) throw new Error("no #app element to mount on");
  const params = new URLSearchParams(window.location.search);
  const client = new ApiClient({
    clinicianId: params.get("clinician") ?? "anonymous",
    baseUrl: "",
  });
  const dashboard = mountDashboard(root, client);
  void dashboard.store.init();
}
