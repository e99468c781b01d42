/** Shared test scaffolding: mount a dashboard against the fake server. */
import { ApiClient } from "../src/api.js";
import { mountDashboard, type Dashboard } from "../src/app.js";
import type { AssessmentRecord } from "../src/types.js";
import { makeFakeServer, makeRecord, type FakeServer } from "./fakeServer.js";

export interface Harness {
  server: FakeServer;
  client: ApiClient;
  dashboard: Dashboard;
  root: HTMLElement;
}

/** Let every queued promise chain (fake fetches resolve instantly) settle. */
export async function settle(): Promise<void> {
  for (let i = 0; i < 20; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export async function mount(
  records: AssessmentRecord[] = [makeRecord(1)],
  options: { init?: boolean; server?: FakeServer; preserveHash?: boolean } = {},
): Promise<Harness> {
  if (options.preserveHash !== true) window.location.hash = "";
  const server = options.server ?? makeFakeServer(records);
  const client = new ApiClient({ clinicianId: "clin_a", fetchFn: server.fetchFn });
  const root = document.createElement("div");
  document.body.append(root);
  const dashboard = mountDashboard(root, client);
  if (options.init !== false) {
    await dashboard.store.init();
    await settle();
  }
  return { server, client, dashboard, root };
}

export function unmount(harness: Harness): void {
  harness.dashboard.destroy();
  harness.root.remove();
}

export function query<T extends HTMLElement>(root: HTMLElement, selector: string): T {
  const node = root.querySelector<T>(selector);
  if (node === null) throw new Error(`expected element ${selector}`);
  return node;
}

export function setSelect(root: HTMLElement, selector: string, value: string): void {
  const select = query<HTMLSelectElement>(root, selector);
  select.value = value;
  select.dispatchEvent(new Event("change", { bubbles: true }));
}

export function typeInto(root: HTMLElement, selector: string, text: string): void {
  const area = query<HTMLTextAreaElement>(root, selector);
  area.value = text;
  area.dispatchEvent(new Event("input", { bubbles: true }));
}

export function click(root: HTMLElement, selector: string): void {
  query<HTMLButtonElement>(root, selector).click();
}
