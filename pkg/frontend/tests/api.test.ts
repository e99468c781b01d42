/** The typed client: URL construction, headers, envelopes, error mapping. */
import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, ConflictError } from "../src/api.js";
import { makeFakeServer, makeRecord } from "./fakeServer.js";

function clientFor(server: ReturnType<typeof makeFakeServer>): ApiClient {
  return new ApiClient({ clinicianId: "clin_a", fetchFn: server.fetchFn });
}

describe("ApiClient", () => {
  it("lists patients from the envelope", async () => {
    const server = makeFakeServer([makeRecord(1), makeRecord(2, { patient_id: "patient_02" })]);
    const patients = await clientFor(server).listPatients();
    expect(patients.map((p) => p.patient_id)).toEqual(["patient_01", "patient_02"]);
    expect(patients[0]).toMatchObject({ segment_count: 1, pending_count: 1 });
    expect(server.calls).toEqual(["GET /patients"]);
  });

  it("unwraps next-pending and returns null when the queue is empty", async () => {
    const server = makeFakeServer([makeRecord(1, { review_state: "submitted" })]);
    expect(await clientFor(server).nextPending()).toBeNull();
  });

  it("sends the clinician header and edits body on save", async () => {
    const server = makeFakeServer([makeRecord(1)]);
    const saved = await clientFor(server).saveRecord(1, { notes: "check grip" });
    expect(saved.review_state).toBe("saved");
    expect(saved.clinician_edits).toEqual({ notes: "check grip" });
    expect(server.calls).toEqual(["POST /records/1/save"]);
  });

  it("maps 409 to ConflictError with the server's detail", async () => {
    const server = makeFakeServer([makeRecord(1, { review_state: "submitted" })]);
    const error = await clientFor(server)
      .submitRecord(1, null)
      .then(
        () => null,
        (e: unknown) => e,
      );
    expect(error).toBeInstanceOf(ConflictError);
    expect((error as ConflictError).detail).toContain("already submitted");
  });

  it("maps other failures to ApiError with status", async () => {
    const server = makeFakeServer([]);
    const error = await clientFor(server)
      .getRecord(99)
      .then(
        () => null,
        (e: unknown) => e,
      );
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(404);
  });

  it("builds view-scoped media URLs and returns null for missing saliency", async () => {
    const record = makeRecord(1);
    const server = makeFakeServer([record]);
    const manifest = await clientFor(server).videoManifest(record.segment_id, "top");
    expect(manifest.frame_count).toBe(40);
    expect(manifest.frames[0]).toBe(`/segments/${record.segment_id}/frames/0?view=top`);

    const missing = await clientFor(server).saliencyManifest(record.segment_id, "top");
    expect(missing).toBeNull();
    const present = await clientFor(server).saliencyManifest(record.segment_id, "ipsilateral");
    expect(present?.frames[0]?.source_frame).toBe(0);
  });

  it("prefixes a configured base URL onto every request", async () => {
    const server = makeFakeServer([makeRecord(1)]);
    const client = new ApiClient({
      clinicianId: "clin_a",
      baseUrl: "http://api.example:8000/",
      fetchFn: server.fetchFn,
    });
    await client.getRecord(1);
    expect(client.resolveUrl("/x.png")).toBe("http://api.example:8000/x.png");
    expect(server.calls).toEqual(["GET /records/1"]);
  });
});
