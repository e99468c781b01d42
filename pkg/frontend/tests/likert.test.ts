/** Client-side questionnaire validation: an incomplete Likert blocks the
 * submit before any network call, with a message on each missing field. */
import { afterEach, describe, expect, it } from "vitest";

import { validateFeedback } from "../src/state.js";
import { click, mount, query, setSelect, settle, typeInto, unmount, type Harness } from "./helpers.js";

let harness: Harness | null = null;

afterEach(() => {
  if (harness !== null) unmount(harness);
  harness = null;
});

describe("likert validation", () => {
  it("blocks submit client-side with a message per missing dimension", async () => {
    harness = await mount();
    const { server, root, dashboard } = harness;
    setSelect(root, "#likert-accuracy", "4");
    await settle();

    click(root, "#submit-button");
    await settle();

    expect(server.countCalls(/POST/)).toBe(0);
    expect(dashboard.store.state.record?.review_state).toBe("pending");

    for (const dimension of ["usability", "interpretability", "clinical_relevance"]) {
      const message = query(root, `#msg-likert-${dimension}`);
      expect(message.textContent).toContain("required");
    }
    expect(query(root, "#msg-likert-accuracy").textContent).toBe("");
    expect(query(root, ".banner-error").textContent).toContain("questionnaire");
  });

  it("clears a field's message as soon as that field is filled", async () => {
    harness = await mount();
    const { root } = harness;
    setSelect(root, "#likert-accuracy", "4");
    click(root, "#submit-button");
    await settle();
    expect(query(root, "#msg-likert-usability").textContent).toContain("required");

    setSelect(root, "#likert-usability", "3");
    await settle();
    expect(query(root, "#msg-likert-usability").textContent).toBe("");
  });

  it("submits with the questionnaire once all four dimensions are rated", async () => {
    harness = await mount();
    const { server, root } = harness;
    setSelect(root, "#likert-accuracy", "4");
    setSelect(root, "#likert-usability", "3");
    setSelect(root, "#likert-interpretability", "5");
    setSelect(root, "#likert-clinical_relevance", "4");
    setSelect(root, "#feedback-manual", "3");
    typeInto(root, "#feedback-text", "clear overlays");
    await settle();

    click(root, "#submit-button");
    await settle();

    expect(server.countCalls(/POST \/records\/1\/feedback/)).toBe(1);
    expect(server.countCalls(/POST \/records\/1\/submit/)).toBe(1);
    expect(server.feedback[0]).toMatchObject({
      clinician_id: "clin_a",
      likert: { accuracy: 4, usability: 3, interpretability: 5, clinical_relevance: 4 },
      manual_task_score: 3,
      free_text: "clear overlays",
    });
    expect(server.records.get(1)?.review_state).toBe("submitted");
  });

  it("skips the feedback POST entirely when the questionnaire was not touched", async () => {
    harness = await mount();
    const { server, root } = harness;
    click(root, "#submit-button");
    await settle();
    expect(server.countCalls(/feedback/)).toBe(0);
    expect(server.countCalls(/POST \/records\/1\/submit/)).toBe(1);
  });

  it("treats free text alone as an attached questionnaire", () => {
    expect(validateFeedback({ likert: {}, manual_task_score: null, free_text: "" })).toEqual({});
    const messages = validateFeedback({
      likert: {},
      manual_task_score: null,
      free_text: "only a comment",
    });
    expect(Object.keys(messages)).toHaveLength(4);
    expect(messages["likert.accuracy"]).toContain("required");
  });

  it("rejects out-of-range values field by field", () => {
    const messages = validateFeedback({
      likert: { accuracy: 6, usability: 0.5 } as never,
      manual_task_score: null,
      free_text: "",
    });
    expect(messages["likert.accuracy"]).toContain("1 to 5");
    expect(messages["likert.usability"]).toContain("1 to 5");
    expect(messages["likert.interpretability"]).toContain("required");
  });
});
