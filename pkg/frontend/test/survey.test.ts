import { describe, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  canSubmitSurvey,
  initialSurveyState,
  renderSurveyHtml,
  setHelpful,
  submitSurveyFlow,
  toggleReason,
} from "../src/survey.js";
import { jsonResponse, scriptedFetch, RecordedRequest } from "./helpers.js";

describe("helpfulness survey", () => {
  test("disabled with explanation before the answer is recorded", () => {
    const state = initialSurveyState("s1", false);
    expect(canSubmitSurvey(setHelpful(state, true))).toBe(false);
    expect(renderSurveyHtml(state)).toContain("Submit your answer first");
  });

  test("happy path locks the form", async () => {
    const recorded: RecordedRequest[] = [];
    const api = new ApiClient(
      "http://x",
      scriptedFetch([() => jsonResponse({ ok: true })], recorded),
    );
    let state = initialSurveyState("s1", true);
    state = setHelpful(state, true);
    state = toggleReason(state, "confirmation of my idea");
    const after = await submitSurveyFlow(state, api);
    expect(after.locked).toBe(true);
    expect(recorded).toHaveLength(1);
    expect(recorded[0]?.body).toEqual({
      helpful: true,
      reasons: ["confirmation of my idea"],
      free_text: null,
    });
    expect(renderSurveyHtml(after)).toContain("recorded");
  });

  test("duplicate submission converges to the locked state without retrying", async () => {
    const recorded: RecordedRequest[] = [];
    const api = new ApiClient(
      "http://x",
      scriptedFetch([() => jsonResponse({ error: "duplicate_survey" }, 409)], recorded),
    );
    let state = setHelpful(initialSurveyState("s1", true), false);
    state = await submitSurveyFlow(state, api);
    expect(state.locked).toBe(true);
    // Locked: further attempts never touch the network.
    const again = await submitSurveyFlow(state, api);
    expect(again.locked).toBe(true);
    expect(recorded).toHaveLength(1);
  });

  test("helpful selection is required", () => {
    const state = initialSurveyState("s1", true);
    expect(canSubmitSurvey(state)).toBe(false);
  });

  test("reason toggling is idempotent", () => {
    let state = initialSurveyState("s1", true);
    state = toggleReason(state, "helped me organize my reasoning");
    state = toggleReason(state, "helped me organize my reasoning");
    expect(state.reasons).toEqual([]);
  });
});
