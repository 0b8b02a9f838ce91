import { describe, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  initialPreferenceState,
  loadPreferenceFlow,
  renderPreferenceHtml,
  selectCard,
  submitChoiceFlow,
  togglePreferenceReason,
} from "../src/preference.js";
import { jsonResponse, scriptedFetch, RecordedRequest } from "./helpers.js";

function pairResponse(variantA = "First option text", variantB = "Second option text") {
  return jsonResponse({
    assignment_id: "a1",
    variant_a: variantA,
    variant_b: variantB,
    chosen: null,
    reasons: [],
  });
}

describe("preference page", () => {
  test("renders cards in server order, labeled only A and B", async () => {
    const api = new ApiClient(
      "http://x",
      scriptedFetch([(url) => (url.includes("/api/preference/") ? pairResponse() : undefined)]),
    );
    const state = await loadPreferenceFlow(initialPreferenceState("a1", "stu-1"), api);
    const html = renderPreferenceHtml(state);
    expect(html.indexOf("First option text")).toBeLessThan(html.indexOf("Second option text"));
    expect(html).toContain("Feedback A");
    expect(html).toContain("Feedback B");
    expect(html.toLowerCase()).not.toContain("novice");
    expect(html.toLowerCase()).not.toContain("advanced");
  });

  test("choice B with reasons posts the exact form contract", async () => {
    const recorded: RecordedRequest[] = [];
    const api = new ApiClient(
      "http://x",
      scriptedFetch(
        [
          (url) => (url.includes("/choice") ? jsonResponse({ ok: true }) : undefined),
          (url) => (url.includes("/api/preference/") ? pairResponse() : undefined),
        ],
        recorded,
      ),
    );
    let state = await loadPreferenceFlow(initialPreferenceState("a1", "stu-1"), api);
    state = selectCard(state, "B");
    state = togglePreferenceReason(state, "Helps me better understand the concept");
    state = togglePreferenceReason(state, "Easier to read");
    state = await submitChoiceFlow(state, api);
    expect(state.submitted).toBe(true);
    const post = recorded.find((request) => request.url.includes("/choice"));
    expect(post?.body).toEqual({
      student_id: "stu-1",
      chosen: "B",
      reasons: ["Helps me better understand the concept", "Easier to read"],
    });
  });

  test("missing generation renders the explanatory empty state", async () => {
    const api = new ApiClient(
      "http://x",
      scriptedFetch([() => jsonResponse({ error: "not_generated" }, 404)]),
    );
    const state = await loadPreferenceFlow(initialPreferenceState("a1", "stu-1"), api);
    expect(state.missing).toBe(true);
    expect(renderPreferenceHtml(state)).toContain("No feedback pair is ready");
  });

  test("no submission without a selected card", async () => {
    const recorded: RecordedRequest[] = [];
    const api = new ApiClient("http://x", scriptedFetch([() => pairResponse()], recorded));
    let state = await loadPreferenceFlow(initialPreferenceState("a1", "stu-1"), api);
    state = await submitChoiceFlow(state, api);
    expect(state.submitted).toBe(false);
    expect(recorded.filter((request) => request.url.includes("/choice"))).toHaveLength(0);
  });

  test("previously recorded choice loads as submitted", async () => {
    const api = new ApiClient(
      "http://x",
      scriptedFetch([
        () =>
          jsonResponse({
            assignment_id: "a1",
            variant_a: "x",
            variant_b: "y",
            chosen: "A",
            reasons: ["Easier to read"],
          }),
      ]),
    );
    const state = await loadPreferenceFlow(initialPreferenceState("a1", "stu-1"), api);
    expect(state.submitted).toBe(true);
    expect(renderPreferenceHtml(state)).toContain("Your choice is recorded");
  });
});
