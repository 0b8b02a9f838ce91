/** Post-answer helpfulness survey: one submission per session, locked
 * afterwards (a duplicate attempt converges to the same locked state). */

import { ApiClient, ApiError } from "./api.js";
import { escapeHtml } from "./widget.js";

export const SURVEY_REASONS = [
  "confirmation of my idea",
  "clarified overlooked aspects of my plan",
  "pointed me to a concept I had missed",
  "helped me organize my reasoning",
] as const;

export interface SurveyState {
  session_id: string;
  answered: boolean;
  helpful: boolean | null;
  reasons: string[];
  free_text: string;
  submitting: boolean;
  locked: boolean;
  error: string | null;
}

export function initialSurveyState(sessionId: string, answered: boolean): SurveyState {
  return {
    session_id: sessionId,
    answered,
    helpful: null,
    reasons: [],
    free_text: "",
    submitting: false,
    locked: false,
    error: null,
  };
}

export function setHelpful(state: SurveyState, helpful: boolean): SurveyState {
  return state.locked ? state : { ...state, helpful };
}

export function toggleReason(state: SurveyState, reason: string): SurveyState {
  if (state.locked) return state;
  const reasons = state.reasons.includes(reason)
    ? state.reasons.filter((existing) => existing !== reason)
    : [...state.reasons, reason];
  return { ...state, reasons };
}

export function setFreeText(state: SurveyState, text: string): SurveyState {
  return state.locked ? state : { ...state, free_text: text };
}

export function canSubmitSurvey(state: SurveyState): boolean {
  return state.answered && !state.locked && !state.submitting && state.helpful !== null;
}

export async function submitSurveyFlow(
  state: SurveyState,
  api: ApiClient,
): Promise<SurveyState> {
  if (!canSubmitSurvey(state)) {
    return state;
  }
  const pending = { ...state, submitting: true, error: null };
  try {
    await api.submitSurvey(
      state.session_id,
      state.helpful as boolean,
      state.reasons,
      state.free_text || undefined,
    );
    return { ...pending, submitting: false, locked: true };
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      // Already recorded: converge to the locked confirmation, no retry.
      return { ...pending, submitting: false, locked: true };
    }
    return {
      ...pending,
      submitting: false,
      error: err instanceof Error ? err.message : String(err),
    };
  }
}

export function renderSurveyHtml(state: SurveyState): string {
  if (!state.answered) {
    return '<section class="survey"><p class="disabled-note">Submit your answer first, then tell us how the feedback worked for you.</p></section>';
  }
  if (state.locked) {
    return '<section class="survey survey-locked"><p>Thanks! Your survey response is recorded.</p></section>';
  }
  const reasons = SURVEY_REASONS.map(
    (reason) =>
      `<label><input type="checkbox" value="${escapeHtml(reason)}"${
        state.reasons.includes(reason) ? " checked" : ""
      }> ${escapeHtml(reason)}</label>`,
  ).join("\n");
  return [
    '<section class="survey">',
    "<p>Was the feedback helpful?</p>",
    `<label><input type="radio" name="helpful" value="yes"${
      state.helpful === true ? " checked" : ""
    }> Yes</label>`,
    `<label><input type="radio" name="helpful" value="no"${
      state.helpful === false ? " checked" : ""
    }> No</label>`,
    reasons,
    `<textarea class="free-text">${escapeHtml(state.free_text)}</textarea>`,
    `<button class="submit-survey"${canSubmitSurvey(state) ? "" : " disabled"}>Send</button>`,
    state.error ? `<p class="error">${escapeHtml(state.error)}</p>` : "",
    "</section>",
  ].join("\n");
}
