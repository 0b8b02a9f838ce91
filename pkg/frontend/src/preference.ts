/** A/B feedback-preference page: two cards labeled only A and B, in the
 * server-chosen order, plus multi-select reasons. The client never learns
 * which card is which style. */

import { ApiClient, ApiError } from "./api.js";
import { escapeHtml } from "./widget.js";
import type { QuizView } from "./types.js";

export const PREFERENCE_REASONS = [
  "Helps me better understand the concept",
  "Better explains the errors in my strategy",
  "Aligns better with my level of knowledge",
  "Easier to read",
] as const;

export interface PreferenceState {
  assignment_id: string;
  student_id: string;
  loading: boolean;
  missing: boolean;
  variant_a: string | null;
  variant_b: string | null;
  chosen: "A" | "B" | null;
  reasons: string[];
  submitted: boolean;
  error: string | null;
  quiz: QuizView | null;
  essay_text: string | null;
}

export function initialPreferenceState(
  assignmentId: string,
  studentId: string,
  essayText?: string,
): PreferenceState {
  return {
    assignment_id: assignmentId,
    student_id: studentId,
    loading: false,
    missing: false,
    variant_a: null,
    variant_b: null,
    chosen: null,
    reasons: [],
    submitted: false,
    error: null,
    quiz: null,
    essay_text: essayText ?? null,
  };
}

export async function loadPreferenceFlow(
  state: PreferenceState,
  api: ApiClient,
  quizId?: string,
): Promise<PreferenceState> {
  const pending = { ...state, loading: true, error: null };
  try {
    const pair = await api.getPreferencePair(state.assignment_id, state.student_id);
    const quiz = quizId ? await api.getQuiz(quizId) : state.quiz;
    return {
      ...pending,
      loading: false,
      variant_a: pair.variant_a,
      variant_b: pair.variant_b,
      chosen: pair.chosen,
      reasons: pair.reasons,
      submitted: pair.chosen !== null,
      quiz,
    };
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      return { ...pending, loading: false, missing: true };
    }
    return {
      ...pending,
      loading: false,
      error: err instanceof Error ? err.message : String(err),
    };
  }
}

export function selectCard(state: PreferenceState, card: "A" | "B"): PreferenceState {
  return state.submitted ? state : { ...state, chosen: card };
}

export function togglePreferenceReason(
  state: PreferenceState,
  reason: string,
): PreferenceState {
  if (state.submitted) return state;
  const reasons = state.reasons.includes(reason)
    ? state.reasons.filter((existing) => existing !== reason)
    : [...state.reasons, reason];
  return { ...state, reasons };
}

export async function submitChoiceFlow(
  state: PreferenceState,
  api: ApiClient,
): Promise<PreferenceState> {
  if (state.submitted || state.chosen === null) {
    return state;
  }
  try {
    await api.submitPreferenceChoice(
      state.assignment_id,
      state.student_id,
      state.chosen,
      state.reasons,
    );
    return { ...state, submitted: true, error: null };
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      return { ...state, submitted: true };
    }
    return { ...state, error: err instanceof Error ? err.message : String(err) };
  }
}

export function renderPreferenceHtml(state: PreferenceState): string {
  if (state.missing) {
    return '<section class="preference"><p class="empty-state">No feedback pair is ready for you yet. Please check back later.</p></section>';
  }
  if (state.variant_a === null || state.variant_b === null) {
    return '<section class="preference"><p>Loading your feedback options...</p></section>';
  }
  const quizHtml = state.quiz
    ? `<div class="quiz"><p>${escapeHtml(state.quiz.statement)}</p></div>`
    : "";
  const essayHtml = state.essay_text
    ? `<blockquote class="own-essay">${escapeHtml(state.essay_text)}</blockquote>`
    : "";
  const card = (label: "A" | "B", text: string) =>
    [
      `<article class="card card-${label.toLowerCase()}${
        state.chosen === label ? " selected" : ""
      }" data-card="${label}">`,
      `<h3>Feedback ${label}</h3>`,
      `<p>${escapeHtml(text)}</p>`,
      "</article>",
    ].join("\n");
  const reasons = PREFERENCE_REASONS.map(
    (reason) =>
      `<label><input type="checkbox" value="${escapeHtml(reason)}"${
        state.reasons.includes(reason) ? " checked" : ""
      }> ${escapeHtml(reason)}</label>`,
  ).join("\n");
  return [
    '<section class="preference">',
    quizHtml,
    essayHtml,
    card("A", state.variant_a),
    card("B", state.variant_b),
    reasons,
    state.submitted
      ? '<p class="confirmation">Your choice is recorded. Thank you!</p>'
      : `<button class="submit-choice"${state.chosen ? "" : " disabled"}>Submit choice</button>`,
    state.error ? `<p class="error">${escapeHtml(state.error)}</p>` : "",
    "</section>",
  ].join("\n");
}
