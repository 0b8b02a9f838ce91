/** The essay-to-feedback conversation widget as a pure state machine.
 *
 * State transitions are plain functions and rendering is a pure function of
 * state, so everything is testable headlessly; the DOM layer in mount.ts
 * just re-renders on each new state. One submission may be in flight at a
 * time; drafts survive rejections (validation, busy, network).
 */

import {
  ApiClient,
  ApiError,
  NetworkFailure,
  ServerBusy,
  ValidationFailed,
} from "./api.js";
import { countWords, MIN_WORDS } from "./wordcount.js";
import type { ValidationViolation } from "./types.js";

export interface ThreadEntry {
  essay_text: string;
  feedback_text: string;
  degraded_badge: boolean;
}

export type Banner =
  | { kind: "validation"; violations: ValidationViolation[] }
  | { kind: "busy"; retryAfterS: number }
  | { kind: "network" }
  | { kind: "server"; status: number; message: string };

export interface WidgetState {
  session_id: string;
  thread: ThreadEntry[];
  input_draft: string;
  busy: boolean;
  live_word_count: number;
  banner: Banner | null;
  answered: boolean;
  answer_correct: boolean | null;
}

export function initialState(sessionId: string): WidgetState {
  return {
    session_id: sessionId,
    thread: [],
    input_draft: "",
    busy: false,
    live_word_count: 0,
    banner: null,
    answered: false,
    answer_correct: null,
  };
}

export function updateDraft(state: WidgetState, text: string): WidgetState {
  return { ...state, input_draft: text, live_word_count: countWords(text) };
}

export function canSubmit(state: WidgetState): boolean {
  return !state.busy && !state.answered && state.live_word_count >= MIN_WORDS;
}

/** Hint shown next to a disabled submit button; null when submittable. */
export function submitHint(state: WidgetState): string | null {
  if (state.answered) return "answer recorded; the conversation is closed";
  if (state.busy) return "waiting for feedback";
  if (state.live_word_count < MIN_WORDS) return `${MIN_WORDS} words required`;
  return null;
}

export async function submitEssayFlow(
  state: WidgetState,
  api: ApiClient,
  onUpdate?: (state: WidgetState) => void,
): Promise<WidgetState> {
  if (!canSubmit(state)) {
    return state;
  }
  const pending: WidgetState = { ...state, busy: true, banner: null };
  onUpdate?.(pending);
  try {
    const turn = await api.submitEssay(state.session_id, state.input_draft);
    const entry: ThreadEntry = {
      essay_text: state.input_draft,
      feedback_text: turn.feedback,
      degraded_badge: turn.degraded,
    };
    return {
      ...pending,
      busy: false,
      thread: [...pending.thread, entry],
      input_draft: "",
      live_word_count: 0,
    };
  } catch (err) {
    return { ...pending, busy: false, banner: bannerFor(err) };
  }
}

function bannerFor(err: unknown): Banner {
  if (err instanceof ValidationFailed) {
    return { kind: "validation", violations: err.violations };
  }
  if (err instanceof ServerBusy) {
    return { kind: "busy", retryAfterS: err.retryAfterS };
  }
  if (err instanceof NetworkFailure) {
    return { kind: "network" };
  }
  if (err instanceof ApiError) {
    return { kind: "server", status: err.status, message: err.body };
  }
  throw err;
}

export async function recordAnswerFlow(
  state: WidgetState,
  api: ApiClient,
  optionKey: string,
): Promise<WidgetState> {
  const correct = await api.recordAnswer(state.session_id, optionKey);
  return { ...state, answered: true, answer_correct: correct };
}

const HTML_ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => HTML_ESCAPES[ch] ?? ch);
}

export function renderThreadHtml(state: WidgetState): string {
  const items = state.thread
    .map((entry) => {
      const badge = entry.degraded_badge
        ? '<span class="badge badge-general">general guidance</span>'
        : "";
      return [
        '  <li class="turn">',
        `    <blockquote class="essay">${escapeHtml(entry.essay_text)}</blockquote>`,
        `    <div class="feedback">${escapeHtml(entry.feedback_text)}${badge}</div>`,
        "  </li>",
      ].join("\n");
    })
    .join("\n");
  return `<ol class="thread">\n${items}\n</ol>`;
}

function renderBannerHtml(banner: Banner | null): string {
  if (banner === null) return "";
  switch (banner.kind) {
    case "validation": {
      const rules = banner.violations
        .map((violation) => {
          if (violation.rule === "too_short") {
            return `essay has ${violation.word_count} words; at least ${MIN_WORDS} required`;
          }
          if (violation.rule === "contains_digits") {
            return "please spell out numbers instead of using digits";
          }
          if (violation.rule === "contains_symbols") {
            return `please describe your plan in words, without ${escapeHtml(
              (violation.characters ?? []).join(" "),
            )}`;
          }
          return escapeHtml(violation.rule);
        })
        .map((message) => `<li>${message}</li>`)
        .join("");
      return `<div class="banner banner-validation"><ul>${rules}</ul></div>`;
    }
    case "busy":
      return (
        `<div class="banner banner-busy">The helper is busy right now; ` +
        `please try again in about ${banner.retryAfterS}s. Your draft is preserved.</div>`
      );
    case "network":
      return '<div class="banner banner-network">Connection problem; your draft is preserved. Retry when you are back online.</div>';
    case "server":
      return `<div class="banner banner-server">${escapeHtml(banner.message)}</div>`;
  }
}

export function renderWidgetHtml(state: WidgetState): string {
  const countClass = state.live_word_count >= MIN_WORDS ? "count-ok" : "count-low";
  const hint = submitHint(state);
  const disabled = canSubmit(state) ? "" : " disabled";
  const hintHtml = hint ? `<span class="hint">${escapeHtml(hint)}</span>` : "";
  return [
    '<section class="feedback-widget">',
    renderThreadHtml(state),
    renderBannerHtml(state.banner),
    `<textarea class="draft"${state.busy || state.answered ? " disabled" : ""}>${escapeHtml(
      state.input_draft,
    )}</textarea>`,
    `<span class="word-count ${countClass}">${state.live_word_count} / ${MIN_WORDS} words</span>`,
    `<button class="submit"${disabled}>Get feedback</button>${hintHtml}`,
    "</section>",
  ].join("\n");
}
