/** Thin DOM layer: owns a state cell, re-renders on every transition, and
 * wires events. Embeddable as a standalone page or inside an iframe next to
 * the quiz. All behavior lives in the pure modules this file delegates to. */

import { ApiClient } from "./api.js";
import {
  initialState,
  recordAnswerFlow,
  renderWidgetHtml,
  submitEssayFlow,
  updateDraft,
  WidgetState,
} from "./widget.js";
import {
  initialSurveyState,
  renderSurveyHtml,
  setHelpful,
  submitSurveyFlow,
  SurveyState,
  toggleReason,
} from "./survey.js";

export interface WidgetHandle {
  getState(): WidgetState;
}

export function mountWidget(
  root: HTMLElement,
  api: ApiClient,
  sessionId: string,
): WidgetHandle {
  let state = initialState(sessionId);
  let survey: SurveyState = initialSurveyState(sessionId, false);

  const render = () => {
    root.innerHTML = renderWidgetHtml(state) + renderSurveyHtml(survey);
    const draft = root.querySelector<HTMLTextAreaElement>("textarea.draft");
    draft?.addEventListener("input", () => {
      state = updateDraft(state, draft.value);
      refreshControls();
    });
    root.querySelector<HTMLButtonElement>("button.submit")?.addEventListener(
      "click",
      async () => {
        state = await submitEssayFlow(state, api, (pending) => {
          state = pending;
          render();
        });
        render();
      },
    );
    root
      .querySelectorAll<HTMLInputElement>(".survey input[type=radio]")
      .forEach((radio) =>
        radio.addEventListener("change", () => {
          survey = setHelpful(survey, radio.value === "yes");
          render();
        }),
      );
    root
      .querySelectorAll<HTMLInputElement>(".survey input[type=checkbox]")
      .forEach((box) =>
        box.addEventListener("change", () => {
          survey = toggleReason(survey, box.value);
        }),
      );
    root.querySelector<HTMLButtonElement>("button.submit-survey")?.addEventListener(
      "click",
      async () => {
        survey = await submitSurveyFlow(survey, api);
        render();
      },
    );
  };

  const refreshControls = () => {
    // Light-weight update that keeps the textarea focused while typing.
    const counter = root.querySelector(".word-count");
    if (counter) {
      counter.textContent = `${state.live_word_count} / 50 words`;
      counter.className = `word-count ${state.live_word_count >= 50 ? "count-ok" : "count-low"}`;
    }
    const button = root.querySelector<HTMLButtonElement>("button.submit");
    if (button) {
      button.disabled = !(state.live_word_count >= 50 && !state.busy && !state.answered);
    }
  };

  render();
  return { getState: () => state };
}

export async function answerAndOpenSurvey(
  root: HTMLElement,
  api: ApiClient,
  handle: WidgetHandle,
  optionKey: string,
): Promise<boolean> {
  const state = await recordAnswerFlow(handle.getState(), api, optionKey);
  root.querySelector(".survey .disabled-note")?.remove();
  return state.answer_correct === true;
}
