/** Typed client for the feedback service; failures surface as typed errors
 * so flows can render the right banner (validation detail, retry hints,
 * verbatim server messages). */

import type {
  AnswerResponse,
  PreferencePairResponse,
  QuizView,
  TurnResponse,
  ValidationViolation,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: string,
  ) {
    super(`request failed with status ${status}: ${body}`);
  }
}

export class ValidationFailed extends Error {
  constructor(readonly violations: ValidationViolation[]) {
    super("essay failed validation");
  }
}

export class ServerBusy extends Error {
  constructor(readonly retryAfterS: number) {
    super("service is busy, retry shortly");
  }
}

export class NetworkFailure extends Error {
  constructor(readonly cause_: unknown) {
    super("network failure");
  }
}

async function parseJson<T>(response: Response): Promise<T> {
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkFailure(err);
    }
    if (response.ok) {
      return parseJson<T>(response);
    }
    const text = await response.text();
    if (response.status === 429) {
      const hint = Number(response.headers.get("retry-after") ?? "1");
      throw new ServerBusy(Number.isFinite(hint) && hint > 0 ? hint : 1);
    }
    if (response.status === 422) {
      try {
        const payload = JSON.parse(text) as { violations?: ValidationViolation[] };
        if (payload.violations) {
          throw new ValidationFailed(payload.violations);
        }
      } catch (err) {
        if (err instanceof ValidationFailed) throw err;
      }
    }
    throw new ApiError(response.status, text);
  }

  async createSession(studentId: string, quizId: string): Promise<string> {
    const data = await this.request<{ session_id: string }>("POST", "/api/sessions", {
      student_id: studentId,
      quiz_id: quizId,
    });
    return data.session_id;
  }

  submitEssay(sessionId: string, text: string): Promise<TurnResponse> {
    return this.request<TurnResponse>("POST", `/api/sessions/${sessionId}/feedback`, { text });
  }

  async recordAnswer(sessionId: string, optionKey: string): Promise<boolean> {
    const data = await this.request<AnswerResponse>(
      "POST",
      `/api/sessions/${sessionId}/answer`,
      { option_key: optionKey },
    );
    return data.answer_correct;
  }

  async submitSurvey(
    sessionId: string,
    helpful: boolean,
    reasons: string[],
    freeText?: string,
  ): Promise<void> {
    await this.request("POST", `/api/sessions/${sessionId}/survey`, {
      helpful,
      reasons,
      free_text: freeText ?? null,
    });
  }

  getQuiz(quizId: string): Promise<QuizView> {
    return this.request<QuizView>("GET", `/api/quizzes/${quizId}`);
  }

  getPreferencePair(assignmentId: string, studentId: string): Promise<PreferencePairResponse> {
    const query = new URLSearchParams({ student_id: studentId });
    return this.request<PreferencePairResponse>(
      "GET",
      `/api/preference/${assignmentId}?${query}`,
    );
  }

  async submitPreferenceChoice(
    assignmentId: string,
    studentId: string,
    chosen: "A" | "B",
    reasons: string[],
  ): Promise<void> {
    await this.request("POST", `/api/preference/${assignmentId}/choice`, {
      student_id: studentId,
      chosen,
      reasons,
    });
  }
}
