/** Wire DTOs for the feedback service HTTP API. */

export interface TurnResponse {
  turn_index: number;
  feedback: string;
  degraded: boolean;
}

export interface ValidationViolation {
  rule: string;
  word_count?: number;
  positions?: number[];
  characters?: string[];
}

export interface AnswerResponse {
  answer_correct: boolean;
}

export interface QuizOptionView {
  key: string;
  text: string;
}

export interface QuizView {
  quiz_id: string;
  statement: string;
  options: QuizOptionView[];
}

export interface PreferencePairResponse {
  assignment_id: string;
  variant_a: string;
  variant_b: string;
  chosen: "A" | "B" | null;
  reasons: string[];
}
