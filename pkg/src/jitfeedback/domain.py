"""Core domain types shared by every module: error labels, strategy essays,
quiz problems, feedback responses, sessions, and the essay validation rules.

All types are immutable value objects with canonical snake_case JSON
encodings (``to_dict`` / ``from_dict``); operations are pure.
"""

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional


class ErrorLabel(Enum):
    """The four-class outcome space of the misconception classifier.

    Enum declaration order is the canonical "enum order" used for
    tie-breaking and for grouping few-shot examples.
    """

    CORRECT = "correct"
    DIRECTION = "direction"
    POSITION = "position"
    POSITION_DIRECTION = "position-direction"

    @property
    def short_code(self) -> str:
        return _SHORT_CODES[self]

    @classmethod
    def parse(cls, name: str) -> "ErrorLabel":
        """Map a canonical lowercase name to its variant."""
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown error label: {name!r}") from None

    @classmethod
    def from_short_code(cls, code: str) -> "ErrorLabel":
        for label, short in _SHORT_CODES.items():
            if short == code:
                return label
        raise ValueError(f"unknown short code: {code!r}")


_SHORT_CODES = {
    ErrorLabel.CORRECT: "C",
    ErrorLabel.DIRECTION: "D",
    ErrorLabel.POSITION: "P",
    ErrorLabel.POSITION_DIRECTION: "X",
}


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs in ``text``."""
    return len(text.split())


def stable_hash64(*parts: str) -> int:
    """Platform-stable 64-bit hash of the given strings.

    Parts are length-prefixed so distinct tuples never collide by
    concatenation.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        data = part.encode("utf-8")
        h.update(len(data).to_bytes(4, "big"))
        h.update(data)
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True)
class StrategyEssay:
    """A student's written reasoning text plus its derived word count."""

    text: str
    word_count: int
    submitted_at: int  # UTC milliseconds since epoch

    @classmethod
    def from_text(cls, text: str, submitted_at: int = 0) -> "StrategyEssay":
        return cls(text=text, word_count=word_count(text), submitted_at=submitted_at)

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "word_count": self.word_count,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StrategyEssay":
        return cls(text=d["text"], word_count=d["word_count"], submitted_at=d["submitted_at"])


@dataclass(frozen=True)
class ValidatedEssay(StrategyEssay):
    """An essay that passed :func:`validate_essay`; construct only through it."""


# Course rule: essays must be plain prose.  Digits are reported separately;
# the symbol set below rejects formula notation while allowing apostrophes,
# commas, periods, in-word hyphens, and question marks.
FORBIDDEN_SYMBOLS = frozenset("=+−*/^<>∑∫√")
MIN_ESSAY_WORDS = 50


def _is_greek(ch: str) -> bool:
    return "Ͱ" <= ch <= "Ͽ" or "ἀ" <= ch <= "῿"


@dataclass(frozen=True)
class TooShort:
    word_count: int

    def to_dict(self) -> dict:
        return {"rule": "too_short", "word_count": self.word_count}


@dataclass(frozen=True)
class ContainsDigits:
    positions: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"rule": "contains_digits", "positions": list(self.positions)}


@dataclass(frozen=True)
class ContainsSymbols:
    characters: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"rule": "contains_symbols", "characters": list(self.characters)}


EssayViolation = TooShort | ContainsDigits | ContainsSymbols


class EssayValidationError(ValueError):
    """Raised by validate_essay; carries every violated rule, not just the first."""

    def __init__(self, violations: list):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate_essay(text: str, submitted_at: int = 0) -> ValidatedEssay:
    """Check the course essay rules and wrap the text on success.

    Rules: at least MIN_ESSAY_WORDS whitespace-delimited words, no decimal
    digits, no formula symbols or Greek letters.  All violations are
    collected into one error.
    """
    violations: list[EssayViolation] = []
    count = word_count(text)
    if count < MIN_ESSAY_WORDS:
        violations.append(TooShort(count))
    digit_positions = tuple(i for i, ch in enumerate(text) if "0" <= ch <= "9")
    if digit_positions:
        violations.append(ContainsDigits(digit_positions))
    symbols = tuple(sorted({ch for ch in text if ch in FORBIDDEN_SYMBOLS or _is_greek(ch)}))
    if symbols:
        violations.append(ContainsSymbols(symbols))
    if violations:
        raise EssayValidationError(violations)
    return ValidatedEssay(text=text, word_count=count, submitted_at=submitted_at)


def word_count_delta(prev: StrategyEssay, next: StrategyEssay) -> int:
    """Signed change in word count between consecutive essay versions."""
    return next.word_count - prev.word_count


@dataclass(frozen=True)
class QuizOption:
    key: str
    text: str
    mapped_label: ErrorLabel

    def to_dict(self) -> dict:
        return {"key": self.key, "text": self.text, "mapped_label": self.mapped_label.value}

    @classmethod
    def from_dict(cls, d: dict) -> "QuizOption":
        return cls(key=d["key"], text=d["text"], mapped_label=ErrorLabel.parse(d["mapped_label"]))


@dataclass(frozen=True)
class QuizProblem:
    """A multiple-choice problem whose distractors each map to one error type."""

    quiz_id: str
    statement: str
    options: tuple[QuizOption, ...]
    correct_option: str

    def __post_init__(self):
        labels = [o.mapped_label for o in self.options]
        if labels.count(ErrorLabel.CORRECT) != 1:
            raise ValueError("exactly one option must map to the correct label")
        if len(set(labels)) != len(labels):
            raise ValueError("each error label may map to at most one option")
        correct = next(o for o in self.options if o.mapped_label is ErrorLabel.CORRECT)
        if correct.key != self.correct_option:
            raise ValueError("correct_option must be the key of the correct-mapped option")

    def option_for_label(self, label: ErrorLabel) -> QuizOption:
        for o in self.options:
            if o.mapped_label is label:
                return o
        raise KeyError(label)

    def option_keys(self) -> tuple[str, ...]:
        return tuple(o.key for o in self.options)

    def to_dict(self) -> dict:
        return {
            "quiz_id": self.quiz_id,
            "statement": self.statement,
            "options": [o.to_dict() for o in self.options],
            "correct_option": self.correct_option,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuizProblem":
        return cls(
            quiz_id=d["quiz_id"],
            statement=d["statement"],
            options=tuple(QuizOption.from_dict(o) for o in d["options"]),
            correct_option=d["correct_option"],
        )


@dataclass(frozen=True)
class FewShotExample:
    """Expert-annotated (essay, label, feedback) triple used to ground prompts."""

    essay_text: str
    label: ErrorLabel
    expert_feedback: str

    def __post_init__(self):
        if not self.essay_text:
            raise ValueError("essay_text must be non-empty")
        if not self.expert_feedback:
            raise ValueError("expert_feedback must be non-empty")

    def to_dict(self) -> dict:
        return {
            "essay": self.essay_text,
            "label": self.label.value,
            "feedback": self.expert_feedback,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FewShotExample":
        return cls(
            essay_text=d["essay"],
            label=ErrorLabel.parse(d["label"]),
            expert_feedback=d["feedback"],
        )


@dataclass(frozen=True)
class FeedbackResponse:
    """Parsed structured model output for one feedback turn."""

    classification: ErrorLabel
    confidence: int  # 1..5
    secondary_classification: ErrorLabel
    feedback: str
    degraded: bool = False  # True when produced by the fallback, not the model

    def __post_init__(self):
        if not 1 <= self.confidence <= 5:
            raise ValueError(f"confidence must be in [1, 5], got {self.confidence}")
        if not self.feedback:
            raise ValueError("feedback must be non-empty")

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "confidence": self.confidence,
            "secondary_classification": self.secondary_classification.value,
            "feedback": self.feedback,
            "degraded": self.degraded,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeedbackResponse":
        return cls(
            classification=ErrorLabel.parse(d["classification"]),
            confidence=d["confidence"],
            secondary_classification=ErrorLabel.parse(d["secondary_classification"]),
            feedback=d["feedback"],
            degraded=d.get("degraded", False),
        )


@dataclass(frozen=True)
class ConversationTurn:
    turn_index: int  # 1-based, consecutive within a session
    essay: StrategyEssay
    response: FeedbackResponse
    latency_since_prev_s: Optional[float] = None  # absent for turn 1

    def __post_init__(self):
        if self.turn_index < 1:
            raise ValueError("turn_index is 1-based")
        if self.latency_since_prev_s is not None and self.latency_since_prev_s < 0:
            raise ValueError("latency_since_prev_s must be >= 0")

    def to_dict(self) -> dict:
        return {
            "turn_index": self.turn_index,
            "essay": self.essay.to_dict(),
            "response": self.response.to_dict(),
            "latency_since_prev_s": self.latency_since_prev_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConversationTurn":
        return cls(
            turn_index=d["turn_index"],
            essay=StrategyEssay.from_dict(d["essay"]),
            response=FeedbackResponse.from_dict(d["response"]),
            latency_since_prev_s=d.get("latency_since_prev_s"),
        )


@dataclass(frozen=True)
class SurveyResponse:
    helpful: bool
    reasons: tuple[str, ...] = ()
    free_text: Optional[str] = None
    cluster_label: Optional[int] = None  # precomputed externally, pass-through

    def to_dict(self) -> dict:
        return {
            "helpful": self.helpful,
            "reasons": list(self.reasons),
            "free_text": self.free_text,
            "cluster_label": self.cluster_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurveyResponse":
        return cls(
            helpful=d["helpful"],
            reasons=tuple(d.get("reasons") or ()),
            free_text=d.get("free_text"),
            cluster_label=d.get("cluster_label"),
        )


@dataclass(frozen=True)
class Session:
    """One student's interaction record for one quiz: turns, answer, survey.

    ``student_ref`` is an anonymized identifier produced by a keyed one-way
    hash at ingestion; raw student ids never reach this type.
    """

    session_id: str
    student_ref: str
    quiz_id: str
    turns: tuple[ConversationTurn, ...] = ()
    final_answer: Optional[str] = None
    answer_correct: Optional[bool] = None
    survey: Optional[SurveyResponse] = None

    def __post_init__(self):
        for i, turn in enumerate(self.turns):
            if turn.turn_index != i + 1:
                raise ValueError("turn_index values must be consecutive starting at 1")

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "student_ref": self.student_ref,
            "quiz_id": self.quiz_id,
            "turns": [t.to_dict() for t in self.turns],
            "final_answer": self.final_answer,
            "answer_correct": self.answer_correct,
            "survey": self.survey.to_dict() if self.survey else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Session":
        return cls(
            session_id=d["session_id"],
            student_ref=d["student_ref"],
            quiz_id=d["quiz_id"],
            turns=tuple(ConversationTurn.from_dict(t) for t in d["turns"]),
            final_answer=d.get("final_answer"),
            answer_correct=d.get("answer_correct"),
            survey=SurveyResponse.from_dict(d["survey"]) if d.get("survey") else None,
        )
