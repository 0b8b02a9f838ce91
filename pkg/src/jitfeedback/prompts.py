"""Deterministic prompt assembly and strict parsing of model output.

Templates live as plain-text assets with ``{{placeholder}}`` markers; the
builders are pure functions, so identical inputs always produce
byte-identical prompt text (golden-file tested).
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

from .domain import (
    ErrorLabel,
    FeedbackResponse,
    FewShotExample,
    QuizProblem,
    ValidatedEssay,
    stable_hash64,
    word_count,
)

logger = logging.getLogger(__name__)

FEEDBACK_WORD_LIMIT_WARN = 80


class TemplateId(Enum):
    JIT = "jit"
    POSTHOC = "posthoc"


@dataclass(frozen=True)
class PromptText:
    text: str
    template_id: TemplateId
    content_hash: int  # stable 64-bit hash of text

    @classmethod
    def of(cls, text: str, template_id: TemplateId) -> "PromptText":
        return cls(text=text, template_id=template_id, content_hash=stable_hash64(text))


class KnowledgeLevel(Enum):
    NOVICE = "Novice"
    ADVANCED = "Advanced"


@dataclass(frozen=True)
class PosthocFeedback:
    """Dual-level feedback generated after quiz completion."""

    essay_evaluation: str
    inferred_level: KnowledgeLevel
    novice_feedback: str
    advanced_feedback: str

    def __post_init__(self):
        if not self.novice_feedback or not self.advanced_feedback:
            raise ValueError("both feedback variants must be non-empty")

    def to_dict(self) -> dict:
        return {
            "essay_evaluation": self.essay_evaluation,
            "inferred_level": self.inferred_level.value,
            "novice_feedback": self.novice_feedback,
            "advanced_feedback": self.advanced_feedback,
        }


class PromptBuildError(ValueError):
    pass


class InsufficientBank(PromptBuildError):
    def __init__(self, label: ErrorLabel, have: int, need: int):
        self.label = label
        self.have = have
        self.need = need
        super().__init__(f"bank has {have} examples for {label.value!r}, need {need}")


class EmptyRubric(PromptBuildError):
    def __init__(self):
        super().__init__("expert rubric must be non-empty")


@lru_cache(maxsize=None)
def _load_template(name: str) -> str:
    return (resources.files("jitfeedback") / "templates" / name).read_text(encoding="utf-8")


def format_quiz_problem(problem: QuizProblem) -> str:
    """Model-facing rendering of a quiz: statement plus unmarked options."""
    lines = [f"Problem: {problem.statement}", "Options:"]
    lines.extend(f"{o.key}. {o.text}" for o in problem.options)
    return "\n".join(lines)


def _example_block(example: FewShotExample) -> str:
    return (
        f"Example ({example.label.value}):\n"
        f"Strategy Essay: {example.essay_text}\n"
        f"Error Type: {example.label.value}\n"
        f"Expert Feedback: {example.expert_feedback}"
    )


_SECONDARY_ON = "What would be the second most likely label?"
_SECONDARY_OFF = "Set this field to the same value as classification."


def build_jit_prompt(
    problem: QuizProblem,
    essay: ValidatedEssay,
    bank: Sequence[FewShotExample],
    k_per_label: int,
    *,
    use_secondary: bool = True,
) -> PromptText:
    """Assemble the just-in-time classification prompt.

    Includes exactly ``k_per_label`` bank examples per label, grouped by
    label in enum order and kept in bank order within each group;
    ``k_per_label=0`` omits the examples section entirely (zero-shot).
    """
    if k_per_label < 0:
        raise PromptBuildError("k_per_label must be >= 0")
    blocks: list[str] = []
    if k_per_label > 0:
        for label in ErrorLabel:
            selected = [ex for ex in bank if ex.label is label][:k_per_label]
            if len(selected) < k_per_label:
                raise InsufficientBank(label, len(selected), k_per_label)
            blocks.extend(_example_block(ex) for ex in selected)
    examples_section = "Few-Shot Examples\n\n" + "\n\n".join(blocks) + "\n\n" if blocks else ""
    text = (
        _load_template("jit.txt")
        .replace("{{examples}}", examples_section)
        .replace("{{quiz_problem}}", format_quiz_problem(problem))
        .replace("{{student_essay}}", essay.text)
        .replace("{{secondary_instruction}}", _SECONDARY_ON if use_secondary else _SECONDARY_OFF)
    )
    return PromptText.of(text, TemplateId.JIT)


def build_posthoc_prompt(
    problem: QuizProblem, essay: ValidatedEssay, expert_rubric: str
) -> PromptText:
    """Assemble the post-hoc dual-level feedback prompt."""
    if not expert_rubric:
        raise EmptyRubric()
    text = (
        _load_template("posthoc.txt")
        .replace("{{quiz_problem}}", format_quiz_problem(problem))
        .replace("{{student_essay}}", essay.text)
        .replace("{{expert_rubric}}", expert_rubric)
    )
    return PromptText.of(text, TemplateId.POSTHOC)


class ResponseParseError(ValueError):
    pass


class NoJsonFound(ResponseParseError):
    def __init__(self):
        super().__init__("no JSON object found in model output")


class MissingField(ResponseParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing or invalid field: {name!r}")


class BadLabel(ResponseParseError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"not a recognized error label: {value!r}")


class ConfidenceOutOfRange(ResponseParseError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"confidence must be an integer in [1, 5], got {value!r}")


class BadLevel(ResponseParseError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"inferred level must be Novice or Advanced, got {value!r}")


def extract_first_json_object(raw: str) -> Optional[dict]:
    """First parseable JSON object in ``raw``, tolerating fences and prose."""
    decoder = json.JSONDecoder()
    idx = raw.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(raw, idx)
        except (ValueError, RecursionError):
            idx = raw.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = raw.find("{", idx + 1)
    return None


def _parse_label(value) -> ErrorLabel:
    if not isinstance(value, str):
        raise BadLabel(value)
    try:
        return ErrorLabel.parse(value.strip())
    except ValueError:
        raise BadLabel(value) from None


def parse_jit_response(raw: str) -> FeedbackResponse:
    """Validate and convert raw model output into a FeedbackResponse.

    Every failure surfaces as a typed ResponseParseError; this never raises
    anything else regardless of input.
    """
    obj = extract_first_json_object(raw)
    if obj is None:
        raise NoJsonFound()
    for name in ("classification", "confidence", "secondary_classification", "feedback"):
        if name not in obj:
            raise MissingField(name)
    classification = _parse_label(obj["classification"])
    secondary = _parse_label(obj["secondary_classification"])
    confidence = obj["confidence"]
    if isinstance(confidence, float) and confidence.is_integer():
        confidence = int(confidence)
    if isinstance(confidence, bool) or not isinstance(confidence, int):
        raise ConfidenceOutOfRange(obj["confidence"])
    if not 1 <= confidence <= 5:
        raise ConfidenceOutOfRange(confidence)
    feedback = obj["feedback"]
    if not isinstance(feedback, str) or not feedback.strip():
        raise MissingField("feedback")
    if word_count(feedback) > FEEDBACK_WORD_LIMIT_WARN:
        logger.warning(
            "feedback exceeds %d words (%d)", FEEDBACK_WORD_LIMIT_WARN, word_count(feedback)
        )
    return FeedbackResponse(
        classification=classification,
        confidence=confidence,
        secondary_classification=secondary,
        feedback=feedback,
        degraded=False,
    )


def render_jit_response(response: FeedbackResponse) -> str:
    """Inverse of parse_jit_response for well-formed responses."""
    return json.dumps(
        {
            "classification": response.classification.value,
            "confidence": response.confidence,
            "secondary_classification": response.secondary_classification.value,
            "feedback": response.feedback,
        }
    )


def parse_posthoc_response(raw: str) -> PosthocFeedback:
    """Validate and convert raw post-hoc model output."""
    obj = extract_first_json_object(raw)
    if obj is None:
        raise NoJsonFound()
    for name in ("Essay_Evaluation", "Inferred_Level", "Feedback"):
        if name not in obj:
            raise MissingField(name)
    evaluation = obj["Essay_Evaluation"]
    if not isinstance(evaluation, str):
        raise MissingField("Essay_Evaluation")
    level_raw = obj["Inferred_Level"]
    if not isinstance(level_raw, str):
        raise BadLevel(level_raw)
    try:
        level = KnowledgeLevel(level_raw.strip())
    except ValueError:
        raise BadLevel(level_raw) from None
    feedback = obj["Feedback"]
    if not isinstance(feedback, dict):
        raise MissingField("Feedback")
    variants = {}
    for key in ("Novice", "Advanced"):
        value = feedback.get(key)
        if not isinstance(value, str) or not value.strip():
            raise MissingField(f"Feedback.{key}")
        variants[key] = value
    return PosthocFeedback(
        essay_evaluation=evaluation,
        inferred_level=level,
        novice_feedback=variants["Novice"],
        advanced_feedback=variants["Advanced"],
    )
