"""Just-in-time strategy-essay feedback: domain types, prompt engine,
completion gateway, session service, analytics, and a cohort simulator."""

from .domain import (
    ErrorLabel,
    EssayValidationError,
    FeedbackResponse,
    FewShotExample,
    QuizOption,
    QuizProblem,
    Session,
    StrategyEssay,
    SurveyResponse,
    ValidatedEssay,
    validate_essay,
    word_count,
    word_count_delta,
)

__all__ = [
    "ErrorLabel",
    "EssayValidationError",
    "FeedbackResponse",
    "FewShotExample",
    "QuizOption",
    "QuizProblem",
    "Session",
    "StrategyEssay",
    "SurveyResponse",
    "ValidatedEssay",
    "validate_essay",
    "word_count",
    "word_count_delta",
]

__version__ = "0.1.0"
