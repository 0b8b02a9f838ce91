"""Session lifecycle service: essay submission turns, answer and survey
recording, and anonymous A/B preference pairs, all persisted through the
append-only event log.

Student-facing return values carry only what a student may see (feedback
text, turn index, degraded flag, answer correctness); predicted labels and
confidence live in the log for analytics.
"""

import asyncio
import hashlib
import hmac
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .classifier import ClassificationStrategy, classify
from .domain import (
    ConversationTurn,
    FewShotExample,
    QuizProblem,
    Session,
    SurveyResponse,
    stable_hash64,
    validate_essay,
)
from .eventlog import EventLog, LogSnapshot, SessionStore, iter_events, snapshot_from_store
from .gateway import Gateway
from .prompts import PosthocFeedback


class ServiceError(Exception):
    """Base for domain-rule violations surfaced to API callers."""


class UnknownQuiz(ServiceError):
    pass


class UnknownSession(ServiceError):
    pass


class SessionClosed(ServiceError):
    pass


class UnknownOption(ServiceError):
    pass


class AlreadyAnswered(ServiceError):
    pass


class NotAnswered(ServiceError):
    pass


class DuplicateSurvey(ServiceError):
    pass


class NotGenerated(ServiceError):
    pass


class DuplicateChoice(ServiceError):
    pass


@dataclass(frozen=True)
class TurnResult:
    """The only feedback-turn data a student-facing caller receives."""

    turn_index: int
    feedback: str
    degraded: bool


@dataclass(frozen=True)
class PreferencePair:
    """Dual feedback texts as anonymous variants A/B, order fixed per student."""

    assignment_id: str
    variant_a: str
    variant_b: str
    order_seed: int
    chosen: Optional[str] = None
    reasons: tuple[str, ...] = ()


def anonymize_student_id(hash_key: str, raw_student_id: str) -> str:
    """Keyed one-way hash applied at ingestion; raw ids are never stored."""
    digest = hmac.new(hash_key.encode("utf-8"), raw_student_id.encode("utf-8"), hashlib.sha256)
    return digest.hexdigest()[:16]


class SessionService:
    """Coordinates validation, classification, persistence and read views.

    Per-session mutation is mutually exclusive (concurrent submissions to one
    session serialize; the second writer observes the first's turn), while
    different sessions proceed concurrently.
    """

    def __init__(
        self,
        *,
        quizzes: dict[str, QuizProblem],
        bank: Sequence[FewShotExample],
        strategy: ClassificationStrategy,
        gateway: Gateway,
        log: EventLog,
        hash_key: str,
        now_fn: Callable[[], float] = time.time,
    ):
        self._quizzes = dict(quizzes)
        self._bank = list(bank)
        self._strategy = strategy
        self._gateway = gateway
        self._log = log
        self._hash_key = hash_key
        self._now_fn = now_fn
        self._store = SessionStore()
        self._locks: dict[str, asyncio.Lock] = {}
        self._session_counter = 0
        self._posthoc: dict[tuple[str, str], PosthocFeedback] = {}
        if log.path.exists():
            self._bootstrap()

    def _bootstrap(self) -> None:
        for event in iter_events(self._log.path):
            self._store.apply(event)
        self._session_counter = self._store.session_count()

    def _now_ms(self) -> int:
        return int(self._now_fn() * 1000)

    def _record(self, event: dict) -> None:
        event["seq"] = self._store.next_seq(self._store.stream_key(event))
        self._log.append(event)
        self._store.apply(event)

    def _lock(self, session_id: str) -> asyncio.Lock:
        lock = self._locks.get(session_id)
        if lock is None:
            lock = self._locks[session_id] = asyncio.Lock()
        return lock

    def quiz(self, quiz_id: str) -> QuizProblem:
        quiz = self._quizzes.get(quiz_id)
        if quiz is None:
            raise UnknownQuiz(quiz_id)
        return quiz

    async def create_session(self, raw_student_id: str, quiz_id: str) -> str:
        """Register a fresh session; same inputs never deduplicate."""
        self.quiz(quiz_id)
        self._session_counter += 1
        session_id = f"s{self._session_counter:08d}"
        self._record(
            {
                "event": "SessionCreated",
                "ts_ms": self._now_ms(),
                "session_id": session_id,
                "student_ref": anonymize_student_id(self._hash_key, raw_student_id),
                "quiz_id": quiz_id,
            }
        )
        return session_id

    async def submit_essay(self, session_id: str, text: str) -> TurnResult:
        """Validate, classify, persist one turn; return only student-safe fields.

        Raises EssayValidationError, SessionClosed, UnknownSession; BusyError
        propagates from the gateway.  A degraded classification still
        succeeds, carrying fallback feedback.
        """
        if not self._store.has_session(session_id):
            raise UnknownSession(session_id)
        async with self._lock(session_id):
            state = self._store.raw(session_id)
            if state.final_answer is not None:
                raise SessionClosed(session_id)
            now_ms = self._now_ms()
            essay = validate_essay(text, submitted_at=now_ms)
            quiz = self.quiz(state.quiz_id)
            turn_index = len(state.turns) + 1
            key = f"{stable_hash64(session_id, str(turn_index)):016x}"
            response = await classify(
                essay, quiz, self._bank, self._strategy, self._gateway, idempotency_key=key
            )
            latency = None
            if state.turns:
                latency = (now_ms - state.turns[-1].essay.submitted_at) / 1000.0
            turn = ConversationTurn(
                turn_index=turn_index,
                essay=essay,
                response=response,
                latency_since_prev_s=latency,
            )
            self._record(
                {
                    "event": "TurnRecorded",
                    "ts_ms": now_ms,
                    "session_id": session_id,
                    "turn": turn.to_dict(),
                }
            )
            return TurnResult(
                turn_index=turn_index, feedback=response.feedback, degraded=response.degraded
            )

    async def record_answer(self, session_id: str, option_key: str) -> bool:
        """Grade and close the session; further essays are rejected."""
        if not self._store.has_session(session_id):
            raise UnknownSession(session_id)
        async with self._lock(session_id):
            state = self._store.raw(session_id)
            if state.final_answer is not None:
                raise AlreadyAnswered(session_id)
            quiz = self.quiz(state.quiz_id)
            if option_key not in quiz.option_keys():
                raise UnknownOption(option_key)
            correct = option_key == quiz.correct_option
            self._record(
                {
                    "event": "AnswerRecorded",
                    "ts_ms": self._now_ms(),
                    "session_id": session_id,
                    "final_answer": option_key,
                    "answer_correct": correct,
                }
            )
            return correct

    async def record_survey(self, session_id: str, survey: SurveyResponse) -> None:
        """At most one survey per session, only after the answer."""
        if not self._store.has_session(session_id):
            raise UnknownSession(session_id)
        async with self._lock(session_id):
            state = self._store.raw(session_id)
            if state.final_answer is None:
                raise NotAnswered(session_id)
            if state.survey is not None:
                raise DuplicateSurvey(session_id)
            self._record(
                {
                    "event": "SurveyRecorded",
                    "ts_ms": self._now_ms(),
                    "session_id": session_id,
                    "survey": survey.to_dict(),
                }
            )

    def add_posthoc_feedback(
        self, assignment_id: str, raw_student_id: str, feedback: PosthocFeedback
    ) -> None:
        ref = anonymize_student_id(self._hash_key, raw_student_id)
        self._posthoc[(assignment_id, ref)] = feedback

    def get_preference_pair(self, assignment_id: str, raw_student_id: str) -> PreferencePair:
        """Novice/advanced texts as anonymous A/B.

        The order seed is a stable hash of (assignment, student), so one
        student always sees the same order while order is balanced across
        students.
        """
        ref = anonymize_student_id(self._hash_key, raw_student_id)
        feedback = self._posthoc.get((assignment_id, ref))
        if feedback is None:
            raise NotGenerated(assignment_id)
        seed = stable_hash64(assignment_id, ref)
        if seed % 2 == 0:
            variant_a, variant_b = feedback.novice_feedback, feedback.advanced_feedback
        else:
            variant_a, variant_b = feedback.advanced_feedback, feedback.novice_feedback
        choice = self._store.choice(assignment_id, ref)
        return PreferencePair(
            assignment_id=assignment_id,
            variant_a=variant_a,
            variant_b=variant_b,
            order_seed=seed,
            chosen=choice.chosen if choice else None,
            reasons=choice.reasons if choice else (),
        )

    async def record_preference_choice(
        self, assignment_id: str, raw_student_id: str, chosen: str, reasons: Sequence[str]
    ) -> None:
        if chosen not in ("A", "B"):
            raise ValueError("chosen must be 'A' or 'B'")
        ref = anonymize_student_id(self._hash_key, raw_student_id)
        if (assignment_id, ref) not in self._posthoc:
            raise NotGenerated(assignment_id)
        if self._store.choice(assignment_id, ref) is not None:
            raise DuplicateChoice(assignment_id)
        self._record(
            {
                "event": "PreferenceRecorded",
                "ts_ms": self._now_ms(),
                "assignment_id": assignment_id,
                "student_ref": ref,
                "chosen": chosen,
                "reasons": list(reasons),
            }
        )

    def session_view(self, session_id: str) -> Session:
        if not self._store.has_session(session_id):
            raise UnknownSession(session_id)
        return self._store.session(session_id)

    def snapshot(self) -> LogSnapshot:
        return snapshot_from_store(self._store)

    def student_quiz_view(self, quiz_id: str) -> dict:
        """Quiz rendering with labels and the answer key stripped."""
        quiz = self.quiz(quiz_id)
        return {
            "quiz_id": quiz.quiz_id,
            "statement": quiz.statement,
            "options": [{"key": o.key, "text": o.text} for o in quiz.options],
        }

    def close(self) -> None:
        self._log.close()
