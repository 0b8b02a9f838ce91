"""Append-only JSONL event log and its replayable materialized view.

Five event kinds cover the whole session lifecycle.  The same
``SessionStore.apply`` path is used by the live service and by offline
replay, so rebuilding from the log reconstructs every session exactly.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from .domain import ConversationTurn, Session, SurveyResponse

EVENT_KINDS = (
    "SessionCreated",
    "TurnRecorded",
    "AnswerRecorded",
    "SurveyRecorded",
    "PreferenceRecorded",
)


class LogCorruption(ValueError):
    pass


class EventLog:
    """Single-writer append channel over a JSONL file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = None

    def append(self, event: dict) -> None:
        if event.get("event") not in EVENT_KINDS:
            raise ValueError(f"unknown event kind: {event.get('event')!r}")
        if self._fh is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def iter_events(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                event = json.loads(line)
            except ValueError as exc:
                raise LogCorruption(f"line {lineno}: invalid JSON ({exc})") from exc
            if not isinstance(event, dict):
                raise LogCorruption(f"line {lineno}: event must be an object")
            yield event


@dataclass
class _SessionState:
    session_id: str
    student_ref: str
    quiz_id: str
    turns: list[ConversationTurn] = field(default_factory=list)
    final_answer: Optional[str] = None
    answer_correct: Optional[bool] = None
    survey: Optional[SurveyResponse] = None

    def freeze(self) -> Session:
        return Session(
            session_id=self.session_id,
            student_ref=self.student_ref,
            quiz_id=self.quiz_id,
            turns=tuple(self.turns),
            final_answer=self.final_answer,
            answer_correct=self.answer_correct,
            survey=self.survey,
        )


@dataclass(frozen=True)
class PreferenceChoice:
    assignment_id: str
    student_ref: str
    chosen: str  # "A" | "B"
    reasons: tuple[str, ...]


class SessionStore:
    """Materialized index over the event stream.

    ``apply`` validates per-stream sequence numbers (sessions and preference
    assignments each form a stream), so gaps or reordering surface as
    LogCorruption.
    """

    def __init__(self):
        self._sessions: dict[str, _SessionState] = {}
        self._choices: dict[tuple[str, str], PreferenceChoice] = {}
        self._seq: dict[str, int] = {}

    @staticmethod
    def stream_key(event: dict) -> str:
        if event["event"] == "PreferenceRecorded":
            return "pref:" + event["assignment_id"]
        return "session:" + event["session_id"]

    def next_seq(self, key: str) -> int:
        return self._seq.get(key, 0) + 1

    def apply(self, event: dict) -> None:
        kind = event["event"]
        key = self.stream_key(event)
        expected = self.next_seq(key)
        if event.get("seq") != expected:
            raise LogCorruption(
                f"stream {key}: expected seq {expected}, got {event.get('seq')}"
            )
        self._seq[key] = expected
        if kind == "SessionCreated":
            sid = event["session_id"]
            if sid in self._sessions:
                raise LogCorruption(f"duplicate session {sid}")
            self._sessions[sid] = _SessionState(
                session_id=sid,
                student_ref=event["student_ref"],
                quiz_id=event["quiz_id"],
            )
        elif kind == "TurnRecorded":
            state = self._require(event["session_id"])
            turn = ConversationTurn.from_dict(event["turn"])
            if turn.turn_index != len(state.turns) + 1:
                raise LogCorruption(
                    f"session {state.session_id}: turn {turn.turn_index} out of order"
                )
            state.turns.append(turn)
        elif kind == "AnswerRecorded":
            state = self._require(event["session_id"])
            if state.final_answer is not None:
                raise LogCorruption(f"session {state.session_id}: answer recorded twice")
            state.final_answer = event["final_answer"]
            state.answer_correct = event["answer_correct"]
        elif kind == "SurveyRecorded":
            state = self._require(event["session_id"])
            if state.survey is not None:
                raise LogCorruption(f"session {state.session_id}: survey recorded twice")
            state.survey = SurveyResponse.from_dict(event["survey"])
        elif kind == "PreferenceRecorded":
            self._choices[(event["assignment_id"], event["student_ref"])] = PreferenceChoice(
                assignment_id=event["assignment_id"],
                student_ref=event["student_ref"],
                chosen=event["chosen"],
                reasons=tuple(event.get("reasons") or ()),
            )
        else:
            raise LogCorruption(f"unknown event kind: {kind!r}")

    def _require(self, session_id: str) -> _SessionState:
        state = self._sessions.get(session_id)
        if state is None:
            raise LogCorruption(f"event for unknown session {session_id}")
        return state

    def has_session(self, session_id: str) -> bool:
        return session_id in self._sessions

    def raw(self, session_id: str) -> _SessionState:
        return self._require(session_id)

    def session(self, session_id: str) -> Session:
        return self._require(session_id).freeze()

    def sessions(self) -> list[Session]:
        return [state.freeze() for state in self._sessions.values()]

    def choice(self, assignment_id: str, student_ref: str) -> Optional[PreferenceChoice]:
        return self._choices.get((assignment_id, student_ref))

    def choices(self) -> list[PreferenceChoice]:
        return list(self._choices.values())

    def session_count(self) -> int:
        return len(self._sessions)


@dataclass(frozen=True)
class LogSnapshot:
    """Immutable view of a fully applied event stream."""

    sessions: tuple[Session, ...]
    preferences: tuple[PreferenceChoice, ...]

    @property
    def session_count(self) -> int:
        return len(self.sessions)


def snapshot_from_store(store: SessionStore) -> LogSnapshot:
    return LogSnapshot(sessions=tuple(store.sessions()), preferences=tuple(store.choices()))


def replay(path: str | Path) -> LogSnapshot:
    """Rebuild every session from the log; raises LogCorruption on defects."""
    store = SessionStore()
    for event in iter_events(path):
        store.apply(event)
    return snapshot_from_store(store)
