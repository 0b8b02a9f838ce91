"""Seeded cohort simulator that drives the whole service loop end-to-end.

Each simulated student carries a hidden per-turn label sequence drawn from
the configured revision dynamics; essays are synthesized from label-specific
templates whose marker phrases let a scripted backend answer with exactly
that hidden label.  All randomness derives from the seed, and timestamps
come from a context-local virtual clock, so identical seeds produce
byte-identical event logs (at parallelism 1).
"""

import asyncio
import contextvars
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .analytics import TransitionMatrix
from .classifier import ClassificationStrategy
from .config import parse_kv_file
from .domain import ErrorLabel, QuizOption, QuizProblem, stable_hash64, word_count
from .eventlog import EventLog
from .gateway import Gateway, GatewayConfig, ScriptedBackend, ScriptedRule
from .service import SessionService, TurnResult

_LABELS = list(ErrorLabel)

DEFAULT_QUIZ = QuizProblem(
    quiz_id="qz-stacked-blocks",
    statement=(
        "Two stacked blocks ride together across a level, frictionless floor while a "
        "steady horizontal push acts on the lower block, and the pair speeds up as one "
        "unit. Which expression gives the force that the upper block exerts on the "
        "lower block while they accelerate together?"
    ),
    options=(
        QuizOption(
            key="A",
            text=(
                "The mass of the upper block times the acceleration of the pair, "
                "pointing against the applied push."
            ),
            mapped_label=ErrorLabel.CORRECT,
        ),
        QuizOption(
            key="B",
            text=(
                "The mass of the upper block times the acceleration of the pair, "
                "pointing along the applied push."
            ),
            mapped_label=ErrorLabel.DIRECTION,
        ),
        QuizOption(
            key="C",
            text=(
                "The mass of the lower block times the acceleration of the pair, "
                "pointing against the applied push."
            ),
            mapped_label=ErrorLabel.POSITION,
        ),
        QuizOption(
            key="D",
            text=(
                "The combined mass of the two blocks times the acceleration of the "
                "pair, pointing along the applied push."
            ),
            mapped_label=ErrorLabel.POSITION_DIRECTION,
        ),
    ),
    correct_option="A",
)

# Marker phrases are unique to each label's essays and never occur in the
# prompt template, quiz text, or feedback, so a contains-rule can recover the
# hidden label from the assembled prompt.
ESSAY_MARKERS = {
    ErrorLabel.CORRECT: "focus on the block on top and the push that resists the motion",
    ErrorLabel.DIRECTION: "assume the contact push points the same way as the applied push",
    ErrorLabel.POSITION: "work with the heavier block underneath when I multiply by the acceleration",
    ErrorLabel.POSITION_DIRECTION: "treat the whole stack as one piece pushed along by hand",
}

_ESSAY_LEADS = {
    ErrorLabel.CORRECT: (
        "My plan for this quiz is to {marker}, because that object and that way of "
        "pushing decide the answer."
    ),
    ErrorLabel.DIRECTION: (
        "My plan for this quiz is to {marker}, then multiply the mass of the block on "
        "top by the acceleration."
    ),
    ErrorLabel.POSITION: (
        "My plan for this quiz is to {marker}, since the larger mass seems to matter "
        "most for the contact force."
    ),
    ErrorLabel.POSITION_DIRECTION: (
        "My plan for this quiz is to {marker}, using the total mass and the forward "
        "sense of the motion."
    ),
}

_FILLER_WORDS = (
    "I will keep checking my reasoning and compare each step with the ideas from "
    "class before settling on an answer so that nothing important slips past me"
).split()

# Backend answers per hidden label; feedback wording avoids every label name
# because these strings reach students verbatim.
_SCRIPTED_FEEDBACK = {
    ErrorLabel.CORRECT: (
        "Your plan already names the object under study and the way the contact push "
        "points. Keep that discipline while you compute, and make sure the "
        "acceleration you use belongs to the pair moving together."
    ),
    ErrorLabel.DIRECTION: (
        "You clearly identified the object to analyze. Before answering, pause and ask "
        "which way the contact push must point while the pair speeds up; stating that "
        "explicitly will make your reasoning complete."
    ),
    ErrorLabel.POSITION: (
        "Your treatment of the push and its sense reads well. Double-check which block "
        "the question actually asks about, and make sure the mass in your final "
        "expression belongs to that block."
    ),
    ErrorLabel.POSITION_DIRECTION: (
        "Take a moment to restate which block the question asks about and which way "
        "the push on it points. Pinning down both choices before computing will make "
        "your strategy much stronger."
    ),
}


def synth_essay(label: ErrorLabel, target_words: int) -> str:
    """Label-consistent essay of exactly ``target_words`` words.

    Always passes validation: plain prose, no digits or symbols, at least the
    course minimum.
    """
    lead = _ESSAY_LEADS[label].format(marker=ESSAY_MARKERS[label])
    lead_len = word_count(lead)
    target = max(target_words, 50, lead_len)
    extra = [_FILLER_WORDS[i % len(_FILLER_WORDS)] for i in range(target - lead_len)]
    return lead if not extra else lead + " " + " ".join(extra)


def scripted_sim_rules() -> list[ScriptedRule]:
    rules = []
    for label in _LABELS:
        response = json.dumps(
            {
                "classification": label.value,
                "confidence": 4,
                "secondary_classification": label.value,
                "feedback": _SCRIPTED_FEEDBACK[label],
            }
        )
        rules.append(ScriptedRule(contains=ESSAY_MARKERS[label], response=response))
    return rules


class VirtualClock:
    """Context-local time source; each asyncio task owns its own cursor."""

    def __init__(self, start: float = 1_700_000_000.0):
        self.start = start
        self._var: contextvars.ContextVar[float] = contextvars.ContextVar(
            "sim_clock", default=start
        )

    def now(self) -> float:
        return self._var.get()

    def set(self, value: float) -> None:
        self._var.set(value)

    def advance(self, seconds: float) -> None:
        self._var.set(self._var.get() + seconds)


class SimClient(Protocol):
    """The slice of the service surface a simulated student touches."""

    async def create_session(self, raw_student_id: str, quiz_id: str) -> str: ...

    async def submit_essay(self, session_id: str, text: str) -> TurnResult: ...

    async def record_answer(self, session_id: str, option_key: str) -> bool: ...


class InProcessClient:
    def __init__(self, service: SessionService):
        self._service = service

    async def create_session(self, raw_student_id: str, quiz_id: str) -> str:
        return await self._service.create_session(raw_student_id, quiz_id)

    async def submit_essay(self, session_id: str, text: str) -> TurnResult:
        return await self._service.submit_essay(session_id, text)

    async def record_answer(self, session_id: str, option_key: str) -> bool:
        return await self._service.record_answer(session_id, option_key)


def identity_dynamics() -> TransitionMatrix:
    return TransitionMatrix.from_probs(
        [[1.0 if i == j else 0.0 for j in range(4)] for i in range(4)]
    )


@dataclass
class SimConfig:
    n_students: int = 100
    initial_label_dist: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    revision_dynamics: TransitionMatrix = field(default_factory=identity_dynamics)
    p_continue: float = 0.6
    max_turns: int = 6
    latency_base_s: float = 30.0
    latency_jitter_s: float = 20.0
    word_delta_default: float = 6.0
    word_delta_jitter: float = 4.0
    word_delta_overrides: dict[tuple[ErrorLabel, ErrorLabel], float] = field(
        default_factory=dict
    )
    seed: int = 0
    parallelism: int = 1
    quiz: QuizProblem = field(default_factory=lambda: DEFAULT_QUIZ)

    def __post_init__(self):
        if self.n_students < 1:
            raise ValueError("n_students must be >= 1")
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")
        if not 0.0 <= self.p_continue <= 1.0:
            raise ValueError("p_continue must be a probability")
        total = sum(self.initial_label_dist)
        if total <= 0 or any(p < 0 for p in self.initial_label_dist):
            raise ValueError("initial_label_dist must be non-negative with positive mass")
        self.initial_label_dist = tuple(p / total for p in self.initial_label_dist)
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def word_delta_mean(self, from_label: ErrorLabel, to_label: ErrorLabel) -> float:
        return self.word_delta_overrides.get((from_label, to_label), self.word_delta_default)

    @classmethod
    def from_file(cls, path: str | Path) -> "SimConfig":
        values = parse_kv_file(path)
        kwargs: dict = {}
        if "n_students" in values:
            kwargs["n_students"] = int(values["n_students"])
        if "seed" in values:
            kwargs["seed"] = int(values["seed"])
        if "p_continue" in values:
            kwargs["p_continue"] = float(values["p_continue"])
        if "max_turns" in values:
            kwargs["max_turns"] = int(values["max_turns"])
        if "latency_base_s" in values:
            kwargs["latency_base_s"] = float(values["latency_base_s"])
        if "latency_jitter_s" in values:
            kwargs["latency_jitter_s"] = float(values["latency_jitter_s"])
        if "word_delta_default" in values:
            kwargs["word_delta_default"] = float(values["word_delta_default"])
        if "word_delta_jitter" in values:
            kwargs["word_delta_jitter"] = float(values["word_delta_jitter"])
        if "parallelism" in values:
            kwargs["parallelism"] = int(values["parallelism"])
        if "initial_label_dist" in values:
            parts = [float(p) for p in values["initial_label_dist"].split(",")]
            if len(parts) != 4:
                raise ValueError("initial_label_dist needs 4 comma-separated values")
            kwargs["initial_label_dist"] = tuple(parts)
        rows = []
        for label in _LABELS:
            key = "transition_" + label.value.replace("-", "_")
            if key not in values:
                rows = []
                break
            parts = [float(p) for p in values[key].split(",")]
            if len(parts) != 4:
                raise ValueError(f"{key} needs 4 comma-separated values")
            rows.append(parts)
        if rows:
            kwargs["revision_dynamics"] = TransitionMatrix.from_probs(rows)
        overrides = {}
        for key, value in values.items():
            if key.startswith("word_delta_") and len(key.split("_")) == 4:
                _, _, code_from, code_to = key.split("_")
                overrides[
                    (
                        ErrorLabel.from_short_code(code_from.upper()),
                        ErrorLabel.from_short_code(code_to.upper()),
                    )
                ] = float(value)
        if overrides:
            kwargs["word_delta_overrides"] = overrides
        return cls(**kwargs)


def build_sim_service(
    config: SimConfig,
    log_path: str | Path,
    clock: VirtualClock,
    *,
    strategy: Optional[ClassificationStrategy] = None,
) -> SessionService:
    """Service wired for simulation: scripted backend driven by the hidden
    labels, unthrottled gateway, virtual clock."""
    backend = ScriptedBackend(scripted_sim_rules())
    gateway = Gateway(
        backend,
        GatewayConfig(
            rate_limit_per_s=1e9,
            burst=1_000_000,
            max_in_flight=256,
            retry_limit=0,
            retry_backoff_ms=(),
            queue_capacity=1_000_000,
        ),
    )
    return SessionService(
        quizzes={config.quiz.quiz_id: config.quiz},
        bank=[],
        strategy=strategy or ClassificationStrategy(few_shot=False, k_per_label=0),
        gateway=gateway,
        log=EventLog(log_path),
        hash_key="sim-hash-key",
        now_fn=clock.now,
    )


@dataclass(frozen=True)
class SimStudentOutcome:
    session_id: str
    hidden_labels: tuple[ErrorLabel, ...]
    final_option: str
    answer_correct: bool


def _draw(rng: random.Random, weights: Sequence[float]) -> int:
    point = rng.random()
    cumulative = 0.0
    for i, w in enumerate(weights):
        cumulative += w
        if point < cumulative:
            return i
    return len(weights) - 1


async def simulate_cohort(
    config: SimConfig, client: SimClient, clock: VirtualClock
) -> list[SimStudentOutcome]:
    """Run every simulated student through create/submit/revise/answer.

    Per-student RNG streams derive from (seed, index), so outcomes do not
    depend on scheduling; with parallelism 1 the event log is byte-identical
    across runs.
    """
    outcomes: list[Optional[SimStudentOutcome]] = [None] * config.n_students

    async def run_student(index: int) -> None:
        rng = random.Random(stable_hash64(str(config.seed), str(index)))
        clock.set(clock.start + index * 1.0)
        session_id = await client.create_session(f"student-{index:06d}", config.quiz.quiz_id)
        label = _LABELS[_draw(rng, config.initial_label_dist)]
        words = rng.randint(55, 85)
        await client.submit_essay(session_id, synth_essay(label, words))
        labels = [label]
        while len(labels) < config.max_turns and rng.random() < config.p_continue:
            row = config.revision_dynamics.probs[_LABELS.index(label)]
            next_label = _LABELS[_draw(rng, [p or 0.0 for p in row])]
            delta = round(
                rng.gauss(config.word_delta_mean(label, next_label), config.word_delta_jitter)
            )
            words = max(52, words + delta)
            clock.advance(config.latency_base_s + rng.uniform(0, config.latency_jitter_s))
            await client.submit_essay(session_id, synth_essay(next_label, words))
            labels.append(next_label)
            label = next_label
        clock.advance(5.0 + rng.uniform(0, 5.0))
        option = config.quiz.option_for_label(label).key
        correct = await client.record_answer(session_id, option)
        outcomes[index] = SimStudentOutcome(
            session_id=session_id,
            hidden_labels=tuple(labels),
            final_option=option,
            answer_correct=correct,
        )

    if config.parallelism == 1:
        for index in range(config.n_students):
            await run_student(index)
    else:
        semaphore = asyncio.Semaphore(config.parallelism)

        async def bounded(index: int) -> None:
            async with semaphore:
                await run_student(index)

        await asyncio.gather(*(bounded(i) for i in range(config.n_students)))
    return [o for o in outcomes if o is not None]


# Transition dynamics measured in a live course deployment, expressed in
# enum order (correct, direction, position, position-direction); a realistic
# target for calibration runs.
COURSE_DYNAMICS = TransitionMatrix.from_probs(
    [
        [0.6797, 0.1250, 0.1328, 0.0625],
        [0.5278, 0.2917, 0.1250, 0.0556],
        [0.3491, 0.1415, 0.3585, 0.1509],
        [0.3750, 0.0781, 0.2969, 0.2500],
    ]
)
