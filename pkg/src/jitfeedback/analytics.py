"""Conversation-dynamics analytics over a replayed event log: turn
statistics, label transition matrices, trajectory traces, activity
correlations, survey tallies, and the combined report document.

Everything here is a pure function of the log snapshot, so identical logs
produce byte-identical reports.  Percentages are truncated (not rounded) at
two decimals; all moments are population (1/n) moments.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .domain import ErrorLabel, Session, word_count_delta
from .eventlog import LogSnapshot
from .stats import (
    CorrelationResult,
    DegenerateDistribution,
    TooFewPoints,
    fisher_pearson_skewness,
    mean,
    pearson,
    population_std,
)

_LABELS = list(ErrorLabel)
_LABEL_INDEX = {label: i for i, label in enumerate(_LABELS)}


class EmptyLog(ValueError):
    pass


class NoTransitions(ValueError):
    pass


class TooFewPairs(ValueError):
    pass


def format_pct(fraction: float) -> str:
    """Render a fraction as a percentage truncated at two decimals.

    Truncation (with an FP guard) rather than rounding, so 209/1042 renders
    as 20.05%.
    """
    basis = math.floor(fraction * 10000 + 1e-6)
    return f"{basis / 100:.2f}%"


def _instances(snapshot: LogSnapshot) -> list[Session]:
    return [s for s in snapshot.sessions if s.turns]


def _conversational(snapshot: LogSnapshot) -> list[Session]:
    return [s for s in snapshot.sessions if len(s.turns) >= 2]


@dataclass(frozen=True)
class ConvStats:
    total_instances: int
    conversational_instances: int
    conversational_pct: float  # fraction of total_instances
    mean_turns: Optional[float]
    std_turns: Optional[float]
    min_turns: Optional[int]
    max_turns: Optional[int]
    skewness_g1: Optional[float]
    first_turn_correct_pct: Optional[float]
    last_turn_correct_pct: Optional[float]

    def to_dict(self) -> dict:
        return {
            "total_instances": self.total_instances,
            "conversational_instances": self.conversational_instances,
            "conversational_pct": self.conversational_pct,
            "mean_turns": self.mean_turns,
            "std_turns": self.std_turns,
            "min_turns": self.min_turns,
            "max_turns": self.max_turns,
            "skewness_g1": self.skewness_g1,
            "first_turn_correct_pct": self.first_turn_correct_pct,
            "last_turn_correct_pct": self.last_turn_correct_pct,
        }


def conversation_stats(snapshot: LogSnapshot) -> ConvStats:
    """Turn-count statistics; conversational means at least two turns.

    Turn statistics and first/last-turn correct percentages cover
    conversational instances only and are absent when there are none.
    """
    instances = _instances(snapshot)
    if not instances:
        raise EmptyLog("log contains no sessions with turns")
    conversational = [s for s in instances if len(s.turns) >= 2]
    total = len(instances)
    stats = {
        "total_instances": total,
        "conversational_instances": len(conversational),
        "conversational_pct": len(conversational) / total,
        "mean_turns": None,
        "std_turns": None,
        "min_turns": None,
        "max_turns": None,
        "skewness_g1": None,
        "first_turn_correct_pct": None,
        "last_turn_correct_pct": None,
    }
    if conversational:
        counts = [len(s.turns) for s in conversational]
        stats["mean_turns"] = mean(counts)
        stats["std_turns"] = population_std(counts)
        stats["min_turns"] = min(counts)
        stats["max_turns"] = max(counts)
        try:
            stats["skewness_g1"] = fisher_pearson_skewness(counts)
        except (DegenerateDistribution, TooFewPoints):
            pass
        n = len(conversational)
        stats["first_turn_correct_pct"] = (
            sum(
                1
                for s in conversational
                if s.turns[0].response.classification is ErrorLabel.CORRECT
            )
            / n
        )
        stats["last_turn_correct_pct"] = (
            sum(
                1
                for s in conversational
                if s.turns[-1].response.classification is ErrorLabel.CORRECT
            )
            / n
        )
    return ConvStats(**stats)


@dataclass(frozen=True)
class TransitionMatrix:
    """4x4 row-stochastic grid in enum order; zero-count rows have no probs."""

    probs: tuple[tuple[Optional[float], ...], ...]
    row_counts: tuple[int, int, int, int]
    cell_counts: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        for i, row in enumerate(self.probs):
            if self.row_counts[i] > 0:
                if any(p is None or not 0.0 <= p <= 1.0 for p in row):
                    raise ValueError("probabilities must be in [0, 1]")
                if abs(sum(row) - 1.0) > 1e-12:
                    raise ValueError(f"row {i} must sum to 1")
            elif any(p is not None for p in row):
                raise ValueError("rows without outgoing transitions have no probabilities")

    @classmethod
    def from_counts(cls, counts: Sequence[Sequence[int]]) -> "TransitionMatrix":
        probs = []
        row_counts = []
        for row in counts:
            total = sum(row)
            row_counts.append(total)
            probs.append(
                tuple(c / total for c in row) if total > 0 else (None, None, None, None)
            )
        return cls(
            probs=tuple(probs),
            row_counts=tuple(row_counts),
            cell_counts=tuple(tuple(row) for row in counts),
        )

    @classmethod
    def from_probs(cls, rows: Sequence[Sequence[float]]) -> "TransitionMatrix":
        """Build a target matrix from probability rows (normalized exactly)."""
        probs = []
        for row in rows:
            total = sum(row)
            if total <= 0:
                raise ValueError("each row needs positive mass")
            probs.append(tuple(p / total for p in row))
        return cls(probs=tuple(probs), row_counts=(1, 1, 1, 1))

    def prob(self, from_label: ErrorLabel, to_label: ErrorLabel) -> Optional[float]:
        return self.probs[_LABEL_INDEX[from_label]][_LABEL_INDEX[to_label]]

    def to_dict(self) -> dict:
        return {
            "labels": [l.value for l in _LABELS],
            "probs": [list(row) for row in self.probs],
            "row_counts": list(self.row_counts),
            "cell_counts": [list(r) for r in self.cell_counts] if self.cell_counts else None,
        }


def transition_matrix(snapshot: LogSnapshot) -> TransitionMatrix:
    """Count adjacent-turn label transitions and normalize per row."""
    counts = [[0] * 4 for _ in range(4)]
    found = False
    for session in snapshot.sessions:
        for prev, nxt in zip(session.turns, session.turns[1:]):
            counts[_LABEL_INDEX[prev.response.classification]][
                _LABEL_INDEX[nxt.response.classification]
            ] += 1
            found = True
    if not found:
        raise NoTransitions("log contains no adjacent turn pairs")
    return TransitionMatrix.from_counts(counts)


@dataclass(frozen=True)
class TrajectoryEntry:
    path: str  # short codes joined by '-'
    n_students: int
    n_correct_answers: int

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "n_students": self.n_students,
            "n_correct_answers": self.n_correct_answers,
        }


@dataclass(frozen=True)
class TrajectoryReport:
    start_label: ErrorLabel
    entries: tuple[TrajectoryEntry, ...]

    def to_dict(self) -> dict:
        return {
            "start_label": self.start_label.value,
            "entries": [e.to_dict() for e in self.entries],
        }


def _session_path(session: Session, collapse: bool) -> str:
    codes = [t.response.classification.short_code for t in session.turns]
    if collapse:
        collapsed = [codes[0]]
        for code in codes[1:]:
            if code != collapsed[-1]:
                collapsed.append(code)
        codes = collapsed
    return "-".join(codes)


def extract_trajectories(
    snapshot: LogSnapshot, start_label: ErrorLabel, *, collapse: bool = False
) -> TrajectoryReport:
    """Group conversational sessions starting at ``start_label`` by their
    full per-turn label path; count correct final answers per path.

    ``collapse=True`` merges consecutive repeats (D-D-C becomes D-C).
    """
    groups: dict[str, list[Session]] = {}
    for session in _conversational(snapshot):
        if session.turns[0].response.classification is not start_label:
            continue
        groups.setdefault(_session_path(session, collapse), []).append(session)
    entries = [
        TrajectoryEntry(
            path=path,
            n_students=len(sessions),
            n_correct_answers=sum(1 for s in sessions if s.answer_correct),
        )
        for path, sessions in groups.items()
    ]
    entries.sort(key=lambda e: (-e.n_students, e.path))
    return TrajectoryReport(start_label=start_label, entries=tuple(entries))


def activity_correlations(snapshot: LogSnapshot) -> dict[str, CorrelationResult]:
    """Correlate revision activity with the revised essay being judged right.

    Over all adjacent turn pairs: reflective latency and word-count change of
    the later turn against a 0/1 coding of its classification.
    """
    latencies: list[float] = []
    deltas: list[float] = []
    outcomes: list[float] = []
    for session in snapshot.sessions:
        for prev, nxt in zip(session.turns, session.turns[1:]):
            latencies.append(nxt.latency_since_prev_s or 0.0)
            deltas.append(word_count_delta(prev.essay, nxt.essay))
            outcomes.append(
                1.0 if nxt.response.classification is ErrorLabel.CORRECT else 0.0
            )
    if len(outcomes) < 3:
        raise TooFewPairs(f"need at least 3 adjacent turn pairs, got {len(outcomes)}")
    return {
        "latency_vs_correct": pearson(latencies, outcomes),
        "worddelta_vs_correct": pearson(deltas, outcomes),
    }


@dataclass(frozen=True)
class SurveyTally:
    n_surveys: int
    helpful_count: int
    helpful_pct: Optional[float]  # fraction; absent without surveys
    reason_counts: tuple[tuple[str, int], ...]  # sorted by count desc, then name
    cluster_counts: tuple[tuple[int, int], ...]  # (cluster_label, count), sorted

    def to_dict(self) -> dict:
        return {
            "n_surveys": self.n_surveys,
            "helpful_count": self.helpful_count,
            "helpful_pct": self.helpful_pct,
            "reason_counts": [[r, c] for r, c in self.reason_counts],
            "cluster_counts": [[k, c] for k, c in self.cluster_counts],
        }


def survey_tally(snapshot: LogSnapshot) -> SurveyTally:
    surveys = [s.survey for s in snapshot.sessions if s.survey is not None]
    reasons: dict[str, int] = {}
    clusters: dict[int, int] = {}
    helpful = 0
    for survey in surveys:
        if survey.helpful:
            helpful += 1
        for reason in survey.reasons:
            reasons[reason] = reasons.get(reason, 0) + 1
        if survey.cluster_label is not None:
            clusters[survey.cluster_label] = clusters.get(survey.cluster_label, 0) + 1
    return SurveyTally(
        n_surveys=len(surveys),
        helpful_count=helpful,
        helpful_pct=helpful / len(surveys) if surveys else None,
        reason_counts=tuple(sorted(reasons.items(), key=lambda kv: (-kv[1], kv[0]))),
        cluster_counts=tuple(sorted(clusters.items())),
    )


_FOOTNOTES = (
    "Total instances counts sessions, not distinct students.",
    "All moments are population (1/n) moments; percentages truncate at two decimals.",
    "Essay correctness in correlations is the revised turn's predicted label being the correct one.",
)


@dataclass(frozen=True)
class Report:
    conv_stats: ConvStats
    transitions: Optional[TransitionMatrix]
    trajectories: tuple[TrajectoryReport, ...]  # one per start label, enum order
    latency_vs_correct: Optional[CorrelationResult]
    worddelta_vs_correct: Optional[CorrelationResult]
    survey: SurveyTally
    turn_histogram: tuple[tuple[int, int], ...]  # (turn count, sessions)
    footnotes: tuple[str, ...] = _FOOTNOTES

    def to_dict(self) -> dict:
        return {
            "conv_stats": self.conv_stats.to_dict(),
            "transitions": self.transitions.to_dict() if self.transitions else None,
            "trajectories": {t.start_label.value: t.to_dict() for t in self.trajectories},
            "correlations": {
                "latency_vs_correct": (
                    self.latency_vs_correct.to_dict() if self.latency_vs_correct else None
                ),
                "worddelta_vs_correct": (
                    self.worddelta_vs_correct.to_dict() if self.worddelta_vs_correct else None
                ),
            },
            "survey": self.survey.to_dict(),
            "turn_histogram": [[t, c] for t, c in self.turn_histogram],
            "footnotes": list(self.footnotes),
        }


def build_report(snapshot: LogSnapshot, *, collapse_trajectories: bool = False) -> Report:
    """Aggregate every analysis into one document; raises EmptyLog."""
    stats = conversation_stats(snapshot)  # raises EmptyLog on empty input
    try:
        transitions = transition_matrix(snapshot)
    except NoTransitions:
        transitions = None
    trajectories = tuple(
        extract_trajectories(snapshot, label, collapse=collapse_trajectories)
        for label in _LABELS
    )
    try:
        correlations = activity_correlations(snapshot)
        latency_corr = correlations["latency_vs_correct"]
        delta_corr = correlations["worddelta_vs_correct"]
    except (TooFewPairs, DegenerateDistribution):
        latency_corr = None
        delta_corr = None
    histogram: dict[int, int] = {}
    for session in _instances(snapshot):
        histogram[len(session.turns)] = histogram.get(len(session.turns), 0) + 1
    return Report(
        conv_stats=stats,
        transitions=transitions,
        trajectories=trajectories,
        latency_vs_correct=latency_corr,
        worddelta_vs_correct=delta_corr,
        survey=survey_tally(snapshot),
        turn_histogram=tuple(sorted(histogram.items())),
    )


def report_json_bytes(report: Report) -> bytes:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2).encode("utf-8")


def _fmt_corr(result: Optional[CorrelationResult]) -> str:
    if result is None:
        return "n/a"
    p = "p < 0.001" if result.p_two_sided < 0.001 else f"p = {result.p_two_sided:.2f}"
    return f"r = {result.r:.2f}, {p} (n = {result.n})"


def render_report_text(report: Report) -> str:
    """Human-readable report; layout mirrors the statistics tables."""
    s = report.conv_stats
    lines = ["Conversation statistics", "-" * 51]
    rows = [
        ("Total instances", f"{s.total_instances:,}"),
        (
            "Conversational instances",
            f"{s.conversational_instances:,} ({format_pct(s.conversational_pct)})",
        ),
    ]
    if s.mean_turns is not None:
        rows.append(("Mean # conv. turns (std)", f"{s.mean_turns:.2f} ({s.std_turns:.2f})"))
        rows.append(("Min/Max # conv. turns", f"{s.min_turns} / {s.max_turns}"))
        skew = f"{s.skewness_g1:.2f}" if s.skewness_g1 is not None else "n/a"
        rows.append(("Conv. turn dist. skewness", skew))
    for name, value in rows:
        lines.append(f"{name:<38}{value}")
    if s.first_turn_correct_pct is not None:
        lines.append("")
        lines.append("% of model prediction as the correct label")
        lines.append(f"{'Turn 1 (Initial essay)':<38}{format_pct(s.first_turn_correct_pct)}")
        lines.append(f"{'Last turn (Final essay)':<38}{format_pct(s.last_turn_correct_pct)}")

    lines.append("")
    lines.append("Transition probabilities between turns")
    lines.append("-" * 51)
    if report.transitions is None:
        lines.append("n/a (no adjacent turn pairs)")
    else:
        header = "From \\ To " + "".join(f"{l.short_code:>8}" for l in _LABELS)
        lines.append(header)
        for i, label in enumerate(_LABELS):
            cells = []
            for j in range(4):
                p = report.transitions.probs[i][j]
                cells.append(f"{p:>8.4f}" if p is not None else f"{'-':>8}")
            lines.append(f"{label.short_code:<10}" + "".join(cells))

    lines.append("")
    lines.append("Learning trajectories (path: correct/students)")
    lines.append("-" * 51)
    for trajectory in report.trajectories:
        if not trajectory.entries:
            continue
        lines.append(f"Starting at {trajectory.start_label.value}:")
        for entry in trajectory.entries:
            lines.append(
                f"  {entry.path}: {entry.n_correct_answers}/{entry.n_students}"
            )

    lines.append("")
    lines.append("Activity correlations")
    lines.append("-" * 51)
    lines.append(f"{'Reflective latency vs correct':<38}{_fmt_corr(report.latency_vs_correct)}")
    lines.append(f"{'Word-count change vs correct':<38}{_fmt_corr(report.worddelta_vs_correct)}")

    lines.append("")
    lines.append("Helpfulness survey")
    lines.append("-" * 51)
    if report.survey.n_surveys == 0:
        lines.append("no surveys recorded")
    else:
        lines.append(
            f"{'Helpful':<38}{format_pct(report.survey.helpful_pct)}"
            f" ({report.survey.helpful_count}/{report.survey.n_surveys})"
        )
        for reason, count in report.survey.reason_counts:
            lines.append(f"  {reason}: {count}")
        for cluster, count in report.survey.cluster_counts:
            lines.append(f"  cluster {cluster}: {count}")

    lines.append("")
    for note in report.footnotes:
        lines.append(f"* {note}")
    return "\n".join(lines) + "\n"


def write_report_csvs(report: Report, out_dir: str | Path) -> list[Path]:
    """transitions.csv, trajectories_<label>.csv, turns_hist.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "transitions.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["from", "to", "count", "prob"])
        if report.transitions is not None and report.transitions.cell_counts is not None:
            for i, from_label in enumerate(_LABELS):
                for j, to_label in enumerate(_LABELS):
                    prob = report.transitions.probs[i][j]
                    writer.writerow(
                        [
                            from_label.value,
                            to_label.value,
                            report.transitions.cell_counts[i][j],
                            "" if prob is None else repr(prob),
                        ]
                    )
    written.append(path)

    for trajectory in report.trajectories:
        path = out / f"trajectories_{trajectory.start_label.value}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "n", "correct"])
            for entry in trajectory.entries:
                writer.writerow([entry.path, entry.n_students, entry.n_correct_answers])
        written.append(path)

    path = out / "turns_hist.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["turns", "count"])
        for turns, count in report.turn_histogram:
            writer.writerow([turns, count])
    written.append(path)
    return written
