"""Error-type prediction strategies plus the evaluation harness
(accuracy, macro F1, multi-trial dispersion).

The primary strategy prompts a completion backend through the gateway; a
deterministic lexical nearest-neighbor baseline is available for offline
use.  Degraded or unparseable model output falls back to a conservative
both-concepts response rather than failing the student request.
"""

import asyncio
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import prompts
from .domain import ErrorLabel, FeedbackResponse, FewShotExample, QuizProblem, ValidatedEssay
from .gateway import CompletionRequest, DegradedError, Gateway


@dataclass(frozen=True)
class ClassificationStrategy:
    few_shot: bool = True
    k_per_label: int = 3
    use_secondary: bool = True

    def __post_init__(self):
        if not self.few_shot and self.k_per_label != 0:
            raise ValueError("zero-shot strategy requires k_per_label = 0")
        if self.k_per_label < 0:
            raise ValueError("k_per_label must be >= 0")

    @property
    def name(self) -> str:
        base = f"few-shot (k={self.k_per_label})" if self.few_shot else "zero-shot"
        return base + (" w/ secondary" if self.use_secondary else "")


# When the model is unreachable or unparseable we assume the riskiest case
# (both concepts shaky) so the student is always prompted to re-check both.
# The text deliberately avoids naming any error type.
FALLBACK_FEEDBACK = (
    "Your strategy could not be fully reviewed this time, so here is some general advice. "
    "Re-read the problem and name the exact object you are asked about, then state which "
    "way each force on it points. Checking both choices carefully before answering helps "
    "you avoid the most common mistakes."
)


def fallback_response() -> FeedbackResponse:
    return FeedbackResponse(
        classification=ErrorLabel.POSITION_DIRECTION,
        confidence=1,
        secondary_classification=ErrorLabel.POSITION_DIRECTION,
        feedback=FALLBACK_FEEDBACK,
        degraded=True,
    )


async def classify(
    essay: ValidatedEssay,
    problem: QuizProblem,
    bank: Sequence[FewShotExample],
    strategy: ClassificationStrategy,
    gateway: Gateway,
    *,
    idempotency_key: str = "",
    timeout_s: float = 30.0,
    max_tokens: int = 512,
) -> FeedbackResponse:
    """Classify one essay via the gateway; never raises on model trouble.

    BusyError propagates (the caller owes the client a backpressure signal);
    Degraded and double parse failures yield the fallback response.
    """
    prompt = prompts.build_jit_prompt(
        problem,
        essay,
        bank,
        strategy.k_per_label if strategy.few_shot else 0,
        use_secondary=strategy.use_secondary,
    )
    request = CompletionRequest(
        prompt=prompt,
        max_tokens=max_tokens,
        timeout_s=timeout_s,
        idempotency_key=idempotency_key,
    )
    try:
        result = await gateway.dispatch(request)
    except DegradedError:
        return fallback_response()
    try:
        return prompts.parse_jit_response(result.text)
    except prompts.ResponseParseError:
        pass
    # One re-ask under a fresh key, then give up and fall back.
    retry_request = CompletionRequest(
        prompt=prompt,
        max_tokens=max_tokens,
        timeout_s=timeout_s,
        idempotency_key=f"{idempotency_key}:reask" if idempotency_key else "",
    )
    try:
        result = await gateway.dispatch(retry_request)
        return prompts.parse_jit_response(result.text)
    except (DegradedError, prompts.ResponseParseError):
        return fallback_response()


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _token_frequencies(text: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for token in _TOKEN_RE.findall(text.lower()):
        counts[token] = counts.get(token, 0) + 1
    return counts


def _cosine(a: dict[str, int], b: dict[str, int]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(count * b.get(token, 0) for token, count in a.items())
    if dot == 0:
        return 0.0
    norm_a = sum(c * c for c in a.values()) ** 0.5
    norm_b = sum(c * c for c in b.values()) ** 0.5
    return dot / (norm_a * norm_b)


class EmptyBank(ValueError):
    pass


def classify_lexical_baseline(
    essay: ValidatedEssay, bank: Sequence[FewShotExample]
) -> ErrorLabel:
    """Label of the nearest bank example by token-frequency cosine similarity.

    Ties break toward the label earliest in enum order.
    """
    if not bank:
        raise EmptyBank("bank must be non-empty")
    essay_vec = _token_frequencies(essay.text)
    label_order = list(ErrorLabel)
    best_score = -1.0
    best_label = label_order[-1]
    for example in bank:
        score = _cosine(essay_vec, _token_frequencies(example.essay_text))
        if score > best_score or (
            score == best_score
            and label_order.index(example.label) < label_order.index(best_label)
        ):
            best_score = score
            best_label = example.label
    return best_label


@dataclass(frozen=True)
class LabeledDataset:
    items: tuple[tuple[str, ErrorLabel], ...]

    def __post_init__(self):
        if not self.items:
            raise ValueError("dataset must be non-empty")

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "LabeledDataset":
        items = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    d = json.loads(line)
                    items.append((d["essay"], ErrorLabel.parse(d["label"])))
        return cls(tuple(items))


_LABELS = list(ErrorLabel)
_LABEL_INDEX = {label: i for i, label in enumerate(_LABELS)}


@dataclass(frozen=True)
class ConfusionMatrix:
    """4x4 count grid indexed (gold, predicted) in enum order."""

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.counts) != 4 or any(len(row) != 4 for row in self.counts):
            raise ValueError("confusion matrix must be 4x4")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[ErrorLabel, ErrorLabel]]) -> "ConfusionMatrix":
        grid = [[0] * 4 for _ in range(4)]
        for gold, predicted in pairs:
            grid[_LABEL_INDEX[gold]][_LABEL_INDEX[predicted]] += 1
        return cls(tuple(tuple(row) for row in grid))

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(4))

    def to_dict(self) -> dict:
        return {"labels": [l.value for l in _LABELS], "counts": [list(r) for r in self.counts]}


def accuracy(cm: ConfusionMatrix) -> float:
    return cm.trace / cm.total


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1, with the 0/0 convention F1 = 0."""
    f1_sum = 0.0
    for i in range(4):
        tp = cm.counts[i][i]
        fp = sum(cm.counts[g][i] for g in range(4)) - tp
        fn = sum(cm.counts[i][p] for p in range(4)) - tp
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        f1_sum += f1
    return f1_sum / 4


@dataclass(frozen=True)
class EvalReport:
    method: str
    accuracy_mean: float
    accuracy_halfrange: float  # (max - min) / 2 over trials
    macro_f1_mean: float
    macro_f1_halfrange: float
    trials: int
    per_trial_confusions: tuple[ConfusionMatrix, ...]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "accuracy_mean": self.accuracy_mean,
            "accuracy_halfrange": self.accuracy_halfrange,
            "macro_f1_mean": self.macro_f1_mean,
            "macro_f1_halfrange": self.macro_f1_halfrange,
            "trials": self.trials,
            "per_trial_confusions": [cm.to_dict() for cm in self.per_trial_confusions],
        }


async def evaluate(
    dataset: LabeledDataset,
    strategy: ClassificationStrategy,
    bank: Sequence[FewShotExample],
    gateway: Gateway,
    trials: int = 1,
    *,
    problem: QuizProblem,
    concurrency: Optional[int] = None,
) -> EvalReport:
    """Run classify over every item per trial; report mean and half-range."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    limit = concurrency or gateway.config.max_in_flight
    semaphore = asyncio.Semaphore(limit)
    confusions = []
    for trial in range(trials):

        async def one(index: int, essay_text: str) -> FeedbackResponse:
            async with semaphore:
                essay = ValidatedEssay.from_text(essay_text)
                return await classify(
                    essay,
                    problem,
                    bank,
                    strategy,
                    gateway,
                    idempotency_key=f"eval:{trial}:{index}",
                )

        responses = await asyncio.gather(
            *(one(i, text) for i, (text, _) in enumerate(dataset.items))
        )
        pairs = [
            (gold, response.classification)
            for (_, gold), response in zip(dataset.items, responses)
        ]
        confusions.append(ConfusionMatrix.from_pairs(pairs))
    accuracies = [accuracy(cm) for cm in confusions]
    f1s = [macro_f1(cm) for cm in confusions]
    return EvalReport(
        method=strategy.name,
        accuracy_mean=sum(accuracies) / trials,
        accuracy_halfrange=(max(accuracies) - min(accuracies)) / 2,
        macro_f1_mean=sum(f1s) / trials,
        macro_f1_halfrange=(max(f1s) - min(f1s)) / 2,
        trials=trials,
        per_trial_confusions=tuple(confusions),
    )


def render_eval_table(reports: Sequence[EvalReport]) -> str:
    """Aligned three-column text table: Method | Accuracy | Macro F1.

    Means are percentages; the +/- dispersion is the raw half-range over
    trials.
    """
    rows = [("Method", "Accuracy", "Macro F1")]
    for report in reports:
        rows.append(
            (
                report.method,
                f"{report.accuracy_mean * 100:.2f} ±{report.accuracy_halfrange:.3f}",
                f"{report.macro_f1_mean * 100:.2f} ±{report.macro_f1_halfrange:.3f}",
            )
        )
    widths = [max(len(row[col]) for row in rows) for col in range(3)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[col]) for col, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[col] for col in range(3)))
    return "\n".join(lines)


def load_bank(path: str | Path) -> list[FewShotExample]:
    """Few-shot bank JSONL: one {essay, label, feedback} object per line."""
    bank = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                bank.append(FewShotExample.from_dict(json.loads(line)))
    return bank
