"""Key=value configuration files with environment overrides, plus loaders
for the quiz, bank, and post-hoc feedback data files."""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .classifier import ClassificationStrategy, load_bank
from .domain import QuizProblem
from .gateway import Gateway, GatewayConfig, HttpChatBackend, ScriptedBackend
from .prompts import KnowledgeLevel, PosthocFeedback

ENV_PREFIX = "JITFB_"


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def parse_kv_file(path: str | Path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text(encoding="utf-8"))


def apply_env_overrides(
    values: dict[str, str], environ: Mapping[str, str] = os.environ
) -> dict[str, str]:
    """JITFB_<KEY> environment variables override file values."""
    merged = dict(values)
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            merged[name[len(ENV_PREFIX) :].lower()] = value
    return merged


def _as_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


@dataclass
class ServiceConfig:
    quizzes_path: str
    bank_path: Optional[str] = None
    log_path: str = "events.jsonl"
    admin_token: str = "change-me"
    hash_key: str = "change-me-too"
    host: str = "127.0.0.1"
    port: int = 8000
    strategy: ClassificationStrategy = field(default_factory=ClassificationStrategy)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    backend_kind: str = "scripted"  # scripted | http
    scripted_path: Optional[str] = None
    scripted_fail_rate: float = 0.0
    scripted_latency_s: float = 0.0
    scripted_seed: int = 0
    http_base_url: Optional[str] = None
    http_model: Optional[str] = None
    posthoc_path: Optional[str] = None

    @classmethod
    def from_file(
        cls, path: str | Path, environ: Mapping[str, str] = os.environ
    ) -> "ServiceConfig":
        values = apply_env_overrides(parse_kv_file(path), environ)
        if "quizzes_path" not in values:
            raise ValueError("config must set quizzes_path")
        gateway_kwargs = {}
        for key, cast in (
            ("rate_limit_per_s", float),
            ("burst", int),
            ("max_in_flight", int),
            ("retry_limit", int),
            ("queue_capacity", int),
        ):
            if key in values:
                gateway_kwargs[key] = cast(values[key])
        if "retry_backoff_ms" in values:
            gateway_kwargs["retry_backoff_ms"] = tuple(
                int(p) for p in values["retry_backoff_ms"].split(",") if p.strip()
            )
        strategy = ClassificationStrategy(
            few_shot=values.get("strategy_mode", "few-shot") != "zero-shot",
            k_per_label=int(values.get("k_per_label", 3 if values.get("strategy_mode", "few-shot") != "zero-shot" else 0)),
            use_secondary=_as_bool(values.get("use_secondary", "true")),
        )
        return cls(
            quizzes_path=values["quizzes_path"],
            bank_path=values.get("bank_path"),
            log_path=values.get("log_path", "events.jsonl"),
            admin_token=values.get("admin_token", "change-me"),
            hash_key=values.get("hash_key", "change-me-too"),
            host=values.get("host", "127.0.0.1"),
            port=int(values.get("port", "8000")),
            strategy=strategy,
            gateway=GatewayConfig(**gateway_kwargs),
            backend_kind=values.get("backend", "scripted"),
            scripted_path=values.get("scripted_path"),
            scripted_fail_rate=float(values.get("scripted_fail_rate", "0")),
            scripted_latency_s=float(values.get("scripted_latency_s", "0")),
            scripted_seed=int(values.get("scripted_seed", "0")),
            http_base_url=values.get("http_base_url"),
            http_model=values.get("http_model"),
            posthoc_path=values.get("posthoc_path"),
        )


def load_quizzes(path: str | Path) -> dict[str, QuizProblem]:
    """Quiz definitions: a JSON list of quiz objects."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    quizzes = {}
    for entry in data:
        quiz = QuizProblem.from_dict(entry)
        quizzes[quiz.quiz_id] = quiz
    return quizzes


def load_posthoc_entries(path: str | Path) -> list[dict]:
    """Post-hoc feedback JSONL: {assignment_id, student_id, novice, advanced}."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries


def build_backend(config: ServiceConfig):
    if config.backend_kind == "scripted":
        if not config.scripted_path:
            raise ValueError("scripted backend requires scripted_path")
        return ScriptedBackend.from_jsonl(
            config.scripted_path,
            fail_rate=config.scripted_fail_rate,
            latency_s=config.scripted_latency_s,
            seed=config.scripted_seed,
        )
    if config.backend_kind == "http":
        if not (config.http_base_url and config.http_model):
            raise ValueError("http backend requires http_base_url and http_model")
        return HttpChatBackend(config.http_base_url, config.http_model)
    raise ValueError(f"unknown backend kind: {config.backend_kind!r}")


def build_service(config: ServiceConfig, *, now_fn=None):
    """Wire a SessionService (and its gateway) from configuration."""
    from .eventlog import EventLog
    from .service import SessionService

    quizzes = load_quizzes(config.quizzes_path)
    bank = load_bank(config.bank_path) if config.bank_path else []
    gateway = Gateway(build_backend(config), config.gateway)
    kwargs = {"now_fn": now_fn} if now_fn is not None else {}
    service = SessionService(
        quizzes=quizzes,
        bank=bank,
        strategy=config.strategy,
        gateway=gateway,
        log=EventLog(config.log_path),
        hash_key=config.hash_key,
        **kwargs,
    )
    if config.posthoc_path:
        for entry in load_posthoc_entries(config.posthoc_path):
            service.add_posthoc_feedback(
                entry["assignment_id"],
                entry["student_id"],
                PosthocFeedback(
                    essay_evaluation=entry.get("essay_evaluation", ""),
                    inferred_level=KnowledgeLevel(entry.get("inferred_level", "Novice")),
                    novice_feedback=entry["novice"],
                    advanced_feedback=entry["advanced"],
                ),
            )
    return service
