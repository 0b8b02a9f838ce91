"""Operator command line: serve, eval, simulate, report, validate-bank, replay.

Exit codes: 0 success, 1 domain error, 2 usage error.  Read-only commands
accept --format json for machine-readable output; every command runs
offline with a scripted backend.
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path

from . import analytics
from .classifier import (
    ClassificationStrategy,
    LabeledDataset,
    evaluate,
    load_bank,
    render_eval_table,
)
from .config import ServiceConfig, build_service, load_quizzes
from .domain import ErrorLabel
from .eventlog import LogCorruption, replay as replay_log
from .gateway import Gateway, GatewayConfig, HttpChatBackend, ScriptedBackend
from .prompts import InsufficientBank, build_jit_prompt
from .simulator import (
    InProcessClient,
    SimConfig,
    VirtualClock,
    build_sim_service,
    simulate_cohort,
)


class DomainError(Exception):
    """Anything that should exit 1 with a message instead of a traceback."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jitfeedback")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the feedback HTTP service")
    serve.add_argument("--config", required=True)
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)

    ev = sub.add_parser("eval", help="evaluate a classification strategy on a labeled dataset")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--bank", required=True)
    ev.add_argument("--quizzes", required=True)
    ev.add_argument("--quiz-id", required=True)
    ev.add_argument("--scripted", help="scripted backend rules JSONL (offline mode)")
    ev.add_argument("--http-url")
    ev.add_argument("--http-model")
    ev.add_argument("--mode", choices=["few-shot", "zero-shot"], default="few-shot")
    ev.add_argument("--k", type=int, default=3)
    ev.add_argument("--no-secondary", action="store_true")
    ev.add_argument("--trials", type=int, default=1)
    ev.add_argument("--format", choices=["text", "json"], default="text")

    sim = sub.add_parser("simulate", help="run the seeded cohort simulator")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True, help="event log output path")

    rep = sub.add_parser("report", help="build the analytics report from an event log")
    rep.add_argument("--log", required=True)
    rep.add_argument("--format", choices=["text", "json"], default="text")
    rep.add_argument("--csv-dir")
    rep.add_argument("--collapse-trajectories", action="store_true")

    vb = sub.add_parser("validate-bank", help="check a few-shot bank against the template")
    vb.add_argument("--bank", required=True)
    vb.add_argument("--k", type=int, required=True)
    vb.add_argument("--format", choices=["text", "json"], default="text")

    rp = sub.add_parser("replay", help="rebuild sessions from a log and check integrity")
    rp.add_argument("--log", required=True)
    rp.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import build_app

    config = ServiceConfig.from_file(args.config)
    service = build_service(config)
    app = build_app(service, admin_token=config.admin_token)
    uvicorn.run(app, host=args.host or config.host, port=args.port or config.port)
    return 0


def _cmd_eval(args) -> int:
    dataset = LabeledDataset.from_jsonl(args.dataset)
    bank = load_bank(args.bank)
    quizzes = load_quizzes(args.quizzes)
    if args.quiz_id not in quizzes:
        raise DomainError(f"quiz {args.quiz_id!r} not found in {args.quizzes}")
    problem = quizzes[args.quiz_id]
    if args.scripted:
        backend = ScriptedBackend.from_jsonl(args.scripted)
    elif args.http_url and args.http_model:
        backend = HttpChatBackend(args.http_url, args.http_model)
    else:
        raise DomainError("eval needs --scripted or both --http-url and --http-model")
    strategy = ClassificationStrategy(
        few_shot=args.mode == "few-shot",
        k_per_label=args.k if args.mode == "few-shot" else 0,
        use_secondary=not args.no_secondary,
    )
    gateway = Gateway(backend, GatewayConfig(rate_limit_per_s=1e6, burst=1000))
    report = asyncio.run(
        evaluate(dataset, strategy, bank, gateway, args.trials, problem=problem)
    )
    if args.format == "json":
        print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    else:
        print(render_eval_table([report]))
    return 0


def _cmd_simulate(args) -> int:
    config = SimConfig.from_file(args.config)
    out = Path(args.out)
    if out.exists():
        raise DomainError(f"refusing to append to existing log {out}")
    clock = VirtualClock()
    service = build_sim_service(config, out, clock)

    async def run():
        try:
            outcomes = await simulate_cohort(config, InProcessClient(service), clock)
        finally:
            service.close()
        return outcomes

    outcomes = asyncio.run(run())
    print(f"simulated {len(outcomes)} students -> {out}")
    return 0


def _cmd_report(args) -> int:
    try:
        snapshot = replay_log(args.log)
    except FileNotFoundError:
        raise DomainError(f"log not found: {args.log}")
    except LogCorruption as exc:
        raise DomainError(f"corrupt log: {exc}")
    try:
        report = analytics.build_report(
            snapshot, collapse_trajectories=args.collapse_trajectories
        )
    except analytics.EmptyLog as exc:
        raise DomainError(str(exc))
    if args.csv_dir:
        analytics.write_report_csvs(report, args.csv_dir)
    if args.format == "json":
        sys.stdout.write(analytics.report_json_bytes(report).decode("utf-8") + "\n")
    else:
        sys.stdout.write(analytics.render_report_text(report))
    return 0


def _cmd_validate_bank(args) -> int:
    from .simulator import DEFAULT_QUIZ, synth_essay
    from .domain import validate_essay

    try:
        bank = load_bank(args.bank)
    except (OSError, ValueError, KeyError) as exc:
        raise DomainError(f"cannot load bank: {exc}")
    shortfalls = []
    for label in ErrorLabel:
        have = sum(1 for ex in bank if ex.label is label)
        if have < args.k:
            shortfalls.append({"label": label.value, "have": have, "need": args.k})
    rendered_ok = False
    if not shortfalls:
        essay = validate_essay(synth_essay(ErrorLabel.CORRECT, 55))
        try:
            build_jit_prompt(DEFAULT_QUIZ, essay, bank, args.k)
            rendered_ok = True
        except InsufficientBank as exc:
            shortfalls.append({"label": exc.label.value, "have": exc.have, "need": exc.need})
    result = {
        "bank": args.bank,
        "examples": len(bank),
        "k_per_label": args.k,
        "ok": not shortfalls and rendered_ok,
        "shortfalls": shortfalls,
    }
    if args.format == "json":
        print(json.dumps(result, sort_keys=True, indent=2))
    else:
        if result["ok"]:
            print(f"bank ok: {len(bank)} examples, >= {args.k} per label, template renders")
        for s in shortfalls:
            print(f"insufficient bank: label={s['label']} have={s['have']} need={s['need']}")
    if not result["ok"]:
        raise DomainError("bank validation failed")
    return 0


def _cmd_replay(args) -> int:
    try:
        snapshot = replay_log(args.log)
    except FileNotFoundError:
        raise DomainError(f"log not found: {args.log}")
    except LogCorruption as exc:
        raise DomainError(f"integrity violation: {exc}")
    turns = sum(len(s.turns) for s in snapshot.sessions)
    answered = sum(1 for s in snapshot.sessions if s.final_answer is not None)
    surveys = sum(1 for s in snapshot.sessions if s.survey is not None)
    result = {
        "sessions": snapshot.session_count,
        "turns": turns,
        "answered": answered,
        "surveys": surveys,
        "preferences": len(snapshot.preferences),
        "integrity": "ok",
    }
    if args.format == "json":
        print(json.dumps(result, sort_keys=True, indent=2))
    else:
        print(
            f"integrity ok: {result['sessions']} sessions, {turns} turns, "
            f"{answered} answered, {surveys} surveys, {len(snapshot.preferences)} preferences"
        )
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "eval": _cmd_eval,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
    "validate-bank": _cmd_validate_bank,
    "replay": _cmd_replay,
}


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
