"""Command-line entry points: serve, tune, diagnose, analyze, simulate."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .analytics import code_units, transition_matrix
from .diagnosis import TaskContext, diagnose, feedback_for, route_subtask
from .paramgen import (BANK_FILENAMES, DEFAULT_BUDGET, DEFAULT_COUNT,
                       DEFAULT_DELTA, tune)
from .session import parse_log
from .simulate import StudentProfile, simulate
from .tasks import ParamSet, TaskKind, Topic, instantiate

KIND_NAMES = [k.value for k in TaskKind]


def _env(name: str, fallback: str) -> str:
    return os.environ.get(name, fallback)


def _parse_numbers(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.replace(" ", "").split(","))


def _add_serve(sub) -> None:
    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--banks", default=_env("EXTUTOR_BANKS", "banks"),
                   help="directory of tuned parameter bank files")
    p.add_argument("--logs", default=_env("EXTUTOR_LOGS", "logs"),
                   help="directory for persisted session logs")
    p.add_argument("--port", type=int,
                   default=int(_env("EXTUTOR_PORT", "8000")))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for per-session draw seeds")
    p.add_argument("--static", default=None,
                   help="directory with a built web UI to mount at /ui")
    p.add_argument("--feedback-overrides", default=None,
                   help="JSON file patching feedback templates by rule id")


def _add_tune(sub) -> None:
    p = sub.add_parser("tune", help="tune parameter banks")
    p.add_argument("--kind", required=True, choices=KIND_NAMES + ["all"])
    p.add_argument("--count", type=int, default=DEFAULT_COUNT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out", required=True,
                   help="output file, or directory when --kind all")


def _add_diagnose(sub) -> None:
    p = sub.add_parser("diagnose", help="diagnose one submitted answer")
    p.add_argument("--kind", required=True, choices=KIND_NAMES)
    p.add_argument("--x", required=True, help="comma-separated x values")
    p.add_argument("--y", required=True, help="comma-separated y values")
    p.add_argument("--given-rate", type=float, default=None)
    p.add_argument("--answer", required=True,
                   help="submitted final answer, or 'none' for empty input")
    p.add_argument("--context", choices=["main", "subtask"], default="main")


def _add_analyze(sub) -> None:
    p = sub.add_parser("analyze", help="code logs and print the matrix")
    p.add_argument("logfiles", nargs="+")
    p.add_argument("--out", default=None, help="write the matrix here")


def _add_simulate(sub) -> None:
    p = sub.add_parser("simulate", help="generate synthetic session logs")
    p.add_argument("--profile", required=True, help="student profile JSON")
    p.add_argument("--topic", choices=[t.value for t in Topic], default=None,
                   help="overrides the profile's topic field")
    p.add_argument("--banks", default=_env("EXTUTOR_BANKS", "banks"))
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=40)
    p.add_argument("--out-dir", required=True)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(banks_dir=args.banks, logs_dir=args.logs, seed=args.seed,
                     feedback_overrides=args.feedback_overrides,
                     static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_tune(args) -> int:
    kinds = list(TaskKind) if args.kind == "all" else [TaskKind(args.kind)]
    out = Path(args.out)
    if args.kind == "all":
        out.mkdir(parents=True, exist_ok=True)
    for kind in kinds:
        bank = tune(kind, count=args.count, seed=args.seed, delta=args.delta,
                    budget=args.budget)
        target = out / BANK_FILENAMES[kind] if args.kind == "all" else out
        bank.save(target)
        print(f"{kind.value}: {len(bank.entries)} entries, "
              f"separation {bank.separation:.3f}, {bank.attempts} draws "
              f"-> {target}")
    return 0


def _cmd_diagnose(args) -> int:
    params = ParamSet(x=_parse_numbers(args.x), y=_parse_numbers(args.y),
                      given_rate=args.given_rate)
    instance = instantiate(TaskKind(args.kind), params)
    answer = None if args.answer.lower() == "none" else float(args.answer)
    diag = diagnose(instance, answer)
    context = TaskContext(args.context)
    messages = feedback_for(diag, context, instance)
    route = route_subtask(diag, instance.kind) if instance.kind.is_main else None
    record = {
        "kind": instance.kind.value,
        "x": list(params.x),
        "y": list(params.y),
        "givenRate": params.given_rate,
        "answer": answer,
        "diagnosis": diag.as_dict(),
        "routeTo": None if route is None else route.value,
        "feedback": [
            {"type": m.type.value,
             "specificity": None if m.specificity is None else m.specificity.value,
             "text": m.text} for m in messages],
    }
    print(json.dumps(record, indent=2))
    return 0


def _cmd_analyze(args) -> int:
    units = []
    for name in args.logfiles:
        events = parse_log(Path(name).read_text(encoding="utf-8"))
        units.extend(code_units(events))
    matrix = transition_matrix(units)
    text = matrix.render()
    if args.out is not None:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    print(f"{len(units)} units from {len(args.logfiles)} log(s)")
    return 0


def _cmd_simulate(args) -> int:
    from .paramgen import load_bank_dir
    profile_data = json.loads(Path(args.profile).read_text(encoding="utf-8"))
    profile = StudentProfile.from_dict(profile_data)
    topic_name = args.topic or profile_data.get("topic")
    if topic_name is None:
        print("error: no --topic given and the profile has no topic field",
              file=sys.stderr)
        return 2
    topic = Topic(topic_name)
    banks = load_bank_dir(args.banks)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs = simulate(profile, topic, banks, n=args.n, seed=args.seed,
                    max_steps=args.max_steps)
    for events in logs:
        session_id = events[0].payload["sessionId"]
        path = out_dir / f"{session_id}.jsonl"
        path.write_text(
            "".join(e.to_json_line() + "\n" for e in events), encoding="utf-8")
    print(f"wrote {len(logs)} session log(s) to {out_dir}")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="extutor",
        description="Tutoring engine for extrapolation tasks: diagnosis, "
                    "feedback gating, bank tuning, log analytics.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_serve(sub)
    _add_tune(sub)
    _add_diagnose(sub)
    _add_analyze(sub)
    _add_simulate(sub)
    args = parser.parse_args(argv)
    handlers = {
        "serve": _cmd_serve,
        "tune": _cmd_tune,
        "diagnose": _cmd_diagnose,
        "analyze": _cmd_analyze,
        "simulate": _cmd_simulate,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
