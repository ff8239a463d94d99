"""Command line: ``compmod validate <file>`` and ``compmod run <file>``.

Exit codes: 0 when every verdict passes, 1 when some task fails, 2 when a task
is refused or the document cannot be read.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from compmod.document import parse_document
from compmod.errors import DocumentError
from compmod.report import FAIL, PASS, REFUSED, Report, jsonable
from compmod.tasks import run_tasks


def exit_code(reports: list[Report]) -> int:
    verdicts = {r.verdict for r in reports}
    if REFUSED in verdicts:
        return 2
    if FAIL in verdicts:
        return 1
    return 0


def _short(value) -> str:
    return json.dumps(jsonable(value), sort_keys=True, ensure_ascii=False)


def render_text(reports: list[Report]) -> str:
    lines = []
    for r in reports:
        lines.append(f"{r.task}: {r.verdict.upper()}")
        for key in sorted(k for k in r.stats if k not in ("lifts", "tracking_modulus")):
            lines.append(f"  {key}: {_short(r.stats[key])}")
        for w in r.witnesses:
            lines.append(f"  ! {_short(w)}")
        for n in r.notes:
            lines.append(f"  note: {n}")
    passed = sum(r.verdict == PASS for r in reports)
    lines.append(f"{passed}/{len(reports)} tasks passed")
    return "\n".join(lines) + "\n"


def render_json(reports: list[Report]) -> str:
    body = {"reports": [r.to_json() for r in reports]}
    return json.dumps(body, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from None
    return parse_document(text)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="compmod", description="Check finite computability models and simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="parse and resolve a document")
    v.add_argument("file")
    r = sub.add_parser("run", help="run the tasks of a document")
    r.add_argument("file")
    r.add_argument("--task", help="run only the task with this id or kind")
    r.add_argument("--bound", type=int, help="override the enumeration bound of bounded tasks")
    r.add_argument("--format", choices=("text", "json"), default="text")
    args = parser.parse_args(argv)

    try:
        doc = _load(args.file)
    except DocumentError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        counts = {k: len(getattr(doc, k)) for k in ("models", "simulations", "categories", "presheaves", "functors")}
        counts["tasks"] = len(doc.tasks)
        print(f"{args.file}: ok ({', '.join(f'{v} {k}' for k, v in counts.items())})")
        return 0
    if args.bound is not None and args.bound < 0:
        print("--bound must be non-negative", file=sys.stderr)
        return 2
    reports = run_tasks(doc, only=args.task, bound=args.bound)
    if args.task is not None and not reports:
        print(f"no task matches {args.task!r}", file=sys.stderr)
        return 2
    sys.stdout.write(render_json(reports) if args.format == "json" else render_text(reports))
    return exit_code(reports)


if __name__ == "__main__":
    sys.exit(main())
