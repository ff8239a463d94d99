"""Verdict records returned by validators and checkers, plus JSON helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
REFUSED = "refused"


@dataclass
class Report:
    task: str
    verdict: str = PASS
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    stats: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict == PASS

    def __bool__(self) -> bool:
        return self.ok

    @property
    def malformed(self) -> list[dict[str, Any]]:
        return [w for w in self.witnesses if w.get("kind") == "malformed"]

    @property
    def violations(self) -> list[dict[str, Any]]:
        return [w for w in self.witnesses if w.get("kind") != "malformed"]

    def fail(self, kind: str, **detail: Any) -> None:
        """Record a witness and flip the verdict to fail."""
        self.witnesses.append({"kind": kind, **detail})
        if self.verdict != REFUSED:
            self.verdict = FAIL

    def absorb(self, other: Report, prefix: str | None = None) -> None:
        for w in other.witnesses:
            w = dict(w)
            if prefix:
                w["kind"] = f"{prefix}:{w['kind']}"
            self.witnesses.append(w)
        if other.verdict == REFUSED:
            self.verdict = REFUSED
        elif other.verdict == FAIL and self.verdict == PASS:
            self.verdict = FAIL

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"task": self.task, "verdict": self.verdict}
        out["witnesses"] = [jsonable(w) for w in self.witnesses]
        out["stats"] = jsonable(self.stats)
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def type_json(t: Any) -> Any:
    if isinstance(t, tuple):
        return [type_json(p) for p in t]
    return t


def jsonable(value: Any) -> Any:
    """Convert witness payloads (functions, pairs, sets) to plain JSON values."""
    from compmod.model import PartialFunction

    if isinstance(value, PartialFunction):
        return {
            "source": type_json(value.source),
            "target": type_json(value.target),
            "graph": dict(value.pairs),
        }
    if isinstance(value, dict):
        return {_key(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, tuple):
        return [jsonable(v) for v in value]
    if isinstance(value, (list, )):
        return [jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        from compmod.model import sort_key

        return [jsonable(v) for v in sorted(value, key=sort_key)]
    return value


def _key(k: Any) -> str:
    if isinstance(k, tuple):
        return "(" + ",".join(_key(p) for p in k) + ")"
    return str(k)
