"""Finite strict computability models and their partial-function algebra.

A model has a list of type names, a finite data set per type name and, for every
ordered pair of type names, a finite hom-class of partial functions. Everything
is immutable and canonically ordered so that enumerations are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Any, Hashable, Iterable, Mapping, NamedTuple

from compmod.errors import MalformedInput, TypeMismatch
from compmod.report import Report

TypeName = Hashable
Element = str


class Pair(NamedTuple):
    """Type name ``(base, point)`` of a Grothendieck model."""

    base: Any
    point: Any

    def __str__(self) -> str:
        return f"({fmt_type(self.base)},{fmt_type(self.point)})"


def fmt_type(t: Any) -> str:
    if isinstance(t, tuple):
        return "(" + ",".join(fmt_type(p) for p in t) + ")"
    return str(t)


def sort_key(v: Any) -> tuple:
    """Total order over type names, elements and functions (strings first)."""
    if isinstance(v, PartialFunction):
        return (2, sort_key(v.source), sort_key(v.target), v.pairs)
    if isinstance(v, tuple):
        return (1, tuple(sort_key(p) for p in v))
    return (0, str(v))


def finite_set(elements: Iterable[Element]) -> tuple[Element, ...]:
    """Duplicate-free, lexicographically ordered tuple of elements."""
    return tuple(sorted(set(elements)))


@dataclass(frozen=True)
class PartialFunction:
    source: Any
    target: Any
    pairs: tuple[tuple[Element, Element], ...]

    @classmethod
    def from_graph(cls, source, target, graph: Mapping[Element, Element] | Iterable) -> PartialFunction:
        items = graph.items() if isinstance(graph, Mapping) else graph
        g: dict[Element, Element] = {}
        for x, y in items:
            if x in g and g[x] != y:
                raise MalformedInput(f"graph is not single-valued at {x!r}", witness=x)
            g[x] = y
        return cls(source, target, tuple(sorted(g.items())))

    @cached_property
    def graph(self) -> dict[Element, Element]:
        return dict(self.pairs)

    @cached_property
    def domain(self) -> frozenset[Element]:
        return frozenset(x for x, _ in self.pairs)

    @cached_property
    def image(self) -> frozenset[Element]:
        return frozenset(y for _, y in self.pairs)

    def __call__(self, x: Element) -> Element:
        return self.graph[x]

    def defined_at(self, x: Element) -> bool:
        return x in self.graph

    def retyped(self, source, target) -> PartialFunction:
        return PartialFunction(source, target, self.pairs)

    def __str__(self) -> str:
        body = ", ".join(f"{x}->{y}" for x, y in self.pairs)
        return f"{fmt_type(self.source)}->{fmt_type(self.target)}{{{body}}}"


def identity_partial(s: Iterable[Element], t: TypeName) -> PartialFunction:
    return PartialFunction(t, t, tuple((x, x) for x in finite_set(s)))


def compose_partial(g: PartialFunction, f: PartialFunction) -> PartialFunction:
    """``g . f``: defined at x iff f is defined at x and g at f(x)."""
    if f.target != g.source:
        raise TypeMismatch(
            f"cannot compose {fmt_type(g.source)}->... after ...->{fmt_type(f.target)}",
            witness=(f, g),
        )
    gg = g.graph
    return PartialFunction(
        f.source, g.target, tuple((x, gg[y]) for x, y in f.pairs if y in gg)
    )


def restrict_partial(f: PartialFunction, sub_src, sub_tgt, new_src, new_tgt) -> PartialFunction:
    sub_src, sub_tgt = set(sub_src), set(sub_tgt)
    return PartialFunction(
        new_src, new_tgt, tuple((x, y) for x, y in f.pairs if x in sub_src and y in sub_tgt)
    )


def partial_equal(f: PartialFunction, g: PartialFunction) -> bool:
    return f.source == g.source and f.target == g.target and f.pairs == g.pairs


@dataclass(frozen=True)
class Model:
    types: tuple
    data: Mapping[Any, tuple[Element, ...]]
    homs: Mapping[tuple, tuple[PartialFunction, ...]]

    @classmethod
    def build(cls, types: Iterable, data: Mapping, homs: Mapping | None = None) -> Model:
        """Canonicalize: sort type names and elements, dedupe hom lists extensionally.

        Hom entries may be PartialFunctions or plain ``{x: y}`` graphs, which are
        typed by their key. Nothing is validated here; see ``validate_model``.
        """
        types = tuple(sorted(dict.fromkeys(types), key=sort_key))
        data = {t: finite_set(data.get(t, ())) for t in types}
        out: dict[tuple, tuple[PartialFunction, ...]] = {}
        for s, t in product(types, types):
            fs = []
            for f in (homs or {}).get((s, t), ()):
                if not isinstance(f, PartialFunction):
                    f = PartialFunction.from_graph(s, t, f)
                fs.append(f)
            out[(s, t)] = tuple(sorted(set(fs), key=sort_key))
        for key, fs in (homs or {}).items():
            if key not in out and fs:
                out[key] = tuple(
                    sorted({f if isinstance(f, PartialFunction) else PartialFunction.from_graph(*key, f) for f in fs}, key=sort_key)
                )
        return cls(types, data, out)

    def hom(self, s, t) -> tuple[PartialFunction, ...]:
        return self.homs.get((s, t), ())

    def all_functions(self) -> Iterable[PartialFunction]:
        for s, t in product(self.types, self.types):
            yield from self.hom(s, t)

    @cached_property
    def hom_sets(self) -> dict[tuple, frozenset[PartialFunction]]:
        return {k: frozenset(v) for k, v in self.homs.items()}

    def contains(self, f: PartialFunction) -> bool:
        return f in self.hom_sets.get((f.source, f.target), frozenset())

    def size(self) -> dict[str, int]:
        return {
            "types": len(self.types),
            "max_data": max((len(v) for v in self.data.values()), default=0),
            "functions": sum(len(v) for v in self.homs.values()),
        }

    def __repr__(self) -> str:
        return f"Model(types={list(map(fmt_type, self.types))}, functions={self.size()['functions']})"


def structure_errors(m: Model) -> list[dict[str, Any]]:
    """Malformed-input findings: functions mistyped or leaving their carriers."""
    errs: list[dict[str, Any]] = []
    types = set(m.types)
    if len(types) != len(m.types):
        errs.append({"kind": "malformed", "reason": "duplicate type names"})
    for t in m.types:
        if t not in m.data:
            errs.append({"kind": "malformed", "reason": "missing data type", "type": t})
        elif any(not isinstance(x, str) or not x for x in m.data[t]):
            errs.append({"kind": "malformed", "reason": "element is not a non-empty string", "type": t})
    for (s, t), fs in m.homs.items():
        if s not in types or t not in types:
            if fs:
                errs.append({"kind": "malformed", "reason": "hom-class over unknown type", "hom": (s, t)})
            continue
        src, tgt = set(m.data.get(s, ())), set(m.data.get(t, ()))
        for f in fs:
            if (f.source, f.target) != (s, t):
                errs.append({"kind": "malformed", "reason": "function typed against another hom-class", "hom": (s, t), "function": f})
                continue
            for x, y in f.pairs:
                if x not in src:
                    errs.append({"kind": "malformed", "reason": "argument outside source data type", "function": f, "element": x})
                if y not in tgt:
                    errs.append({"kind": "malformed", "reason": "value outside target data type", "function": f, "element": y})
    return errs


def validate_model(m: Model) -> Report:
    """Check the identity and composition axioms, listing every violation."""
    report = Report("validate-model")
    malformed = structure_errors(m)
    if malformed:
        for w in malformed:
            report.fail(**w)
        return report
    checked = 0
    for t in m.types:
        if not m.contains(identity_partial(m.data[t], t)):
            report.fail("missing-identity", type=t)
    for r, s, t in product(m.types, repeat=3):
        target = m.hom_sets.get((r, t), frozenset())
        for f in m.hom(r, s):
            for g in m.hom(s, t):
                checked += 1
                gf = compose_partial(g, f)
                if gf not in target:
                    report.fail("not-closed", f=f, g=g, composite=gf)
    report.stats = {**m.size(), "composable_pairs": checked}
    return report


def completion_close(m: Model) -> Model:
    """Smallest extension of ``m`` containing identities and closed under composition."""
    malformed = structure_errors(m)
    if malformed:
        raise MalformedInput("model is malformed", witness=malformed)
    homs: dict[tuple, set[PartialFunction]] = {
        (s, t): set(m.hom(s, t)) for s, t in product(m.types, m.types)
    }
    pending = [f for fs in homs.values() for f in fs]
    for t in m.types:
        i = identity_partial(m.data[t], t)
        if i not in homs[(t, t)]:
            homs[(t, t)].add(i)
            pending.append(i)
    while pending:
        f = pending.pop()
        s, t = f.source, f.target
        new = []
        for u in m.types:
            for g in list(homs[(t, u)]):
                new.append(compose_partial(g, f))
            for e in list(homs[(u, s)]):
                new.append(compose_partial(f, e))
        for h in new:
            key = (h.source, h.target)
            if h not in homs[key]:
                homs[key].add(h)
                pending.append(h)
    return Model.build(m.types, m.data, homs)
