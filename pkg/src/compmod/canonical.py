"""Finite categories, covariant presheaves and the canonical models over them.

Categories are given by explicit tables: arrow names with endpoints, a
composition table keyed ``(g, f) -> g.f`` and one identity per object. The
total canonical model takes the images ``S(f)`` as computable functions; the
partial one takes the partial functions induced by partial arrows ``(i, f)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Any, Iterable, Mapping, NamedTuple

from compmod.errors import (
    FunctorialityFailure,
    MalformedInput,
    PullbackPreservationFailure,
)
from compmod.model import (
    Model,
    Pair,
    PartialFunction,
    compose_partial,
    finite_set,
    fmt_type,
    identity_partial,
    sort_key,
)
from compmod.report import Report
from compmod.simulation import Simulation


class Arrow(NamedTuple):
    name: Any
    src: Any
    tgt: Any


class PartialArrow(NamedTuple):
    i: Any
    f: Any


@dataclass(frozen=True)
class FiniteCategory:
    objects: tuple
    arrows: tuple[Arrow, ...]
    composition: Mapping[tuple, Any]
    identities: Mapping[Any, Any]

    @classmethod
    def build(cls, objects: Iterable, arrows: Iterable, composition: Mapping, identities: Mapping) -> FiniteCategory:
        arrows = tuple(sorted((Arrow(*a) for a in arrows), key=lambda a: sort_key(a.name)))
        return cls(
            tuple(sorted(dict.fromkeys(objects), key=sort_key)), arrows, dict(composition), dict(identities)
        )

    @classmethod
    def poset(cls, objects: Iterable, leq: Iterable[tuple]) -> FiniteCategory:
        """Thin category of a partial order given by generating pairs ``a <= b``."""
        objects = list(dict.fromkeys(objects))
        rel = {(a, a) for a in objects} | set(leq)
        changed = True
        while changed:
            changed = False
            for (a, b), (c, d) in product(list(rel), list(rel)):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
        name = {(a, b): (f"1_{a}" if a == b else f"{a}<{b}") for a, b in rel}
        comp = {}
        for (a, b), (c, d) in product(rel, rel):
            if b == c:
                comp[(name[(c, d)], name[(a, b)])] = name[(a, d)]
        return cls.build(
            objects, [(name[p], p[0], p[1]) for p in rel], comp, {a: name[(a, a)] for a in objects}
        )

    @classmethod
    def monoid(cls, obj, elements: Iterable, multiply: Mapping[tuple, Any], unit) -> FiniteCategory:
        """One-object category; ``multiply[(g, f)]`` is ``g.f``."""
        return cls.build([obj], [(e, obj, obj) for e in elements], multiply, {obj: unit})

    @cached_property
    def _by_name(self) -> dict[Any, Arrow]:
        return {a.name: a for a in self.arrows}

    @cached_property
    def _homs(self) -> dict[tuple, tuple]:
        out: dict[tuple, list] = {}
        for a in self.arrows:
            out.setdefault((a.src, a.tgt), []).append(a.name)
        return {k: tuple(v) for k, v in out.items()}

    def arrow(self, name) -> Arrow:
        try:
            return self._by_name[name]
        except KeyError:
            raise MalformedInput(f"unknown arrow {fmt_type(name)}", witness=name) from None

    def src(self, name):
        return self.arrow(name).src

    def tgt(self, name):
        return self.arrow(name).tgt

    def hom(self, a, b) -> tuple:
        return self._homs.get((a, b), ())

    def compose(self, g, f):
        return self.composition[(g, f)]

    def identity(self, obj):
        return self.identities[obj]


def validate_category(cat: FiniteCategory) -> Report:
    report = Report("validate-category")
    objs = set(cat.objects)
    names = [a.name for a in cat.arrows]
    if len(set(names)) != len(names):
        report.fail("malformed", reason="duplicate arrow names")
    for a in cat.arrows:
        if a.src not in objs or a.tgt not in objs:
            report.fail("malformed", reason="arrow between unknown objects", arrow=a.name)
    for (g, f), h in cat.composition.items():
        if g not in cat._by_name or f not in cat._by_name or h not in cat._by_name:
            report.fail("malformed", reason="composition mentions unknown arrow", entry=(g, f, h))
    if not report.ok:
        return report
    for c in cat.objects:
        i = cat.identities.get(c)
        if i is None or i not in cat._by_name or (cat.src(i), cat.tgt(i)) != (c, c):
            report.fail("missing-identity", object=c)
    for (g, f), h in cat.composition.items():
        if cat.tgt(f) != cat.src(g):
            report.fail("malformed", reason="composition of non-composable pair", entry=(g, f, h))
        elif (cat.src(h), cat.tgt(h)) != (cat.src(f), cat.tgt(g)):
            report.fail("mistyped-composite", entry=(g, f, h))
    if not report.ok:
        return report
    for f, g in product(cat.arrows, cat.arrows):
        if f.tgt == g.src and (g.name, f.name) not in cat.composition:
            report.fail("missing-composite", g=g.name, f=f.name)
    if not report.ok:
        return report
    for a in cat.arrows:
        if cat.compose(a.name, cat.identity(a.src)) != a.name or cat.compose(cat.identity(a.tgt), a.name) != a.name:
            report.fail("unit-law", arrow=a.name)
    for f, g, h in product(cat.arrows, repeat=3):
        if f.tgt == g.src and g.tgt == h.src:
            left = cat.compose(h.name, cat.compose(g.name, f.name))
            right = cat.compose(cat.compose(h.name, g.name), f.name)
            if left != right:
                report.fail("associativity", triple=(h.name, g.name, f.name), left=left, right=right)
    report.stats = {"objects": len(cat.objects), "arrows": len(cat.arrows)}
    return report


def is_mono(cat: FiniteCategory, i) -> bool:
    a = cat.arrow(i)
    for d in cat.objects:
        seen: dict[Any, Any] = {}
        for x in cat.hom(d, a.src):
            ix = cat.compose(i, x)
            if ix in seen and seen[ix] != x:
                return False
            seen[ix] = x
    return True


@dataclass(frozen=True)
class Presheaf:
    """Covariant functor into finite sets; arrow images are total functions."""

    on_objects: Mapping[Any, tuple]
    on_arrows: Mapping[Any, PartialFunction]

    @classmethod
    def build(cls, cat: FiniteCategory, objects: Mapping, arrows: Mapping) -> Presheaf:
        sets = {c: finite_set(objects.get(c, ())) for c in cat.objects}
        maps = {}
        for a in cat.arrows:
            g = arrows.get(a.name)
            if g is None and a.name == cat.identities.get(a.src) and a.src == a.tgt:
                g = {x: x for x in sets[a.src]}
            if g is None:
                raise MalformedInput(f"no image for arrow {fmt_type(a.name)}", witness=a.name)
            maps[a.name] = g if isinstance(g, PartialFunction) else PartialFunction.from_graph(a.src, a.tgt, g)
        return cls(sets, maps)

    def __call__(self, name) -> PartialFunction:
        return self.on_arrows[name]


def validate_presheaf(cat: FiniteCategory, S: Presheaf) -> Report:
    report = Report("validate-presheaf")
    for a in cat.arrows:
        fa = S.on_arrows.get(a.name)
        if fa is None:
            report.fail("malformed", reason="missing arrow image", arrow=a.name)
            continue
        if fa.domain != set(S.on_objects[a.src]) or not fa.image <= set(S.on_objects[a.tgt]):
            report.fail("malformed", reason="arrow image is not a total function between the sets", arrow=a.name)
    if not report.ok:
        return report
    for c in cat.objects:
        if S(cat.identity(c)) != identity_partial(S.on_objects[c], c):
            report.fail("functoriality", reason="identity not preserved", object=c)
    for (g, f), h in sorted(cat.composition.items(), key=sort_key):
        if compose_partial(S(g), S(f)) != S(h):
            report.fail("functoriality", reason="composite not preserved", g=g, f=f)
    return report


def _require_functorial(cat: FiniteCategory, S: Presheaf) -> None:
    r = validate_category(cat)
    if not r.ok:
        raise MalformedInput("not a category", witness=r.witnesses)
    r = validate_presheaf(cat, S)
    if not r.ok:
        raise FunctorialityFailure("presheaf is not functorial", witness=r.witnesses)


def cones(cat: FiniteCategory, f, g) -> list[tuple]:
    """All commuting squares ``(P, p, q)`` over the cospan ``f, g``."""
    a, b = cat.src(f), cat.src(g)
    out = []
    for P in cat.objects:
        for p in cat.hom(P, a):
            fp = cat.compose(f, p)
            for q in cat.hom(P, b):
                if fp == cat.compose(g, q):
                    out.append((P, p, q))
    return out


def pullbacks(cat: FiniteCategory, f, g) -> list[tuple]:
    """Limit cones of the cospan, found by exhaustive search."""
    cs = cones(cat, f, g)
    out = []
    for P, p, q in cs:
        universal = True
        for Q, p2, q2 in cs:
            mediators = [
                u for u in cat.hom(Q, P) if cat.compose(p, u) == p2 and cat.compose(q, u) == q2
            ]
            if len(mediators) != 1:
                universal = False
                break
        if universal:
            out.append((P, p, q))
    return out


def cospans(cat: FiniteCategory) -> list[tuple]:
    return [(f.name, g.name) for f, g in product(cat.arrows, cat.arrows) if f.tgt == g.tgt]


def pullback_failures(cat: FiniteCategory, S: Presheaf) -> list[dict[str, Any]]:
    """Pullback squares of ``cat`` whose image under ``S`` is not a set pullback."""
    failures = []
    for f, g in cospans(cat):
        Sf, Sg = S(f), S(g)
        expected = {
            (x, y)
            for x in S.on_objects[cat.src(f)]
            for y in S.on_objects[cat.src(g)]
            if Sf(x) == Sg(y)
        }
        for P, p, q in pullbacks(cat, f, g):
            Sp, Sq = S(p), S(q)
            image = [(Sp(z), Sq(z)) for z in S.on_objects[P]]
            if len(set(image)) != len(image) or set(image) != expected:
                failures.append({"kind": "pullback-not-preserved", "cospan": (f, g), "pullback": (P, p, q)})
    return failures


def preserves_pullbacks(cat: FiniteCategory, S: Presheaf) -> bool:
    return not pullback_failures(cat, S)


def missing_mono_pullbacks(cat: FiniteCategory) -> list[tuple]:
    """Cospans ``(f, j)`` with ``j`` mono that have no pullback in ``cat``.

    Composition of partial arrows needs exactly these pullbacks.
    """
    monos = {a.name for a in cat.arrows if is_mono(cat, a.name)}
    return [(f, j) for f, j in cospans(cat) if j in monos and not pullbacks(cat, f, j)]


def enumerate_partial_arrows(cat: FiniteCategory, c1, c2) -> list[PartialArrow]:
    out = []
    for d in cat.objects:
        for i in cat.hom(d, c1):
            if is_mono(cat, i):
                out.extend(PartialArrow(i, f) for f in cat.hom(d, c2))
    return sorted(out, key=sort_key)


def build_cm_total(cat: FiniteCategory, S: Presheaf) -> Model:
    _require_functorial(cat, S)
    homs: dict[tuple, list] = {}
    for a in cat.arrows:
        homs.setdefault((a.src, a.tgt), []).append(S(a.name))
    return Model.build(cat.objects, S.on_objects, homs)


def partial_arrow_function(cat: FiniteCategory, S: Presheaf, pa: PartialArrow, c1, c2) -> PartialFunction:
    """The partial function ``S(i)(z) -> S(f)(z)`` induced by ``(i, f)``."""
    Si, Sf = S(pa.i), S(pa.f)
    graph: dict[str, str] = {}
    for z in S.on_objects[cat.src(pa.i)]:
        x, y = Si(z), Sf(z)
        if x in graph and graph[x] != y:
            raise PullbackPreservationFailure(
                f"S({fmt_type(pa.i)}) identifies points that S({fmt_type(pa.f)}) separates",
                witness=pa,
            )
        graph[x] = y
    return PartialFunction.from_graph(c1, c2, graph)


def cm_partial_provenance(cat: FiniteCategory, S: Presheaf) -> dict[PartialFunction, PartialArrow]:
    """One witnessing partial arrow (the canonically first) per induced function."""
    prov: dict[PartialFunction, PartialArrow] = {}
    for c1, c2 in product(cat.objects, cat.objects):
        for pa in enumerate_partial_arrows(cat, c1, c2):
            f = partial_arrow_function(cat, S, pa, c1, c2)
            prov.setdefault(f, pa)
    return prov


def build_cm_partial(cat: FiniteCategory, S: Presheaf) -> Model:
    _require_functorial(cat, S)
    failures = pullback_failures(cat, S)
    if failures:
        raise PullbackPreservationFailure("presheaf does not preserve pullbacks", witness=failures)
    missing = missing_mono_pullbacks(cat)
    if missing:
        raise PullbackPreservationFailure(
            "category lacks pullbacks of monomorphisms needed to compose partial arrows",
            witness=[{"kind": "missing-pullback", "cospan": c} for c in missing],
        )
    homs: dict[tuple, list] = {}
    for f in cm_partial_provenance(cat, S):
        homs.setdefault((f.source, f.target), []).append(f)
    return Model.build(cat.objects, S.on_objects, homs)


@dataclass(frozen=True)
class Functor:
    source: FiniteCategory
    target: FiniteCategory
    on_objects: Mapping[Any, Any]
    on_arrows: Mapping[Any, Any]


def validate_functor(F: Functor) -> Report:
    report = Report("validate-functor")
    E, B = F.source, F.target
    for e in E.objects:
        if F.on_objects.get(e) not in B.objects:
            report.fail("malformed", reason="object not mapped into target", object=e)
    for a in E.arrows:
        b = F.on_arrows.get(a.name)
        if b not in B._by_name:
            report.fail("malformed", reason="arrow not mapped into target", arrow=a.name)
        elif (B.src(b), B.tgt(b)) != (F.on_objects.get(a.src), F.on_objects.get(a.tgt)):
            report.fail("functoriality", reason="endpoints not preserved", arrow=a.name)
    if not report.ok:
        return report
    for e in E.objects:
        if F.on_arrows[E.identity(e)] != B.identity(F.on_objects[e]):
            report.fail("functoriality", reason="identity not preserved", object=e)
    for (g, f), h in sorted(E.composition.items(), key=sort_key):
        if B.compose(F.on_arrows[g], F.on_arrows[f]) != F.on_arrows[h]:
            report.fail("functoriality", reason="composite not preserved", g=g, f=f)
    return report


def is_cartesian_arrow(F: Functor, g) -> bool:
    """Category-level cartesianness of ``g: e -> e2`` over ``F(g)``."""
    E, B = F.source, F.target
    e, e2 = E.src(g), E.tgt(g)
    Fg = F.on_arrows[g]
    for e3 in E.objects:
        for g2 in E.hom(e3, e2):
            for h2 in B.hom(F.on_objects[e3], F.on_objects[e]):
                if B.compose(Fg, h2) != F.on_arrows[g2]:
                    continue
                ks = [k for k in E.hom(e3, e) if E.compose(g, k) == g2 and F.on_arrows[k] == h2]
                if len(ks) != 1:
                    return False
    return True


def is_cat_fibration(F: Functor) -> bool:
    """Every arrow into ``F(e2)`` has a cartesian lift ending at ``e2``."""
    E, B = F.source, F.target
    for e2 in E.objects:
        for b in B.objects:
            for f in B.hom(b, F.on_objects[e2]):
                lifts = [
                    g.name for g in E.arrows if g.tgt == e2 and F.on_arrows[g.name] == f
                ]
                if not any(is_cartesian_arrow(F, g) for g in lifts):
                    return False
    return True


def simulation_from_functor(catE: FiniteCategory, S: Presheaf, catB: FiniteCategory, S_prime: Presheaf, F: Functor) -> Simulation:
    """Diagonal simulation between total canonical models induced by ``F`` with ``S' . F = S``."""
    r = validate_functor(F)
    if not r.ok:
        raise FunctorialityFailure("F is not a functor", witness=r.witnesses)
    for e in catE.objects:
        if S_prime.on_objects[F.on_objects[e]] != S.on_objects[e]:
            raise FunctorialityFailure(f"S'(F({fmt_type(e)})) differs from S({fmt_type(e)})", witness=e)
    for a in catE.arrows:
        if S_prime(F.on_arrows[a.name]).pairs != S(a.name).pairs:
            raise FunctorialityFailure(f"S'(F({fmt_type(a.name)})) differs from S({fmt_type(a.name)})", witness=a.name)
    source = build_cm_total(catE, S)
    target = build_cm_total(catB, S_prime)
    forcing = {e: [(x, x) for x in S.on_objects[e]] for e in catE.objects}
    return Simulation.build(source, target, dict(F.on_objects), forcing)


def category_of_elements(cat: FiniteCategory, S: Presheaf) -> tuple[FiniteCategory, Presheaf]:
    """Category of elements of ``S`` with the singleton presheaf ``(c, x) -> {x}``.

    Objects are ``Pair(c, x)``; the arrow ``Pair(f, x)`` goes from ``(c, x)`` to
    ``(d, S(f)(x))``.
    """
    objects = [Pair(c, x) for c in cat.objects for x in S.on_objects[c]]
    arrows = []
    for a in cat.arrows:
        for x in S.on_objects[a.src]:
            arrows.append((Pair(a.name, x), Pair(a.src, x), Pair(a.tgt, S(a.name)(x))))
    comp = {}
    for (g, f), h in cat.composition.items():
        for x in S.on_objects[cat.src(f)]:
            comp[(Pair(g, S(f)(x)), Pair(f, x))] = Pair(h, x)
    ids = {Pair(c, x): Pair(cat.identity(c), x) for c, x in objects}
    el = FiniteCategory.build(objects, arrows, comp, ids)
    pr2 = Presheaf(
        {o: (o.point,) for o in el.objects},
        {
            a.name: PartialFunction(a.src, a.tgt, ((a.src.point, a.tgt.point),))
            for a in el.arrows
        },
    )
    return el, pr2
