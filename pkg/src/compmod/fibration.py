"""Cartesian and opcartesian functions, (op)fibration-simulations and splittings.

Throughout, ``ctx.varpi`` is a simulation from the total model ``ctx.total`` to
the base model ``ctx.base``. Every quantifier of the definitions ranges over the
declared finite hom-classes, so the checks are exhaustive. Lifts and fillers
are not unique; the canonically first one is returned as the witness.

Two readings of the opcartesian filler condition are available:

``"diagram"`` (default)
    y in dom(f'), f'(y) in dom(h), y in dom(g') and h(f'(y)) = g'(y).
``"literal"``
    y in dom(h . f') and dom(g'), and f'(h(y)) = g'(y), evaluated as written.

The filler scope is a separate switch. ``"every"`` (default) demands a filler
for every (t'', g, g', h); ``"agreeing"`` only when the premise holds for at
least one forced pair. The second is a diagnostic, not the definition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from compmod.errors import TypeMismatch
from compmod.grothendieck import GrothendieckModel, build_pr1
from compmod.model import Model, PartialFunction, compose_partial, identity_partial, sort_key
from compmod.report import Report
from compmod.simulation import Simulation, _tracks, extract_tracking_modulus

READINGS = ("diagram", "literal")
SCOPES = ("every", "agreeing")
FIBRATION = "fibration"
OPFIBRATION = "opfibration"


@dataclass(frozen=True)
class FibrationContext:
    total: Model
    base: Model
    varpi: Simulation
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def of(cls, varpi: Simulation) -> FibrationContext:
        return cls(varpi.source, varpi.target, varpi)

    def p(self, t):
        return self.varpi.type_map[t]

    def tracks(self, fp: PartialFunction, f: PartialFunction) -> bool:
        key = ("tracks", fp, f)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = _tracks(fp, f, self.varpi)
        return hit

    def trackers(self, g: PartialFunction) -> tuple:
        """Base functions tracking ``g``, in canonical order."""
        key = ("trackers", g)
        hit = self._cache.get(key)
        if hit is None:
            cands = self.base.hom(self.p(g.source), self.p(g.target))
            hit = self._cache[key] = tuple(fp for fp in cands if self.tracks(fp, g))
        return hit

    def tracked_by(self, h: PartialFunction, s, t) -> tuple:
        """Total-side functions in ``E[s, t]`` tracked by ``h``."""
        key = ("tracked_by", h, s, t)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = tuple(k for k in self.total.hom(s, t) if self.tracks(h, k))
        return hit


@dataclass
class LiftCheck:
    """Outcome of a (op)cartesianness check with its filler witnesses."""

    ok: bool
    reason: str = ""
    witnesses: dict = field(default_factory=dict)
    failure: dict | None = None

    def __bool__(self) -> bool:
        return self.ok


def _check_scope(scope: str) -> None:
    if scope not in SCOPES:
        raise ValueError(f"unknown filler scope {scope!r}")


def _require(cond: bool, message: str, witness=None) -> None:
    if not cond:
        raise TypeMismatch(message, witness=witness)


def is_cartesian(
    ctx: FibrationContext, f_prime: PartialFunction, t_prime, f: PartialFunction, scope: str = "every"
) -> LiftCheck:
    """``f in E[t, t']`` cartesian for ``f' in B[s, s']`` and ``t'`` with varpi(t') = s'."""
    _check_scope(scope)
    t = f.source
    _require(f.target == t_prime, "f must end at t'", (f, t_prime))
    _require(ctx.total.contains(f), "f is not a function of the total model", f)
    _require(ctx.base.contains(f_prime), "f' is not a function of the base model", f_prime)
    _require(
        (f_prime.source, f_prime.target) == (ctx.p(t), ctx.p(t_prime)),
        "f' must be typed varpi(t) -> varpi(t')",
        (f_prime, f),
    )
    if not ctx.tracks(f_prime, f):
        return LiftCheck(False, "f' does not track f")
    E, B, sim = ctx.total, ctx.base, ctx.varpi
    witnesses = {}
    for t2 in E.types:
        hs = B.hom(ctx.p(t2), ctx.p(t))
        for g in E.hom(t2, t_prime):
            for g1 in ctx.trackers(g):
                for h in hs:
                    premise = []
                    for x in E.data[t2]:
                        for y in sim.forcers(t2, x):
                            hy = h.graph.get(y)
                            if hy is None or hy not in f_prime.graph or y not in g1.graph:
                                continue
                            if f_prime(hy) == g1(y):
                                premise.append(x)
                                break
                    if scope == "agreeing" and not premise:
                        continue
                    k = _first_filler_cartesian(ctx, h, t2, t, f, g, premise)
                    if k is None:
                        return LiftCheck(
                            False,
                            "no filler k",
                            witnesses,
                            {"t2": t2, "g": g, "g_prime": g1, "h": h},
                        )
                    witnesses[(t2, g, g1, h)] = k
    return LiftCheck(True, witnesses=witnesses)


def _first_filler_cartesian(ctx, h, t2, t, f, g, premise):
    for k in ctx.tracked_by(h, t2, t):
        kg, fg, gg = k.graph, f.graph, g.graph
        good = True
        for x in premise:
            kx = kg.get(x)
            if kx is None or kx not in fg or x not in gg or gg[x] != fg[kx]:
                good = False
                break
        if good:
            return k
    return None


def _premise_opcartesian(sim, t1, data, f_prime, g1, h, reading):
    out = []
    for x in data:
        for y in sim.forcers(t1, x):
            if y not in g1.graph:
                continue
            if reading == "diagram":
                fy = f_prime.graph.get(y)
                if fy is None or fy not in h.graph:
                    continue
                if h(fy) == g1(y):
                    out.append(x)
                    break
            else:
                fy = f_prime.graph.get(y)
                if fy is None or fy not in h.graph:
                    continue
                hy = h.graph.get(y)
                if hy is None or hy not in f_prime.graph:
                    continue
                if f_prime(hy) == g1(y):
                    out.append(x)
                    break
    return out


def is_opcartesian(
    ctx: FibrationContext,
    f_prime: PartialFunction,
    t_prime,
    f: PartialFunction,
    reading: str = "diagram",
    scope: str = "every",
) -> LiftCheck:
    """``f in E[t', t]`` opcartesian for ``f' in B[s', s]`` and ``t'`` with varpi(t') = s'."""
    _check_scope(scope)
    if reading not in READINGS:
        raise ValueError(f"unknown reading {reading!r}")
    t = f.target
    _require(f.source == t_prime, "f must start at t'", (f, t_prime))
    _require(ctx.total.contains(f), "f is not a function of the total model", f)
    _require(ctx.base.contains(f_prime), "f' is not a function of the base model", f_prime)
    _require(
        (f_prime.source, f_prime.target) == (ctx.p(t_prime), ctx.p(t)),
        "f' must be typed varpi(t') -> varpi(t)",
        (f_prime, f),
    )
    if not ctx.tracks(f_prime, f):
        return LiftCheck(False, "f' does not track f")
    E, B, sim = ctx.total, ctx.base, ctx.varpi
    witnesses = {}
    for t2 in E.types:
        hs = B.hom(ctx.p(t), ctx.p(t2))
        for g in E.hom(t_prime, t2):
            for g1 in ctx.trackers(g):
                for h in hs:
                    premise = _premise_opcartesian(sim, t_prime, E.data[t_prime], f_prime, g1, h, reading)
                    if scope == "agreeing" and not premise:
                        continue
                    l = _first_filler_opcartesian(ctx, h, t, t2, f, g, premise)
                    if l is None:
                        return LiftCheck(
                            False,
                            "no filler l",
                            witnesses,
                            {"t2": t2, "g": g, "g_prime": g1, "h": h},
                        )
                    witnesses[(t2, g, g1, h)] = l
    return LiftCheck(True, witnesses=witnesses)


def _first_filler_opcartesian(ctx, h, t, t2, f, g, premise):
    for l in ctx.tracked_by(h, t, t2):
        lg, fg, gg = l.graph, f.graph, g.graph
        good = True
        for x in premise:
            fx = fg.get(x)
            if fx is None or fx not in lg or x not in gg or gg[x] != lg[fx]:
                good = False
                break
        if good:
            return l
    return None


def is_fibration_simulation(ctx: FibrationContext, count_lifts: bool = True, scope: str = "every") -> Report:
    """Every base function into varpi(t) has a cartesian lift ending at t."""
    report = Report("check-fibration")
    E, B = ctx.total, ctx.base
    verdicts = []
    for t in E.types:
        for u in B.types:
            for fb in B.hom(u, ctx.p(t)):
                lifts = []
                for t1 in E.types:
                    if ctx.p(t1) != u:
                        continue
                    for g in E.hom(t1, t):
                        if is_cartesian(ctx, fb, t, g, scope):
                            lifts.append(g)
                            if not count_lifts:
                                break
                    if lifts and not count_lifts:
                        break
                verdicts.append({"type": t, "function": fb, "lifts": len(lifts), "lift": lifts[0] if lifts else None})
                if not lifts:
                    report.fail("no-cartesian-lift", type=t, function=fb)
    report.stats = {"base_functions_checked": len(verdicts), "scope": scope}
    report.notes.append("lifts are cartesian functions g in E[t', t]")
    report.verdicts = verdicts  # type: ignore[attr-defined]
    return report


def is_opfibration_simulation(
    ctx: FibrationContext,
    reading: str = "diagram",
    count_lifts: bool = True,
    compare_readings: bool = False,
    scope: str = "every",
) -> Report:
    """Every base function out of varpi(t) has an opcartesian lift starting at t."""
    report = Report("check-opfibration")
    E, B = ctx.total, ctx.base
    verdicts = []
    divergent = 0
    for t in E.types:
        for u in B.types:
            for fb in B.hom(ctx.p(t), u):
                lifts = []
                for t1 in E.types:
                    if ctx.p(t1) != u:
                        continue
                    for g in E.hom(t, t1):
                        verdict = is_opcartesian(ctx, fb, t, g, reading, scope).ok
                        if compare_readings:
                            other = "literal" if reading == "diagram" else "diagram"
                            if is_opcartesian(ctx, fb, t, g, other, scope).ok != verdict:
                                divergent += 1
                        if verdict:
                            lifts.append(g)
                            if not count_lifts and not compare_readings:
                                break
                    if lifts and not count_lifts and not compare_readings:
                        break
                verdicts.append({"type": t, "function": fb, "lifts": len(lifts), "lift": lifts[0] if lifts else None})
                if not lifts:
                    report.fail("no-opcartesian-lift", type=t, function=fb)
    report.stats = {"base_functions_checked": len(verdicts), "reading": reading, "scope": scope}
    if compare_readings:
        report.stats["reading_divergences"] = divergent
    report.verdicts = verdicts  # type: ignore[attr-defined]
    return report


@dataclass(frozen=True)
class Splitting:
    """Chosen lifts keyed by ``(base function, total type)``.

    Opfibration entries ``(f, u) -> (lift in E[u, u'], u')`` need varpi(u) to be
    the source of ``f``; fibration entries store the lift as ``E[u', u]`` with
    varpi(u) the target of ``f``.
    """

    variant: str
    table: Mapping[tuple, tuple]
    notes: tuple = ()


def canonical_pr1_splitting(G: GrothendieckModel) -> Splitting:
    """Restrict ``f`` to the fiber over ``(t, b)``; the new point is ``mu(f)(b)``.

    ``mu`` is the canonical tracking modulus of the presheaf-simulation. When
    the fiber misses dom(f) the restriction is empty and the first point of the
    target set is used.
    """
    gamma = G.presheaf
    mu = extract_tracking_modulus(gamma)
    table = {}
    notes = []
    for p in G.types:
        t, b = p
        fiber = set(G.fiber_data[p])
        for t2 in G.base.types:
            for f in G.base.hom(t, t2):
                if fiber & f.domain:
                    b2 = mu(f)(b)
                elif gamma.sets[t2]:
                    b2 = gamma.sets[t2][0]
                else:
                    notes.append(f"no point over {t2} for {f} at {p}")
                    continue
                target = type(p)(t2, b2)
                lift = PartialFunction(
                    p, target, tuple((x, y) for x, y in f.pairs if x in fiber)
                )
                table[(f, p)] = (lift, target)
    return Splitting(OPFIBRATION, table, tuple(notes))


def validate_splitting(ctx: FibrationContext, sp: Splitting, reading: str = "diagram") -> Report:
    """Coverage, (op)cartesianness of every entry, the identity law and the composition law."""
    report = Report("check-splitting")
    E, B = ctx.total, ctx.base
    op = sp.variant == OPFIBRATION
    required = set()
    for u in E.types:
        for t2 in B.types:
            fs = B.hom(ctx.p(u), t2) if op else B.hom(t2, ctx.p(u))
            required.update((f, u) for f in fs)
    for key in sorted(required - set(sp.table), key=sort_key):
        report.fail("missing-entry", function=key[0], type=key[1])
    for key in sorted(set(sp.table) - required, key=sort_key):
        report.fail("unexpected-entry", function=key[0], type=key[1])
    if not report.ok:
        return report
    checked = 0
    for (f, u), (lift, other) in sorted(sp.table.items(), key=sort_key):
        checked += 1
        want = (u, other) if op else (other, u)
        if (lift.source, lift.target) != want or not E.contains(lift) or ctx.p(other) != (f.target if op else f.source):
            report.fail("mistyped-entry", function=f, type=u, lift=lift)
            continue
        ok = is_opcartesian(ctx, f, u, lift, reading) if op else is_cartesian(ctx, f, u, lift)
        if not ok:
            report.fail("not-opcartesian" if op else "not-cartesian", function=f, type=u, lift=lift, reason=ok.reason)
    for u in E.types:
        i = identity_partial(B.data[ctx.p(u)], ctx.p(u))
        if sp.table.get((i, u)) != (identity_partial(E.data[u], u), u):
            report.fail("identity-law", type=u)
    composites = 0
    for t1 in B.types:
        for t2 in B.types:
            for t3 in B.types:
                for f in B.hom(t1, t2):
                    for g in B.hom(t2, t3):
                        gf = compose_partial(g, f)
                        for u1 in E.types:
                            if ctx.p(u1) != (t1 if op else t3):
                                continue
                            composites += 1
                            if op:
                                f_s, u2 = sp.table[(f, u1)]
                                g_s, u3 = sp.table[(g, u2)]
                                expected = (compose_partial(g_s, f_s), u3)
                            else:
                                g_s, u2 = sp.table[(g, u1)]
                                f_s, u0 = sp.table[(f, u2)]
                                expected = (compose_partial(g_s, f_s), u0)
                            if sp.table.get((gf, u1)) != expected:
                                report.fail("composition-law", f=f, g=g, type=u1)
    report.stats = {"entries": checked, "composites": composites, "variant": sp.variant}
    if not op:
        report.notes.append("fibration lifts are stored as E[u', u], into the fixed type")
    return report


def pr1_context(G: GrothendieckModel) -> FibrationContext:
    return FibrationContext.of(build_pr1(G))
