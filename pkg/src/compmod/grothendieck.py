"""Grothendieck models, the first projection, and the type-category ingredients.

``build_grothendieck(C, gamma)`` has a type name ``Pair(t, b)`` for every point
``b`` of ``gamma(t)``; its data type is the fiber of elements forced by ``b``,
and its functions are the functions of ``C`` that respect fibers, restricted to
them. The checkers below verify the pullback square, its universal property,
the strictness equations and the comparison with the canonical partial model.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Mapping

from compmod.canonical import (
    FiniteCategory,
    Presheaf,
    build_cm_partial,
    category_of_elements,
    pullback_failures,
)
from compmod.errors import (
    BoundExceeded,
    FiberMembershipViolation,
    PullbackPreservationFailure,
    SquareDoesNotCommute,
    TypeMismatch,
)
from compmod.model import (
    Model,
    Pair,
    PartialFunction,
    restrict_partial,
    sort_key,
)
from compmod.report import Report
from compmod.simulation import (
    PresheafSimulation,
    Simulation,
    compose_simulations,
    identity_simulation,
    require_valid,
    simulation_diff,
    validate_simulation,
)

TERMINAL = "∅"


@dataclass(frozen=True)
class GrothendieckModel:
    underlying: Model
    base: Model
    presheaf: PresheafSimulation
    fiber_data: Mapping[Pair, tuple]
    hom_provenance: Mapping[PartialFunction, PartialFunction]

    @property
    def types(self) -> tuple:
        return self.underlying.types

    def fiber(self, t, b) -> tuple:
        return self.fiber_data[Pair(t, b)]


def respects_fibers(f: PartialFunction, a, b, gamma: PresheafSimulation) -> bool:
    """``a`` forces x implies ``b`` forces f(x), for every x in dom(f)."""
    s, t = f.source, f.target
    return all(not gamma.forces(s, a, x) or gamma.forces(t, b, fx) for x, fx in f.pairs)


def build_grothendieck(C: Model, gamma: PresheafSimulation, *, check: bool = True) -> GrothendieckModel:
    if gamma.source is not C and gamma.source != C:
        raise TypeMismatch("presheaf-simulation is not over the given model")
    if check:
        require_valid(gamma, "presheaf-simulation")
    types = [Pair(t, b) for t in C.types for b in gamma.sets[t]]
    fibers = {
        Pair(t, b): tuple(x for x in C.data[t] if gamma.forces(t, b, x)) for t, b in types
    }
    homs: dict[tuple, list] = {}
    provenance: dict[PartialFunction, PartialFunction] = {}
    for (s, a), (t, b) in product(types, types):
        src, tgt = Pair(s, a), Pair(t, b)
        for f in C.hom(s, t):
            if respects_fibers(f, a, b, gamma):
                r = restrict_partial(f, fibers[src], fibers[tgt], src, tgt)
                homs.setdefault((src, tgt), []).append(r)
                provenance.setdefault(r, f)
    underlying = Model.build(types, fibers, homs)
    return GrothendieckModel(underlying, C, gamma, fibers, provenance)


def build_pr1(G: GrothendieckModel) -> Simulation:
    """First projection: ``(t, b) -> t`` with diagonal forcing on each fiber."""
    return Simulation(
        G.underlying,
        G.base,
        {p: p.base for p in G.types},
        {p: frozenset((y, y) for y in G.fiber_data[p]) for p in G.types},
    )


def pr1_tracker(G: GrothendieckModel, f: PartialFunction) -> PartialFunction:
    """The originating base function, which tracks its own restriction."""
    return G.hom_provenance[f]


def lift_simulation(gamma: Simulation, delta: PresheafSimulation, *, check: bool = True) -> Simulation:
    """``Sigma_delta gamma`` from ``Sigma_C(delta . gamma)`` to ``Sigma_D delta``."""
    if check:
        require_valid(gamma, "gamma")
        require_valid(delta, "delta")
    dg = compose_simulations(delta, gamma)
    G1 = build_grothendieck(gamma.source, dg, check=False)
    G2 = build_grothendieck(gamma.target, delta, check=False)
    type_map = {p: Pair(gamma.type_map[p.base], p.point) for p in G1.types}
    forcing = {}
    for p in G1.types:
        inner, outer = set(G1.fiber_data[p]), set(G2.fiber_data[type_map[p]])
        forcing[p] = frozenset(
            (y, x) for y, x in gamma.forcing[p.base] if y in outer and x in inner
        )
    return Simulation(G1.underlying, G2.underlying, type_map, forcing)


def _same(m1: Model, m2: Model) -> bool:
    return m1 is m2 or m1 == m2


def mediating_simulation(
    E: Model, alpha: Simulation, beta: Simulation, gamma: Simulation, delta: PresheafSimulation
) -> Simulation:
    """The unique ``zeta: E -> Sigma_C(delta . gamma)`` with both triangles commuting."""
    C, D = gamma.source, gamma.target
    G1 = build_grothendieck(C, compose_simulations(delta, gamma), check=False)
    G2 = build_grothendieck(D, delta, check=False)
    if not (_same(alpha.source, E) and _same(beta.source, E)):
        raise TypeMismatch("alpha and beta must both start at E")
    if not _same(alpha.target, C) or not _same(beta.target, G2.underlying):
        raise TypeMismatch("alpha must land in C and beta in Sigma_D delta")
    diff = simulation_diff(compose_simulations(build_pr1(G2), beta), compose_simulations(gamma, alpha))
    if diff:
        raise SquareDoesNotCommute("pr1 . beta differs from gamma . alpha", witness=diff)
    type_map = {}
    forcing = {}
    for v in E.types:
        target = Pair(alpha.type_map[v], beta.type_map[v].point)
        fiber = set(G1.fiber_data.get(target, ()))
        for y, x in alpha.forcing[v]:
            if y not in fiber:
                raise FiberMembershipViolation(
                    f"{y} is forced by alpha but lies outside the fiber over {target}",
                    witness=(v, y, x),
                )
        type_map[v] = target
        forcing[v] = alpha.forcing[v]
    return Simulation(E, G1.underlying, type_map, forcing)


def _subsets(pairs: list) -> Iterator[frozenset]:
    for mask in range(1 << len(pairs)):
        yield frozenset(p for k, p in enumerate(pairs) if mask >> k & 1)


def check_pullback_universal(
    C: Model,
    D: Model,
    gamma: Simulation,
    delta: PresheafSimulation,
    E: Model,
    alpha: Simulation,
    beta: Simulation,
    bound: int = 2,
    max_types: int | None = None,
) -> Report:
    """Count every simulation ``E -> Sigma_C(delta . gamma)`` making both triangles commute.

    Candidates are all type maps times all forcing relations. The triangle and
    totality conditions only involve one type of ``E`` at a time, so they are
    applied per type before the product is formed; trackability and the full
    triangle equations are then checked on every surviving product element.
    """
    if not (_same(gamma.source, C) and _same(gamma.target, D) and _same(delta.source, D)):
        raise TypeMismatch("gamma must go from C to D and delta must be over D")
    sizes = [len(v) for m in (C, D, E) for v in m.data.values()]
    if max(sizes, default=0) > bound or (max_types is not None and len(E.types) > max_types):
        raise BoundExceeded(
            f"pullback enumeration refused: data sets must have at most {bound} elements"
            + (f" and E at most {max_types} type names" if max_types is not None else ""),
            witness={"max_data": max(sizes, default=0), "E_types": len(E.types)},
        )
    report = Report("check-pullback")
    G1 = build_grothendieck(C, compose_simulations(delta, gamma), check=False)
    G2 = build_grothendieck(D, delta, check=False)
    lift = lift_simulation(gamma, delta, check=False)
    pr1_C = build_pr1(G1)
    square = simulation_diff(compose_simulations(build_pr1(G2), lift), compose_simulations(gamma, pr1_C))
    if square:
        report.fail("lift-square-does-not-commute", diff=square)

    try:
        mediator = mediating_simulation(E, alpha, beta, gamma, delta)
    except (SquareDoesNotCommute, FiberMembershipViolation) as exc:
        mediator = None
        report.notes.append(f"no mediator: {exc}")

    per_type: list[list[tuple]] = []
    space = 1
    for v in E.types:
        options = []
        total = 0
        for T in G1.types:
            pairs = [(y, x) for y in G1.fiber_data[T] for x in E.data[v]]
            total += 1 << len(pairs)
            for rel in _subsets(pairs):
                if not all(any(x2 == x for _, x2 in rel) for x in E.data[v]):
                    continue
                if T.base != alpha.type_map[v] or rel != alpha.forcing[v]:
                    continue
                if lift.type_map[T] != beta.type_map[v]:
                    continue
                via = frozenset(
                    (z, x) for z, y in lift.forcing[T] for y2, x in rel if y == y2
                )
                if via != beta.forcing[v]:
                    continue
                options.append((T, rel))
        space *= total
        per_type.append(options)

    count = 0
    found = []
    for combo in product(*per_type):
        zeta = Simulation(
            E, G1.underlying, {v: T for v, (T, _) in zip(E.types, combo)},
            {v: rel for v, (_, rel) in zip(E.types, combo)},
        )
        if not validate_simulation(zeta).ok:
            continue
        if simulation_diff(compose_simulations(lift, zeta), beta):
            continue
        if simulation_diff(compose_simulations(pr1_C, zeta), alpha):
            continue
        count += 1
        found.append(zeta)
    report.stats = {
        "candidate_space": space,
        "locally_admissible": [len(o) for o in per_type],
        "mediators": count,
    }
    if count != 1:
        report.fail("mediator-count", count=count)
    elif mediator is None or simulation_diff(found[0], mediator):
        report.fail("mediator-differs")
    return report


def check_strictness(
    C: Model,
    D: Model,
    E_model: Model,
    gamma: Simulation,
    delta: Simulation,
    epsilon: PresheafSimulation,
    eps_delta: PresheafSimulation | None = None,
) -> Report:
    """Both strictness equations, compared exactly as simulations.

    ``eps_delta`` overrides the composite ``epsilon . delta`` used on the right
    side of the second equation; it exists to exercise the failure path.
    """
    if not (_same(gamma.source, C) and _same(gamma.target, D) and _same(delta.source, D)
            and _same(delta.target, E_model) and _same(epsilon.source, E_model)):
        raise TypeMismatch("expected gamma: C -> D, delta: D -> E and epsilon over E")
    for name, sim in (("gamma", gamma), ("delta", delta), ("epsilon", epsilon)):
        require_valid(sim, name)
    report = Report("check-strictness")

    lhs = lift_simulation(identity_simulation(E_model), epsilon, check=False)
    rhs = identity_simulation(build_grothendieck(E_model, epsilon, check=False).underlying)
    for w in simulation_diff(lhs, rhs):
        report.fail("identity-equation", **w)

    lhs = lift_simulation(compose_simulations(delta, gamma), epsilon, check=False)
    ed = eps_delta if eps_delta is not None else compose_simulations(epsilon, delta)
    try:
        rhs = compose_simulations(
            lift_simulation(delta, epsilon, check=False), lift_simulation(gamma, ed, check=False)
        )
    except TypeMismatch:
        report.fail("composition-equation", reason="right-hand composite is undefined")
    else:
        for w in simulation_diff(lhs, rhs):
            report.fail("composition-equation", **w)
    report.stats = {"types": [len(C.types), len(D.types), len(E_model.types)]}
    return report


def diagonal_presheaf(M: Model) -> PresheafSimulation:
    """Presheaf-simulation with ``gamma(t) = M(t)`` and diagonal forcing."""
    return PresheafSimulation(
        M, {t: M.data[t] for t in M.types}, {t: frozenset((x, x) for x in M.data[t]) for t in M.types}
    )


def compare_models(left: Model, right: Model, report: Report) -> None:
    """Record type, data and hom-graph differences between two models."""
    lt, rt = set(left.types), set(right.types)
    for t in sorted(lt - rt, key=sort_key):
        report.fail("type-only-left", type=t)
    for t in sorted(rt - lt, key=sort_key):
        report.fail("type-only-right", type=t)
    common = sorted(lt & rt, key=sort_key)
    for t in common:
        if left.data[t] != right.data[t]:
            report.fail("data-differs", type=t, left=left.data[t], right=right.data[t])
    for s, t in product(common, common):
        a, b = set(left.hom(s, t)), set(right.hom(s, t))
        for f in sorted(a - b, key=sort_key):
            report.fail("function-only-left", function=f)
        for f in sorted(b - a, key=sort_key):
            report.fail("function-only-right", function=f)


def groth_canonical_compare(cat: FiniteCategory, S: Presheaf) -> Report:
    """Grothendieck model of the partial canonical model over the diagonal presheaf,
    against the partial canonical model of the category of elements.

    Both sides name their types ``Pair(c, x)``, so the renaming is the identity.
    """
    failures = pullback_failures(cat, S)
    if failures:
        raise PullbackPreservationFailure("presheaf does not preserve pullbacks", witness=failures)
    M = build_cm_partial(cat, S)
    left = build_grothendieck(M, diagonal_presheaf(M)).underlying
    el, pr2 = category_of_elements(cat, S)
    right = build_cm_partial(el, pr2)
    report = Report("check-canonical-equality")
    compare_models(left, right, report)
    report.stats = {
        "types": len(left.types),
        "left_functions": left.size()["functions"],
        "right_functions": right.size()["functions"],
    }
    return report


def terminal_model() -> tuple[Model, PresheafSimulation]:
    """One type, one element, identity only; with its identity presheaf-simulation."""
    m = Model.build([TERMINAL], {TERMINAL: [TERMINAL]}, {(TERMINAL, TERMINAL): [{TERMINAL: TERMINAL}]})
    return m, diagonal_presheaf(m)


def to_terminal(m: Model) -> Simulation:
    """The simulation into the terminal model: everything is forced by its one element."""
    t1, _ = terminal_model()
    return Simulation(
        m, t1, {t: TERMINAL for t in m.types},
        {t: frozenset((TERMINAL, x) for x in m.data[t]) for t in m.types},
    )
