"""Simulations between finite models, presheaf-simulations and their moduli.

A forcing relation for type ``t`` is stored as a frozenset of pairs ``(y, x)``
meaning "y forces x", with ``y`` on the target side and ``x`` in the source
data type. Presheaf-simulations target finite sets and arbitrary partial
functions between them, so they carry their sets directly instead of a model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Any, Iterable, Mapping, Union

from compmod.errors import (
    CompModError,
    InvalidSimulation,
    LeftRegularityFailure,
    MalformedInput,
    RectangleViolation,
    TypeMismatch,
)
from compmod.model import (
    Model,
    PartialFunction,
    compose_partial,
    finite_set,
    fmt_type,
    sort_key,
    validate_model,
)
from compmod.report import Report

Relation = frozenset  # of (y, x) pairs


def _relations(types: Iterable, forcing: Mapping) -> dict[Any, frozenset]:
    return {t: frozenset((y, x) for y, x in forcing.get(t, ())) for t in types}


class _Forcing:
    """Index helpers shared by both simulation kinds."""

    forcing: Mapping[Any, frozenset]

    @cached_property
    def _forcers(self) -> dict[tuple, tuple]:
        idx: dict[tuple, list] = {}
        for t, rel in self.forcing.items():
            for y, x in rel:
                idx.setdefault((t, x), []).append(y)
        return {k: tuple(sorted(v)) for k, v in idx.items()}

    @cached_property
    def _forced(self) -> dict[tuple, frozenset]:
        idx: dict[tuple, set] = {}
        for t, rel in self.forcing.items():
            for y, x in rel:
                idx.setdefault((t, y), set()).add(x)
        return {k: frozenset(v) for k, v in idx.items()}

    def forcers(self, t, x) -> tuple:
        """Canonically ordered elements forcing ``x`` at type ``t``."""
        return self._forcers.get((t, x), ())

    def forced_by(self, t, y) -> frozenset:
        return self._forced.get((t, y), frozenset())

    def forces(self, t, y, x) -> bool:
        return (y, x) in self.forcing[t]


@dataclass(frozen=True)
class Simulation(_Forcing):
    source: Model
    target: Model
    type_map: Mapping[Any, Any]
    forcing: Mapping[Any, frozenset]

    @classmethod
    def build(cls, source: Model, target: Model, type_map: Mapping, forcing: Mapping) -> Simulation:
        return cls(source, target, dict(type_map), _relations(source.types, forcing))

    def carrier(self, t) -> tuple:
        return self.target.data.get(self.type_map.get(t), ())

    def image_type(self, t):
        return self.type_map[t]

    def __repr__(self) -> str:
        pairs = sum(len(r) for r in self.forcing.values())
        return f"Simulation({self.source!r} -> {self.target!r}, pairs={pairs})"


@dataclass(frozen=True)
class PresheafSimulation(_Forcing):
    source: Model
    sets: Mapping[Any, tuple]
    forcing: Mapping[Any, frozenset]

    @classmethod
    def build(cls, source: Model, sets: Mapping, forcing: Mapping) -> PresheafSimulation:
        return cls(
            source,
            {t: finite_set(sets.get(t, ())) for t in source.types},
            _relations(source.types, forcing),
        )

    def carrier(self, t) -> tuple:
        return self.sets.get(t, ())

    def __repr__(self) -> str:
        pairs = sum(len(r) for r in self.forcing.values())
        return f"PresheafSimulation({self.source!r}, pairs={pairs})"


AnySimulation = Union[Simulation, PresheafSimulation]


@dataclass(frozen=True)
class ForcingModulus:
    choice: Mapping[Any, Mapping[str, str]]

    def __call__(self, t, x):
        return self.choice[t][x]


@dataclass(frozen=True)
class TrackingModulus:
    choice: Mapping[tuple, Mapping[PartialFunction, PartialFunction]]

    def __call__(self, f: PartialFunction) -> PartialFunction:
        return self.choice[(f.source, f.target)][f]


@dataclass(frozen=True)
class Representable:
    """A representable presheaf-simulation with its token table and trackers."""

    simulation: PresheafSimulation
    base: Any
    tokens: Mapping[Any, Mapping[str, PartialFunction]]
    trackers: Mapping[PartialFunction, PartialFunction] = field(default_factory=dict)

    def token_of(self, f: PartialFunction) -> str:
        for tok, g in self.tokens[f.target].items():
            if g == f:
                return tok
        raise KeyError(f)


def identity_simulation(m: Model) -> Simulation:
    return Simulation(
        m, m, {t: t for t in m.types}, {t: frozenset((x, x) for x in m.data[t]) for t in m.types}
    )


def _check_tracker_type(fp: PartialFunction, f: PartialFunction, sim: AnySimulation) -> None:
    s, t = f.source, f.target
    if isinstance(sim, Simulation):
        want = (sim.type_map[s], sim.type_map[t])
        if (fp.source, fp.target) != want:
            raise TypeMismatch(
                f"tracker typed {fmt_type(fp.source)}->{fmt_type(fp.target)}, "
                f"expected {fmt_type(want[0])}->{fmt_type(want[1])}",
                witness=(fp, f),
            )
    else:
        src, tgt = set(sim.carrier(s)), set(sim.carrier(t))
        if not (fp.domain <= src and fp.image <= tgt):
            raise TypeMismatch("tracker leaves the presheaf sets", witness=(fp, f))


def tracks(f_prime: PartialFunction, f: PartialFunction, sim: AnySimulation) -> bool:
    """Whether ``f_prime`` tracks ``f``: every forcer of an input is sent to a forcer of the output."""
    _check_tracker_type(f_prime, f, sim)
    return _tracks(f_prime, f, sim)


def _tracks(fp: PartialFunction, f: PartialFunction, sim: AnySimulation) -> bool:
    g = fp.graph
    out = sim.forcing.get(f.target, frozenset())
    for x, fx in f.pairs:
        for y in sim.forcers(f.source, x):
            if y not in g or (g[y], fx) not in out:
                return False
    return True


def _needs(f: PartialFunction, sim: PresheafSimulation) -> dict[str, tuple] | None:
    """Admissible tracker values per constrained input, or None if some set is empty."""
    need: dict[str, set] = {}
    for x, fx in f.pairs:
        allowed = set(sim.forcers(f.target, fx))
        for y in sim.forcers(f.source, x):
            need[y] = need[y] & allowed if y in need else set(allowed)
    if any(not v for v in need.values()):
        return None
    return {y: tuple(sorted(v)) for y, v in sorted(need.items())}


def find_trackers(f: PartialFunction, sim: PresheafSimulation) -> list[PartialFunction]:
    """All minimal trackers of ``f`` into the presheaf sets, canonically ordered."""
    need = _needs(f, sim)
    if need is None:
        return []
    ys = list(need)
    return [
        PartialFunction(f.source, f.target, tuple(zip(ys, choice)))
        for choice in product(*(need[y] for y in ys))
    ]


def first_tracker(f: PartialFunction, sim: AnySimulation) -> PartialFunction | None:
    if isinstance(sim, PresheafSimulation):
        need = _needs(f, sim)
        if need is None:
            return None
        return PartialFunction(f.source, f.target, tuple((y, v[0]) for y, v in need.items()))
    for fp in sim.target.hom(sim.type_map[f.source], sim.type_map[f.target]):
        if _tracks(fp, f, sim):
            return fp
    return None


def _structure(sim: AnySimulation, report: Report) -> None:
    src = sim.source
    if isinstance(sim, Simulation):
        for t in src.types:
            if t not in sim.type_map:
                report.fail("malformed", reason="type not mapped", type=t)
            elif sim.type_map[t] not in sim.target.data:
                report.fail("malformed", reason="type mapped outside target", type=t, image=sim.type_map[t])
    for t, rel in sim.forcing.items():
        if t not in src.data:
            if rel:
                report.fail("malformed", reason="forcing over unknown type", type=t)
            continue
        carrier, data = set(sim.carrier(t)), set(src.data[t])
        for y, x in sorted(rel):
            if y not in carrier or x not in data:
                report.fail("malformed", reason="forcing pair outside carriers", type=t, pair=(y, x))


def validate_simulation(sim: AnySimulation) -> Report:
    """Totality of forcing and trackability of every source function."""
    report = Report("validate-simulation")
    _structure(sim, report)
    if not report.ok:
        return report
    src = sim.source
    for t in src.types:
        for x in src.data[t]:
            if not sim.forcers(t, x):
                report.fail("not-total", type=t, element=x)
    searched = 0
    for f in src.all_functions():
        searched += 1
        if first_tracker(f, sim) is None:
            report.fail("untracked", function=f)
    report.stats = {"functions": searched, "forcing_pairs": sum(len(r) for r in sim.forcing.values())}
    return report


def require_valid(sim: AnySimulation, what: str = "simulation") -> None:
    report = validate_simulation(sim)
    if not report.ok:
        raise InvalidSimulation(f"{what} is not a valid simulation", witness=report.witnesses)


def _compose_relations(outer: Relation, inner: Relation) -> frozenset:
    by_mid: dict[str, list] = {}
    for z, y in outer:
        by_mid.setdefault(y, []).append(z)
    return frozenset((z, x) for y, x in inner for z in by_mid.get(y, ()))


def compose_simulations(delta: AnySimulation, gamma: Simulation) -> AnySimulation:
    """``delta . gamma``; a presheaf ``delta`` yields a presheaf-simulation."""
    if not isinstance(gamma, Simulation):
        raise TypeMismatch("only a simulation into a model can be followed by another")
    if gamma.target is not delta.source and gamma.target != delta.source:
        raise TypeMismatch("gamma.target differs from delta.source", witness=(gamma, delta))
    gm = gamma.type_map
    forcing = {
        t: _compose_relations(delta.forcing.get(gm[t], frozenset()), gamma.forcing[t])
        for t in gamma.source.types
    }
    if isinstance(delta, PresheafSimulation):
        return PresheafSimulation(
            gamma.source, {t: delta.sets[gm[t]] for t in gamma.source.types}, forcing
        )
    return Simulation(
        gamma.source, delta.target, {t: delta.type_map[gm[t]] for t in gamma.source.types}, forcing
    )


def simulation_diff(s1: AnySimulation, s2: AnySimulation) -> list[dict[str, Any]]:
    """Witnesses separating two simulations; empty iff they are equal."""
    if type(s1) is not type(s2):
        return [{"kind": "kind-differs"}]
    out: list[dict[str, Any]] = []
    if s1.source != s2.source:
        out.append({"kind": "source-differs"})
    if isinstance(s1, Simulation):
        if s1.target != s2.target:
            out.append({"kind": "target-differs"})
        for t in s1.source.types:
            if s1.type_map.get(t) != s2.type_map.get(t):
                out.append({"kind": "type-map-differs", "type": t, "left": s1.type_map.get(t), "right": s2.type_map.get(t)})
    else:
        for t in s1.source.types:
            if s1.sets.get(t) != s2.sets.get(t):
                out.append({"kind": "sets-differ", "type": t})
    for t in sorted(set(s1.forcing) | set(s2.forcing), key=sort_key):
        a, b = s1.forcing.get(t, frozenset()), s2.forcing.get(t, frozenset())
        for pair in sorted(a - b):
            out.append({"kind": "forcing-only-left", "type": t, "pair": pair})
        for pair in sorted(b - a):
            out.append({"kind": "forcing-only-right", "type": t, "pair": pair})
    return out


def simulations_equal(s1: AnySimulation, s2: AnySimulation) -> bool:
    return not simulation_diff(s1, s2)


def is_left_regular(m: Model, t0) -> bool:
    if t0 not in m.data:
        raise MalformedInput(f"unknown type name {fmt_type(t0)}", witness=t0)
    return _left_regularity_witness(m, t0) is None


def _left_regularity_witness(m: Model, t0):
    for t in m.types:
        reached = set()
        for f in m.hom(t0, t):
            reached |= f.image
        for x in m.data[t]:
            if x not in reached:
                return (t, x)
    return None


def build_representable(m: Model, t0) -> Representable:
    """Presheaf-simulation sending ``t`` to the hom-class from ``t0``, functions as tokens."""
    if t0 not in m.data:
        raise MalformedInput(f"unknown type name {fmt_type(t0)}", witness=t0)
    report = validate_model(m)
    if not report.ok:
        raise CompModError("representable-simulations need a valid model", witness=report.witnesses)
    missing = _left_regularity_witness(m, t0)
    if missing is not None:
        raise LeftRegularityFailure(
            f"{missing[1]} in data type {fmt_type(missing[0])} is reached by no function from {fmt_type(t0)}",
            witness=missing,
        )
    tokens: dict[Any, dict[str, PartialFunction]] = {}
    token_of: dict[PartialFunction, str] = {}
    forcing: dict[Any, set] = {}
    for t in m.types:
        tokens[t] = {}
        forcing[t] = set()
        for k, f in enumerate(m.hom(t0, t)):
            tok = f"f#{k}"
            tokens[t][tok] = f
            token_of[f] = tok
            forcing[t].update((tok, x) for x in f.image)
    sim = PresheafSimulation.build(m, {t: list(tokens[t]) for t in m.types}, forcing)
    trackers = {}
    for g in m.all_functions():
        s, t = g.source, g.target
        trackers[g] = PartialFunction(
            s, t, tuple(sorted((tok, token_of[compose_partial(g, h)]) for tok, h in tokens[s].items()))
        )
    return Representable(sim, t0, tokens, trackers)


def extract_forcing_modulus(sim: AnySimulation) -> ForcingModulus:
    choice: dict[Any, dict[str, str]] = {}
    for t in sim.source.types:
        choice[t] = {}
        for x in sim.source.data[t]:
            ys = sim.forcers(t, x)
            if not ys:
                raise InvalidSimulation(
                    "forcing is not total; validate the simulation first", witness=(t, x)
                )
            choice[t][x] = ys[0]
    return ForcingModulus(choice)


def extract_tracking_modulus(sim: AnySimulation) -> TrackingModulus:
    choice: dict[tuple, dict[PartialFunction, PartialFunction]] = {}
    for f in sim.source.all_functions():
        fp = first_tracker(f, sim)
        if fp is None:
            raise InvalidSimulation("untracked function; validate the simulation first", witness=f)
        choice.setdefault((f.source, f.target), {})[f] = fp
    return TrackingModulus(choice)


def realize_simulation(
    type_map: Mapping, phi: ForcingModulus, mu: TrackingModulus, source: Model, target: Model
) -> Simulation:
    """Simulation forced exactly by ``phi``; ``mu`` must make every rectangle commute."""
    for t in source.types:
        for x in source.data[t]:
            y = phi.choice.get(t, {}).get(x)
            if y is None or y not in target.data.get(type_map[t], ()):
                raise MalformedInput("forcing modulus is not a total function into the target", witness=(t, x))
    for f in source.all_functions():
        fp = mu.choice.get((f.source, f.target), {}).get(f)
        if fp is None or not target.contains(fp) or (fp.source, fp.target) != (type_map[f.source], type_map[f.target]):
            raise TypeMismatch("tracking modulus does not land in the target hom-class", witness=f)
        for x, fx in f.pairs:
            y = phi(f.source, x)
            if not fp.defined_at(y) or fp(y) != phi(f.target, fx):
                raise RectangleViolation(
                    f"rectangle fails for {f} at {x}", witness={"function": f, "element": x}
                )
    forcing = {t: [(phi(t, x), x) for x in source.data[t]] for t in source.types}
    return Simulation.build(source, target, type_map, forcing)
