"""Seeded generators of small instances for the property and acceptance suites.

Every generator takes a ``random.Random`` so results are reproducible from a
single seed. Sizes stay at desk scale: at most three type names and three
elements per data type unless a caller asks otherwise.
"""

from __future__ import annotations

import random
from itertools import product
from typing import Any

from compmod.canonical import (
    FiniteCategory,
    Presheaf,
    missing_mono_pullbacks,
    preserves_pullbacks,
    validate_presheaf,
)
from compmod.model import Model, PartialFunction, completion_close
from compmod.simulation import (
    PresheafSimulation,
    Simulation,
    _needs,
    validate_simulation,
)

LETTERS = "abcdefgh"


def random_partial(rng: random.Random, s, t, src, tgt, total: bool = False) -> PartialFunction:
    graph = {}
    for x in src:
        if tgt and (total or rng.random() < 0.7):
            graph[x] = rng.choice(tgt)
    return PartialFunction.from_graph(s, t, graph)


def random_model(
    rng: random.Random,
    max_types: int = 3,
    max_data: int = 3,
    generators: int = 3,
    max_functions: int = 12,
    total: bool = False,
    prefix: str = "t",
    min_data: int = 1,
) -> Model:
    """Closure of a few random partial functions; retried until small enough."""
    for _ in range(200):
        n = rng.randint(1, max_types)
        types = [f"{prefix}{i}" for i in range(n)]
        data = {
            t: [f"{LETTERS[i]}{j}" for j in range(rng.randint(min_data, max_data))]
            for i, t in enumerate(types)
        }
        homs: dict[tuple, list] = {}
        for _ in range(rng.randint(0, generators)):
            s, t = rng.choice(types), rng.choice(types)
            homs.setdefault((s, t), []).append(random_partial(rng, s, t, data[s], data[t], total))
        m = completion_close(Model.build(types, data, homs))
        if m.size()["functions"] <= max_functions:
            return m
    raise RuntimeError("could not generate a model within the function budget")


def random_forcing(rng: random.Random, carrier, data, density: float = 0.4) -> set:
    rel = {(y, x) for y in carrier for x in data if rng.random() < density}
    for x in data:
        if not any(x2 == x for _, x2 in rel):
            rel.add((rng.choice(carrier), x))
    return rel


def random_presheaf(
    rng: random.Random, C: Model, max_points: int = 2, tries: int = 50, diagonal_bias: float = 0.3
) -> PresheafSimulation:
    """A valid presheaf-simulation over ``C`` with non-empty point sets."""
    for _ in range(tries):
        if rng.random() < diagonal_bias:
            sets = {t: list(C.data[t]) or ["p0"] for t in C.types}
            forcing = {t: {(x, x) for x in C.data[t]} for t in C.types}
        else:
            sets = {t: [f"p{j}" for j in range(rng.randint(1, max_points))] for t in C.types}
            forcing = {t: random_forcing(rng, sets[t], C.data[t]) for t in C.types}
        sim = PresheafSimulation.build(C, sets, forcing)
        if validate_simulation(sim).ok:
            return sim
    sets = {t: ["p0"] for t in C.types}
    forcing = {t: {("p0", x) for x in C.data[t]} for t in C.types}
    return PresheafSimulation.build(C, sets, forcing)


def random_simulation(
    rng: random.Random, C: Model, prefix: str, max_types: int = 3, max_data: int = 3, max_functions: int = 16
) -> Simulation:
    """A simulation out of ``C`` into a fresh model built to contain trackers."""
    for _ in range(200):
        n = rng.randint(1, max_types)
        types = [f"{prefix}{i}" for i in range(n)]
        type_map = {t: rng.choice(types) for t in C.types}
        data = {u: [f"{prefix}{i}_{j}" for j in range(rng.randint(1, max_data))] for i, u in enumerate(types)}
        forcing = {t: random_forcing(rng, data[type_map[t]], C.data[t], 0.3) for t in C.types}
        sets = {t: data[type_map[t]] for t in C.types}
        probe = PresheafSimulation.build(C, sets, forcing)
        homs: dict[tuple, list] = {}
        ok = True
        for f in C.all_functions():
            need = _needs(f, probe)
            if need is None:
                ok = False
                break
            graph = {y: rng.choice(vals) for y, vals in need.items()}
            s, t = type_map[f.source], type_map[f.target]
            homs.setdefault((s, t), []).append(PartialFunction.from_graph(s, t, graph))
        if not ok:
            continue
        D = completion_close(Model.build(types, data, homs))
        if D.size()["functions"] > max_functions:
            continue
        sim = Simulation.build(C, D, type_map, forcing)
        if validate_simulation(sim).ok:
            return sim
    raise RuntimeError("could not generate a simulation")


def random_chain(rng: random.Random, length: int = 3, **kw) -> list[Simulation]:
    """Composable simulations ``M0 -> M1 -> ... -> M_length``."""
    C = random_model(rng, max_types=2, max_data=2, generators=2, max_functions=8)
    out = []
    for k in range(length):
        sim = random_simulation(rng, C, prefix="mnopq"[k], **kw)
        out.append(sim)
        C = sim.target
    return out


def small_categories() -> list[tuple[str, FiniteCategory]]:
    """Categories with at most three objects having every pullback of a mono."""
    cats = [
        ("point", FiniteCategory.poset(["0"], [])),
        ("discrete2", FiniteCategory.poset(["0", "1"], [])),
        ("arrow", FiniteCategory.poset(["0", "1"], [("0", "1")])),
        ("chain3", FiniteCategory.poset(["0", "1", "2"], [("0", "1"), ("1", "2")])),
        ("span", FiniteCategory.poset(["0", "1", "2"], [("0", "1"), ("0", "2")])),
        ("arrow+point", FiniteCategory.poset(["0", "1", "2"], [("0", "1")])),
    ]
    for n in (2, 3):
        elems = [f"g{k}" for k in range(n)]
        mult = {(f"g{a}", f"g{b}"): f"g{(a + b) % n}" for a, b in product(range(n), repeat=2)}
        cats.append((f"Z{n}", FiniteCategory.monoid("*", elems, mult, "g0")))
    return [(name, c) for name, c in cats if not missing_mono_pullbacks(c)]


def _random_presheaf_on(rng: random.Random, name: str, cat: FiniteCategory, max_set: int) -> Presheaf | None:
    if name.startswith("Z"):
        n = len(cat.arrows)
        size = rng.randint(1, max_set)
        pts = [f"x{j}" for j in range(size)]
        # permutation of order dividing n: product of n-cycles and fixed points
        perm = {x: x for x in pts}
        free = pts[:]
        rng.shuffle(free)
        while len(free) >= n and rng.random() < 0.7:
            cyc, free = free[:n], free[n:]
            for k, x in enumerate(cyc):
                perm[x] = cyc[(k + 1) % n]
        arrows = {}
        for k in range(n):
            g = {}
            for x in pts:
                y = x
                for _ in range(k):
                    y = perm[y]
                g[x] = y
            arrows[f"g{k}"] = g
        return Presheaf.build(cat, {"*": pts}, arrows)
    sets = {c: [f"{c}x{j}" for j in range(rng.randint(1, max_set))] for c in cat.objects}
    order = sorted(cat.objects)
    maps: dict[tuple, dict] = {}
    arrows = {}
    for a in sorted(cat.arrows, key=lambda a: (order.index(a.tgt) - order.index(a.src))):
        if a.src == a.tgt:
            continue
        mids = [b for b in cat.objects if b not in (a.src, a.tgt)
                and cat.hom(a.src, b) and cat.hom(b, a.tgt)]
        if mids:
            b = mids[0]
            first, second = maps[(a.src, b)], maps[(b, a.tgt)]
            g = {x: second[first[x]] for x in sets[a.src]}
        else:
            if len(sets[a.tgt]) < len(sets[a.src]):
                return None
            g = dict(zip(sets[a.src], rng.sample(sets[a.tgt], len(sets[a.src]))))
        maps[(a.src, a.tgt)] = g
        arrows[a.name] = g
    return Presheaf.build(cat, sets, arrows)


def random_pullback_preserving(rng: random.Random, max_set: int = 3, tries: int = 100) -> tuple[str, FiniteCategory, Presheaf]:
    cats = small_categories()
    for _ in range(tries):
        name, cat = rng.choice(cats)
        S = _random_presheaf_on(rng, name, cat, max_set)
        if S is None:
            continue
        if validate_presheaf(cat, S).ok and preserves_pullbacks(cat, S):
            return name, cat, S
    raise RuntimeError("could not generate a pullback-preserving presheaf")


def constant_functions_model(rng: random.Random, max_types: int = 3, max_data: int = 3) -> Model:
    """A model whose hom-classes include every constant total function."""
    n = rng.randint(1, max_types)
    types = [f"t{i}" for i in range(n)]
    data = {t: [f"{LETTERS[i]}{j}" for j in range(rng.randint(1, max_data))] for i, t in enumerate(types)}
    homs: dict[tuple, list[Any]] = {}
    for s, t in product(types, types):
        for y in data[t]:
            homs.setdefault((s, t), []).append({x: y for x in data[s]})
    if rng.random() < 0.5:
        s, t = rng.choice(types), rng.choice(types)
        homs[(s, t)].append(random_partial(rng, s, t, data[s], data[t]))
    return completion_close(Model.build(types, data, homs))
