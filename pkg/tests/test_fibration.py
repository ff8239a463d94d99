import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import brute
from compmod.canonical import FiniteCategory, Functor, Presheaf, simulation_from_functor
from compmod.errors import TypeMismatch
from compmod.fibration import (
    FibrationContext,
    Splitting,
    canonical_pr1_splitting,
    is_cartesian,
    is_fibration_simulation,
    is_opcartesian,
    is_opfibration_simulation,
    pr1_context,
    validate_splitting,
)
from compmod.generate import random_model, random_presheaf, random_simulation
from compmod.grothendieck import build_grothendieck, diagonal_presheaf
from compmod.model import Model, Pair, PartialFunction, identity_partial
from compmod.simulation import PresheafSimulation, Simulation, identity_simulation


def ident(m, t):
    return identity_partial(m.data[t], t)


@pytest.fixture
def running():
    C = Model.build(
        ["s", "t"],
        {"s": ["a0", "a1"], "t": ["b0"]},
        {("s", "s"): [{"a0": "a0", "a1": "a1"}], ("t", "t"): [{"b0": "b0"}], ("s", "t"): [{"a0": "b0"}]},
    )
    gamma = PresheafSimulation.build(
        C, {"s": ["u", "v"], "t": ["w"]}, {"s": [("u", "a0"), ("v", "a1")], "t": [("w", "b0")]}
    )
    return build_grothendieck(C, gamma)


@pytest.fixture
def K():
    # a constant function next to the identity; forcing will be diagonal
    return Model.build(["t"], {"t": ["a0", "a1"]}, {("t", "t"): [{"a0": "a0", "a1": "a1"}, {"a0": "a1", "a1": "a1"}]})


def test_identity_simulation_on_total_model(K):
    ctx = FibrationContext.of(identity_simulation(K))
    i = ident(K, "t")
    assert is_cartesian(ctx, i, "t", i)
    assert is_opcartesian(ctx, i, "t", i)
    assert is_fibration_simulation(ctx).ok
    assert is_opfibration_simulation(ctx).ok


def test_proper_extension_pair_breaks_identity_cartesianness():
    # g = {a0 -> a0} and g' = identity: g' tracks g, h = g' agrees with g' at a1 but g is undefined there
    m = Model.build(["t"], {"t": ["a0", "a1"]}, {("t", "t"): [{"a0": "a0", "a1": "a1"}, {"a0": "a0"}]})
    ctx = FibrationContext.of(identity_simulation(m))
    i = ident(m, "t")
    assert not is_cartesian(ctx, i, "t", i)
    assert not is_opcartesian(ctx, i, "t", i)


def test_untracked_lift_is_not_cartesian(K):
    ctx = FibrationContext.of(identity_simulation(K))
    const = next(f for f in K.hom("t", "t") if f.graph == {"a0": "a1", "a1": "a1"})
    i = ident(K, "t")
    r = is_cartesian(ctx, const, "t", i)
    assert not r and r.reason == "f' does not track f"


def test_typing_is_checked(K):
    ctx = FibrationContext.of(identity_simulation(K))
    stranger = PartialFunction.from_graph("t", "t", {"a0": "a0"})
    with pytest.raises(TypeMismatch):
        is_cartesian(ctx, ident(K, "t"), "t", stranger)


def test_missing_functions_leave_a_base_function_unliftable(K):
    E = Model.build(["t"], {"t": ["a0", "a1"]}, {("t", "t"): [{"a0": "a0", "a1": "a1"}]})
    varpi = Simulation.build(E, K, {"t": "t"}, {"t": [("a0", "a0"), ("a1", "a1")]})
    r = is_fibration_simulation(FibrationContext.of(varpi))
    assert not r.ok
    # nothing in E is tracked by the constant function
    assert {"a0": "a1", "a1": "a1"} in [w["function"].graph for w in r.witnesses]
    assert {(v["type"], v["function"]): v["lifts"] for v in r.verdicts} == brute.fibration_lifts(varpi, "every")


def test_running_instance_pr1_is_an_opfibration(running):
    ctx = pr1_context(running)
    f = running.base.hom("s", "t")[0]
    restricted = running.underlying.hom(Pair("s", "u"), Pair("t", "w"))[0]
    assert is_opcartesian(ctx, f, Pair("s", "u"), restricted)
    assert is_opfibration_simulation(ctx).ok
    assert validate_splitting(ctx, canonical_pr1_splitting(running)).ok


def test_pr1_fails_when_fillers_are_required_for_every_h(K):
    # const has no filler tracked by it at (t, a0) although no forced pair meets the premise
    G = build_grothendieck(K, diagonal_presheaf(K))
    ctx = pr1_context(G)
    i = ident(K, "t")
    at_a0 = Pair("t", "a0")
    assert not is_opcartesian(ctx, i, at_a0, ident(G.underlying, at_a0))
    assert is_opcartesian(ctx, i, at_a0, ident(G.underlying, at_a0), scope="agreeing")
    assert not is_opfibration_simulation(ctx).ok
    assert is_opfibration_simulation(ctx, scope="agreeing").ok


def test_witnesses_replay(running):
    ctx = pr1_context(running)
    sim = ctx.varpi
    f = running.base.hom("s", "t")[0]
    t1 = Pair("s", "u")
    lift = running.underlying.hom(t1, Pair("t", "w"))[0]
    r = is_opcartesian(ctx, f, t1, lift)
    assert r.ok and r.witnesses
    for (t2, g, g1, h), l in r.witnesses.items():
        assert brute.tracks(sim, h, l)
        for y, x in sim.forcing[t1]:
            if y in f.graph and f(y) in h.graph and y in g1.graph and h(f(y)) == g1(y):
                assert x in lift.graph and lift(x) in l.graph and x in g.graph and g(x) == l(lift(x))


def test_readings_are_compared(running):
    r = is_opfibration_simulation(pr1_context(running), compare_readings=True)
    assert r.stats["reading_divergences"] == 0
    with pytest.raises(ValueError):
        is_opcartesian(pr1_context(running), running.base.hom("s", "t")[0], Pair("s", "u"),
                       running.underlying.hom(Pair("s", "u"), Pair("t", "w"))[0], reading="sideways")


def _functor_instance():
    B = FiniteCategory.poset(["0", "1"], [("0", "1")])
    objs = ["00", "01", "10", "11"]
    E = FiniteCategory.poset(objs, [("00", "01"), ("00", "10"), ("01", "11"), ("10", "11")])
    on_obj = {o: o[0] for o in objs}
    F = Functor(E, B, on_obj, {a.name: B.hom(on_obj[a.src], on_obj[a.tgt])[0] for a in E.arrows})
    S2 = Presheaf.build(B, {"0": ["x", "w"], "1": ["y"]}, {"0<1": {"x": "y", "w": "y"}})
    S = Presheaf.build(E, {e: S2.on_objects[e[0]] for e in objs},
                       {a.name: dict(S2(F.on_arrows[a.name]).pairs) for a in E.arrows})
    return simulation_from_functor(E, S, B, S2, F)


def test_functor_induced_fibration():
    assert is_fibration_simulation(FibrationContext.of(_functor_instance())).ok


def test_splitting_laws_are_checked(running):
    ctx = pr1_context(running)
    sp = canonical_pr1_splitting(running)
    su = Pair("s", "u")
    i = identity_partial(running.base.data["s"], "s")
    broken = dict(sp.table)
    broken[(i, su)] = (PartialFunction(su, su, ()), su)
    r = validate_splitting(ctx, Splitting(sp.variant, broken))
    assert "identity-law" in {w["kind"] for w in r.witnesses}
    missing = dict(sp.table)
    del missing[(i, su)]
    r = validate_splitting(ctx, Splitting(sp.variant, missing))
    assert [w["kind"] for w in r.witnesses] == ["missing-entry"]


def test_terminal_splitting_is_one_identity_entry():
    from compmod.grothendieck import terminal_model

    one, id1 = terminal_model()
    G = build_grothendieck(one, id1)
    sp = canonical_pr1_splitting(G)
    assert len(sp.table) == 1
    (lift, other), = sp.table.values()
    assert lift.source == other and lift.graph == {"∅": "∅"}


def _agree(ctx):
    sim = ctx.varpi
    for scope in ("every", "agreeing"):
        mine = {(v["type"], v["function"]): v["lifts"] for v in is_fibration_simulation(ctx, scope=scope).verdicts}
        assert mine == brute.fibration_lifts(sim, scope)
        for reading in ("diagram", "literal"):
            r = is_opfibration_simulation(ctx, reading=reading, scope=scope)
            mine = {(v["type"], v["function"]): v["lifts"] for v in r.verdicts}
            assert mine == brute.opfibration_lifts(sim, reading, scope)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_oracle_agreement_on_pr1(seed):
    rng = random.Random(seed)
    C = random_model(rng, total=rng.random() < 0.3)
    _agree(pr1_context(build_grothendieck(C, random_presheaf(rng, C))))


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_oracle_agreement_on_random_simulations(seed):
    rng = random.Random(seed)
    C = random_model(rng, max_types=2, max_data=2)
    _agree(FibrationContext.of(random_simulation(rng, C, "m", max_data=2)))


def test_oracle_agreement_on_functor_instance():
    _agree(FibrationContext.of(_functor_instance()))
