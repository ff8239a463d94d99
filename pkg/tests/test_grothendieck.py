import pytest

from compmod.canonical import FiniteCategory, Presheaf
from compmod.errors import BoundExceeded, InvalidSimulation, SquareDoesNotCommute
from compmod.generate import random_model, random_presheaf, random_simulation
from compmod.grothendieck import (
    TERMINAL,
    build_grothendieck,
    build_pr1,
    check_pullback_universal,
    check_strictness,
    groth_canonical_compare,
    lift_simulation,
    mediating_simulation,
    terminal_model,
    to_terminal,
)
from compmod.model import Model, Pair, validate_model
from compmod.simulation import (
    PresheafSimulation,
    Simulation,
    compose_simulations,
    identity_simulation,
    simulations_equal,
    validate_simulation,
)


@pytest.fixture
def C():
    return Model.build(
        ["s", "t"],
        {"s": ["a0", "a1"], "t": ["b0"]},
        {("s", "s"): [{"a0": "a0", "a1": "a1"}], ("t", "t"): [{"b0": "b0"}], ("s", "t"): [{"a0": "b0"}]},
    )


@pytest.fixture
def gamma(C):
    return PresheafSimulation.build(
        C, {"s": ["u", "v"], "t": ["w"]}, {"s": [("u", "a0"), ("v", "a1")], "t": [("w", "b0")]}
    )


@pytest.fixture
def into_D(C):
    D = Model.build(["d"], {"d": ["c0", "c1"]}, {("d", "d"): [{"c0": "c0", "c1": "c1"}, {"c0": "c1"}, {}]})
    return Simulation.build(C, D, {"s": "d", "t": "d"}, {"s": [("c0", "a0"), ("c1", "a1")], "t": [("c1", "b0")]})


@pytest.fixture
def delta(into_D):
    return PresheafSimulation.build(into_D.target, {"d": ["p", "q"]}, {"d": [("p", "c0"), ("q", "c1")]})


def test_running_instance_by_hand(C, gamma):
    G = build_grothendieck(C, gamma)
    su, sv, tw = Pair("s", "u"), Pair("s", "v"), Pair("t", "w")
    assert G.underlying.types == (su, sv, tw)
    assert (G.fiber("s", "u"), G.fiber("s", "v"), G.fiber("t", "w")) == (("a0",), ("a1",), ("b0",))
    assert [f.graph for f in G.underlying.hom(su, tw)] == [{"a0": "b0"}]
    assert [f.graph for f in G.underlying.hom(sv, tw)] == [{}]
    assert validate_model(G.underlying).ok


def test_pr1_by_hand(C, gamma):
    G = build_grothendieck(C, gamma)
    pr1 = build_pr1(G)
    assert pr1.forcing[Pair("s", "u")] == {("a0", "a0")}
    assert pr1.type_map[Pair("t", "w")] == "t"
    assert validate_simulation(pr1).ok


def test_build_needs_a_valid_presheaf(C):
    bad = PresheafSimulation.build(C, {"s": ["u"], "t": ["w"]}, {"s": [("u", "a0")], "t": [("w", "b0")]})
    with pytest.raises(InvalidSimulation):
        build_grothendieck(C, bad)


def test_terminal_model():
    one, id1 = terminal_model()
    assert validate_model(one).ok and validate_simulation(id1).ok
    G = build_grothendieck(one, id1)
    assert G.underlying.types == (Pair(TERMINAL, TERMINAL),)
    assert G.underlying.data[Pair(TERMINAL, TERMINAL)] == (TERMINAL,)
    assert len(list(G.underlying.all_functions())) == 1


def test_every_model_maps_to_the_terminal_model(rng):
    for _ in range(20):
        assert validate_simulation(to_terminal(random_model(rng))).ok


def test_lift_square_commutes(into_D, delta):
    C = into_D.source
    lift = lift_simulation(into_D, delta)
    assert validate_simulation(lift).ok
    G1 = build_grothendieck(C, compose_simulations(delta, into_D))
    G2 = build_grothendieck(into_D.target, delta)
    assert simulations_equal(
        compose_simulations(build_pr1(G2), lift), compose_simulations(into_D, build_pr1(G1))
    )


def test_lift_of_identity_is_identity(gamma, C):
    lift = lift_simulation(identity_simulation(C), gamma)
    assert simulations_equal(lift, identity_simulation(build_grothendieck(C, gamma).underlying))


def test_mediator_of_the_pullback_itself_is_identity(into_D, delta):
    G1 = build_grothendieck(into_D.source, compose_simulations(delta, into_D))
    zeta = mediating_simulation(G1.underlying, build_pr1(G1), lift_simulation(into_D, delta), into_D, delta)
    assert simulations_equal(zeta, identity_simulation(G1.underlying))


def test_broken_beta_is_rejected(into_D, delta):
    G1 = build_grothendieck(into_D.source, compose_simulations(delta, into_D))
    beta = lift_simulation(into_D, delta)
    t = Pair("s", "p")
    # send (s, p) over q and force a0 by c1 instead of c0
    broken = Simulation(
        beta.source, beta.target, {**beta.type_map, t: Pair("d", "q")}, {**beta.forcing, t: frozenset({("c1", "a0")})}
    )
    with pytest.raises(SquareDoesNotCommute):
        mediating_simulation(G1.underlying, build_pr1(G1), broken, into_D, delta)


def test_pullback_count_on_running_instance(into_D, delta):
    G1 = build_grothendieck(into_D.source, compose_simulations(delta, into_D))
    r = check_pullback_universal(
        into_D.source, into_D.target, into_D, delta, G1.underlying, build_pr1(G1), lift_simulation(into_D, delta)
    )
    assert r.ok and r.stats["mediators"] == 1


def test_pullback_count_for_terminal_cone(into_D, delta):
    # E is a one-point model sent to (s, p) through a0
    G1 = build_grothendieck(into_D.source, compose_simulations(delta, into_D))
    one, _ = terminal_model()
    alpha = Simulation.build(one, into_D.source, {TERMINAL: "s"}, {TERMINAL: [("a0", TERMINAL)]})
    beta = Simulation.build(one, build_grothendieck(into_D.target, delta).underlying,
                            {TERMINAL: Pair("d", "p")}, {TERMINAL: [("c0", TERMINAL)]})
    assert validate_simulation(alpha).ok and validate_simulation(beta).ok
    r = check_pullback_universal(into_D.source, into_D.target, into_D, delta, one, alpha, beta)
    assert r.ok and r.stats["mediators"] == 1
    assert mediating_simulation(one, alpha, beta, into_D, delta).type_map == {TERMINAL: Pair("s", "p")}
    assert Pair("s", "p") in G1.underlying.types


def test_pullback_count_zero_when_square_fails(into_D, delta):
    one, _ = terminal_model()
    alpha = Simulation.build(one, into_D.source, {TERMINAL: "s"}, {TERMINAL: [("a0", TERMINAL)]})
    beta = Simulation.build(one, build_grothendieck(into_D.target, delta).underlying,
                            {TERMINAL: Pair("d", "q")}, {TERMINAL: [("c1", TERMINAL)]})
    r = check_pullback_universal(into_D.source, into_D.target, into_D, delta, one, alpha, beta)
    assert not r.ok and r.stats["mediators"] == 0


def test_pullback_refuses_large_instances(rng):
    C = Model.build(["s"], {"s": ["a", "b", "c"]}, {("s", "s"): [{"a": "a", "b": "b", "c": "c"}]})
    i = identity_simulation(C)
    d = PresheafSimulation.build(C, {"s": ["p"]}, {"s": [("p", x) for x in "abc"]})
    with pytest.raises(BoundExceeded):
        check_pullback_universal(C, C, i, d, C, i, i)


def test_strictness_on_generated_chain(rng):
    C = random_model(rng, max_types=2, max_data=2, generators=2, max_functions=8)
    g = random_simulation(rng, C, "m")
    d = random_simulation(rng, g.target, "n")
    eps = random_presheaf(rng, d.target)
    r = check_strictness(C, g.target, d.target, g, d, eps)
    assert r.ok, r.witnesses


def test_strictness_detects_tampered_composite(rng):
    C = random_model(rng, max_types=2, max_data=2, generators=2, max_functions=8)
    g = random_simulation(rng, C, "m")
    d = random_simulation(rng, g.target, "n")
    eps = random_presheaf(rng, d.target)
    ed = compose_simulations(eps, d)
    t = C.types[0]
    u = g.type_map[t]
    # add a point nobody forces
    tampered = PresheafSimulation(ed.source, {**ed.sets, u: ed.sets[u] + ("zz",)}, ed.forcing)
    r = check_strictness(C, g.target, d.target, g, d, eps, eps_delta=tampered)
    assert not r.ok


def test_canonical_equality_on_injective_arrow():
    cat = FiniteCategory.poset(["0", "1"], [("0", "1")])
    S = Presheaf.build(cat, {"0": ["p"], "1": ["q"]}, {"0<1": {"p": "q"}})
    assert groth_canonical_compare(cat, S).ok


def test_canonical_equality_fails_for_non_surjective_images():
    # the left side keeps empty restrictions out of (1, r); the right side has no such arrows
    cat = FiniteCategory.poset(["0", "1"], [("0", "1")])
    S = Presheaf.build(cat, {"0": ["p"], "1": ["q", "r"]}, {"0<1": {"p": "q"}})
    r = groth_canonical_compare(cat, S)
    assert not r.ok
    assert {w["kind"] for w in r.witnesses} == {"function-only-left"}
    assert all(w["function"].source == Pair("1", "r") and not w["function"].pairs for w in r.witnesses)
