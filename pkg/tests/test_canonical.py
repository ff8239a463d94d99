import pytest

from compmod.canonical import (
    FiniteCategory,
    Functor,
    PartialArrow,
    Presheaf,
    build_cm_partial,
    build_cm_total,
    category_of_elements,
    enumerate_partial_arrows,
    is_cat_fibration,
    is_mono,
    missing_mono_pullbacks,
    preserves_pullbacks,
    pullbacks,
    simulation_from_functor,
    validate_category,
    validate_functor,
    validate_presheaf,
)
from compmod.errors import FunctorialityFailure, PullbackPreservationFailure
from compmod.generate import random_pullback_preserving, small_categories
from compmod.model import Pair, validate_model
from compmod.simulation import validate_simulation


@pytest.fixture
def arrow():
    return FiniteCategory.poset(["0", "1"], [("0", "1")])


@pytest.fixture
def S(arrow):
    return Presheaf.build(arrow, {"0": ["p"], "1": ["q", "r"]}, {"0<1": {"p": "q"}})


def test_poset_category(arrow):
    assert validate_category(arrow).ok
    assert arrow.compose("0<1", "1_0") == "0<1"
    assert [a.name for a in arrow.arrows] == ["0<1", "1_0", "1_1"]


def test_broken_composition_is_reported():
    cat = FiniteCategory.build(["a"], [("e", "a", "a"), ("g", "a", "a")],
                               {("e", "e"): "e", ("e", "g"): "g", ("g", "e"): "g", ("g", "g"): "g"},
                               {"a": "g"})
    assert not validate_category(cat).ok


def test_group_elements_are_mono():
    mult = {(f"g{a}", f"g{b}"): f"g{(a + b) % 2}" for a in range(2) for b in range(2)}
    z2 = FiniteCategory.monoid("*", ["g0", "g1"], mult, "g0")
    assert validate_category(z2).ok
    assert all(is_mono(z2, a.name) for a in z2.arrows)


def test_non_mono_in_a_monoid():
    # {1, z} with z.z = z: z is not mono
    cat = FiniteCategory.monoid("*", ["1", "z"], {("1", "1"): "1", ("1", "z"): "z", ("z", "1"): "z", ("z", "z"): "z"}, "1")
    assert validate_category(cat).ok
    assert not is_mono(cat, "z")


def test_presheaf_validation(arrow, S):
    assert validate_presheaf(arrow, S).ok
    bad = Presheaf.build(arrow, {"0": ["p"], "1": ["q"]}, {"0<1": {}})
    assert not validate_presheaf(arrow, bad).ok


def test_pullbacks_in_the_arrow_category(arrow):
    assert pullbacks(arrow, "0<1", "0<1") == [("0", "1_0", "1_0")]


def test_pullback_preservation(arrow, S):
    assert preserves_pullbacks(arrow, S)
    collapse = Presheaf.build(arrow, {"0": ["p", "p2"], "1": ["q"]}, {"0<1": {"p": "q", "p2": "q"}})
    assert not preserves_pullbacks(arrow, collapse)
    with pytest.raises(PullbackPreservationFailure):
        build_cm_partial(arrow, collapse)


def test_missing_mono_pullbacks_are_refused():
    cospan = FiniteCategory.poset(["0", "1", "2"], [("0", "2"), ("1", "2")])
    assert missing_mono_pullbacks(cospan)
    S = Presheaf.build(cospan, {"0": ["a"], "1": ["b"], "2": ["c", "d"]}, {"0<2": {"a": "c"}, "1<2": {"b": "d"}})
    with pytest.raises(PullbackPreservationFailure):
        build_cm_partial(cospan, S)


def test_enumerate_partial_arrows(arrow):
    assert enumerate_partial_arrows(arrow, "1", "0") == [PartialArrow("0<1", "1_0")]
    assert sorted(enumerate_partial_arrows(arrow, "1", "1")) == [PartialArrow("0<1", "0<1"), PartialArrow("1_1", "1_1")]


def test_cm_total_and_partial(arrow, S):
    total = build_cm_total(arrow, S)
    assert validate_model(total).ok
    assert total.hom("1", "0") == ()
    partial = build_cm_partial(arrow, S)
    assert validate_model(partial).ok
    assert [f.graph for f in partial.hom("1", "0")] == [{"q": "p"}]
    assert sorted(len(f.graph) for f in partial.hom("1", "1")) == [1, 2]


def test_cm_partial_is_a_model_on_generated_presheaves(rng):
    for _ in range(25):
        _, cat, S = random_pullback_preserving(rng)
        assert validate_model(build_cm_partial(cat, S)).ok
        assert validate_model(build_cm_total(cat, S)).ok


def test_small_categories_are_categories():
    for _, cat in small_categories():
        assert validate_category(cat).ok


def test_category_of_elements(arrow, S):
    el, pr2 = category_of_elements(arrow, S)
    assert validate_category(el).ok
    assert el.objects == (Pair("0", "p"), Pair("1", "q"), Pair("1", "r"))
    assert validate_presheaf(el, pr2).ok
    assert all(pr2.on_objects[o] == (o.point,) for o in el.objects)


def _projection():
    B = FiniteCategory.poset(["0", "1"], [("0", "1")])
    objs = ["00", "01", "10", "11"]
    E = FiniteCategory.poset(objs, [("00", "01"), ("00", "10"), ("01", "11"), ("10", "11")])
    on_obj = {o: o[0] for o in objs}
    on_arr = {a.name: B.hom(on_obj[a.src], on_obj[a.tgt])[0] for a in E.arrows}
    return E, B, Functor(E, B, on_obj, on_arr)


def test_projection_is_a_category_fibration():
    E, B, F = _projection()
    assert validate_functor(F).ok
    assert is_cat_fibration(F)


def test_inclusion_of_a_discrete_category_is_not_a_fibration():
    B = FiniteCategory.poset(["0", "1"], [("0", "1")])
    D = FiniteCategory.poset(["0", "1"], [])
    F = Functor(D, B, {"0": "0", "1": "1"}, {"1_0": "1_0", "1_1": "1_1"})
    assert validate_functor(F).ok
    assert not is_cat_fibration(F)


def test_simulation_from_functor():
    E, B, F = _projection()
    S2 = Presheaf.build(B, {"0": ["x"], "1": ["y", "z"]}, {"0<1": {"x": "y"}})
    S = Presheaf.build(E, {e: S2.on_objects[e[0]] for e in E.objects},
                       {a.name: dict(S2(F.on_arrows[a.name]).pairs) for a in E.arrows})
    sim = simulation_from_functor(E, S, B, S2, F)
    assert validate_simulation(sim).ok
    other = Presheaf.build(B, {"0": ["x"], "1": ["y", "z"]}, {"0<1": {"x": "z"}})
    with pytest.raises(FunctorialityFailure):
        simulation_from_functor(E, S, B, other, F)
