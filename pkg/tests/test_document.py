import json
from pathlib import Path

import pytest

from compmod.document import line_col, parse_document, serialize, value_positions
from compmod.errors import DocumentError
from compmod.simulation import simulations_equal

EXAMPLES = sorted((Path(__file__).parent.parent / "docs" / "examples").glob("*.json"))

SMALL = {
    "version": 1,
    "models": {"m": {"types": ["s"], "data": {"s": ["a", "b"]}, "homs": {"s->s": [{"graph": {"a": "a", "b": "b"}}]}}},
    "simulations": {"p": {"source": "m", "sets": {"s": ["u"]}, "forcing": {"s": [["u", "a"]]}}},
    "tasks": [{"task": "validate-model", "model": "m"}],
}


def text(d):
    return json.dumps(d, indent=2)


def test_examples_are_shipped():
    assert {p.name for p in EXAMPLES} >= {"running.json", "terminal.json", "counterexamples.json"}


@pytest.mark.parametrize("path", EXAMPLES, ids=lambda p: p.stem)
def test_round_trip(path):
    doc = parse_document(path.read_text())
    once = serialize(doc)
    again = parse_document(once)
    assert serialize(again) == once
    assert set(again.models) == set(doc.models)
    for name, m in doc.models.items():
        assert again.models[name] == m
    for name, s in doc.simulations.items():
        assert simulations_equal(again.simulations[name], s)
    assert [t.id for t in again.tasks] == [t.id for t in doc.tasks]


def test_terminal_document():
    doc = parse_document((Path(__file__).parent.parent / "docs" / "examples" / "terminal.json").read_text())
    assert doc.models["one"].types == ("∅",)
    assert [t.kind for t in doc.tasks][:2] == ["validate-model", "validate-simulation"]
    assert doc.tasks[0].id == "0:validate-model"


def test_syntax_error_has_line_and_column():
    with pytest.raises(DocumentError) as e:
        parse_document('{\n  "version": 1,\n  "models": {,}\n}')
    assert e.value.location["line"] == 3
    assert "line 3" in str(e.value)


def test_unknown_forcing_element_is_located():
    d = json.loads(json.dumps(SMALL))
    d["simulations"]["p"]["forcing"]["s"] = [["u", "zz"]]
    src = text(d)
    with pytest.raises(DocumentError) as e:
        parse_document(src)
    loc = e.value.location
    assert "zz" in str(e.value)
    assert loc["path"] == "$.simulations.p.forcing.s[0]"
    assert src[value_positions(src)[("simulations", "p", "forcing", "s", 0)]] == "["
    assert line_col(src, value_positions(src)[("simulations", "p", "forcing", "s", 0)]) == (loc["line"], loc["column"])


def test_unknown_reference():
    d = json.loads(json.dumps(SMALL))
    d["simulations"]["p"]["source"] = "nowhere"
    with pytest.raises(DocumentError, match="nowhere"):
        parse_document(text(d))


def test_cycles_are_rejected():
    d = {"version": 1, "models": {"a": {"grothendieck": {"model": "b", "presheaf": "p"}},
                                  "b": {"grothendieck": {"model": "a", "presheaf": "p"}}},
         "simulations": {"p": {"diagonal": "a"}}}
    with pytest.raises(DocumentError, match="cycl"):
        parse_document(text(d))


def test_version_must_be_one():
    d = dict(SMALL, version=2)
    with pytest.raises(DocumentError, match="version"):
        parse_document(text(d))


def test_unknown_task_and_duplicate_ids():
    d = dict(SMALL, tasks=[{"task": "frobnicate"}])
    with pytest.raises(DocumentError):
        parse_document(text(d))
    d = dict(SMALL, tasks=[{"task": "validate-model", "model": "m", "id": "x"}] * 2)
    with pytest.raises(DocumentError, match="duplicate"):
        parse_document(text(d))


def test_unclosed_model_still_parses():
    # closure is a task-level concern
    d = json.loads(json.dumps(SMALL))
    d["models"]["m"]["homs"]["s->s"] = [{"graph": {"a": "b"}}]
    doc = parse_document(text(d))
    assert len(doc.models["m"].hom("s", "s")) == 1


def test_value_positions():
    src = '{"a": [1, {"b": "x"}]}'
    pos = value_positions(src)
    assert src[pos[("a", 1, "b")]] == '"'
    assert line_col("ab\ncd", 3) == (2, 1)
