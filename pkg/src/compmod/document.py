"""The JSON document format: parsing, name resolution and canonical serialization.

A document has the sections ``models``, ``simulations``, ``categories``,
``presheaves``, ``functors`` and ``tasks``. Definitions may refer to each other
by name in any order; cycles are rejected. Every diagnostic carries a line and
column in the source text plus the JSON path of the offending value.

Type names are strings, or two-element arrays for pair type names such as the
ones of a Grothendieck model. Maps keyed by type names are written as objects
when every key is a string and as lists of ``[key, value]`` entries otherwise.
The full grammar is in ``docs/format.md``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from compmod.canonical import (
    FiniteCategory,
    Functor,
    Presheaf,
    build_cm_partial,
    build_cm_total,
    simulation_from_functor,
    validate_category,
    validate_functor,
    validate_presheaf,
)
from compmod.errors import CompModError, DocumentError
from compmod.grothendieck import (
    GrothendieckModel,
    build_grothendieck,
    build_pr1,
    diagonal_presheaf,
    lift_simulation,
    terminal_model,
    to_terminal,
)
from compmod.model import Model, Pair, PartialFunction, completion_close, sort_key, structure_errors
from compmod.simulation import (
    PresheafSimulation,
    Simulation,
    build_representable,
    compose_simulations,
    identity_simulation,
)

VERSION = 1
SECTIONS = ("models", "simulations", "categories", "presheaves", "functors")

# argument kinds: model, simulation, presheaf, type, int, reading, scope
TASKS: dict[str, tuple[dict[str, str], dict[str, str]]] = {
    "validate-model": ({"model": "model"}, {}),
    "validate-simulation": ({"simulation": "simulation"}, {}),
    "build-grothendieck": ({"model": "model", "presheaf": "simulation"}, {}),
    "check-pullback": (
        {"gamma": "simulation", "delta": "simulation"},
        {"E": "model", "alpha": "simulation", "beta": "simulation", "bound": "int"},
    ),
    "check-strictness": ({"gamma": "simulation", "delta": "simulation", "epsilon": "simulation"}, {}),
    "check-canonical-equality": ({"presheaf": "presheaf"}, {}),
    "check-fibration": ({"simulation": "simulation"}, {"bound": "int", "scope": "scope"}),
    "check-opfibration": (
        {"simulation": "simulation"},
        {"bound": "int", "reading": "reading", "scope": "scope", "compare_readings": "bool"},
    ),
    "check-splitting": ({"model": "model", "presheaf": "simulation"}, {"bound": "int", "reading": "reading"}),
    "build-representable": ({"model": "model", "base": "type"}, {}),
    "extract-moduli": ({"simulation": "simulation"}, {}),
}
CHOICES = {"reading": ("diagram", "literal"), "scope": ("every", "agreeing")}

Path = tuple


@dataclass
class Task:
    index: int
    id: str
    kind: str
    args: dict[str, Any]
    raw: dict


@dataclass
class Document:
    version: int
    models: dict[str, Model] = field(default_factory=dict)
    simulations: dict[str, Any] = field(default_factory=dict)
    categories: dict[str, FiniteCategory] = field(default_factory=dict)
    presheaves: dict[str, tuple[FiniteCategory, Presheaf]] = field(default_factory=dict)
    functors: dict[str, Functor] = field(default_factory=dict)
    tasks: list[Task] = field(default_factory=list)
    canonical: dict = field(default_factory=dict, repr=False)
    grothendieck: dict = field(default_factory=dict, repr=False)
    raw: dict = field(default_factory=dict, repr=False)


# ---------------------------------------------------------------- locations

_WS = re.compile(r"[ \t\n\r]*")


def value_positions(text: str) -> dict[Path, int]:
    """Offset of every value in already-valid JSON text, keyed by its path."""
    dec = json.JSONDecoder()
    out: dict[Path, int] = {}

    def skip(i: int) -> int:
        return _WS.match(text, i).end()

    def value(i: int, path: Path) -> int:
        i = skip(i)
        out[path] = i
        c = text[i]
        if c == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = dec.raw_decode(text, skip(i))
                i = skip(i) + 1
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if c == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        return dec.raw_decode(text, i)[1]

    value(0, ())
    return out


def line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    return line, offset - (text.rfind("\n", 0, offset) + 1) + 1


def fmt_path(path: Path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text: str, data: Any):
        self.text = text
        self.data = data
        self._positions: dict[Path, int] | None = None
        self.doc = Document(VERSION)
        self.state: dict[tuple, str] = {}

    def error(self, message: str, path: Path) -> DocumentError:
        if self._positions is None:
            self._positions = value_positions(self.text)
        p = path
        while p not in self._positions:
            p = p[:-1]
        line, col = line_col(self.text, self._positions[p])
        return DocumentError(
            f"line {line}, column {col} ({fmt_path(path)}): {message}",
            location={"line": line, "column": col, "path": fmt_path(path)},
        )

    # -- generic shapes

    def obj(self, v: Any, path: Path, what: str = "an object") -> dict:
        if not isinstance(v, dict):
            raise self.error(f"expected {what}", path)
        return v

    def lst(self, v: Any, path: Path, what: str = "a list") -> list:
        if not isinstance(v, list):
            raise self.error(f"expected {what}", path)
        return v

    def string(self, v: Any, path: Path, what: str = "a non-empty string") -> str:
        if not isinstance(v, str) or not v:
            raise self.error(f"expected {what}", path)
        return v

    def field(self, d: dict, key: str, path: Path) -> Any:
        if key not in d:
            raise self.error(f"missing field {key!r}", path)
        return d[key]

    def only(self, d: dict, allowed, path: Path) -> None:
        for k in d:
            if k not in allowed:
                raise self.error(f"unexpected field {k!r}", path + (k,))

    def type_name(self, v: Any, path: Path):
        if isinstance(v, str) and v:
            return v
        if isinstance(v, list) and len(v) == 2:
            return Pair(self.type_name(v[0], path + (0,)), self.type_name(v[1], path + (1,)))
        raise self.error("a type name is a non-empty string or a two-element array", path)

    def keyed(self, v: Any, path: Path, key: Callable, val: Callable) -> list[tuple]:
        """Entries of a map keyed by type names: an object or a list of pairs."""
        out = []
        if isinstance(v, dict):
            for k, x in v.items():
                out.append((key(k, path + (k,)), val(x, path + (k,))))
        elif isinstance(v, list):
            for i, e in enumerate(v):
                if not isinstance(e, list) or len(e) != 2:
                    raise self.error("expected a [key, value] entry", path + (i,))
                out.append((key(e[0], path + (i, 0)), val(e[1], path + (i, 1))))
        else:
            raise self.error("expected an object or a list of [key, value] entries", path)
        keys = [k for k, _ in out]
        if len(set(keys)) != len(keys):
            raise self.error("duplicate key", path)
        return out

    def elements(self, v: Any, path: Path) -> list[str]:
        xs = [self.string(x, path + (i,), "an element name") for i, x in enumerate(self.lst(v, path))]
        if len(set(xs)) != len(xs):
            raise self.error("duplicate element", path)
        return xs

    def graph(self, v: Any, path: Path, src: set, tgt: set) -> dict:
        g = self.obj(v, path, "a graph object {x: y}")
        for x, y in g.items():
            self.string(y, path + (x,), "an element name")
            if x not in src:
                raise self.error(f"argument {x!r} is not in the source set", path + (x,))
            if y not in tgt:
                raise self.error(f"value {y!r} is not in the target set", path + (x,))
        return dict(g)

    # -- resolution with cycle detection

    def resolve(self, section: str, name: Any, path: Path):
        name = self.string(name, path, f"the name of an entry of {section}")
        table = getattr(self.doc, section)
        if name in table:
            return table[name]
        defs = self.data.get(section, {})
        if name not in defs:
            raise self.error(f"unknown name {name!r} in {section}", path)
        key = (section, name)
        if self.state.get(key) == "busy":
            raise self.error(f"cyclic definition of {name!r}", path)
        self.state[key] = "busy"
        here = (section, name)
        builder = getattr(self, f"_{section}")
        try:
            value = builder(defs[name], here)
        except CompModError as exc:
            if isinstance(exc, DocumentError):
                raise
            raise self.error(str(exc), here) from exc
        table[name] = value
        self.state[key] = "done"
        return value

    # -- models

    def _models(self, d: Any, path: Path) -> Model:
        d = self.obj(d, path, "a model definition")
        if "grothendieck" in d:
            self.only(d, {"grothendieck"}, path)
            return self.groth(d["grothendieck"], path + ("grothendieck",)).underlying
        if "canonical" in d:
            self.only(d, {"canonical"}, path)
            c = self.obj(d["canonical"], path + ("canonical",))
            self.only(c, {"presheaf", "variant"}, path + ("canonical",))
            cat, S = self.resolve("presheaves", self.field(c, "presheaf", path + ("canonical",)), path + ("canonical", "presheaf"))
            variant = c.get("variant", "partial")
            if variant not in ("partial", "total"):
                raise self.error("variant is 'partial' or 'total'", path + ("canonical", "variant"))
            return build_cm_partial(cat, S) if variant == "partial" else build_cm_total(cat, S)
        if "terminal" in d:
            self.only(d, {"terminal"}, path)
            if d["terminal"] is not True:
                raise self.error("expected true", path + ("terminal",))
            return terminal_model()[0]
        self.only(d, {"types", "data", "homs", "close"}, path)
        types = [self.type_name(t, path + ("types", i)) for i, t in enumerate(self.lst(self.field(d, "types", path), path + ("types",)))]
        if len(set(types)) != len(types):
            raise self.error("duplicate type name", path + ("types",))
        known = set(types)

        def tkey(k, p):
            t = self.type_name(k, p)
            if t not in known:
                raise self.error(f"unknown type name {k!r}", p)
            return t

        data = dict(self.keyed(self.field(d, "data", path), path + ("data",), tkey, self.elements))
        for t in types:
            if t not in data:
                raise self.error(f"no data type for {t}", path + ("data",))
        homs: dict[tuple, list] = {}
        hp = path + ("homs",)
        raw = d.get("homs", {})
        if isinstance(raw, dict):
            for key, fs in raw.items():
                parts = key.split("->")
                if len(parts) != 2:
                    raise self.error("hom key must look like 's->t'", hp + (key,))
                s, t = tkey(parts[0], hp + (key,)), tkey(parts[1], hp + (key,))
                for i, f in enumerate(self.lst(fs, hp + (key,))):
                    f = self.obj(f, hp + (key, i), "a function {graph: {...}}")
                    self.only(f, {"graph"}, hp + (key, i))
                    g = self.graph(self.field(f, "graph", hp + (key, i)), hp + (key, i, "graph"), set(data[s]), set(data[t]))
                    homs.setdefault((s, t), []).append(PartialFunction.from_graph(s, t, g))
        else:
            for i, f in enumerate(self.lst(raw, hp, "an object or a list of functions")):
                f = self.obj(f, hp + (i,), "a function {source, target, graph}")
                self.only(f, {"source", "target", "graph"}, hp + (i,))
                s = tkey(self.field(f, "source", hp + (i,)), hp + (i, "source"))
                t = tkey(self.field(f, "target", hp + (i,)), hp + (i, "target"))
                g = self.graph(self.field(f, "graph", hp + (i,)), hp + (i, "graph"), set(data[s]), set(data[t]))
                homs.setdefault((s, t), []).append(PartialFunction.from_graph(s, t, g))
        m = Model.build(types, data, homs)
        errs = structure_errors(m)
        if errs:
            raise self.error(errs[0]["reason"], path)
        if d.get("close", False) is True:
            m = completion_close(m)
        self.doc.canonical[("models", path[1])] = model_json(m)
        return m

    def groth(self, v: Any, path: Path) -> GrothendieckModel:
        g = self.obj(v, path, "{model, presheaf}")
        self.only(g, {"model", "presheaf"}, path)
        m = self.resolve("models", self.field(g, "model", path), path + ("model",))
        gamma = self.resolve("simulations", self.field(g, "presheaf", path), path + ("presheaf",))
        if not isinstance(gamma, PresheafSimulation):
            raise self.error("expected a presheaf-simulation", path + ("presheaf",))
        if gamma.source != m:
            raise self.error("the presheaf-simulation is not over this model", path)
        key = (g["model"], g["presheaf"])
        if key not in self.doc.grothendieck:
            self.doc.grothendieck[key] = build_grothendieck(m, gamma)
        return self.doc.grothendieck[key]

    # -- simulations

    def _simulations(self, d: Any, path: Path):
        d = self.obj(d, path, "a simulation definition")
        derived = {
            "identity", "diagonal", "to_terminal", "compose", "pr1", "lift", "from_functor", "representable",
        }
        kinds = derived & set(d)
        if kinds:
            (kind,) = sorted(kinds)[:1]
            self.only(d, {kind}, path)
            return self.derived_simulation(kind, d[kind], path + (kind,))
        src = self.resolve("models", self.field(d, "source", path), path + ("source",))

        def tkey(k, p):
            t = self.type_name(k, p)
            if t not in src.data:
                raise self.error(f"unknown source type name {k!r}", p)
            return t

        if "sets" in d:
            self.only(d, {"source", "sets", "forcing"}, path)
            sets = dict(self.keyed(d["sets"], path + ("sets",), tkey, self.elements))
            carrier = {t: set(sets.get(t, ())) for t in src.types}
            target = None
            type_map = None
        else:
            self.only(d, {"source", "target", "type_map", "forcing"}, path)
            target = self.resolve("models", self.field(d, "target", path), path + ("target",))

            def tval(v, p):
                t = self.type_name(v, p)
                if t not in target.data:
                    raise self.error(f"unknown target type name {v!r}", p)
                return t

            type_map = dict(self.keyed(self.field(d, "type_map", path), path + ("type_map",), tkey, tval))
            for t in src.types:
                if t not in type_map:
                    raise self.error(f"type {t} is not mapped", path + ("type_map",))
            carrier = {t: set(target.data[type_map[t]]) for t in src.types}

        def pairs(v, p):
            out = []
            for i, e in enumerate(self.lst(v, p)):
                if not isinstance(e, list) or len(e) != 2:
                    raise self.error("a forcing pair is [y, x]", p + (i,))
                out.append((self.string(e[0], p + (i, 0)), self.string(e[1], p + (i, 1))))
            return out

        forcing = dict(self.keyed(self.field(d, "forcing", path), path + ("forcing",), tkey, pairs))
        fp = path + ("forcing",)
        entries = self.keyed(d["forcing"], fp, lambda k, p: p, lambda v, p: v)
        for (t, rel), (p, _) in zip(forcing.items(), entries):
            for i, (y, x) in enumerate(rel):
                if y not in carrier[t] or x not in src.data[t]:
                    raise self.error(f"forcing pair [{y}, {x}] lies outside the carriers of {t}", p + (i,))
        if target is None:
            return PresheafSimulation.build(src, sets, forcing)
        return Simulation.build(src, target, type_map, forcing)

    def derived_simulation(self, kind: str, v: Any, path: Path):
        model = lambda key, d: self.resolve("models", self.field(d, key, path), path + (key,))  # noqa: E731
        sim = lambda key, d: self.resolve("simulations", self.field(d, key, path), path + (key,))  # noqa: E731
        if kind in ("identity", "diagonal", "to_terminal"):
            m = self.resolve("models", v, path)
            return {"identity": identity_simulation, "diagonal": diagonal_presheaf, "to_terminal": to_terminal}[kind](m)
        d = self.obj(v, path)
        if kind == "compose":
            self.only(d, {"outer", "inner"}, path)
            inner = sim("inner", d)
            if not isinstance(inner, Simulation):
                raise self.error("the inner simulation must land in a model", path + ("inner",))
            return compose_simulations(sim("outer", d), inner)
        if kind == "pr1":
            return build_pr1(self.groth(d, path))
        if kind == "lift":
            self.only(d, {"gamma", "delta"}, path)
            gamma, delta = sim("gamma", d), sim("delta", d)
            if not isinstance(gamma, Simulation) or not isinstance(delta, PresheafSimulation):
                raise self.error("lift needs a simulation gamma and a presheaf-simulation delta", path)
            return lift_simulation(gamma, delta)
        if kind == "from_functor":
            self.only(d, {"functor", "source", "target"}, path)
            F = self.resolve("functors", self.field(d, "functor", path), path + ("functor",))
            catE, S = self.resolve("presheaves", self.field(d, "source", path), path + ("source",))
            catB, S2 = self.resolve("presheaves", self.field(d, "target", path), path + ("target",))
            if catE != F.source or catB != F.target:
                raise self.error("presheaf categories do not match the functor", path)
            return simulation_from_functor(catE, S, catB, S2, F)
        self.only(d, {"model", "base"}, path)
        m = model("model", d)
        return build_representable(m, self.type_name(self.field(d, "base", path), path + ("base",))).simulation

    # -- categories, presheaves, functors

    def _categories(self, d: Any, path: Path) -> FiniteCategory:
        d = self.obj(d, path, "a category definition")
        if "poset" in d:
            self.only(d, {"poset"}, path)
            p = self.obj(d["poset"], path + ("poset",))
            self.only(p, {"objects", "leq"}, path + ("poset",))
            objs = [self.type_name(o, path + ("poset", "objects", i)) for i, o in enumerate(self.lst(self.field(p, "objects", path + ("poset",)), path + ("poset", "objects")))]
            leq = []
            for i, e in enumerate(self.lst(p.get("leq", []), path + ("poset", "leq"))):
                q = path + ("poset", "leq", i)
                if not isinstance(e, list) or len(e) != 2:
                    raise self.error("expected [a, b]", q)
                a, b = self.type_name(e[0], q + (0,)), self.type_name(e[1], q + (1,))
                if a not in objs or b not in objs:
                    raise self.error("unknown object", q)
                leq.append((a, b))
            cat = FiniteCategory.poset(objs, leq)
        elif "monoid" in d:
            self.only(d, {"monoid"}, path)
            p = self.obj(d["monoid"], path + ("monoid",))
            mp = path + ("monoid",)
            self.only(p, {"object", "elements", "multiply", "unit"}, mp)
            obj = self.type_name(self.field(p, "object", mp), mp + ("object",))
            elems = self.elements(self.field(p, "elements", mp), mp + ("elements",))
            mult = self.triples(self.field(p, "multiply", mp), mp + ("multiply",))
            unit = self.string(self.field(p, "unit", mp), mp + ("unit",))
            cat = FiniteCategory.monoid(obj, elems, mult, unit)
        else:
            self.only(d, {"objects", "arrows", "composition", "identities"}, path)
            objs = [self.type_name(o, path + ("objects", i)) for i, o in enumerate(self.lst(self.field(d, "objects", path), path + ("objects",)))]
            arrows = []
            for i, e in enumerate(self.lst(self.field(d, "arrows", path), path + ("arrows",))):
                q = path + ("arrows", i)
                if not isinstance(e, list) or len(e) != 3:
                    raise self.error("an arrow is [name, source, target]", q)
                arrows.append(tuple(self.type_name(x, q + (k,)) for k, x in enumerate(e)))
            comp = self.triples(self.field(d, "composition", path), path + ("composition",))
            ids = dict(self.keyed(self.field(d, "identities", path), path + ("identities",), self.type_name, self.type_name))
            cat = FiniteCategory.build(objs, arrows, comp, ids)
        r = validate_category(cat)
        if not r.ok:
            raise self.error(f"not a category: {r.witnesses[0].get('reason', r.witnesses[0]['kind'])}", path)
        return cat

    def triples(self, v: Any, path: Path) -> dict:
        out = {}
        for i, e in enumerate(self.lst(v, path, "a list of [g, f, g.f] triples")):
            if not isinstance(e, list) or len(e) != 3:
                raise self.error("expected [g, f, g.f]", path + (i,))
            g, f, h = (self.type_name(x, path + (i, k)) for k, x in enumerate(e))
            out[(g, f)] = h
        return out

    def _presheaves(self, d: Any, path: Path) -> tuple[FiniteCategory, Presheaf]:
        d = self.obj(d, path, "a presheaf definition")
        self.only(d, {"category", "sets", "maps"}, path)
        cat = self.resolve("categories", self.field(d, "category", path), path + ("category",))

        def obj_key(k, p):
            o = self.type_name(k, p)
            if o not in cat.objects:
                raise self.error(f"unknown object {k!r}", p)
            return o

        sets = dict(self.keyed(self.field(d, "sets", path), path + ("sets",), obj_key, self.elements))
        names = {a.name: a for a in cat.arrows}

        def arrow_key(k, p):
            a = self.type_name(k, p)
            if a not in names:
                raise self.error(f"unknown arrow {k!r}", p)
            return a

        maps = {}
        for a, (g, p) in self.keyed(
            d.get("maps", {}), path + ("maps",), arrow_key, lambda v, p: (v, p)
        ):
            arr = names[a]
            maps[a] = self.graph(g, p, set(sets.get(arr.src, ())), set(sets.get(arr.tgt, ())))
        S = Presheaf.build(cat, sets, maps)
        r = validate_presheaf(cat, S)
        if not r.ok:
            w = r.witnesses[0]
            raise self.error(f"not a presheaf: {w.get('reason', w['kind'])}", path)
        return cat, S

    def _functors(self, d: Any, path: Path) -> Functor:
        d = self.obj(d, path, "a functor definition")
        self.only(d, {"source", "target", "objects", "arrows"}, path)
        E = self.resolve("categories", self.field(d, "source", path), path + ("source",))
        B = self.resolve("categories", self.field(d, "target", path), path + ("target",))
        objs = dict(self.keyed(self.field(d, "objects", path), path + ("objects",), self.type_name, self.type_name))
        arrows = dict(self.keyed(self.field(d, "arrows", path), path + ("arrows",), self.type_name, self.type_name))
        F = Functor(E, B, objs, arrows)
        r = validate_functor(F)
        if not r.ok:
            raise self.error(f"not a functor: {r.witnesses[0].get('reason')}", path)
        return F

    # -- tasks

    def task(self, i: int, v: Any) -> Task:
        path = ("tasks", i)
        d = self.obj(v, path, "a task record")
        kind = self.string(self.field(d, "task", path), path + ("task",))
        if kind not in TASKS:
            raise self.error(f"unknown task {kind!r}", path + ("task",))
        required, optional = TASKS[kind]
        self.only(d, {"task", "id", *required, *optional}, path)
        args: dict[str, Any] = {}
        for name, how in list(required.items()) + list(optional.items()):
            if name not in d:
                if name in required:
                    raise self.error(f"task {kind} needs {name!r}", path)
                continue
            args[name] = self.argument(how, d[name], path + (name,))
        tid = self.string(d["id"], path + ("id",)) if "id" in d else f"{i}:{kind}"
        return Task(i, tid, kind, args, d)

    def argument(self, how: str, v: Any, path: Path):
        if how == "model":
            return self.resolve("models", v, path)
        if how == "simulation":
            return self.resolve("simulations", v, path)
        if how == "presheaf":
            return self.resolve("presheaves", v, path)
        if how == "type":
            return self.type_name(v, path)
        if how == "int":
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise self.error("expected a non-negative integer", path)
            return v
        if how == "bool":
            if not isinstance(v, bool):
                raise self.error("expected true or false", path)
            return v
        if v not in CHOICES[how]:
            raise self.error(f"{how} is one of {', '.join(CHOICES[how])}", path)
        return v

    def run(self) -> Document:
        top = self.obj(self.data, (), "a document object")
        self.only(top, {"version", *SECTIONS, "tasks"}, ())
        if top.get("version") != VERSION:
            raise self.error(f"version must be {VERSION}", ("version",))
        for section in SECTIONS:
            defs = self.obj(top.get(section, {}), (section,))
            for name in defs:
                self.resolve(section, name, (section, name))
        for i, t in enumerate(self.lst(top.get("tasks", []), ("tasks",))):
            self.doc.tasks.append(self.task(i, t))
        ids = [t.id for t in self.doc.tasks]
        if len(set(ids)) != len(ids):
            raise self.error("duplicate task id", ("tasks",))
        return self.doc


def parse_document(text: str) -> Document:
    """Parse and fully resolve a document, or raise ``DocumentError`` with a location."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}",
            location={"line": exc.lineno, "column": exc.colno, "path": None},
        ) from None
    p = _Parser(text, data)
    doc = p.run()
    doc.raw = data
    return doc


# ---------------------------------------------------------------- serialization


def type_to_json(t: Any) -> Any:
    if isinstance(t, tuple):
        return [type_to_json(p) for p in t]
    return t


def keyed_json(items: list[tuple]) -> Any:
    """Object form when every key is a string, else the entry-list form."""
    items = sorted(items, key=lambda kv: sort_key(kv[0]))
    if all(isinstance(k, str) for k, _ in items):
        return {k: v for k, v in items}
    return [[type_to_json(k), v] for k, v in items]


def model_json(m: Model) -> dict:
    stringy = all(isinstance(t, str) and "->" not in t for t in m.types)
    out: dict[str, Any] = {
        "types": [type_to_json(t) for t in m.types],
        "data": keyed_json([(t, list(m.data[t])) for t in m.types]),
    }
    fs = [f for f in m.all_functions()]
    if stringy:
        homs: dict[str, list] = {}
        for f in fs:
            homs.setdefault(f"{f.source}->{f.target}", []).append({"graph": dict(f.pairs)})
        out["homs"] = homs
    else:
        out["homs"] = [
            {"source": type_to_json(f.source), "target": type_to_json(f.target), "graph": dict(f.pairs)}
            for f in fs
        ]
    return out


def simulation_json(raw: dict, sim) -> dict:
    """Canonical form of a literal simulation definition; names come from ``raw``."""
    src = sim.source
    out: dict[str, Any] = {"source": raw["source"]}
    if isinstance(sim, PresheafSimulation):
        out["sets"] = keyed_json([(t, list(sim.sets[t])) for t in src.types])
    else:
        out["target"] = raw["target"]
        out["type_map"] = keyed_json([(t, type_to_json(sim.type_map[t])) for t in src.types])
    out["forcing"] = keyed_json([(t, [list(p) for p in sorted(sim.forcing[t])]) for t in src.types])
    return out


def _canonical_raw(v: Any) -> Any:
    return json.loads(json.dumps(v, sort_keys=True))


def canonical_data(doc: Document) -> dict:
    raw = doc.raw
    out: dict[str, Any] = {"version": VERSION}
    for section in SECTIONS:
        defs = raw.get(section, {})
        if not defs:
            continue
        sec = {}
        for name in sorted(defs):
            d = defs[name]
            if section == "models" and ("models", name) in doc.canonical:
                sec[name] = doc.canonical[("models", name)]
            elif section == "simulations" and "forcing" in d:
                sec[name] = simulation_json(d, doc.simulations[name])
            else:
                sec[name] = _canonical_raw(d)
        out[section] = sec
    if doc.tasks:
        out["tasks"] = [{**_canonical_raw(t.raw), "id": t.id} for t in doc.tasks]
    return out


def serialize(doc: Document) -> str:
    """Canonical text of a document: sorted names, sets and graphs, explicit task ids."""
    return json.dumps(canonical_data(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
