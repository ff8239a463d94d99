"""Execution of document tasks; one ``Report`` per task, in task order."""

from __future__ import annotations

from typing import Callable

from compmod.canonical import Presheaf
from compmod.document import TASKS, Document, Task
from compmod.errors import BoundExceeded, CompModError
from compmod.fibration import (
    FibrationContext,
    canonical_pr1_splitting,
    is_fibration_simulation,
    is_opfibration_simulation,
    validate_splitting,
)
from compmod.grothendieck import (
    build_grothendieck,
    build_pr1,
    check_pullback_universal,
    check_strictness,
    groth_canonical_compare,
    lift_simulation,
)
from compmod.model import Model, compose_partial, identity_partial, validate_model
from compmod.report import REFUSED, Report
from compmod.simulation import (
    PresheafSimulation,
    Simulation,
    build_representable,
    compose_simulations,
    extract_forcing_modulus,
    extract_tracking_modulus,
    realize_simulation,
    validate_simulation,
)

DEFAULT_BOUND = 3
PULLBACK_BOUND = 2


def _max_data(*models: Model) -> int:
    return max((len(v) for m in models for v in m.data.values()), default=0)


def _check_bound(bound: int, *models: Model) -> None:
    size = _max_data(*models)
    if size > bound:
        raise BoundExceeded(f"a data type has {size} elements; the bound is {bound}", witness={"max_data": size})


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise CompModError(message)


def _validate_model(task: Task) -> Report:
    return validate_model(task.args["model"])


def _validate_simulation(task: Task) -> Report:
    return validate_simulation(task.args["simulation"])


def _build_grothendieck(task: Task) -> Report:
    C, gamma = task.args["model"], task.args["presheaf"]
    _need(isinstance(gamma, PresheafSimulation) and gamma.source == C, "presheaf must be a presheaf-simulation over model")
    G = build_grothendieck(C, gamma)
    report = Report(task.kind)
    report.absorb(validate_model(G.underlying), "model")
    report.absorb(validate_simulation(build_pr1(G)), "pr1")
    report.stats = {**G.underlying.size(), "fibers": {str(p): len(G.fiber_data[p]) for p in G.types}}
    return report


def _check_pullback(task: Task) -> Report:
    gamma, delta = task.args["gamma"], task.args["delta"]
    _need(isinstance(gamma, Simulation), "gamma must land in a model")
    _need(isinstance(delta, PresheafSimulation), "delta must be a presheaf-simulation")
    C, D = gamma.source, gamma.target
    if {"E", "alpha", "beta"} & set(task.args):
        _need({"E", "alpha", "beta"} <= set(task.args), "give all of E, alpha and beta, or none")
        E, alpha, beta = task.args["E"], task.args["alpha"], task.args["beta"]
    else:
        G = build_grothendieck(C, compose_simulations(delta, gamma))
        E, alpha, beta = G.underlying, build_pr1(G), lift_simulation(gamma, delta)
    report = check_pullback_universal(C, D, gamma, delta, E, alpha, beta, bound=task.args.get("bound", PULLBACK_BOUND))
    return report


def _check_strictness(task: Task) -> Report:
    gamma, delta, eps = task.args["gamma"], task.args["delta"], task.args["epsilon"]
    _need(isinstance(gamma, Simulation) and isinstance(delta, Simulation), "gamma and delta must land in models")
    _need(isinstance(eps, PresheafSimulation), "epsilon must be a presheaf-simulation")
    return check_strictness(gamma.source, gamma.target, delta.target, gamma, delta, eps)


def _check_canonical(task: Task) -> Report:
    cat, S = task.args["presheaf"]
    assert isinstance(S, Presheaf)
    return groth_canonical_compare(cat, S)


def _context(task: Task) -> FibrationContext:
    sim = task.args["simulation"]
    _need(isinstance(sim, Simulation), "the simulation must land in a model")
    r = validate_simulation(sim)
    _need(r.ok, "the simulation is not valid")
    _check_bound(task.args.get("bound", DEFAULT_BOUND), sim.source, sim.target)
    return FibrationContext.of(sim)


def _with_lifts(report: Report) -> Report:
    report.stats["lifts"] = [
        {"type": v["type"], "function": v["function"], "count": v["lifts"], "first": v["lift"]}
        for v in report.verdicts  # type: ignore[attr-defined]
    ]
    return report


def _check_fibration(task: Task) -> Report:
    return _with_lifts(is_fibration_simulation(_context(task), scope=task.args.get("scope", "every")))


def _check_opfibration(task: Task) -> Report:
    return _with_lifts(
        is_opfibration_simulation(
            _context(task),
            reading=task.args.get("reading", "diagram"),
            scope=task.args.get("scope", "every"),
            compare_readings=task.args.get("compare_readings", False),
        )
    )


def _check_splitting(task: Task) -> Report:
    C, gamma = task.args["model"], task.args["presheaf"]
    _need(isinstance(gamma, PresheafSimulation) and gamma.source == C, "presheaf must be a presheaf-simulation over model")
    G = build_grothendieck(C, gamma)
    _check_bound(task.args.get("bound", DEFAULT_BOUND), G.underlying, C)
    sp = canonical_pr1_splitting(G)
    report = validate_splitting(FibrationContext.of(build_pr1(G)), sp, task.args.get("reading", "diagram"))
    report.notes.extend(sp.notes)
    return report


def _build_representable(task: Task) -> Report:
    m, t0 = task.args["model"], task.args["base"]
    rep = build_representable(m, t0)
    report = Report(task.kind)
    report.absorb(validate_simulation(rep.simulation), "simulation")
    for t in m.types:
        ident = identity_partial(m.data[t], t)
        if rep.trackers[ident] != identity_partial(rep.simulation.sets[t], t):
            report.fail("functoriality", identity=t)
    for g in m.all_functions():
        if not report.ok:
            break
        gs = rep.trackers[g]
        for f in m.all_functions():
            if f.source == g.target:
                if rep.trackers[compose_partial(f, g)] != compose_partial(rep.trackers[f], gs):
                    report.fail("functoriality", f=f, g=g)
    report.stats = {"tokens": {str(t): len(rep.tokens[t]) for t in m.types}}
    return report


def _extract_moduli(task: Task) -> Report:
    sim = task.args["simulation"]
    _need(isinstance(sim, Simulation), "moduli are realized against a target model")
    phi, mu = extract_forcing_modulus(sim), extract_tracking_modulus(sim)
    report = Report(task.kind)
    report.stats = {
        "forcing_modulus": {str(t): dict(c) for t, c in phi.choice.items()},
        "tracking_modulus": [[f, fp] for hom in mu.choice.values() for f, fp in hom.items()],
    }
    realized = realize_simulation(sim.type_map, phi, mu, sim.source, sim.target)
    report.absorb(validate_simulation(realized), "realized")
    return report


RUNNERS: dict[str, Callable[[Task], Report]] = {
    "validate-model": _validate_model,
    "validate-simulation": _validate_simulation,
    "build-grothendieck": _build_grothendieck,
    "check-pullback": _check_pullback,
    "check-strictness": _check_strictness,
    "check-canonical-equality": _check_canonical,
    "check-fibration": _check_fibration,
    "check-opfibration": _check_opfibration,
    "check-splitting": _check_splitting,
    "build-representable": _build_representable,
    "extract-moduli": _extract_moduli,
}


def run_task(task: Task, bound: int | None = None) -> Report:
    """Run one task; ``bound`` overrides the enumeration bound of bounded tasks."""
    if bound is not None and "bound" in _bounded(task.kind):
        task = Task(task.index, task.id, task.kind, {**task.args, "bound": bound}, task.raw)
    try:
        report = RUNNERS[task.kind](task)
    except BoundExceeded as exc:
        report = Report(task.kind, verdict=REFUSED)
        report.witnesses.append({"kind": "bound-exceeded", "message": str(exc), "detail": exc.witness})
    except CompModError as exc:
        report = Report(task.kind)
        report.fail("error", error=type(exc).__name__, message=str(exc), detail=exc.witness)
    report.task = task.id
    report.stats.setdefault("kind", task.kind)
    return report


def _bounded(kind: str) -> set:
    return set(TASKS[kind][1])


def run_tasks(doc: Document, only: str | None = None, bound: int | None = None) -> list[Report]:
    """Reports in task order; ``only`` selects tasks by id or by kind."""
    tasks = [t for t in doc.tasks if only is None or only in (t.id, t.kind)]
    return [run_task(t, bound) for t in tasks]
