"""Duration functions, plan validation and critical-path estimation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Mapping

from simproj.model import (
    Duration,
    EstimateParams,
    InvalidParams,
    ModuleKind,
    PlanError,
    PlanGraph,
    PlanNode,
    Span,
    Team,
    find_cycle,
    normalize_to_days,
    topological_order,
)


class NotValidated(PlanError):
    def __init__(self, diagnostics: list["Diagnostic"]):
        self.diagnostics = diagnostics
        errors = [d for d in diagnostics if d.severity == "error"]
        super().__init__(f"plan has {len(errors)} validation error(s): "
                         + ", ".join(sorted({d.code for d in errors})))


class UnknownNode(PlanError):
    pass


class IllegalAttribute(PlanError):
    pass


# Arithmetic of the module functions


def round_half_away(x: Fraction | int) -> int:
    """Round a nonnegative rational to the nearest integer, ties away from zero."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("round_half_away expects a nonnegative value")
    return int(x + Fraction(1, 2))  # int() floors for nonnegative input


def module_duration(cycles: int, x: Duration, alpha: int) -> int:
    """Process-module length, counted in the unit one step above ``x``.

    The numerator is the whole span of the module's iterations, so a module
    of ``alpha`` one-unit cycles comes out at exactly one upper unit.
    """
    if alpha < 1:
        raise InvalidParams(f"alpha must be >= 1, got {alpha}")
    if cycles < 1:
        raise InvalidParams(f"cycles must be >= 1, got {cycles}")
    x.unit.above()  # rejects year-long cycles
    return round_half_away(Fraction(cycles * x.magnitude, alpha))


def integration_duration(x: Duration, alpha: int, n: int) -> int:
    """Integrator length for ``n`` merged inputs: Round(X * n(n-1) / 2alpha)."""
    if alpha < 1:
        raise InvalidParams(f"alpha must be >= 1, got {alpha}")
    if n < 2:
        raise InvalidParams(f"an integrator needs at least 2 inputs, got {n}")
    x.unit.above()  # rejects year-long cycles
    return round_half_away(Fraction(x.magnitude * n * (n - 1), 2 * alpha))


def promote_subunit(raw: int, x: Duration) -> Duration:
    """A zero result costs one cycle period instead (the ``0*`` rule)."""
    if raw < 0:
        raise ValueError("raw unit count must be nonnegative")
    if raw == 0:
        return Duration(x.magnitude, x.unit, promoted=True)
    return Duration(raw, x.unit.above())


# Validation


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    nodes: tuple[str, ...] = ()


# code -> meaning; every code validate() can emit is listed here
ERROR_CODES = {
    "CycleDetected": "the dependency graph contains a directed cycle",
    "NoStart": "no Start node (an @ node with no inputs)",
    "MultipleStarts": "more than one Start node",
    "NoEnd": "no End node (an @ node with no outputs)",
    "MultipleEnds": "more than one End node",
    "StartEndMisplaced": "an @ node has both inputs and outputs",
    "IntegratorUnderfed": "an integrator has fewer than 2 inputs",
    "IntegratorFanout": "an integrator does not have exactly 1 output",
    "SplitterFanin": "a splitter does not have exactly 1 input",
    "SplitterUnderused": "a splitter has fewer than 2 outputs",
    "BadDegree": "a process or checker node does not have exactly 1 input and 1 output",
    "Unreachable": "a node is not on any Start-to-End path",
    "IllegalAttribute": "a node carries an attribute its kind does not allow",
    "TeamSizeConflict": "one team label is given different sizes",
    "MissingTeam": "a process module has no team (warning; counted as 0 people)",
}

_PROCESS_ATTRS = {"cycle_period", "cycles", "team"}
_ALLOWED_ATTRS = {
    ModuleKind.AGILE: _PROCESS_ATTRS,
    ModuleKind.SIM: _PROCESS_ATTRS,
    ModuleKind.INTEGRATOR: {"cycle_period"},
    ModuleKind.SPLITTER: {"explicit_duration"},
    ModuleKind.CHECKER: {"explicit_duration"},
    ModuleKind.START: set(),
    ModuleKind.END: set(),
}
_ATTR_KEYS = {"cycle_period": "x", "cycles": "cycles", "explicit_duration": "dur", "team": "team"}


def _reachable(graph: PlanGraph, roots: list[str], forward: bool) -> set[str]:
    step = graph.successors if forward else graph.predecessors
    seen = set(roots)
    todo = list(roots)
    while todo:
        for m in step(todo.pop()):
            if m not in seen:
                seen.add(m)
                todo.append(m)
    return seen


def validate(graph: PlanGraph) -> list[Diagnostic]:
    out: list[Diagnostic] = []

    def err(code, message, *nodes):
        out.append(Diagnostic("error", code, message, tuple(nodes)))

    cycle = find_cycle(graph)
    if cycle:
        err("CycleDetected", "cycle " + " -> ".join(cycle + cycle[:1]), *cycle)

    starts = sorted(n for n, v in graph.nodes.items() if v.kind is ModuleKind.START)
    ends = sorted(n for n, v in graph.nodes.items() if v.kind is ModuleKind.END)
    if not starts:
        err("NoStart", "plan has no Start node")
    elif len(starts) > 1:
        err("MultipleStarts", "plan has several Start nodes: " + ", ".join(starts), *starts)
    if not ends:
        err("NoEnd", "plan has no End node")
    elif len(ends) > 1:
        err("MultipleEnds", "plan has several End nodes: " + ", ".join(ends), *ends)

    teams: dict[str, set[int]] = {}
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        k, i, o = node.kind, graph.in_degree(nid), graph.out_degree(nid)
        if k in (ModuleKind.START, ModuleKind.END):
            if i and o:
                err("StartEndMisplaced", f"@ node {nid!r} has both inputs and outputs", nid)
            elif k is ModuleKind.START and i:
                err("StartEndMisplaced", f"start node {nid!r} has inputs", nid)
            elif k is ModuleKind.END and o:
                err("StartEndMisplaced", f"end node {nid!r} has outputs", nid)
        elif k is ModuleKind.INTEGRATOR:
            if i < 2:
                err("IntegratorUnderfed", f"integrator {nid!r} has {i} input(s); needs at least 2", nid)
            if o != 1:
                err("IntegratorFanout", f"integrator {nid!r} has {o} outputs; needs exactly 1", nid)
        elif k is ModuleKind.SPLITTER:
            if i != 1:
                err("SplitterFanin", f"splitter {nid!r} has {i} inputs; needs exactly 1", nid)
            if o < 2:
                err("SplitterUnderused", f"splitter {nid!r} has {o} output(s); needs at least 2", nid)
        elif i != 1 or o != 1:
            err("BadDegree", f"{k.value} node {nid!r} has {i} input(s) and {o} output(s); needs 1 and 1", nid)

        for attr in ("cycle_period", "cycles", "explicit_duration", "team"):
            if getattr(node, attr) is not None and attr not in _ALLOWED_ATTRS[k]:
                err("IllegalAttribute", f"{k.value} node {nid!r} may not set {_ATTR_KEYS[attr]}=", nid)
        if k.is_process:
            if node.team is None:
                out.append(Diagnostic("warning", "MissingTeam",
                                      f"{k.value} node {nid!r} has no team", (nid,)))
            else:
                teams.setdefault(node.team.label, set()).add(node.team.size)

    for label in sorted(teams):
        if len(teams[label]) > 1:
            sizes = ", ".join(map(str, sorted(teams[label])))
            holders = sorted(n for n, v in graph.nodes.items() if v.team and v.team.label == label)
            err("TeamSizeConflict", f"team {label!r} is given sizes {sizes}", *holders)

    if len(starts) == 1 and len(ends) == 1:
        on_path = _reachable(graph, starts, True) & _reachable(graph, ends, False)
        for nid in sorted(set(graph.nodes) - on_path):
            err("Unreachable", f"node {nid!r} is not on any path from start to end", nid)
    return out


def headcount(graph: PlanGraph) -> int:
    """Sum of team sizes over distinct team labels.

    A label reused on several modules means the same people, so it counts
    once. Modules without a team contribute nothing.
    """
    sizes: dict[str, int] = {}
    for node in graph.nodes.values():
        if node.kind.is_process and node.team is not None:
            sizes[node.team.label] = max(sizes.get(node.team.label, 0), node.team.size)
    return sum(sizes.values())


# Estimation


class StageKind(str, enum.Enum):
    SERIAL = "serial"
    PARALLEL_GROUP = "parallel-group"
    INTEGRATION = "integration"
    GATE = "gate"


class Annotation(str, enum.Enum):
    PLAIN = "plain"
    STAR = "star"
    DOUBLE_STAR = "double-star"
    PROMOTED = "promoted"


@dataclass(frozen=True)
class Stage:
    nodes: tuple[str, ...]
    kind: StageKind
    duration: Duration
    annotation: Annotation


@dataclass(frozen=True)
class Estimate:
    total: Span
    headcount: int
    stages: tuple[Stage, ...]
    sum_expression: str
    checker_scenarios: tuple[tuple[str, Span], ...]
    critical_path: tuple[str, ...]
    node_durations: Mapping[str, Duration]
    params: EstimateParams

    @property
    def total_days(self) -> int:
        return self.total.days(self.params.calendar)

    def to_dict(self) -> dict[str, Any]:
        cal = self.params.calendar
        return {
            "total": self.total.to_dict(),
            "total_days": self.total_days,
            "headcount": self.headcount,
            "stages": [
                {
                    "nodes": list(s.nodes),
                    "kind": s.kind.value,
                    "duration": {"n": s.duration.magnitude, "unit": s.duration.unit.name.lower()},
                    "days": normalize_to_days(s.duration, cal),
                    "annotation": s.annotation.value,
                }
                for s in self.stages
            ],
            "sum_expression": self.sum_expression,
            "checker_scenarios": [
                {"checker": cid, "elapsed": span.to_dict(), "days": span.days(cal)}
                for cid, span in self.checker_scenarios
            ],
            "critical_path": list(self.critical_path),
        }


def _floored(raw: int, x: Duration, params: EstimateParams) -> Duration:
    d = promote_subunit(raw, x)
    # a cycle period longer than one module unit (odd calendars) must still floor at X
    if normalize_to_days(d, params.calendar) < normalize_to_days(x, params.calendar):
        return promote_subunit(0, x)
    return d


def node_duration(node: PlanNode, graph: PlanGraph, params: EstimateParams) -> Duration:
    x = node.cycle_period or params.default_cycle_period
    if node.kind.is_process:
        raw = module_duration(node.cycles or params.default_cycles, x, params.alpha)
        return _floored(raw, x, params)
    if node.kind is ModuleKind.INTEGRATOR:
        raw = integration_duration(x, params.alpha, graph.in_degree(node.id))
        return _floored(raw, x, params)
    if node.kind in (ModuleKind.SPLITTER, ModuleKind.CHECKER):
        return node.explicit_duration or Duration(0, x.unit)
    return Duration(0, x.unit)


def _longest_paths(graph: PlanGraph, days: Mapping[str, int]):
    """Earliest finish of every node plus the chosen predecessor on a longest path."""
    finish: dict[str, int] = {}
    best: dict[str, str | None] = {}
    for nid in topological_order(graph):
        preds = graph.predecessors(nid)
        if preds:
            longest = max(finish[q] for q in preds)
            p = min(q for q in preds if finish[q] == longest)
            best[nid] = p
            finish[nid] = finish[p] + days[nid]
        else:
            best[nid] = None
            finish[nid] = days[nid]
    return finish, best


def _stage_for(nid: str, path: list[str], idx: int, graph: PlanGraph,
               durations: Mapping[str, Duration]) -> Stage | None:
    node = graph.nodes[nid]
    d = durations[nid]
    if node.kind in (ModuleKind.START, ModuleKind.END):
        return None
    if node.kind is ModuleKind.CHECKER:
        return Stage((nid,), StageKind.GATE, d, Annotation.PLAIN)
    if node.kind is ModuleKind.SPLITTER:
        if d.magnitude == 0:
            return None
        return Stage((nid,), StageKind.SERIAL, d, Annotation.PLAIN)
    if node.kind is ModuleKind.INTEGRATOR:
        ann = Annotation.PROMOTED if d.promoted else Annotation.STAR
        return Stage((nid,), StageKind.INTEGRATION, d, ann)
    # process module: collapse single-module branches sharing a splitter/integrator pair
    before, after = path[idx - 1], path[idx + 1]
    if (graph.nodes[before].kind is ModuleKind.SPLITTER
            and graph.nodes[after].kind is ModuleKind.INTEGRATOR):
        members = tuple(
            m for m in graph.successors(before)
            if graph.nodes[m].kind.is_process
            and graph.predecessors(m) == (before,)
            and graph.successors(m) == (after,)
        )
        if len(members) > 1:
            ann = Annotation.PROMOTED if d.promoted else Annotation.DOUBLE_STAR
            return Stage(members, StageKind.PARALLEL_GROUP, d, ann)
    ann = Annotation.PROMOTED if d.promoted else Annotation.PLAIN
    return Stage((nid,), StageKind.SERIAL, d, ann)


def format_term(stage: Stage, params: EstimateParams) -> str:
    """Render one stage as a sum-expression term.

    Whole major units print as a count (``1``, ``2*``, ``1**``); exactly one
    cycle period below a major unit prints ``0*``; anything else carries an
    explicit unit suffix (``3d``) so the expression always re-evaluates exactly.
    """
    cal = params.calendar
    days = normalize_to_days(stage.duration, cal)
    x_days = normalize_to_days(params.default_cycle_period, cal)
    major_days = cal.days_in(params.major_unit)
    if days == 0:
        return "0"
    if days == x_days and days < major_days:
        return "0*"
    marker = {Annotation.STAR: "*", Annotation.DOUBLE_STAR: "**"}.get(stage.annotation, "")
    if days % major_days == 0:
        return f"{days // major_days}{marker}"
    return f"{stage.duration}{marker}"


def format_sum_expression(stages, params: EstimateParams) -> str:
    return "+".join(format_term(s, params) for s in stages) or "0"


def evaluate_sum_expression(expr: str, params: EstimateParams) -> int:
    """Total days denoted by a sum expression; markers are cosmetic."""
    cal = params.calendar
    total = 0
    for term in expr.split("+"):
        if term == "0*":
            total += normalize_to_days(params.default_cycle_period, cal)
            continue
        body = term.rstrip("*")
        if body and body[-1] in "dwmy":
            total += normalize_to_days(Duration.parse(body), cal)
        elif body.isdigit():
            total += int(body) * cal.days_in(params.major_unit)
        else:
            raise ValueError(f"bad sum-expression term {term!r}")
    return total


def estimate(graph: PlanGraph, params: EstimateParams = EstimateParams()) -> Estimate:
    diagnostics = validate(graph)
    if any(d.severity == "error" for d in diagnostics):
        raise NotValidated(diagnostics)
    cal = params.calendar
    durations = {nid: node_duration(n, graph, params) for nid, n in graph.nodes.items()}
    days = {nid: normalize_to_days(d, cal) for nid, d in durations.items()}
    finish, best = _longest_paths(graph, days)

    end = next(n for n, v in graph.nodes.items() if v.kind is ModuleKind.END)
    path = [end]
    while best[path[-1]] is not None:
        path.append(best[path[-1]])
    path.reverse()

    stages = []
    for idx, nid in enumerate(path):
        stage = _stage_for(nid, path, idx, graph, durations)
        if stage is not None:
            stages.append(stage)

    checkers = sorted(
        (n for n, v in graph.nodes.items() if v.kind is ModuleKind.CHECKER),
        key=lambda n: (finish[n], n),
    )
    return Estimate(
        total=params.span(finish[end]),
        headcount=headcount(graph),
        stages=tuple(stages),
        sum_expression=format_sum_expression(stages, params),
        checker_scenarios=tuple((c, params.span(finish[c])) for c in checkers),
        critical_path=tuple(path),
        node_durations=durations,
        params=params,
    )


def checker_scenarios(graph: PlanGraph, params: EstimateParams = EstimateParams()):
    """Elapsed time at each checker, i.e. what has been spent if the project stops there."""
    return list(estimate(graph, params).checker_scenarios)


_OVERRIDE_FIELDS = {"x": "cycle_period", "cycles": "cycles", "dur": "explicit_duration", "team": "team"}


def _coerce(attr: str, value):
    if attr in ("cycle_period", "explicit_duration") and isinstance(value, str):
        return Duration.parse(value)
    if attr == "cycles" and isinstance(value, str):
        return int(value)
    if attr == "team" and isinstance(value, str):
        label, _, size = value.partition(":")
        return Team(label, int(size))
    return value


def apply_overrides(graph: PlanGraph, overrides: Mapping[str, Mapping[str, Any]]) -> PlanGraph:
    changed = []
    for nid in sorted(overrides):
        if nid not in graph.nodes:
            raise UnknownNode(f"UnknownNode: no node named {nid!r}")
        node = graph.nodes[nid]
        updates = {}
        for key, value in overrides[nid].items():
            attr = _OVERRIDE_FIELDS.get(key, key)
            if attr not in _ALLOWED_ATTRS[node.kind]:
                raise IllegalAttribute(
                    f"IllegalAttribute: {node.kind.value} node {nid!r} has no attribute {key!r}")
            try:
                updates[attr] = _coerce(attr, value)
            except ValueError as exc:
                raise IllegalAttribute(f"IllegalAttribute: bad value for {nid}.{key}: {exc}") from None
        try:
            changed.append(replace(node, **updates))
        except ValueError as exc:
            raise IllegalAttribute(f"IllegalAttribute: bad value for {nid}: {exc}") from None
    return graph.replace_nodes(changed)


def what_if(graph: PlanGraph, params: EstimateParams,
            overrides: Mapping[str, Mapping[str, Any]]) -> Estimate:
    """Estimate a copy of ``graph`` with per-node attribute overrides applied."""
    return estimate(apply_overrides(graph, overrides), params)
