"""Domain types, graph construction, ordering and calendar arithmetic."""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class PlanError(Exception):
    """Base class for every error raised by simproj."""


class InexactConversion(PlanError):
    pass


class InvalidParams(PlanError):
    pass


class CycleDetected(PlanError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cycle detected: " + " -> ".join(cycle + cycle[:1]))


@dataclass(frozen=True)
class Issue:
    """One structural violation found while building a graph."""

    code: str
    message: str
    nodes: tuple[str, ...] = ()
    span: tuple[int, int] | None = None


class GraphError(PlanError):
    """Raised by :func:`build_graph`; ``issues`` lists every violation."""

    def __init__(self, issues: list[Issue]):
        self.issues = issues
        super().__init__("; ".join(f"{i.code}: {i.message}" for i in issues))

    @property
    def codes(self) -> list[str]:
        return [i.code for i in self.issues]


class TimeUnit(enum.IntEnum):
    DAY = 0
    WEEK = 1
    MONTH = 2
    YEAR = 3

    @property
    def suffix(self) -> str:
        return "dwmy"[self.value]

    @classmethod
    def from_suffix(cls, s: str) -> "TimeUnit":
        try:
            return cls("dwmy".index(s))
        except ValueError:
            raise ValueError(f"unknown unit suffix {s!r}") from None

    def above(self) -> "TimeUnit":
        if self is TimeUnit.YEAR:
            raise InvalidParams("there is no unit above year")
        return TimeUnit(self.value + 1)

    def label(self, n: int) -> str:
        name = self.name.lower()
        return f"{n} {name}" if n == 1 else f"{n} {name}s"


@dataclass(frozen=True)
class Calendar:
    days_per_week: int = 5
    weeks_per_month: int = 4
    months_per_year: int = 12

    def __post_init__(self):
        for name in ("days_per_week", "weeks_per_month", "months_per_year"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise InvalidParams(f"{name} must be a positive integer, got {v!r}")

    def factor(self, unit: TimeUnit) -> int:
        """Number of ``unit`` in one unit of the next size up."""
        return (self.days_per_week, self.weeks_per_month, self.months_per_year)[unit.value]

    def days_in(self, unit: TimeUnit) -> int:
        days = 1
        for u in TimeUnit:
            if u >= unit:
                break
            days *= self.factor(u)
        return days


@dataclass(frozen=True)
class Duration:
    magnitude: int
    unit: TimeUnit
    promoted: bool = False

    def __post_init__(self):
        if not isinstance(self.magnitude, int) or isinstance(self.magnitude, bool):
            raise TypeError("Duration magnitude must be an int")
        if self.magnitude < 0:
            raise ValueError(f"negative duration: {self.magnitude}")
        object.__setattr__(self, "unit", TimeUnit(self.unit))

    @classmethod
    def parse(cls, text: str) -> "Duration":
        """Parse the ``<int><unit>`` form used in plan files, e.g. ``"1d"``."""
        if len(text) < 2 or not text[:-1].isdigit():
            raise ValueError(f"expected <int><d|w|m|y>, got {text!r}")
        return cls(int(text[:-1]), TimeUnit.from_suffix(text[-1]))

    def __str__(self) -> str:
        return f"{self.magnitude}{self.unit.suffix}"

    def describe(self) -> str:
        return self.unit.label(self.magnitude)


def convert(d: Duration, target: TimeUnit, cal: Calendar = Calendar()) -> Duration:
    if target <= d.unit:
        factor = cal.days_in(d.unit) // cal.days_in(target)
        return Duration(d.magnitude * factor, target, d.promoted)
    factor = cal.days_in(target) // cal.days_in(d.unit)
    q, r = divmod(d.magnitude, factor)
    if r:
        raise InexactConversion(f"{d} is not a whole number of {target.name.lower()}s")
    return Duration(q, target, d.promoted)


def normalize_to_days(d: Duration, cal: Calendar = Calendar()) -> int:
    return d.magnitude * cal.days_in(d.unit)


@dataclass(frozen=True)
class Span:
    """A total split into whole major units plus a residual, e.g. 4 weeks 1 day."""

    major: Duration
    residual: Duration

    @classmethod
    def from_days(cls, days: int, major: TimeUnit, residual: TimeUnit,
                  cal: Calendar = Calendar()) -> "Span":
        n, rest = divmod(days, cal.days_in(major))
        per = cal.days_in(residual)
        if rest % per:
            residual = TimeUnit.DAY
            per = 1
        return cls(Duration(n, major), Duration(rest // per, residual))

    def days(self, cal: Calendar = Calendar()) -> int:
        return normalize_to_days(self.major, cal) + normalize_to_days(self.residual, cal)

    def __str__(self) -> str:
        if self.residual.magnitude == 0:
            return self.major.describe()
        if self.major.magnitude == 0:
            return self.residual.describe()
        return f"{self.major.describe()} {self.residual.describe()}"

    def to_dict(self) -> dict:
        return {
            "major": {"n": self.major.magnitude, "unit": self.major.unit.name.lower()},
            "residual": {"n": self.residual.magnitude, "unit": self.residual.unit.name.lower()},
        }


class ModuleKind(enum.Enum):
    AGILE = "agile"
    SIM = "sim"
    INTEGRATOR = "integrator"
    SPLITTER = "splitter"
    CHECKER = "checker"
    START = "start"
    END = "end"

    @property
    def symbol(self) -> str:
        return _SYMBOLS[self]

    @property
    def is_process(self) -> bool:
        return self in (ModuleKind.AGILE, ModuleKind.SIM)


_SYMBOLS = {
    ModuleKind.AGILE: "#",
    ModuleKind.SIM: "*",
    ModuleKind.INTEGRATOR: "}",
    ModuleKind.SPLITTER: "{",
    ModuleKind.CHECKER: "C",
    ModuleKind.START: "@",
    ModuleKind.END: "@",
}


@dataclass(frozen=True)
class Team:
    label: str
    size: int

    def __post_init__(self):
        if not self.label:
            raise ValueError("team label must be nonempty")
        if not isinstance(self.size, int) or self.size < 1:
            raise ValueError(f"team size must be a positive integer, got {self.size!r}")

    def __str__(self) -> str:
        return f"{self.label}:{self.size}"


@dataclass(frozen=True)
class PlanNode:
    """One module instance in a plan.

    Which optional attributes are legal depends on ``kind``; that is checked
    by validation rather than here, so malformed plans can still be built and
    diagnosed.
    """

    id: str
    kind: ModuleKind
    cycle_period: Duration | None = None
    cycles: int | None = None
    explicit_duration: Duration | None = None
    team: Team | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("node id must be nonempty")
        if self.cycles is not None and (not isinstance(self.cycles, int) or self.cycles < 1):
            raise ValueError(f"cycles must be a positive integer, got {self.cycles!r}")
        if self.cycle_period is not None and self.cycle_period.magnitude == 0:
            raise ValueError("cycle period must be positive")


@dataclass(frozen=True)
class PlanGraph:
    nodes: Mapping[str, PlanNode]
    edges: tuple[tuple[str, str], ...]
    _succ: Mapping[str, tuple[str, ...]] = field(repr=False, compare=False, default=None)
    _pred: Mapping[str, tuple[str, ...]] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        succ: dict[str, list[str]] = {n: [] for n in self.nodes}
        pred: dict[str, list[str]] = {n: [] for n in self.nodes}
        for u, v in self.edges:
            succ[u].append(v)
            pred[v].append(u)
        object.__setattr__(self, "_succ", {k: tuple(sorted(v)) for k, v in succ.items()})
        object.__setattr__(self, "_pred", {k: tuple(sorted(v)) for k, v in pred.items()})

    def successors(self, node_id: str) -> tuple[str, ...]:
        return self._succ[node_id]

    def predecessors(self, node_id: str) -> tuple[str, ...]:
        return self._pred[node_id]

    def in_degree(self, node_id: str) -> int:
        return len(self._pred[node_id])

    def out_degree(self, node_id: str) -> int:
        return len(self._succ[node_id])

    def replace_nodes(self, nodes: Iterable[PlanNode]) -> "PlanGraph":
        updated = dict(self.nodes)
        for n in nodes:
            updated[n.id] = n
        return PlanGraph(updated, self.edges)


def build_graph(
    nodes: Iterable[PlanNode],
    edges: Iterable[tuple[str, str]],
    *,
    node_spans: Sequence[tuple[int, int]] | None = None,
    edge_spans: Sequence[tuple[int, int]] | None = None,
) -> PlanGraph:
    """Assemble a graph, collecting every structural violation before raising.

    The optional span sequences run parallel to ``nodes`` and ``edges`` and
    are copied onto any issue they locate.
    """
    issues: list[Issue] = []
    table: dict[str, PlanNode] = {}
    for i, node in enumerate(nodes):
        span = node_spans[i] if node_spans else None
        if node.id in table:
            issues.append(Issue("DuplicateId", f"node {node.id!r} declared twice", (node.id,), span))
        else:
            table[node.id] = node
    seen: set[tuple[str, str]] = set()
    kept: list[tuple[str, str]] = []
    for i, (u, v) in enumerate(edges):
        span = edge_spans[i] if edge_spans else None
        missing = [x for x in (u, v) if x not in table]
        if missing:
            for x in missing:
                issues.append(Issue("UnknownEndpoint", f"edge {u} -> {v} names unknown node {x!r}",
                                    (x,), span))
            continue
        if u == v:
            issues.append(Issue("SelfEdge", f"node {u!r} has an edge to itself", (u,), span))
            continue
        if (u, v) in seen:
            issues.append(Issue("DuplicateEdge", f"edge {u} -> {v} appears twice", (u, v), span))
            continue
        seen.add((u, v))
        kept.append((u, v))
    if issues:
        raise GraphError(issues)
    return PlanGraph(table, tuple(sorted(kept)))


def find_cycle(graph: PlanGraph) -> list[str] | None:
    """Return the node ids of one directed cycle, or None if the graph is acyclic."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = dict.fromkeys(graph.nodes, WHITE)
    for root in sorted(graph.nodes):
        if color[root] != WHITE:
            continue
        stack = [(root, iter(graph.successors(root)))]
        path = [root]
        color[root] = GRAY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
            elif color[nxt] == GRAY:
                return path[path.index(nxt):]
            elif color[nxt] == WHITE:
                color[nxt] = GRAY
                stack.append((nxt, iter(graph.successors(nxt))))
                path.append(nxt)
    return None


def topological_order(graph: PlanGraph) -> list[str]:
    """Kahn's algorithm with a min-heap so ties break by node id."""
    indeg = {n: graph.in_degree(n) for n in graph.nodes}
    ready = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in graph.successors(n):
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    if len(order) != len(graph.nodes):
        raise CycleDetected(find_cycle(graph) or [])
    return order


@dataclass(frozen=True)
class EstimateParams:
    """Global estimation settings.

    ``default_cycles`` falls back to ``alpha`` when left as None, so one full
    module of alpha cycles lasts exactly one unit above the cycle period.
    """

    default_cycle_period: Duration = Duration(1, TimeUnit.DAY)
    alpha: int = 5
    default_cycles: int | None = None
    calendar: Calendar = Calendar()

    def __post_init__(self):
        if not isinstance(self.alpha, int) or self.alpha < 1:
            raise InvalidParams(f"alpha must be a positive integer, got {self.alpha!r}")
        if self.default_cycles is None:
            object.__setattr__(self, "default_cycles", self.alpha)
        elif not isinstance(self.default_cycles, int) or self.default_cycles < 1:
            raise InvalidParams(f"cycles must be a positive integer, got {self.default_cycles!r}")
        if self.default_cycle_period.magnitude < 1:
            raise InvalidParams("cycle period must be positive")
        if self.default_cycle_period.unit is TimeUnit.YEAR:
            raise InvalidParams("cycle period cannot be measured in years")

    @property
    def major_unit(self) -> TimeUnit:
        """The module unit: one step above the cycle period's unit."""
        return self.default_cycle_period.unit.above()

    def span(self, days: int) -> Span:
        return Span.from_days(days, self.major_unit, self.default_cycle_period.unit, self.calendar)
