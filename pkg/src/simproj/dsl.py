"""Reader and canonical writer for the line-oriented ``.plan`` format.

A plan file looks like::

    ; comments run from ';' to end of line
    plan { x=1d alpha=5 }
    start @ s
    agile # a team=T1:3
    end @ e
    s -> a
    a -> e

Node lines are ``<word> <symbol> <id> [key=value ...]``. The word is either
``node`` or the kind name matching the symbol. ``@`` becomes Start or End
according to where the node sits in the graph.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping

from simproj.model import (
    Calendar,
    Duration,
    EstimateParams,
    GraphError,
    Issue,
    ModuleKind,
    PlanError,
    PlanGraph,
    PlanNode,
    Team,
    TimeUnit,
    build_graph,
    topological_order,
)


class PlanSyntaxError(PlanError):
    def __init__(self, line: int, col: int, expected: str):
        self.line = line
        self.col = col
        self.expected = expected
        super().__init__(f"{line}:{col}: {expected}")


class UnknownSymbol(PlanSyntaxError):
    pass


class DuplicateParam(PlanSyntaxError):
    pass


SYMBOL_TABLE = {
    "#": ModuleKind.AGILE,
    "*": ModuleKind.SIM,
    "}": ModuleKind.INTEGRATOR,
    "{": ModuleKind.SPLITTER,
    "C": ModuleKind.CHECKER,
    "@": ModuleKind.START,  # or END, settled by position
}

PARAM_KEYS = ("x", "alpha", "cycles", "days_per_week", "weeks_per_month", "months_per_year")
NODE_KEYS = ("x", "cycles", "dur", "team")

_IDENT = re.compile(r"[A-Za-z0-9_]+\Z")
_TOKEN = re.compile(r"\S+")


@dataclass(frozen=True)
class PlanDocument:
    params_block: Mapping[str, Any]
    graph: PlanGraph
    source_spans: Mapping[str, tuple[int, int]] = field(default_factory=dict, compare=False)

    def params(self, **overrides: Any) -> EstimateParams:
        """Effective estimation parameters: ``overrides`` > file block > defaults."""
        merged = {**self.params_block, **{k: v for k, v in overrides.items() if v is not None}}
        return params_from_block(merged)


def params_from_block(block: Mapping[str, Any]) -> EstimateParams:
    cal = Calendar(**{k: block[k] for k in ("days_per_week", "weeks_per_month", "months_per_year")
                      if k in block})
    kwargs: dict[str, Any] = {"calendar": cal}
    if "x" in block:
        kwargs["default_cycle_period"] = block["x"]
    if "alpha" in block:
        kwargs["alpha"] = block["alpha"]
    if "cycles" in block:
        kwargs["default_cycles"] = block["cycles"]
    return EstimateParams(**kwargs)


def _positive_int(text: str, line: int, col: int) -> int:
    if not text.isdigit() or int(text) < 1:
        raise PlanSyntaxError(line, col, f"expected a positive integer, got {text!r}")
    return int(text)


def _duration(text: str, line: int, col: int, *, positive: bool) -> Duration:
    try:
        d = Duration.parse(text)
    except ValueError:
        raise PlanSyntaxError(line, col, f"expected <int><d|w|m|y>, got {text!r}") from None
    if positive and d.magnitude == 0:
        raise PlanSyntaxError(line, col, "expected a positive duration")
    return d


def _team(text: str, line: int, col: int) -> Team:
    label, sep, size = text.partition(":")
    if not sep or not _IDENT.match(label):
        raise PlanSyntaxError(line, col, f"expected team=<label>:<size>, got {text!r}")
    return Team(label, _positive_int(size, line, col + len(label) + 1))


def _split_kv(tok: str, line: int, col: int) -> tuple[str, str]:
    key, sep, value = tok.partition("=")
    if not sep or not key or not value:
        raise PlanSyntaxError(line, col, f"expected key=value, got {tok!r}")
    return key, value


def _parse_param(key: str, value: str, line: int, col: int) -> Any:
    vcol = col + len(key) + 1
    if key == "x":
        d = _duration(value, line, vcol, positive=True)
        if d.unit is TimeUnit.YEAR:
            raise PlanSyntaxError(line, vcol, "expected a cycle period in d, w or m")
        return d
    return _positive_int(value, line, vcol)


def parse_plan(text: str) -> PlanDocument:
    params: dict[str, Any] = {}
    saw_block = False
    in_block: tuple[int, int] | None = None
    nodes: list[tuple[str, str, str, dict[str, Any], tuple[int, int]]] = []
    edges: list[tuple[str, str]] = []
    edge_spans: list[tuple[int, int]] = []

    def take_params(toks, lineno):
        nonlocal in_block
        for m in toks:
            tok, col = m.group(), m.start() + 1
            if tok == "}":
                in_block = None
                continue
            if in_block is None:
                raise PlanSyntaxError(lineno, col, f"expected end of line after '}}', got {tok!r}")
            key, value = _split_kv(tok, lineno, col)
            if key not in PARAM_KEYS:
                raise PlanSyntaxError(lineno, col, "expected one of " + ", ".join(PARAM_KEYS))
            if key in params:
                raise DuplicateParam(lineno, col, f"parameter {key!r} given twice")
            params[key] = _parse_param(key, value, lineno, col)

    lines = text.split("\n")
    for lineno, raw in enumerate(lines, 1):
        body = raw.split(";", 1)[0]
        toks = list(_TOKEN.finditer(body))
        if not toks:
            continue
        if in_block is not None:
            take_params(toks, lineno)
            continue
        first = toks[0].group()
        col0 = toks[0].start() + 1
        if first == "plan":
            if saw_block:
                raise DuplicateParam(lineno, col0, "only one plan { ... } block is allowed")
            if len(toks) < 2 or toks[1].group() != "{":
                col = toks[1].start() + 1 if len(toks) > 1 else col0
                raise PlanSyntaxError(lineno, col, "expected '{' after 'plan'")
            saw_block = True
            in_block = (lineno, toks[1].start() + 1)
            take_params(toks[2:], lineno)
            continue
        if len(toks) >= 2 and toks[1].group() == "->":
            if len(toks) != 3:
                col = toks[3].start() + 1 if len(toks) > 3 else toks[1].start() + 1
                raise PlanSyntaxError(lineno, col, "expected '<id> -> <id>'")
            for m in (toks[0], toks[2]):
                if not _IDENT.match(m.group()):
                    raise PlanSyntaxError(lineno, m.start() + 1, "expected an identifier")
            edges.append((toks[0].group(), toks[2].group()))
            edge_spans.append((lineno, col0))
            continue
        nodes.append(_parse_node_line(toks, lineno))

    if in_block is not None:
        raise PlanSyntaxError(*in_block, "expected '}' closing the plan block")
    return _assemble(params, nodes, edges, edge_spans)


def _parse_node_line(toks, lineno):
    word = toks[0].group()
    if len(toks) < 3:
        col = toks[-1].end() + 1 if len(toks) == 2 else toks[0].start() + 1
        raise PlanSyntaxError(lineno, col, "expected '<word> <symbol> <id>' or '<id> -> <id>'")
    sym_tok, id_tok = toks[1], toks[2]
    symbol = sym_tok.group()
    if symbol not in SYMBOL_TABLE:
        raise UnknownSymbol(lineno, sym_tok.start() + 1,
                            f"unknown module symbol {symbol!r}; expected one of # * }} {{ C @")
    kind = SYMBOL_TABLE[symbol]
    allowed = {"node", kind.value} | ({"start", "end"} if symbol == "@" else set())
    if word not in allowed:
        raise PlanSyntaxError(lineno, toks[0].start() + 1,
                              f"expected 'node' or '{kind.value}' before symbol {symbol!r}")
    nid = id_tok.group()
    if not _IDENT.match(nid):
        raise PlanSyntaxError(lineno, id_tok.start() + 1, "expected an identifier")
    attrs: dict[str, Any] = {}
    for m in toks[3:]:
        col = m.start() + 1
        key, value = _split_kv(m.group(), lineno, col)
        if key not in NODE_KEYS:
            raise PlanSyntaxError(lineno, col, "expected one of " + ", ".join(NODE_KEYS))
        if key in attrs:
            raise DuplicateParam(lineno, col, f"key {key!r} given twice on one line")
        vcol = col + len(key) + 1
        if key == "x":
            attrs[key] = _duration(value, lineno, vcol, positive=True)
        elif key == "dur":
            attrs[key] = _duration(value, lineno, vcol, positive=False)
        elif key == "cycles":
            attrs[key] = _positive_int(value, lineno, vcol)
        else:
            attrs[key] = _team(value, lineno, vcol)
    return word, symbol, nid, attrs, (lineno, toks[0].start() + 1)


def _assemble(params, raw_nodes, edges, edge_spans) -> PlanDocument:
    indeg: dict[str, int] = {}
    outdeg: dict[str, int] = {}
    for u, v in set(edges):
        outdeg[u] = outdeg.get(u, 0) + 1
        indeg[v] = indeg.get(v, 0) + 1

    nodes = []
    for word, symbol, nid, attrs, _span in raw_nodes:
        kind = SYMBOL_TABLE[symbol]
        if symbol == "@":
            i, o = indeg.get(nid, 0), outdeg.get(nid, 0)
            if i == 0 and o > 0:
                kind = ModuleKind.START
            elif o == 0 and i > 0:
                kind = ModuleKind.END
            else:
                kind = ModuleKind.END if word == "end" else ModuleKind.START
        nodes.append(PlanNode(
            nid, kind,
            cycle_period=attrs.get("x"),
            cycles=attrs.get("cycles"),
            explicit_duration=attrs.get("dur"),
            team=attrs.get("team"),
        ))
    spans = [r[4] for r in raw_nodes]
    try:
        graph = build_graph(nodes, edges, node_spans=spans, edge_spans=edge_spans)
    except GraphError as exc:
        raise GraphError([
            i if i.span else Issue(i.code, i.message, i.nodes, (1, 1)) for i in exc.issues
        ]) from None
    source_spans: dict[str, tuple[int, int]] = {}
    for node, span in zip(nodes, spans):
        source_spans.setdefault(node.id, span)
    return PlanDocument(params, graph, source_spans)


def _format_param(key: str, value: Any) -> str:
    return f"{key}={value}"


def _format_node(node: PlanNode) -> str:
    parts = [node.kind.value, node.kind.symbol, node.id]
    if node.cycle_period is not None:
        parts.append(f"x={node.cycle_period}")
    if node.cycles is not None:
        parts.append(f"cycles={node.cycles}")
    if node.explicit_duration is not None:
        parts.append(f"dur={node.explicit_duration}")
    if node.team is not None:
        parts.append(f"team={node.team}")
    return " ".join(parts)


def serialize_plan(doc: PlanDocument) -> str:
    """Canonical text: params block, nodes in topological order, sorted edges."""
    block = " ".join(_format_param(k, doc.params_block[k]) for k in PARAM_KEYS if k in doc.params_block)
    out = [f"plan {{ {block} }}" if block else "plan { }", ""]
    graph = doc.graph
    out.extend(_format_node(graph.nodes[n]) for n in topological_order(graph))
    out.append("")
    out.extend(f"{u} -> {v}" for u, v in sorted(graph.edges))
    return "\n".join(out) + "\n"


def load_plan(path) -> PlanDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_plan(fh.read())
