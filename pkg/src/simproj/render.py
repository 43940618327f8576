"""Text views of a plan: Graphviz DOT, a stage-per-line ASCII sketch, sum expressions."""

from __future__ import annotations

from dataclasses import dataclass

from simproj.estimator import Estimate, format_sum_expression
from simproj.model import ModuleKind, PlanGraph, topological_order

SHAPES = {
    ModuleKind.AGILE: "box",
    ModuleKind.SIM: "box",
    ModuleKind.SPLITTER: "triangle",
    ModuleKind.INTEGRATOR: "invtriangle",
    ModuleKind.CHECKER: "diamond",
    ModuleKind.START: "circle",
    ModuleKind.END: "circle",
}


@dataclass(frozen=True)
class RenderOptions:
    show_durations: bool = True
    show_teams: bool = True
    annotate_critical_path: bool = True


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(graph: PlanGraph, estimate: Estimate | None = None,
           opts: RenderOptions = RenderOptions()) -> str:
    critical_edges: set[tuple[str, str]] = set()
    critical_nodes: set[str] = set()
    if estimate is not None and opts.annotate_critical_path:
        path = estimate.critical_path
        critical_nodes = set(path)
        critical_edges = set(zip(path, path[1:]))

    lines = ["digraph plan {", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for nid in topological_order(graph):
        node = graph.nodes[nid]
        label = [f"{node.kind.symbol} {nid}"]
        if estimate is not None and opts.show_durations and node.kind not in (
                ModuleKind.START, ModuleKind.END):
            d = estimate.node_durations[nid]
            label.append(f"{d.describe()} (0*)" if d.promoted else d.describe())
        if opts.show_teams and node.team is not None:
            label.append(str(node.team))
        attrs = [f"shape={SHAPES[node.kind]}", f"label={_quote(chr(10).join(label))}"]
        if node.kind is ModuleKind.SIM:
            attrs.append('style="rounded"')
        if nid in critical_nodes:
            attrs.append("penwidth=2")
        lines.append(f"  {_quote(nid)} [{', '.join(attrs)}];")
    for u, v in sorted(graph.edges):
        style = " [color=red, penwidth=2]" if (u, v) in critical_edges else ""
        lines.append(f"  {_quote(u)} -> {_quote(v)}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _levels(graph: PlanGraph) -> list[list[str]]:
    depth: dict[str, int] = {}
    for nid in topological_order(graph):
        depth[nid] = max((depth[p] + 1 for p in graph.predecessors(nid)), default=0)
    rows: list[list[str]] = [[] for _ in range(max(depth.values(), default=-1) + 1)]
    for nid in sorted(depth):
        rows[depth[nid]].append(nid)
    return rows


def to_ascii(graph: PlanGraph) -> str:
    """One line per depth level; nodes sharing a level are bracketed together."""
    out = []
    for row in _levels(graph):
        cells = [f"{graph.nodes[n].kind.symbol} {n}" for n in row]
        out.append(cells[0] if len(cells) == 1 else "[" + " | ".join(cells) + "]")
    return "\n".join(out) + "\n"


def sum_expression(estimate: Estimate) -> str:
    return format_sum_expression(estimate.stages, estimate.params)
