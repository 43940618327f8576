import re
from pathlib import Path

from hypothesis import given, settings

from plangen import graphs_and_params
from simproj.dsl import load_plan, parse_plan
from simproj.estimator import estimate
from simproj.render import RenderOptions, sum_expression, to_ascii, to_dot

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = Path(__file__).resolve().parent / "golden"

CHAIN = "start @ start\nagile # A team=T1:3\nend @ end\nstart -> A\nA -> end\n"

_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|->|[{}\[\];=,]|[A-Za-z_][A-Za-z0-9_.]*|\S')


def check_dot(text: str) -> tuple[set[str], list[tuple[str, str]]]:
    """Minimal DOT grammar check: header, balanced braces, terminated statements,
    nodes declared before any edge uses them. Returns (nodes, edges)."""
    toks = _TOKEN.findall(text)
    assert toks[:3] == ["digraph", "plan", "{"] and toks[-1] == "}"
    depth = 0
    for t in toks:
        depth += {"{": 1, "}": -1}.get(t, 0)
        assert depth >= 0
    assert depth == 0
    body = toks[3:-1]
    stmts, cur = [], []
    for t in body:
        if t == ";":
            stmts.append(cur)
            cur = []
        else:
            cur.append(t)
    assert cur == [], "unterminated statement"
    declared: set[str] = set()
    edges = []
    for s in stmts:
        if s[0] in ("node", "edge", "graph") or (len(s) == 3 and s[1] == "="):
            continue
        if len(s) > 1 and s[1] == "->":
            u, v = s[0].strip('"'), s[2].strip('"')
            assert u in declared and v in declared
            edges.append((u, v))
            rest = s[3:]
        else:
            declared.add(s[0].strip('"'))
            rest = s[1:]
        if rest:
            assert rest[0] == "[" and rest[-1] == "]"
    return declared, edges


def _labels(dot: str) -> list[str]:
    return re.findall(r'label="((?:[^"\\]|\\.)*)"', dot)


def test_minimal_chain_dot():
    g = parse_plan(CHAIN).graph
    dot = to_dot(g)
    nodes, edges = check_dot(dot)
    assert len(nodes) == 3 and len(edges) == 2
    assert [label.split(" ")[0] for label in _labels(dot)] == ["@", "#", "@"]


def test_dot_shapes_by_kind():
    dot = to_dot(load_plan(ROOT / "fixtures" / "web_service.plan").graph)
    assert '"review" [shape=diamond' in dot
    assert '"fork1" [shape=triangle' in dot
    assert '"merge3" [shape=invtriangle' in dot
    assert '"s" [shape=circle' in dot
    assert '"build" [shape=box' in dot


def test_dot_without_teams():
    doc = load_plan(ROOT / "fixtures" / "web_service.plan")
    dot = to_dot(doc.graph, estimate(doc.graph, doc.params()), RenderOptions(show_teams=False))
    assert not any("T1" in label or ":3" in label for label in _labels(dot))
    check_dot(dot)


def test_dot_without_durations_or_critical_path():
    doc = load_plan(ROOT / "fixtures" / "web_service.plan")
    est = estimate(doc.graph, doc.params())
    dot = to_dot(doc.graph, est, RenderOptions(show_durations=False, annotate_critical_path=False))
    assert "week" not in dot and "color=red" not in dot


def test_dot_critical_path_marked():
    doc = load_plan(ROOT / "fixtures" / "web_service.plan")
    est = estimate(doc.graph, doc.params())
    dot = to_dot(doc.graph, est)
    red = set(re.findall(r'"(\w+)" -> "(\w+)" \[color=red', dot))
    path = est.critical_path
    assert red == set(zip(path, path[1:]))


def test_golden_dot():
    for name in ("web_service", "apf"):
        doc = load_plan(ROOT / "fixtures" / f"{name}.plan")
        dot = to_dot(doc.graph, estimate(doc.graph, doc.params()))
        assert dot == (GOLDEN / f"{name}.dot").read_text(encoding="utf-8")
        check_dot(dot)


@settings(max_examples=150, deadline=None)
@given(graphs_and_params)
def test_random_dot_well_formed(gp):
    g, p = gp
    est = estimate(g, p)
    dot = to_dot(g, est)
    nodes, edges = check_dot(dot)
    assert nodes == set(g.nodes)
    assert sorted(edges) == sorted(g.edges)
    assert to_dot(g, est) == dot


def test_ascii_chain():
    assert to_ascii(parse_plan(CHAIN).graph).splitlines() == ["@ start", "# A", "@ end"]


def test_ascii_brackets_parallel_members():
    g = parse_plan("start @ s\nsplitter { f\nagile # a\nagile # b\nsim * c\nintegrator } j\nend @ e\n"
                   "s -> f\nf -> a\nf -> b\nf -> c\na -> j\nb -> j\nc -> j\nj -> e\n").graph
    lines = to_ascii(g).splitlines()
    assert "[# a | # b | * c]" in lines
    assert len(lines) == 5


def test_golden_ascii():
    for name in ("web_service", "apf"):
        g = load_plan(ROOT / "fixtures" / f"{name}.plan").graph
        assert to_ascii(g) == (GOLDEN / f"{name}.txt").read_text(encoding="utf-8")


def test_sum_expression_fixture_forms():
    for name, expected in (("web_service", "1+1+0*+1**+1*+0"), ("apf", "1+0*+1+1+0*+0*+1+0*+1+0*")):
        doc = load_plan(ROOT / "fixtures" / f"{name}.plan")
        assert sum_expression(estimate(doc.graph, doc.params())) == expected


def test_sum_expression_single_module():
    assert sum_expression(estimate(parse_plan(CHAIN).graph)) == "1"


def test_sum_expression_explicit_units_when_not_whole():
    g = parse_plan("start @ s\nagile # a\nchecker C c dur=3d\nend @ e\ns -> a\na -> c\nc -> e\n").graph
    assert sum_expression(estimate(g)) == "1+3d"


@settings(max_examples=150, deadline=None)
@given(graphs_and_params)
def test_term_count_matches_stages(gp):
    g, p = gp
    est = estimate(g, p)
    terms = sum_expression(est).split("+")
    assert len(terms) == max(1, len(est.stages))
    assert sum_expression(est) == est.sum_expression
