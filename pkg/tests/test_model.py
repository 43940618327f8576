import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plangen import graphs, respects_edges
from simproj.model import (
    Calendar,
    CycleDetected,
    Duration,
    EstimateParams,
    GraphError,
    InexactConversion,
    InvalidParams,
    ModuleKind,
    PlanNode,
    Span,
    TimeUnit,
    build_graph,
    convert,
    find_cycle,
    normalize_to_days,
    topological_order,
)

D, W, M, Y = TimeUnit.DAY, TimeUnit.WEEK, TimeUnit.MONTH, TimeUnit.YEAR


def node(nid, kind=ModuleKind.AGILE, **kw):
    return PlanNode(nid, kind, **kw)


def chain():
    return build_graph(
        [node("start", ModuleKind.START), node("A"), node("end", ModuleKind.END)],
        [("start", "A"), ("A", "end")],
    )


def test_unit_order():
    assert D < W < M < Y


def test_build_graph_minimal_chain():
    g = chain()
    assert set(g.nodes) == {"start", "A", "end"}
    assert g.successors("start") == ("A",)
    assert g.in_degree("end") == 1


@pytest.mark.parametrize(
    "nodes, edges, code, who",
    [
        ([node("A"), node("A")], [], "DuplicateId", ("A",)),
        ([node("A")], [("A", "B")], "UnknownEndpoint", ("B",)),
        ([node("A")], [("A", "A")], "SelfEdge", ("A",)),
        ([node("A"), node("B")], [("A", "B"), ("A", "B")], "DuplicateEdge", ("A", "B")),
    ],
)
def test_build_graph_errors(nodes, edges, code, who):
    with pytest.raises(GraphError) as info:
        build_graph(nodes, edges)
    assert info.value.codes == [code]
    assert info.value.issues[0].nodes == who


def test_build_graph_reports_every_violation():
    with pytest.raises(GraphError) as info:
        build_graph([node("A"), node("A"), node("B")], [("A", "Z"), ("B", "B"), ("Q", "A")])
    assert sorted(info.value.codes) == ["DuplicateId", "SelfEdge", "UnknownEndpoint", "UnknownEndpoint"]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from("abcdef"), max_size=8),
       st.lists(st.tuples(st.sampled_from("abcdefg"), st.sampled_from("abcdefg")), max_size=12))
def test_build_graph_fuzz(ids, edges):
    try:
        g = build_graph([node(i) for i in ids], edges)
    except GraphError as exc:
        assert exc.issues
        return
    assert len(set(ids)) == len(ids)
    assert len(set(g.edges)) == len(g.edges)
    for u, v in g.edges:
        assert u != v and u in g.nodes and v in g.nodes
    # re-building from the accepted graph is clean
    assert build_graph(g.nodes.values(), g.edges) == g


def test_topological_order_chain():
    assert topological_order(chain()) == ["start", "A", "end"]


def test_topological_order_diamond_breaks_ties_by_id():
    g = build_graph(
        [node("end", ModuleKind.END), node("B"), node("A"), node("start", ModuleKind.START)],
        [("start", "B"), ("start", "A"), ("A", "end"), ("B", "end")],
    )
    assert topological_order(g) == ["start", "A", "B", "end"]


def test_topological_order_cycle():
    g = build_graph(
        [node("start", ModuleKind.START), node("A"), node("end", ModuleKind.END)],
        [("start", "A"), ("A", "end"), ("end", "start")],
    )
    with pytest.raises(CycleDetected) as info:
        topological_order(g)
    assert set(info.value.cycle) == {"start", "A", "end"}


def _brute_force_is_topological(order, g):
    return sorted(order) == sorted(g.nodes) and respects_edges(order, g.edges)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_topological_order_random_dags(n, seed):
    rng = random.Random(seed)
    ids = [f"n{i:02d}" for i in range(n)]
    rank = ids[:]
    rng.shuffle(rank)
    edges = [(rank[i], rank[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
    g = build_graph([node(i) for i in ids], edges)
    order = topological_order(g)
    assert _brute_force_is_topological(order, g)
    assert find_cycle(g) is None


@given(graphs)
@settings(max_examples=100, deadline=None)
def test_topological_order_on_plans(g):
    assert _brute_force_is_topological(topological_order(g), g)


def test_convert_default_calendar_ratios():
    assert convert(Duration(1, W), D) == Duration(5, D)
    assert convert(Duration(1, M), W) == Duration(4, W)
    assert convert(Duration(10, D), W) == Duration(2, W)


def test_convert_inexact():
    with pytest.raises(InexactConversion):
        convert(Duration(3, D), W)


def test_convert_keeps_promoted_flag():
    assert convert(Duration(1, W, promoted=True), D).promoted


def test_normalize_to_days():
    assert normalize_to_days(Duration(4, W)) == 20
    assert normalize_to_days(Duration(1, M)) == 20
    # 6 months and 1 week, worked out independently: 6 * 4 * 5 + 1 * 5
    assert normalize_to_days(Duration(6, M)) + normalize_to_days(Duration(1, W)) == 6 * 4 * 5 + 5
    assert normalize_to_days(Duration(1, Y)) == 240


calendars = st.builds(Calendar, st.integers(1, 7), st.integers(1, 6), st.integers(1, 13))


@given(st.integers(0, 500), st.sampled_from([W, M, Y]), calendars)
def test_downward_conversion_preserves_days(n, unit, cal):
    d = Duration(n, unit)
    down = convert(d, TimeUnit(unit - 1), cal)
    assert normalize_to_days(down, cal) == normalize_to_days(d, cal)
    assert convert(down, unit, cal) == d


def test_calendar_rejects_zero_ratio():
    with pytest.raises(InvalidParams):
        Calendar(days_per_week=0)


def test_duration_rejects_negative():
    with pytest.raises(ValueError):
        Duration(-1, D)


def test_duration_parse_round_trip():
    for text in ("1d", "12w", "3m", "0y"):
        assert str(Duration.parse(text)) == text
    with pytest.raises(ValueError):
        Duration.parse("3x")


def test_params_default_cycles_follow_alpha():
    assert EstimateParams(alpha=4).default_cycles == 4
    assert EstimateParams(alpha=4, default_cycles=2).default_cycles == 2
    with pytest.raises(InvalidParams):
        EstimateParams(alpha=0)


def test_span_from_days():
    assert str(Span.from_days(21, W, D)) == "4 weeks 1 day"
    assert str(Span.from_days(125, M, W)) == "6 months 1 week"
    assert str(Span.from_days(20, M, W)) == "1 month"
    # residual that is not whole weeks falls back to days
    assert str(Span.from_days(23, M, W)) == "1 month 3 days"
