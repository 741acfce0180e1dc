from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from veech_lab.chhs import (TYPES, WGraphWindow, audit_axioms, audit_chains, audit_fullness, build_complex,
                            build_w_graph, closed_form_link, enumerate_links, expected_maximal, level_id,
                            link_summary, simplex_type, twins)
from veech_lab.ehat import BudgetExceeded
from veech_lab.spines import TreeBall, tree_ball

from conftest import HORIZONTAL


def make_tree(edges, center=None):
    verts = sorted({x for e in edges for x in e}) or [center or "v"]
    center = center or verts[0]
    adj = {v: set() for v in verts}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    depth = {center: 0}
    todo = [center]
    while todo:
        x = todo.pop()
        for y in adj[x]:
            if y not in depth:
                depth[y] = depth[x] + 1
                todo.append(y)
    return TreeBall(HORIZONTAL, center, max(depth.values()), verts,
                    {tuple(sorted(e)): Fraction(1) for e in edges}, depth)


@st.composite
def random_trees(draw):
    n = draw(st.integers(1, 7))
    edges = [(f"t{draw(st.integers(0, i - 1))}", f"t{i}") for i in range(1, n)]
    return make_tree(edges, "t0") if edges else make_tree([], "t0")


def test_single_vertex_is_a_cone_on_its_levels():
    c = build_complex(make_tree([], "v"))
    assert c.maximal == sorted(tuple(sorted((level_id("v", k), "v"))) for k in (-1, 0, 1))
    assert all(len(s) <= 2 for s in c.simplices)
    assert all(ch["ok"] for ch in c.checks.values())


def test_adjacent_pair_gives_nine_tetrahedra():
    c = build_complex(make_tree([("a", "b")]))
    assert len(c.maximal) == 9
    assert set(c.maximal) == {tuple(sorted((level_id("a", i), "a", level_id("b", j), "b")))
                              for i in (-1, 0, 1) for j in (-1, 0, 1)}
    assert all(ch["ok"] for ch in c.checks.values())


def test_without_levels_the_complex_is_the_tree():
    tree = make_tree([("a", "b"), ("b", "c"), ("b", "d")])
    c = build_complex(tree, levels=())
    assert set(c.maximal) == set(tree.edges)
    assert {s for s in c.simplices if len(s) == 1} == {(v,) for v in tree.vertices}
    assert all(ch["ok"] for ch in c.checks.values())


def test_link_examples_on_a_path():
    c = build_complex(make_tree([("a", "b"), ("b", "c")]))
    a0, b0, b1, c1 = level_id("a", 0), level_id("b", 0), level_id("b", 1), level_id("c", 1)
    K = lambda v: {level_id(v, k) for k in (-1, 0, 1)}
    assert c.link(("b",)) == K("a") | K("b") | K("c") | {"a", "c"}
    assert c.link((b0, "b")) == {"a", "c"} | K("a") | K("c")
    assert c.link((b0, "b", "a")) == K("a")
    assert c.link((a0, b1)) == {"a", "b"}
    assert c.link((a0, b1, "a")) == {"b"}
    assert c.link((b0, "a")) == {"b"} | K("a")
    assert c.link(("a", "b")) == K("a") | K("b")
    assert c.link((c1,)) == {"c", "b"} | K("b")
    assert simplex_type(c, (a0, b1, "a")) == "level-edge-base"
    assert simplex_type(c, (b0, "a")) == "level-neighbour"
    for s in [("b",), (b0, "b"), (b0, "b", "a"), (a0, b1), (a0, b1, "a"), (b0, "a"), ("a", "b"), (c1,)]:
        assert closed_form_link(c, s)[1] == c.link(s)


@settings(max_examples=25, deadline=None)
@given(random_trees(), st.sets(st.integers(-2, 2), max_size=3))
def test_links_match_closed_forms(tree, levels):
    c = build_complex(tree, levels=levels)
    assert all(ch["ok"] for ch in c.checks.values()), c.checks
    assert set(c.maximal) == expected_maximal(c)
    reports = enumerate_links(c)
    assert all(r.closed_form for r in reports)
    assert all(r.saturation_closed_form is not False for r in reports)
    if levels and tree.edges:
        assert all(r.join is not False for r in reports)
    assert audit_chains(reports)["longest"] <= 9


def test_bare_tree_vertex_links_are_not_joins():
    c = build_complex(make_tree([("h", "x"), ("h", "y")], "h"), levels=())
    r = next(r for r in enumerate_links(c) if r.simplex == ("h",))
    assert r.join is False


def test_star_leaves_are_twins():
    c = build_complex(make_tree([("h", "x"), ("h", "y"), ("h", "z")], "h"))
    assert twins(c, "x") == ["x", "y", "z"]
    assert twins(c, "h") == ["h"]
    summary = link_summary(enumerate_links(c))
    assert summary["types"]["xi"]["saturation_failures"] == 0
    assert set(summary["types"]) <= set(TYPES)


def test_all_types_appear_and_chains_are_short():
    c = build_complex(make_tree([("a", "b"), ("b", "c"), ("b", "d"), ("d", "e")]))
    reports = enumerate_links(c)
    assert {r.kind for r in reports} == set(TYPES)
    chains = audit_chains(reports)
    assert chains["ok"] and 1 <= chains["longest"] <= 9


def test_clique_budget():
    with pytest.raises(BudgetExceeded):
        build_complex(make_tree([("a", "b"), ("b", "c")]), budget=10)


@pytest.fixture(scope="module")
def small_window(forest_small):
    tb = tree_ball(forest_small, 2, max_children=2)
    return forest_small, build_complex(tb)


def test_w_graph_and_audit_on_a_real_window(small_window):
    f, c = small_window
    w = build_w_graph(f, c)
    assert not w.empty_regions
    assert w.is_symmetric()
    assert len(w.nodes) == len(c.maximal)
    assert w.R == pytest.approx(w.measured_diameter + w.slack)
    a = audit_axioms(c, w)
    assert a["ok"], a["violations"]
    assert a["fullness"]["violation_count"] == 0
    assert a["embedding"]["status"] == "not certified"


def test_small_threshold_uses_shared_levels(small_window):
    f, c = small_window
    w = build_w_graph(f, c, R=0.05)
    rules = {e.rule for e in w.edges}
    assert "shared-level" in rules
    full = audit_fullness(c, w)
    assert full["ok"], full["violations"]
    for e in w.edges:
        if e.rule == "shared-level":
            A, B = w.nodes[e.a], w.nodes[e.b]
            assert set(A.vertices) & set(B.vertices)


def test_empty_w_window_is_vacuous(forest_small):
    c = build_complex(tree_ball(forest_small, 0))
    w = build_w_graph(forest_small, c)
    assert w.nodes == [] and w.edges == []
    full = audit_fullness(c, w)
    assert full["ok"] and full["pairs"] == 0
    empty = WGraphWindow([], [], 1.0, 0.0, 1.0, 0, {}, [])
    assert audit_fullness(c, empty)["ok"]
