import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from veech_lab.charts import build_chart, sample_cone_lift
from veech_lab.disk import gap_exact
from veech_lab.ehat import (BudgetExceeded, EhatGraph, build_ehat, close_pair_diameters, four_point_delta,
                            needed_directions, preferred_path, sample_triples, slimness_sweep, sweep_csv_rows)
from veech_lab.origami import RationalDirection, builtin

from conftest import HORIZONTAL, VERTICAL, philox


@pytest.fixture(scope="module")
def graph(silver):
    chart = build_chart(silver, radius=2)
    rng = philox(21)
    pairs = [(sample_cone_lift(chart, rng), sample_cone_lift(chart, rng)) for _ in range(12)]
    dirs = [HORIZONTAL, VERTICAL]
    dirs += [d for d in needed_directions(chart, [(x, y, y) for x, y in pairs]) if d not in dirs]
    return build_ehat(silver, dirs, 2, chart=chart), pairs


def test_jump_weights(graph):
    G, _ = graph
    jumps = [e for e in G.edges.values() if e.kind == "jump"]
    assert jumps
    for e in jumps:
        want = max(1.0, gap_exact(G.direction_of[e.a], G.direction_of[e.b], Fraction(1, 8)))
        assert math.isclose(e.weight, want)
    # Farey neighbours at scale 1/8 are 2 log 8 apart
    assert math.isclose(G.jump_weight(HORIZONTAL, VERTICAL), 2 * math.log(8))
    assert G.components() == 1


def test_strip_edges_carry_widths(graph):
    G, _ = graph
    for e in G.edges.values():
        if e.kind == "strip":
            assert G.direction_of[e.a] == G.direction_of[e.b]
            assert e.weight in {float(h) for h in G.forests[G.direction_of[e.a]].heights}


def test_preferred_paths_walk_graph_edges(graph):
    G, pairs = graph
    center = G.directions[0]
    for x, y in pairs:
        p = preferred_path(G, x, y)
        if x == y:
            assert p.collapsed == []
            continue
        assert p.collapsed[0] == G.vertex_of(x, center)
        assert p.collapsed[-1] == G.vertex_of(y, center)
        assert G.distance(p.collapsed[0], p.collapsed[-1]) <= p.length + 1e-9
        saddles = [pc for pc in p.pieces if pc.kind == "saddle"]
        assert len(saddles) == len(p.base.segments)
        assert all(pc.length > 0 for pc in saddles)


def test_missing_direction_is_reported(silver):
    chart = build_chart(silver, radius=2)
    G = build_ehat(silver, [HORIZONTAL], 2, chart=chart)
    rng = philox(2)
    for _ in range(50):
        x, y = sample_cone_lift(chart, rng), sample_cone_lift(chart, rng)
        base_dirs = needed_directions(chart, [(x, y, y)])
        if any(d != HORIZONTAL for d in base_dirs):
            with pytest.raises(KeyError):
                preferred_path(G, x, y)
            return
    pytest.fail("no sampled pair needed a second direction")


def test_budget(silver):
    with pytest.raises(BudgetExceeded):
        build_ehat(silver, [HORIZONTAL, VERTICAL], 2, budget=10)
    with pytest.raises(ValueError):
        build_ehat(silver, [], 2)


def _toy(edges):
    chart = build_chart(builtin("silver-L"), radius=1)
    G = EhatGraph(chart, [HORIZONTAL])
    for a, b, w in edges:
        G.add_node(a, HORIZONTAL)
        G.add_node(b, HORIZONTAL)
        G.add_edge(a, b, w, "strip", "toy")
    return G


def test_four_point_delta_oracles():
    tree = _toy([("a", "b", 1), ("b", "c", 1), ("b", "d", 1), ("d", "e", 2)])
    assert four_point_delta(tree, tree.nodes) == 0.0
    square = _toy([("a", "b", 1), ("b", "c", 1), ("c", "d", 1), ("d", "a", 1)])
    assert four_point_delta(square, square.nodes) == 1.0
    assert four_point_delta(square, ["a", "b"]) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(1, 4)), min_size=4, max_size=14))
def test_four_point_delta_is_bounded_by_half_the_diameter(edges):
    G = _toy([(f"n{a}", f"n{b}", w) for a, b, w in edges if a != b] or [("n0", "n1", 1)])
    if G.components() != 1:
        return
    diam = max(G.distances_from(n).max() for n in G.nodes)
    assert 0 <= four_point_delta(G, G.nodes) <= diam / 2 + 1e-9


def test_slimness_sweep_is_finite_and_stable(silver):
    chart = build_chart(silver, radius=2)
    triples = sample_triples(chart, philox(4), 8, 2)
    low = slimness_sweep(silver, [HORIZONTAL, VERTICAL], 2, triples)
    high = slimness_sweep(silver, [HORIZONTAL, VERTICAL], 3, triples)
    assert math.isfinite(low.delta_hat) and math.isfinite(high.delta_hat)
    assert abs(low.delta_hat - high.delta_hat) <= 1.0
    rows = sweep_csv_rows(low)
    assert len(rows) == 8 and {"x", "y", "z", "delta"} <= set(rows[0])


def test_close_pairs_have_bounded_unions(graph):
    G, _ = graph
    assert math.isfinite(close_pair_diameters(G, philox(3), pairs=4))
    assert RationalDirection(1, 0) in G.forests
