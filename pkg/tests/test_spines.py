import pytest
from hypothesis import given, settings, strategies as st

from veech_lab.charts import ChartTooSmall, build_chart, sample_cone_lift
from veech_lab.origami import RationalDirection
from veech_lab.spines import SpineForest, spine_through, thickened_spine, tree_ball

from conftest import HORIZONTAL, VERTICAL, philox


def test_root_spine_is_a_collinear_tree(forest_h):
    sp = forest_h.spine(forest_h.chart.root)
    assert sp.is_tree()
    assert len({sp.transverse(l) for l in sp.nodes.values()}) == 1
    # every saddle of the spine runs in the spine direction
    for a, b, prong, steps in sp.edges:
        assert prong.vec in ((1, 0), (-1, 0))
        assert steps >= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_spines_partition_cone_lifts(forest_h, seed):
    x = sample_cone_lift(forest_h.chart, philox(seed))
    sp = forest_h.spine(x)
    assert x.address in sp.nodes
    for lift in list(sp.nodes.values())[:10]:
        assert forest_h.spine(lift) is sp


def test_strips_cross_by_their_width(forest_h):
    sp = forest_h.spine(forest_h.chart.root)
    strips = forest_h.strips(sp)
    assert strips
    for s in strips:
        assert s.width in forest_h.heights
        far = forest_h.spine_by_id(s.far)
        assert abs(far.transverse(far.base) - sp.transverse(sp.base)) == s.width
        assert s.far_sector.lift.address in far.nodes


@pytest.mark.parametrize("d", [HORIZONTAL, VERTICAL, RationalDirection(1, 1)])
def test_tree_ball_is_a_tree(silver, d):
    f = SpineForest(build_chart(silver, radius=2, lazy=True), d)
    tb = tree_ball(f, 2)
    assert tb.is_tree()
    assert max(tb.depth.values()) == 2
    assert set(tb.edges.values()) <= set(f.heights)
    for v in tb.vertices:
        assert tb.distance(tb.center, v) == tb.depth[v]


def test_tree_ball_radius_zero_and_errors(forest_small):
    tb = tree_ball(forest_small, 0)
    assert tb.vertices == [tb.center] and not tb.edges
    with pytest.raises(ValueError):
        tree_ball(forest_small, -1)
    with pytest.raises(KeyError):
        forest_small.spine_by_id("nowhere")
    assert tb.distance(tb.center, "nowhere") == float("inf")


def test_pruned_ball_is_a_subtree(forest_small):
    full = tree_ball(forest_small, 2)
    pruned = tree_ball(forest_small, 2, max_children=2)
    assert pruned.is_tree()
    assert set(pruned.vertices) <= set(full.vertices)
    assert len(pruned.vertices) <= 1 + 2 + 4


def test_thickened_spine_boundaries(forest_h):
    sp = spine_through(forest_h.chart, forest_h.chart.root, HORIZONTAL, forest_h)
    th = thickened_spine(forest_h, sp)
    assert sorted(th.neighbors) == sorted(s.far for s in forest_h.strips(sp))
    for far, lifts in th.boundary.items():
        w = forest_h.spine_by_id(far)
        assert all(l.address in w.nodes for l in lifts)


def test_spine_outside_chart(silver, chart10):
    f = SpineForest(build_chart(silver, radius=1, lazy=True), HORIZONTAL)
    rng = philox(1)
    z = sample_cone_lift(chart10, rng)
    while chart10.distance_float(z) < 3:
        z = sample_cone_lift(chart10, rng)
    with pytest.raises(ChartTooSmall):
        f.spine(f.chart.lift(z.address))
