import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from veech_lab.charts import ChartTooSmall, sample_cone_lift
from veech_lab.projections import (LevelMap, NotInThickenedSpine, WindowMetric, boundary_fiber, bridge,
                                   bottleneck_check, composite_projections, covered_block, flow_constancy,
                                   full_line, level_pairs, lipschitz_scatter, m_set_gap, random_neighbour_sector,
                                   reverse_strip, sample_behind, strip_point, transfer, window, xi_graph,
                                   xi_graph_by_lines)

from conftest import philox

seeds = st.integers(0, 10 ** 6)


@pytest.fixture(scope="module")
def root_spine(forest_h):
    return forest_h.spine(forest_h.chart.root)


@pytest.fixture(scope="module")
def root_strips(forest_h):
    out = []
    for s in forest_h.sectors(forest_h.chart.root):
        try:
            out.append(forest_h.crossing(s))
        except ChartTooSmall:
            pass
    return out


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_outside_windows_are_points_or_saddles(forest_h, root_spine, seed):
    rng = philox(seed)
    x = sample_cone_lift(forest_h.chart, rng)
    if x.address in root_spine.nodes:
        return
    w = window(forest_h, root_spine, x, boundary_fiber(forest_h.direction, Fraction(int(rng.integers(-20, 21)), 4)))
    assert w.structural
    if w.case == "boundary":
        assert w.lifts == [x]
    else:
        # the angle rule and the brute-force geodesic search agree
        assert sorted(l.key() for l in w.predicted) == sorted(w.keys)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_windows_lie_in_their_bridge(forest_h, root_spine, seed):
    rng = philox(seed)
    strips = forest_h.strips(root_spine)
    S = strips[int(rng.integers(len(strips)))]
    U = random_neighbour_sector(forest_h, S, rng)
    if U is None:
        return
    b = bridge(forest_h, S, U)
    assert b.kind in ("point", "saddle")
    keys = {p.address for p in b.lifts}
    for x in sample_behind(forest_h, U, rng):
        w = window(forest_h, root_spine, x, brute_force=False)
        assert {p.address for p in w.lifts} <= keys


def test_flow_lines_keep_their_level(forest_h, root_spine, root_strips):
    lm = LevelMap(forest_h, root_spine)
    checked = 0
    for S in root_strips:
        for sec in full_line(forest_h, S.far_sector)[:12]:
            assert flow_constancy(lm, sec.lift, S, shears=range(-3, 4))
            checked += 1
    assert checked >= 24


@settings(max_examples=60, deadline=None)
@given(st.integers(-40, 40), st.integers(-40, 40))
def test_spine_level_is_the_floor_of_the_shear(forest_h, root_spine, root_strips, s4, a):
    lm = LevelMap(forest_h, root_spine)
    z = strip_point(root_strips[0], root_spine, forest_h.direction, Fraction(s4, 4), Fraction(a, 4), 0)
    assert lm.level(z) == math.floor(Fraction(s4, 4))


def test_points_must_lie_in_the_thickened_spine(forest_h, root_spine, root_strips):
    lm = LevelMap(forest_h, root_spine)
    S = root_strips[0]
    with pytest.raises(NotInThickenedSpine):
        lm.level(strip_point(S, root_spine, forest_h.direction, 0, 0, Fraction(3, 2)))
    back = reverse_strip(forest_h, S)
    with pytest.raises(NotInThickenedSpine):
        lm.level(transfer(strip_point(S, root_spine, forest_h.direction, 0, 0, Fraction(1, 2)), back))


def test_level_pairs_cover_a_block(forest_h, root_spine, root_strips):
    pairs = level_pairs(forest_h, root_spine, root_strips[0], [Fraction(k, 2) for k in range(-30, 30)],
                        philox(2), 2000)
    assert covered_block(pairs) is not None
    assert covered_block({(0, 0)}) is None


def test_lipschitz_scatter_is_finite(forest_h, root_spine, root_strips):
    worst, n = lipschitz_scatter(forest_h, root_spine, root_strips[0], philox(3), 100)
    assert n == 100
    assert math.isfinite(worst) and worst <= 4


def test_m_set_gaps(forest_h, root_spine, root_strips):
    grid = ([Fraction(k, 2) for k in range(-4, 4)], [Fraction(k, 2) for k in range(-6, 6)],
            [Fraction(k, 4) for k in range(5)])
    a, b = m_set_gap(forest_h, root_spine, 0, (root_strips[0], 0), (root_strips[1], 0), *grid)
    assert a >= 0 and b >= 0
    assert b <= a
    assert m_set_gap(forest_h, root_spine, 0, (root_strips[0], 0), (root_strips[0], 0), *grid) == (0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(-8, 8), st.integers(-8, 8), st.integers(0, 4), st.integers(-8, 8), st.integers(-8, 8),
       st.integers(0, 4))
def test_window_metric_is_nonnegative(forest_h, root_spine, root_strips, s1, a1, r1, s2, a2, r2):
    m = WindowMetric(forest_h, root_spine)
    d = forest_h.direction
    z1 = strip_point(root_strips[0], root_spine, d, Fraction(s1, 2), Fraction(a1, 2), Fraction(r1, 4))
    z2 = strip_point(root_strips[-1], root_spine, d, Fraction(s2, 2), Fraction(a2, 2), Fraction(r2, 4))
    assert m(z1, z1) == 0
    assert m(z1, z2) >= abs(float(z1.shear - z2.shear))
    assert m(z1, z2) == m(z2, z1)


def test_xi_graph_routes_agree_and_bottleneck_holds(forest_h, root_spine):
    xi = xi_graph(forest_h, root_spine)
    assert xi.edges == xi_graph_by_lines(forest_h, root_spine)
    rng = philox(8)
    for _ in range(20):
        a, b = (str(s) for s in rng.choice(xi.vertices, 2, replace=False))
        r = bottleneck_check(forest_h, root_spine, xi, a, b, B=3)
        assert r.ok, r.to_json()
        assert r.path[0] == a and r.path[-1] == b


def test_composite_projections(forest_h, root_spine):
    xi = xi_graph(forest_h, root_spine)
    rng = philox(6)
    done = 0
    while done < 5:
        x = sample_cone_lift(forest_h.chart, rng, max_radius=2)
        try:
            cp = composite_projections(forest_h, root_spine, x)
        except ChartTooSmall:
            continue
        done += 1
        assert cp.levels and all(isinstance(k, int) for k in cp.levels)
        assert cp.neighbours <= set(xi.vertices)
