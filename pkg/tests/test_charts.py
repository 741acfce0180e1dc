import math

import pytest
from hypothesis import given, settings, strategies as st

from veech_lab.charts import (ChartTooSmall, build_chart, flat_geodesic, funnel_oracle, sample_cone_lift,
                              taut_geodesic)
from veech_lab.exact import HALF_TURN, Surd, norm2
from veech_lab.origami import NoConePoint, builtin

from conftest import philox


def test_torus_has_no_chart():
    with pytest.raises(NoConePoint):
        build_chart(builtin("torus"))


def test_unit_lifts_around_the_root(chart3):
    # twelve prongs along the axes leave the 6 pi cone point, each reaching a lift at distance 1
    near = [l for l in chart3.cone_lifts if chart3.distance_float(l) == 1]
    assert len(near) == 12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_taut_geodesic_matches_funnel_oracle(chart10, seed):
    rng = philox(seed)
    x, y = sample_cone_lift(chart10, rng), sample_cone_lift(chart10, rng)
    path = flat_geodesic(chart10, x, y)
    prongs, hols = funnel_oracle(chart10, x, y)
    assert path.prongs == list(prongs)
    assert [tuple(s) for s in path.segments] == [tuple(h) for h in hols]
    assert path.certified
    assert all(c.left >= HALF_TURN and c.right >= HALF_TURN for c in path.certificates)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_geodesics_are_symmetric_and_exact(chart10, seed):
    rng = philox(seed)
    x, y = sample_cone_lift(chart10, rng), sample_cone_lift(chart10, rng)
    a, b = flat_geodesic(chart10, x, y), flat_geodesic(chart10, y, x)
    assert a.length == b.length
    assert sorted(a.length2s) == sorted(b.length2s)
    assert math.isclose(float(a.length), a.length_float, rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_triangle_inequality(chart10, seed):
    rng = philox(seed)
    x, y, z = (sample_cone_lift(chart10, rng, max_radius=5) for _ in range(3))
    d = lambda a, b: flat_geodesic(chart10, a, b).length
    assert d(x, z) <= d(x, y) + d(y, z)


def test_search_route_agrees_on_a_small_chart(silver):
    chart = build_chart(silver, radius=3)
    rng = philox(11)
    for _ in range(15):
        x, y = sample_cone_lift(chart, rng), sample_cone_lift(chart, rng)
        taut = flat_geodesic(chart, x, y)
        try:
            found = flat_geodesic(chart, x, y, method="search")
        except ChartTooSmall:
            continue
        assert found.length == taut.length


def test_straight_segment_length_is_exact(chart3):
    for lift in chart3.cone_lifts[:40]:
        path = taut_geodesic(chart3, chart3.root, lift)
        total = Surd()
        for s in path.segments:
            total = total + Surd.sqrt(norm2(s))
        assert total == path.length


def test_endpoint_outside_chart_is_refused(silver, chart10):
    small = build_chart(silver, radius=1, lazy=True)
    far = None
    rng = philox(5)
    while far is None:
        z = sample_cone_lift(chart10, rng)
        if chart10.distance_float(z) > 2:
            far = z
    with pytest.raises(ChartTooSmall):
        flat_geodesic(small, small.root, small.lift(far.address))


def test_unknown_method(chart3):
    with pytest.raises(ValueError):
        flat_geodesic(chart3, chart3.root, chart3.cone_lifts[1], method="guess")
