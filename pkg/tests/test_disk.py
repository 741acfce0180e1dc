import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from veech_lab.directions import S, T
from veech_lab.disk import (BASE, DiskPoint, Horoball, WindowTooSmall, act_on_cusp, closest_point_projection,
                            cusp_window, electrified_distance, gap_exact, geodesic_point, horoball_gap, hyp_distance,
                            mobius)
from veech_lab.origami import RationalDirection

points = st.builds(lambda x, y: DiskPoint(complex(x, y)), st.floats(-5, 5), st.floats(0.05, 5))
cusps = st.tuples(st.integers(-12, 12), st.integers(-12, 12)).filter(lambda v: v != (0, 0)).map(
    lambda v: RationalDirection(*v))


def test_distance_on_the_imaginary_axis():
    assert math.isclose(hyp_distance(BASE, DiskPoint(complex(0, math.e))), 1.0)


@given(points, points, points)
def test_hyperbolic_metric_axioms(a, b, c):
    assert hyp_distance(a, b) >= 0
    assert math.isclose(hyp_distance(a, b), hyp_distance(b, a), abs_tol=1e-9)
    assert hyp_distance(a, c) <= hyp_distance(a, b) + hyp_distance(b, c) + 1e-9


@given(points, points, st.sampled_from([S, T, ((0, -1), (1, 0)), ((2, 1), (1, 1))]))
def test_isometries_preserve_distance(a, b, M):
    ma, mb = DiskPoint(mobius(M, a.z)), DiskPoint(mobius(M, b.z))
    assert math.isclose(hyp_distance(a, b), hyp_distance(ma, mb), rel_tol=1e-7, abs_tol=1e-7)


@settings(max_examples=200)
@given(cusps, cusps)
def test_gap_matches_closed_form(a, b):
    assume(a != b)
    g = horoball_gap(Horoball(a), Horoball(b))
    assert math.isclose(g.distance, gap_exact(a, b), rel_tol=1e-9, abs_tol=1e-9)
    # distinct horoballs of scale 1/8 are far more than 1 apart
    assert g.distance >= 2 * math.log(8) - 1e-9
    assert Horoball(a).on_boundary(g.start) and Horoball(b).on_boundary(g.end)
    assert math.isclose(hyp_distance(g.start, g.end), g.distance, rel_tol=1e-7, abs_tol=1e-7)


@settings(max_examples=100)
@given(cusps, points)
def test_projection_is_nearest_sampled_boundary_point(a, X):
    B = Horoball(a)
    assume(not B.contains(X))
    P = closest_point_projection(B, X)
    assert B.on_boundary(P)
    d = hyp_distance(X, P)
    # compare against points of the boundary horocycle
    if B.at_infinity:
        others = [DiskPoint(complex(X.x + s, B.diameter)) for s in np.linspace(-3, 3, 41)]
    else:
        c = complex(B.point, B.diameter / 2)
        r = B.diameter / 2
        others = [DiskPoint(c + r * complex(math.cos(t), math.sin(t))) for t in np.linspace(-math.pi / 2 + 1e-3, 3 * math.pi / 2 - 1e-3, 121)]
        others = [p for p in others if p.y > 0]
    assert all(d <= hyp_distance(X, q) + 1e-9 for q in others)


@given(cusps, cusps, st.sampled_from([S, T, ((1, 2), (0, 1)), ((1, 0), (2, 1))]))
def test_gap_is_invariant_under_the_modular_group(a, b, M):
    assume(a != b)
    assert math.isclose(gap_exact(a, b), gap_exact(act_on_cusp(M, a), act_on_cusp(M, b)))


def test_cusp_window_and_electrified_distance():
    w = cusp_window(3)
    assert w[0] == RationalDirection(1, 0)
    assert len(set(w)) == len(w)
    inf, zero = RationalDirection(1, 0), RationalDirection(0, 1)
    assert electrified_distance(inf, zero, 3) == pytest.approx(2 * math.log(8))
    assert electrified_distance(inf, inf, 3) == 0.0
    # 1/3 and 2/5 are Farey neighbours but 2/5 lies outside the window
    with pytest.raises(WindowTooSmall):
        electrified_distance(RationalDirection(1, 3), RationalDirection(2, 5), 3)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 40), st.integers(0, 40))
def test_electrified_distance_never_exceeds_a_direct_gap(i, j):
    w = cusp_window(4)
    a, b = w[i % len(w)], w[j % len(w)]
    assert electrified_distance(a, b, 4) <= gap_exact(a, b) + 1e-9


def test_scale_changes_horoball_size():
    a = Horoball(RationalDirection(0, 1), Fraction(1, 4))
    assert a.diameter == pytest.approx(0.25)
    assert Horoball(RationalDirection(1, 0)).diameter == pytest.approx(8)


@given(points, points, st.floats(0, 1))
def test_geodesic_points_split_distance(a, b, t):
    p = geodesic_point(a, b, t)
    assert math.isclose(hyp_distance(a, p) + hyp_distance(p, b), hyp_distance(a, b), rel_tol=1e-6, abs_tol=1e-6)

