import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from veech_lab.exact import HALF_TURN, Angle, cross, sub
from veech_lab.triangles import (COLLAPSED, EUCLIDEAN, DegenerateTriangle, NotAFan, Fan, balance_matrix,
                                 balance_of_vectors, balance_point, classify_triangle, exact_fan_angles,
                                 fan_angle_profile, fan_decompose, fan_piece_balance_points, sample_euclidean,
                                 sample_triangle, single_saddle)

from conftest import philox

seeds = st.integers(0, 10 ** 6)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_core_triangles_have_no_interior_cones(chart10, seed):
    t = sample_triangle(chart10, philox(seed))
    assert t.interior_cone_count == 0
    assert t.area2() > 0


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_fan_pieces_tile_the_core(chart10, seed):
    t = sample_triangle(chart10, philox(seed))
    dec = fan_decompose(chart10, t)
    assert sum(abs(cross(sub(b.pos, a.pos), sub(c.pos, a.pos))) for a, b, c in dec.pieces) == t.area2()
    for a, b, c in dec.pieces:
        assert single_saddle(chart10, a, b) and single_saddle(chart10, b, c) and single_saddle(chart10, c, a)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_fan_angles_are_monotone(chart10, seed):
    t = sample_triangle(chart10, philox(seed))
    for fan in fan_decompose(chart10, t).fans:
        if len(fan.base) < 3:
            continue
        lam, rho = exact_fan_angles(fan)
        assert all(a < b for a, b in zip(lam, lam[1:]))
        assert all(a > b for a, b in zip(rho, rho[1:]))
        assert fan_angle_profile(fan).monotone
        bps = fan_piece_balance_points(fan)
        assert math.isclose(fan_angle_profile(fan, bps[-1].disk_point).lam[-1], math.pi / 3, abs_tol=1e-9)
        assert math.isclose(fan_angle_profile(fan, bps[0].disk_point).rho[0], math.pi / 3, abs_tol=1e-9)


def test_collapsed_triangle(chart10):
    x = chart10.root
    t = classify_triangle(chart10, x, x, x)
    assert t.classification == COLLAPSED
    assert t.area2() == 0


def test_euclidean_triangles_balance(chart10):
    rng = philox(4)
    for _ in range(10):
        a, b, c = sample_euclidean(chart10, rng)
        bp = balance_point(chart10, (a, b, c))
        assert np.isclose(np.linalg.det(bp.matrix), 1.0)
        assert max(bp.side_lengths_after) - min(bp.side_lengths_after) < 1e-9
        t = classify_triangle(chart10, a, b, c)
        assert t.classification == EUCLIDEAN


@given(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), st.tuples(st.integers(-20, 20), st.integers(-20, 20)))
def test_balance_matrix_is_special_and_equilateral(u, v):
    if u[0] * v[1] - u[1] * v[0] == 0:
        with pytest.raises(DegenerateTriangle):
            balance_matrix([u, v])
        return
    A = balance_matrix([u, v])
    assert math.isclose(np.linalg.det(A), 1.0, rel_tol=1e-9)
    bp = balance_of_vectors([u, v])
    assert max(bp.side_lengths_after) - min(bp.side_lengths_after) < 1e-7 * max(bp.side_lengths_after)


def test_unclosed_sides_are_rejected():
    with pytest.raises(DegenerateTriangle):
        balance_matrix([(1, 0), (0, 1), (1, 1)])


def test_fan_needs_a_base(chart10):
    with pytest.raises(NotAFan):
        fan_angle_profile(Fan(chart10.root, [chart10.root]))


def test_exact_angles_are_acute_or_obtuse_below_pi(chart10):
    rng = philox(9)
    for _ in range(20):
        t = sample_triangle(chart10, rng)
        for fan in fan_decompose(chart10, t).fans:
            if len(fan.base) >= 2:
                lam, rho = exact_fan_angles(fan)
                assert all(Angle(0) < a < HALF_TURN for a in lam + rho)
