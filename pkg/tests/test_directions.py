import pytest
from hypothesis import given, settings, strategies as st

from veech_lab.directions import (DeterminantNotOne, IDENTITY, S, T, cylinder_decomposition, det, generator_word,
                                  isomorphic, leaf_cylinders, matmul, multitwist, parabolic, random_direction,
                                  renormalize)
from veech_lab.origami import BUILTINS, RationalDirection, builtin

from conftest import philox

primitive = st.tuples(st.integers(-9, 9), st.integers(-9, 9)).filter(lambda v: v != (0, 0)).map(
    lambda v: RationalDirection(*v))


def test_silver_l_horizontal_cylinders(silver):
    dec = cylinder_decomposition(silver, RationalDirection(1, 0))
    assert sorted((c.circumference, c.height) for c in dec.cylinders) == [(1, 1), (2, 1)]
    assert dec.area == 3


def test_silver_l_multitwists(silver):
    assert multitwist(silver, RationalDirection(1, 0)).derivative == ((1, 2), (0, 1))
    assert multitwist(silver, RationalDirection(0, 1)).derivative == ((1, 0), (2, 1))


@pytest.mark.parametrize("name", sorted(BUILTINS))
@pytest.mark.parametrize("d", ["1/0", "0/1", "1/1", "-1/1", "2/1", "1/2", "3/-2", "5/3", "-4/7"])
def test_decomposition_matches_first_return_oracle(name, d):
    o = builtin(name)
    d = RationalDirection.parse(d)
    dec = cylinder_decomposition(o, d)
    assert sorted((c.circumference, c.height) for c in dec.cylinders) == leaf_cylinders(o, d)
    assert dec.area == o.n


@settings(max_examples=40, deadline=None)
@given(primitive)
def test_area_is_conserved(d):
    o = builtin("silver-L")
    dec = cylinder_decomposition(o, d)
    assert dec.area == o.n
    assert sorted((c.circumference, c.height) for c in dec.cylinders) == leaf_cylinders(o, d)


@settings(max_examples=25, deadline=None)
@given(primitive)
def test_multitwist_preserves_the_surface(d):
    o = builtin("silver-L")
    try:
        mt = multitwist(o, d)
    except ValueError:
        return
    assert det(mt.derivative) == 1
    assert isomorphic(renormalize(o, mt.derivative), o)
    # the derivative fixes its direction
    p, q = d.vector
    D = mt.derivative
    assert (D[0][0] * p + D[0][1] * q, D[1][0] * p + D[1][1] * q) == (p, q)


def test_non_veech_shear_is_not_affine():
    # T does not stabilise the silver L
    assert not isomorphic(renormalize(builtin("silver-L"), T), builtin("silver-L"))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sampled_from([T, S, ((1, -1), (0, 1)), ((1, 0), (-1, 1))]), max_size=8))
def test_generator_words_multiply_back(gens):
    A = IDENTITY
    for g in gens:
        A = matmul(A, g)
    P = IDENTITY
    for g in generator_word(A):
        P = matmul(P, g)
    assert P == A


def test_renormalize_needs_determinant_one(silver):
    with pytest.raises(DeterminantNotOne):
        renormalize(silver, ((2, 0), (0, 1)))


@given(primitive, st.integers(-5, 5))
def test_parabolic_fixes_its_direction(d, t):
    M = parabolic(d, t)
    assert det(M) == 1
    assert (M[0][0] * d.p + M[0][1] * d.q, M[1][0] * d.p + M[1][1] * d.q) == d.vector


def test_random_directions_are_bounded_and_primitive():
    rng = philox(3)
    for _ in range(200):
        d = random_direction(rng, 12)
        assert abs(d.p) <= 12 and abs(d.q) <= 12
