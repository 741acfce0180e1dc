import json
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from veech_lab.origami import (BUILTINS, Disconnected, NonBijective, RationalDirection, build_origami, builtin,
                               cone_points, euler_characteristic, gauss_bonnet_excess, genus, load_origami,
                               saddle_connections_up_to)


def corner_classes(n, h, v):
    """Vertex classes by gluing square corners directly (0-indexed permutations)."""
    hi = {h[s]: s for s in range(n)}
    vi = {v[s]: s for s in range(n)}
    g = nx.Graph()
    for s in range(n):
        g.add_nodes_from([(s, c) for c in ("bl", "br", "tl", "tr")])
        g.add_edge((s, "bl"), (hi[s], "br"))
        g.add_edge((s, "tl"), (hi[s], "tr"))
        g.add_edge((s, "bl"), (vi[s], "tl"))
        g.add_edge((s, "br"), (vi[s], "tr"))
    return sorted(len(c) for c in nx.connected_components(g))


@st.composite
def origamis(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    h = draw(st.permutations(range(1, n + 1)))
    v = draw(st.permutations(range(1, n + 1)))
    try:
        return build_origami(n, h, v)
    except Disconnected:
        # make it connected by cycling the horizontal permutation
        return build_origami(n, [k % n + 1 for k in range(1, n + 1)], v)


def test_silver_l_invariants(silver):
    assert genus(silver) == 2
    cones = [c for c in cone_points(silver) if not c.regular]
    assert len(cones) == 1
    assert cones[0].cone_angle == 6
    assert gauss_bonnet_excess(silver) == 4


def test_torus_has_no_cone_points():
    t = builtin("torus")
    assert genus(t) == 1
    assert t.cone_classes == ()
    assert saddle_connections_up_to(t, 5) == []


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtin_corner_classes_match_gluing_oracle(name):
    o = builtin(name)
    assert sorted(c.quarters for c in cone_points(o)) == corner_classes(o.n, o.h, o.v)


@settings(max_examples=60, deadline=None)
@given(origamis())
def test_vertex_classes_match_gluing_oracle(o):
    assert sorted(c.quarters for c in cone_points(o)) == corner_classes(o.n, o.h, o.v)
    # Euler characteristic and angle excess agree
    assert gauss_bonnet_excess(o) == 4 * genus(o) - 4
    assert euler_characteristic(o) == 2 - 2 * genus(o)


def test_bad_permutations_are_rejected():
    with pytest.raises(NonBijective):
        build_origami(3, [1, 1, 2], [1, 2, 3])
    with pytest.raises(NonBijective):
        build_origami(0, [], [])
    with pytest.raises(Disconnected):
        build_origami(2, [1, 2], [1, 2])


def test_unit_saddles_of_silver_l(silver):
    # every square edge joins the single cone point to itself: 3 per oriented unit vector
    recs = saddle_connections_up_to(silver, 1)
    assert sorted((r.holonomy.as_tuple(), r.multiplicity) for r in recs) == sorted(
        ((Fraction(a), Fraction(b)), 3) for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1)))
    # square diagonals add four more holonomies, again one per square
    recs = saddle_connections_up_to(silver, Fraction(3, 2))
    assert len(recs) == 8
    assert {r.multiplicity for r in recs} == {3}


@settings(max_examples=30, deadline=None)
@given(origamis(max_n=5))
def test_saddles_come_in_reverse_pairs(o):
    recs = saddle_connections_up_to(o, 2) if o.cone_classes else []
    table = {(r.holonomy.as_tuple(), r.source, r.target): r.multiplicity for r in recs}
    for (h, s, t), m in table.items():
        assert table[((-h[0], -h[1]), t, s)] == m


def test_saddle_bound_must_be_positive(silver):
    with pytest.raises(ValueError):
        saddle_connections_up_to(silver, 0)


def test_load_origami_from_json(tmp_path):
    p = tmp_path / "o.json"
    p.write_text(json.dumps({"n": 3, "h": [2, 1, 3], "v": [3, 2, 1], "name": "mine"}))
    o = load_origami(p)
    assert o.name == "mine"
    assert genus(o) == 2
    assert load_origami("silver-L") == builtin("silver-L")


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_directions_are_canonical(p, q):
    if p == 0 and q == 0:
        with pytest.raises(ValueError):
            RationalDirection(p, q)
        return
    d = RationalDirection(p, q)
    assert d == RationalDirection(-p, -q)
    assert d.q > 0 or (d.q == 0 and d.p == 1)
    assert RationalDirection.parse(str(d)) == d
