"""Cylinder decompositions, multitwists and quotient spines in rational directions.

Direction ``p/q`` is analysed by renormalising: an integer matrix ``A`` of
determinant one with ``A (p, q) = (1, 0)`` turns the origami into another
origami on which the direction is horizontal, and horizontal cylinders are
read off the rows of the square-tiling.

Circumferences are counted in primitive holonomy vectors of the direction and
heights are transverse measures, so ``circumference * height`` is the area
and both are rational.  For the axis directions these are the flat values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Sequence

from .exact import Prong
from .origami import Origami, RationalDirection, Saddle

Matrix = tuple[tuple[int, int], tuple[int, int]]

T = ((1, 1), (0, 1))
T_INV = ((1, -1), (0, 1))
S = ((1, 0), (1, 1))
S_INV = ((1, 0), (-1, 1))
MINUS_I = ((-1, 0), (0, -1))
IDENTITY = ((1, 0), (0, 1))


class DeterminantNotOne(ValueError):
    pass


def matmul(A, B) -> Matrix:
    return ((A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
            (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]))


def det(A) -> int:
    return A[0][0] * A[1][1] - A[0][1] * A[1][0]


def inverse(A) -> Matrix:
    if det(A) != 1:
        raise DeterminantNotOne(f"{A} does not have determinant 1")
    return ((A[1][1], -A[0][1]), (-A[1][0], A[0][0]))


def as_matrix(A) -> Matrix:
    return ((int(A[0][0]), int(A[0][1])), (int(A[1][0]), int(A[1][1])))


def generator_word(A) -> list[Matrix]:
    """Write ``A`` as a product of T, S, their inverses and -I (leftmost first)."""
    A = as_matrix(A)
    if det(A) != 1:
        raise DeterminantNotOne(f"{A} does not have determinant 1")
    left: list[Matrix] = []  # g_k ... g_1 A = current
    cur = A
    while cur[1][0] != 0:
        a, c = cur[0][0], cur[1][0]
        if a == 0:
            # then c = +-1 and T^c makes the top-left entry 1
            step = ((1, c), (0, 1))
            left.append(((1, -c), (0, 1)))
        elif abs(a) > abs(c):
            m = int(a / c)  # truncation keeps |a - m c| < |c|
            step = ((1, -m), (0, 1))
            left.append(((1, m), (0, 1)))
        else:
            m = int(c / a)
            step = ((1, 0), (-m, 1))
            left.append(((1, 0), (m, 1)))
        cur = matmul(step, cur)
    # cur is upper triangular with diagonal +-1
    word = []
    for g in left:
        word.append(g)
    if cur[0][0] == -1:
        word.append(MINUS_I)
        cur = matmul(MINUS_I, cur)
    b = cur[0][1]
    if b:
        word.append(((1, b), (0, 1)))
    return _expand(word)


def _expand(word: Sequence[Matrix]) -> list[Matrix]:
    out = []
    for g in word:
        if g == MINUS_I:
            out.append(g)
        elif g[1][0] == 0:
            k = g[0][1]
            out.extend([T if k > 0 else T_INV] * abs(k))
        else:
            k = g[1][0]
            out.extend([S if k > 0 else S_INV] * abs(k))
    return out


def _compose(f, g) -> tuple[int, ...]:
    """The permutation s -> f(g(s))."""
    return tuple(f[g[s]] for s in range(len(g)))


def _inv(f) -> tuple[int, ...]:
    out = [0] * len(f)
    for a, b in enumerate(f):
        out[b] = a
    return tuple(out)


def _apply_generator(h, v, g):
    if g == T:
        return h, _compose(v, _inv(h))
    if g == T_INV:
        return h, _compose(v, h)
    if g == S:
        return _compose(h, _inv(v)), v
    if g == S_INV:
        return _compose(h, v), v
    if g == MINUS_I:
        return _inv(h), _inv(v)
    raise ValueError(f"not a generator: {g}")


def renormalize(o: Origami, A) -> Origami:
    """The origami of the deformed surface ``A . o`` (squares keep their labels)."""
    word = generator_word(A)
    h, v = o.h, o.v
    for g in reversed(word):
        h, v = _apply_generator(h, v, g)
    return Origami(o.n, tuple(h), tuple(v), o.name)


def canonical_form(o: Origami) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Relabelling-invariant form: least (h, v) over breadth-first relabellings."""
    best = None
    for s0 in range(o.n):
        label = {s0: 0}
        order = [s0]
        i = 0
        while i < len(order):
            s = order[i]
            for t in (o.h[s], o.v[s]):
                if t not in label:
                    label[t] = len(order)
                    order.append(t)
            i += 1
        form = (tuple(label[o.h[s]] for s in order), tuple(label[o.v[s]] for s in order))
        if best is None or form < best:
            best = form
    return best


def isomorphic(a: Origami, b: Origami) -> bool:
    return a.n == b.n and canonical_form(a) == canonical_form(b)


def straightening_matrix(d: RationalDirection) -> Matrix:
    """``A`` in SL(2, Z) with ``A (p, q) = (1, 0)``, of the form [[a, b], [-q, p]]."""
    p, q = d.p, d.q
    # extended Euclid for a p + b q = 1
    old_r, r = p, q
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        k = old_r // r
        old_r, r = r, old_r - k * r
        old_s, s = s, old_s - k * s
        old_t, t = t, old_t - k * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    assert old_r == 1
    return ((old_s, old_t), (-q, p))


# ---------------------------------------------------------------------------
# horizontal cylinders


def _cycles(perm) -> list[list[int]]:
    seen = set()
    out = []
    for s in range(len(perm)):
        if s in seen:
            continue
        cyc = [s]
        seen.add(s)
        t = perm[s]
        while t != s:
            cyc.append(t)
            seen.add(t)
            t = perm[t]
        out.append(cyc)
    return out


def _row_top_is_singular(o: Origami, row: list[int]) -> bool:
    return any(o.is_cone(o.corner_index[(s, 3)][0]) for s in row)


def horizontal_cylinders(o: Origami) -> list[dict]:
    """Rows stacked into maximal cylinders, bottom row first in each."""
    rows = _cycles(o.h)
    row_of = {s: i for i, r in enumerate(rows) for s in r}
    # a row whose bottom boundary is regular continues the row below it
    below = {}
    for i, r in enumerate(rows):
        if not _row_top_is_singular(o, r):
            below[row_of[o.v[r[0]]]] = i
    starts = [i for i in range(len(rows)) if i not in below]
    covered: set[int] = set()
    out = []

    def stack_from(i):
        stack = [i]
        cur = i
        while not _row_top_is_singular(o, rows[cur]):
            cur = row_of[o.v[rows[cur][0]]]
            if cur == i:
                break
            stack.append(cur)
        covered.update(stack)
        out.append({"rows": [rows[k] for k in stack], "circumference": len(rows[i]), "height": len(stack)})

    for i in starts:
        stack_from(i)
    # components without cone points close up on themselves
    for i in range(len(rows)):
        if i not in covered:
            stack_from(i)
    return out


def horizontal_saddles(o: Origami) -> dict[int, Saddle]:
    """Rightward horizontal saddle connections, keyed by the square at whose lower-left corner they start."""
    out = {}
    for s in range(o.n):
        cls, pos = o.corner_index[(s, 0)]
        if o.is_cone(cls):
            out[s] = o.trace(cls, Prong(pos, (1, 0)))
    return out


@dataclass
class Cylinder:
    direction: RationalDirection
    circumference: Fraction
    height: Fraction
    core_square_cycle: list[int]
    boundary_saddles: tuple[list[int], list[int]]

    @property
    def modulus(self) -> Fraction:
        return self.circumference / self.height

    @property
    def area(self) -> Fraction:
        return self.circumference * self.height

    def to_json(self) -> dict:
        return {"circumference": str(self.circumference), "height": str(self.height),
                "modulus": str(self.modulus), "core_squares": self.core_square_cycle,
                "bottom_saddles": self.boundary_saddles[0], "top_saddles": self.boundary_saddles[1]}


@dataclass
class CylinderDecomposition:
    direction: RationalDirection
    cylinders: list[Cylinder]
    quotient_spines: list[list[int]]
    twist_powers: list[int]
    shear: Fraction
    saddles: list[Saddle] = field(default_factory=list)
    matrix: Matrix = IDENTITY
    renormalized: Origami | None = None

    @property
    def area(self) -> Fraction:
        return sum((c.area for c in self.cylinders), Fraction(0))

    def to_json(self) -> dict:
        return {
            "direction": str(self.direction),
            "cylinders": [c.to_json() for c in self.cylinders],
            "twist_powers": self.twist_powers,
            "shear": str(self.shear),
            "area": str(self.area),
            "spine_components": self.quotient_spines,
            "saddle_count": len(self.saddles),
        }


def _spine_components(o: Origami, saddles: dict[int, Saddle]) -> list[list[int]]:
    parent: dict[int, int] = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for sad in saddles.values():
        parent[find(sad.source)] = find(sad.target)
    comps: dict[int, list[int]] = {}
    for sid, sad in sorted(saddles.items()):
        comps.setdefault(find(sad.source), []).append(sid)
    return sorted(comps.values())


def least_shear(cylinders: Sequence[Cylinder]) -> Fraction:
    """Smallest positive shear making every twist power an integer."""
    num, den = 1, 0
    for c in cylinders:
        m = c.modulus
        num = num * m.numerator // gcd(num, m.numerator)
        den = gcd(den, m.denominator)
    return Fraction(num, den)


def cylinder_decomposition(o: Origami, d: RationalDirection) -> CylinderDecomposition:
    A = straightening_matrix(d)
    r = renormalize(o, A)
    saddles = horizontal_saddles(r)
    cyls = []
    for data in horizontal_cylinders(r):
        bottom = [s for s in data["rows"][0] if s in saddles]
        top_row = data["rows"][-1]
        top = [r.v[s] for s in top_row if r.v[s] in saddles]
        cyls.append(Cylinder(d, Fraction(data["circumference"]), Fraction(data["height"]),
                             list(data["rows"][0]), (bottom, top)))
    cyls.sort(key=lambda c: (-c.area, -c.circumference, c.core_square_cycle))
    s = least_shear(cyls)
    powers = [int(s * c.height / c.circumference) for c in cyls]
    return CylinderDecomposition(d, cyls, _spine_components(r, saddles), powers, s,
                                 [saddles[k] for k in sorted(saddles)], A, r)


# ---------------------------------------------------------------------------
# multitwists


@dataclass
class MultitwistData:
    direction: RationalDirection
    derivative: Matrix
    shear: Fraction
    twist_powers: list[int]

    def to_json(self) -> dict:
        return {"direction": str(self.direction), "derivative": [list(r) for r in self.derivative],
                "shear": str(self.shear), "twist_powers": self.twist_powers}


def parabolic(d: RationalDirection, t) -> Matrix:
    """``I + t N`` with ``N v = det(d, v) d``, the parabolic fixing ``d``."""
    p, q = d.p, d.q
    return ((1 - t * p * q, t * p * p), (-t * q * q, 1 + t * p * q))


def multitwist(o: Origami, d: RationalDirection) -> MultitwistData:
    """Derivative of the multitwist in direction ``d``.

    Of the two parabolic generators the one reported is oriented so that
    ``(p^2 - q^2) t > 0``, or ``t > 0`` on the diagonals; this gives
    [[1, 2], [0, 1]] and [[1, 0], [2, 1]] for the axes of the silver L.
    """
    dec = cylinder_decomposition(o, d)
    s = dec.shear
    if s.denominator != 1:
        raise ValueError(f"shear {s} is not an integer: no affine multitwist with integer derivative")
    t = int(s)
    if d.p * d.p - d.q * d.q < 0:
        t = -t
    D = parabolic(d, t)
    return MultitwistData(d, D, s, dec.twist_powers)


# ---------------------------------------------------------------------------
# independent route: first return to the bottom edges


def leaf_cylinders(o: Origami, d: RationalDirection) -> list[tuple[Fraction, Fraction]]:
    """(circumference, height) pairs computed directly in direction ``d``.

    Leaves in direction ``(p, q)``, ``q > 0``, meet the bottom edges of the
    squares; the first-return map permutes the ``n q`` subintervals of width
    ``1/q``.  Orbits are closed leaves; neighbouring subintervals belong to
    the same cylinder unless the leaf through their common endpoint meets a
    cone point.
    """
    p, q = d.p, d.q
    if q == 0:
        # horizontal: use the left edges instead by rotating a quarter turn
        return leaf_cylinders(_quarter_turn(o), RationalDirection(0, 1))
    n = o.n

    def step(s: int, x: Fraction) -> tuple[int, Fraction, bool]:
        """Follow the leaf from (x, 0) in square s up one unit; report passing a vertex."""
        end = x + Fraction(p, q)
        k = end.numerator // end.denominator  # floor
        cur = s
        if k >= 0:
            for _ in range(k):
                cur = o.h[cur]
        else:
            for _ in range(-k):
                cur = o.h_inv[cur]
        frac = end - k
        hits = []
        if frac == 0:
            # passes through the upper-left corner of the square reached
            hits.append((cur, 3))
        return o.v[cur], frac, hits

    # subinterval (s, j) = [j/q, (j+1)/q) on the bottom of s
    def succ(s, j):
        s2, frac, _ = step(s, Fraction(2 * j + 1, 2 * q))
        return s2, int(frac * q)

    # singular boundaries: the leaf through (j/q, 0) on square s
    def singular(s, j) -> bool:
        cur, x = s, Fraction(j, q)
        for _ in range(n * q + 1):
            if x == 0 and o.is_cone(o.corner_index[(cur, 0)][0]):
                return True
            nxt, frac, hits = step(cur, x)
            for sq, corner in hits:
                if o.is_cone(o.corner_index[(sq, corner)][0]):
                    return True
            cur, x = nxt, frac
            if (cur, x) == (s, Fraction(j, q)):
                return False
        return False

    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    orbit_len = {}
    seen = set()
    for s in range(n):
        for j in range(q):
            if (s, j) in seen:
                continue
            orb = [(s, j)]
            seen.add((s, j))
            nxt = succ(s, j)
            while nxt != (s, j):
                orb.append(nxt)
                seen.add(nxt)
                nxt = succ(*nxt)
            for a in orb:
                parent[find(a)] = find(orb[0])
                orbit_len[a] = len(orb)
    for s in range(n):
        for j in range(q):
            left = (s, j - 1) if j > 0 else (o.h_inv[s], q - 1)
            if not singular(s, j):
                parent[find(left)] = find((s, j))
    groups: dict = {}
    for key in orbit_len:
        groups.setdefault(find(key), []).append(key)
    out = []
    for members in groups.values():
        ln = orbit_len[members[0]]
        circ = Fraction(ln, q)
        area = Fraction(len(members), q)
        out.append((circ, area / circ))
    return sorted(out)


def _quarter_turn(o: Origami) -> Origami:
    """The origami rotated by a quarter turn clockwise: horizontal becomes vertical."""
    # rotating by -90 degrees sends right to down and up to right
    return Origami(o.n, o.v, o.h_inv, o.name)


# ---------------------------------------------------------------------------
# reports


def strip_and_saddle_bounds(o: Origami, d: RationalDirection, scale=Fraction(1, 8)) -> dict:
    """Longest direction-``d`` saddle and widest strip over the horoball base point."""
    from .disk import Horoball

    dec = cylinder_decomposition(o, d)
    B = Horoball(d, scale)
    unit = B.apex().saddle_length(d.vector)  # length of the primitive vector there
    longest = max((s.steps for s in dec.saddles), default=0) * unit
    widest = max(float(c.height) / unit for c in dec.cylinders)
    return {"direction": str(d), "max_saddle_length": longest, "max_strip_width": widest}


def random_direction(rng, bound: int = 12) -> RationalDirection:
    while True:
        p = int(rng.integers(-bound, bound + 1))
        q = int(rng.integers(-bound, bound + 1))
        if (p or q) and gcd(p, q) == 1:
            return RationalDirection(p, q)
