"""Exact planar predicates, angles at cone points and sums of square roots.

Directions are integer vectors.  An :class:`Angle` is stored as a number of
quarter turns plus a residual direction in the half-open first quadrant, so
sums and differences stay exact: the residual of a sum is a Gaussian-integer
product.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import Iterable

Vec = tuple[int, int]


def quadrant(v: Vec) -> int:
    """Index of the half-open quadrant [k pi/2, (k+1) pi/2) containing ``v``."""
    x, y = v
    if x > 0 and y >= 0:
        return 0
    if x <= 0 and y > 0:
        return 1
    if x < 0 and y <= 0:
        return 2
    if x >= 0 and y < 0:
        return 3
    raise ValueError("zero vector has no direction")


def rotate(v: Vec, k: int) -> Vec:
    x, y = v
    k %= 4
    if k == 0:
        return (x, y)
    if k == 1:
        return (-y, x)
    if k == 2:
        return (-x, -y)
    return (y, -x)


def primitive(v: Vec) -> Vec:
    g = gcd(v[0], v[1])
    if g == 0:
        raise ValueError("zero vector")
    return (v[0] // g, v[1] // g)


def cmul(a: Vec, b: Vec) -> Vec:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def conj(a: Vec) -> Vec:
    return (a[0], -a[1])


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def orient(a, b, c) -> int:
    """Sign of the turn a -> b -> c (1 left, -1 right, 0 collinear)."""
    d = cross((b[0] - a[0], b[1] - a[1]), (c[0] - a[0], c[1] - a[1]))
    return (d > 0) - (d < 0)


def sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def norm2(v):
    return v[0] * v[0] + v[1] * v[1]


def _reduce(v: Vec) -> Vec:
    g = gcd(v[0], v[1])
    return (v[0] // g, v[1] // g) if g > 1 else v


@dataclass(frozen=True, eq=False)
class Angle:
    """The angle ``quarters * pi/2 + arg(residual)`` with arg in [0, pi/2)."""

    quarters: int
    residual: Vec = (1, 0)

    @staticmethod
    def of_vector(v: Vec) -> "Angle":
        q = quadrant(v)
        return Angle(q, _reduce(rotate(v, -q)))

    @staticmethod
    def between(u: Vec, w: Vec) -> "Angle":
        """Counterclockwise angle from ``u`` to ``w`` in [0, 2pi)."""
        return Angle.of_vector(cmul(w, conj(u)))

    @staticmethod
    def signed(u: Vec, w: Vec) -> "Angle":
        """Planar angle from ``u`` to ``w`` in [-pi, pi)."""
        a = Angle.between(u, w)
        return a - FULL_TURN if a >= HALF_TURN else a

    def __add__(self, other: "Angle") -> "Angle":
        z = _reduce(cmul(self.residual, other.residual))
        q = self.quarters + other.quarters
        if z[0] <= 0:
            z = rotate(z, -1)
            q += 1
        return Angle(q, z)

    def __neg__(self) -> "Angle":
        x, y = self.residual
        if y == 0:
            return Angle(-self.quarters, (1, 0))
        return Angle(-self.quarters - 1, rotate((x, -y), 1))

    def __sub__(self, other: "Angle") -> "Angle":
        return self + (-other)

    def __lt__(self, other: "Angle") -> bool:
        if self.quarters != other.quarters:
            return self.quarters < other.quarters
        return cross(self.residual, other.residual) > 0

    def __le__(self, other: "Angle") -> bool:
        return not other < self

    def __gt__(self, other: "Angle") -> bool:
        return other < self

    def __ge__(self, other: "Angle") -> bool:
        return not self < other

    def __eq__(self, other) -> bool:
        if not isinstance(other, Angle):
            return NotImplemented
        return self.quarters == other.quarters and cross(self.residual, other.residual) == 0

    def __hash__(self) -> int:
        return hash((self.quarters, primitive(self.residual)))

    def mod(self, total_quarters: int) -> "Angle":
        return Angle(self.quarters % total_quarters, self.residual)

    def radians(self) -> float:
        import math

        return self.quarters * math.pi / 2 + math.atan2(self.residual[1], self.residual[0])


ZERO = Angle(0)
HALF_TURN = Angle(2)
FULL_TURN = Angle(4)


@dataclass(frozen=True, order=True)
class Prong:
    """A direction at a vertex of total angle ``L * pi/2``.

    ``index`` is the position in the vertex's corner cycle (the quarter-plane
    sector containing the direction) and ``vec`` a primitive integer vector
    with ``quadrant(vec) == index % 4``.
    """

    index: int
    vec: Vec

    def angle(self) -> Angle:
        return Angle(self.index, _reduce(rotate(self.vec, -quadrant(self.vec))))

    @staticmethod
    def from_angle(a: Angle, total_quarters: int) -> "Prong":
        q = a.quarters % total_quarters
        return Prong(q, primitive(rotate(a.residual, q)))

    def turned(self, a: Angle, total_quarters: int) -> "Prong":
        return Prong.from_angle(self.angle() + a, total_quarters)

    def opposite(self, total_quarters: int) -> "Prong":
        return Prong((self.index + 2) % total_quarters, (-self.vec[0], -self.vec[1]))


def ccw(p: Prong, q: Prong, total_quarters: int) -> Angle:
    """Counterclockwise angle swept from ``p`` to ``q``, in [0, total)."""
    d = q.angle() - p.angle()
    return Angle(d.quarters % total_quarters, d.residual)


def strictly_between(p: Prong, a: Prong, b: Prong, total_quarters: int) -> bool:
    """True if ``p`` lies strictly inside the ccw sweep from ``a`` to ``b``."""
    s = ccw(a, p, total_quarters)
    return ZERO < s < ccw(a, b, total_quarters)


# ---------------------------------------------------------------------------
# sums of square roots


@lru_cache(maxsize=None)
def _squarefree_split(n: int) -> tuple[int, int]:
    """Return (k, m) with n = k^2 m and m squarefree."""
    k, m = 1, n
    p = 2
    while p * p <= m:
        while m % (p * p) == 0:
            m //= p * p
            k *= p
        p += 1
    return k, m


class Surd:
    """Exact element of the form sum_i c_i sqrt(m_i), c_i rational.

    Equality is decided symbolically (square roots of distinct squarefree
    integers are linearly independent); order by refining decimal precision.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, Fraction] | None = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    @staticmethod
    def sqrt(n) -> "Surd":
        n = Fraction(n)
        if n < 0:
            raise ValueError("negative radicand")
        if n == 0:
            return Surd()
        num = n.numerator * n.denominator
        k, m = _squarefree_split(num)
        return Surd({m: Fraction(k, n.denominator)})

    @staticmethod
    def of(x) -> "Surd":
        return Surd({1: Fraction(x)})

    def __add__(self, other) -> "Surd":
        if not isinstance(other, Surd):
            other = Surd.of(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t.get(m, 0) + c
        return Surd(t)

    __radd__ = __add__

    def __neg__(self) -> "Surd":
        return Surd({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Surd":
        if not isinstance(other, Surd):
            other = Surd.of(other)
        return self + (-other)

    def __rsub__(self, other) -> "Surd":
        return Surd.of(other) - self

    def __mul__(self, k) -> "Surd":
        k = Fraction(k)
        return Surd({m: c * k for m, c in self.terms.items()})

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.terms

    def sign(self) -> int:
        if not self.terms:
            return 0
        prec = 30
        while True:
            with localcontext() as ctx:
                ctx.prec = prec
                total = Decimal(0)
                for m, c in self.terms.items():
                    total += Decimal(c.numerator) / Decimal(c.denominator) * Decimal(m).sqrt()
                bound = Decimal(10) ** (-(prec - 8)) * (
                    1 + sum(abs(Decimal(c.numerator) / Decimal(c.denominator)) for c in self.terms.values())
                ) * Decimal(max(self.terms)).sqrt()
                if abs(total) > bound:
                    return 1 if total > 0 else -1
            prec *= 2
            if prec > 4000:
                raise ArithmeticError("sign refinement did not terminate")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Surd):
            other = Surd.of(other)
        return (self - other).is_zero()

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.terms.items())))

    def __lt__(self, other) -> bool:
        return (self - other).sign() < 0

    def __le__(self, other) -> bool:
        return (self - other).sign() <= 0

    def __gt__(self, other) -> bool:
        return (self - other).sign() > 0

    def __ge__(self, other) -> bool:
        return (self - other).sign() >= 0

    def __float__(self) -> float:
        return float(sum(float(c) * (m ** 0.5) for m, c in self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            parts.append(str(c) if m == 1 else f"{c}*sqrt({m})")
        return " + ".join(parts)


def vec_length(v) -> Surd:
    return Surd.sqrt(Fraction(v[0]) ** 2 + Fraction(v[1]) ** 2)


def surd_sum(items: Iterable[Surd]) -> Surd:
    total = Surd()
    for s in items:
        total = total + s
    return total


def is_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n
