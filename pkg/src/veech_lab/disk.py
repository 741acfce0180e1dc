"""The hyperbolic plane of affine deformations and its cusp horoballs.

A point ``z`` of the upper half-plane stands for the flat structure obtained
by applying

    G_z = [[1/sqrt(y), -x/sqrt(y)], [0, sqrt(y)]]

to developed coordinates, so ``z = G^{-1} . i`` for any ``G`` in the same
rotation class.  A direction ``(p, q)`` is short near the boundary point
``p/q``; horizontal belongs to the cusp at infinity.

Horoballs are the Ford circles shrunk by a global factor ``eps``: the disk
tangent at ``p/q`` has Euclidean diameter ``eps/q^2`` and the one at infinity
is ``{Im z >= 1/eps}``.  Two horoballs at ``(p, q)`` and ``(r, s)`` are then
``2 log(|ps - qr| / eps)`` apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .origami import RationalDirection

DEFAULT_SCALE = Fraction(1, 8)
TOL = 1e-9


class WindowTooSmall(RuntimeError):
    pass


@dataclass(frozen=True)
class DiskPoint:
    z: complex
    tag: str | None = None

    def __post_init__(self):
        if not self.z.imag > 0:
            raise ValueError(f"{self.z} is not in the upper half-plane")

    @property
    def x(self) -> float:
        return self.z.real

    @property
    def y(self) -> float:
        return self.z.imag

    def fiber_matrix(self) -> np.ndarray:
        r = math.sqrt(self.y)
        return np.array([[1 / r, -self.x / r], [0.0, r]])

    @staticmethod
    def of_matrix(A, tag: str | None = None) -> "DiskPoint":
        """The point whose flat structure is ``A`` up to rotation."""
        A = np.asarray(A, dtype=float)
        inv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / np.linalg.det(A)
        return DiskPoint(mobius(inv, 1j), tag)

    def saddle_length(self, vec) -> float:
        g = self.fiber_matrix() @ np.asarray(vec, dtype=float)
        return float(math.hypot(g[0], g[1]))


BASE = DiskPoint(1j, "i")


def mobius(M, z: complex) -> complex:
    a, b = M[0][0], M[0][1]
    c, d = M[1][0], M[1][1]
    return (a * z + b) / (c * z + d)


def hyp_distance(a: DiskPoint | complex, b: DiskPoint | complex) -> float:
    za = a.z if isinstance(a, DiskPoint) else a
    zb = b.z if isinstance(b, DiskPoint) else b
    # 2 asinh form is stable for nearby points
    return 2 * math.asinh(abs(za - zb) / (2 * math.sqrt(za.imag * zb.imag)))


def _det(a, b) -> int:
    return a.p * b.q - a.q * b.p


@dataclass(frozen=True)
class Horoball:
    cusp: RationalDirection
    scale: Fraction = DEFAULT_SCALE

    @property
    def at_infinity(self) -> bool:
        return self.cusp.q == 0

    @property
    def point(self) -> float:
        return self.cusp.p / self.cusp.q

    @property
    def diameter(self) -> float:
        """Euclidean diameter, or the height of the bounding line at infinity."""
        if self.at_infinity:
            return float(1 / self.scale)
        return float(self.scale / (self.cusp.q * self.cusp.q))

    def euclidean_data(self) -> dict:
        if self.at_infinity:
            return {"cusp": "inf", "height": str(1 / self.scale)}
        d = self.scale / (self.cusp.q * self.cusp.q)
        return {"cusp": self.cusp.cusp, "center": [str(Fraction(self.cusp.p, self.cusp.q)), str(d / 2)],
                "diameter": str(d)}

    # conjugation sending the cusp to infinity and the horoball to {Im >= height}
    def _to_infinity(self):
        a = self.point
        return (lambda z: -1 / (z - a)), (lambda w: a - 1 / w), 1 / self.diameter

    def contains(self, X: DiskPoint | complex, tol: float = 0.0) -> bool:
        z = X.z if isinstance(X, DiskPoint) else X
        if self.at_infinity:
            return z.imag >= self.diameter - tol
        to, _, h = self._to_infinity()
        return to(z).imag >= h - tol

    def on_boundary(self, X: DiskPoint | complex, tol: float = TOL) -> bool:
        z = X.z if isinstance(X, DiskPoint) else X
        if self.at_infinity:
            return abs(z.imag - self.diameter) <= tol * max(1.0, self.diameter)
        c = complex(self.point, self.diameter / 2)
        return abs(abs(z - c) - self.diameter / 2) <= tol * max(1.0, self.diameter)

    def apex(self) -> DiskPoint:
        """The boundary point on the geodesic from i to the cusp."""
        return closest_point_projection(self, BASE)

    def length_on_boundary(self, vec) -> float:
        """Flat length of a direction-``cusp`` vector over the horoball boundary (constant there)."""
        k = math.hypot(*vec) / math.hypot(self.cusp.p, self.cusp.q)
        return k * self.apex().saddle_length((self.cusp.p, self.cusp.q))


def closest_point_projection(B: Horoball, X: DiskPoint) -> DiskPoint:
    if B.contains(X):
        return X
    if B.at_infinity:
        return DiskPoint(complex(X.x, B.diameter))
    to, back, h = B._to_infinity()
    w = to(X.z)
    return DiskPoint(back(complex(w.real, h)))


@dataclass(frozen=True)
class HoroGap:
    distance: float
    start: DiskPoint
    end: DiskPoint


def horoball_gap(A: Horoball, B: Horoball) -> HoroGap:
    """Distance between two horoballs and the feet of the shortest geodesic."""
    if A.cusp == B.cusp:
        p = A.apex()
        return HoroGap(0.0, p, p)
    if B.at_infinity:
        g = horoball_gap(B, A)
        return HoroGap(g.distance, g.end, g.start)
    to, back, h = B._to_infinity()
    if A.at_infinity:
        foot_a = complex(B.point, A.diameter)
        foot_b = complex(B.point, B.diameter)
        return HoroGap(math.log(A.diameter / B.diameter), DiskPoint(foot_a), DiskPoint(foot_b))
    # in the conjugated frame A is a circle at c with diameter D
    c = to(complex(A.point, 0.0)).real
    D = A.diameter / (A.point - B.point) ** 2
    dist = math.log(h / D)
    return HoroGap(dist, DiskPoint(back(complex(c, D))), DiskPoint(back(complex(c, h))))


def gap_exact(a: RationalDirection, b: RationalDirection, scale=DEFAULT_SCALE) -> float:
    """Closed form ``2 log(|det| / scale)``, zero for equal cusps."""
    d = abs(_det(a, b))
    if d == 0:
        return 0.0
    return 2 * math.log(d / float(scale))


def cusp_window(Q: int) -> list[RationalDirection]:
    """Cusps ``p/q`` with ``max(|p|, q) <= Q``, infinity first."""
    out = {RationalDirection(1, 0)}
    for q in range(1, Q + 1):
        for p in range(-Q, Q + 1):
            if gcd(p, q) == 1:
                out.add(RationalDirection(p, q))
    return sorted(out, key=lambda d: (d.q != 0, d.q, d.p))


def electrified_distance(a: RationalDirection, b: RationalDirection, Q: int, scale=DEFAULT_SCALE) -> float:
    """Shortest path through collapsed horoballs of the window, edges weighted by gaps."""
    if a == b:
        return 0.0
    nodes = cusp_window(Q)
    index = {d: i for i, d in enumerate(nodes)}
    if a not in index or b not in index:
        raise WindowTooSmall(f"cusp outside the window of denominator {Q}")
    P = np.array([d.p for d in nodes], dtype=float)
    Qs = np.array([d.q for d in nodes], dtype=float)
    det = np.abs(np.outer(P, Qs) - np.outer(Qs, P))
    with np.errstate(divide="ignore"):
        W = np.where(det > 0, 2 * np.log(det / float(scale)), 0.0)
    dist = dijkstra(W, directed=False, indices=index[a])
    d = dist[index[b]]
    if not np.isfinite(d):
        raise WindowTooSmall("no path inside the window")
    return float(d)


def act_on_cusp(M, d: RationalDirection) -> RationalDirection:
    return RationalDirection(M[0][0] * d.p + M[0][1] * d.q, M[1][0] * d.p + M[1][1] * d.q)


def geodesic_point(a: DiskPoint, b: DiskPoint, t: float) -> DiskPoint:
    """Point at fraction ``t`` of the way along the geodesic from ``a`` to ``b``."""
    za, zb = a.z, b.z
    # move a to i and b onto the imaginary axis
    x, y = za.real, za.imag
    w = (zb - x) / y
    # rotation about i taking w to the positive imaginary axis
    # solve for the stabiliser element via the Cayley transform
    u = (w - 1j) / (w + 1j)
    phase = u / abs(u) if abs(u) > 0 else 1
    r = abs(u)
    s = math.atanh(r) * 2 * t
    ut = math.tanh(s / 2) * phase
    wt = 1j * (1 + ut) / (1 - ut)
    return DiskPoint(complex(x + y * wt.real, y * wt.imag))


__all__ = [
    "BASE", "DEFAULT_SCALE", "DiskPoint", "HoroGap", "Horoball", "WindowTooSmall", "act_on_cusp",
    "closest_point_projection", "cusp_window", "electrified_distance", "gap_exact", "geodesic_point",
    "horoball_gap", "hyp_distance", "mobius",
]
