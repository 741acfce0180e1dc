"""Geodesic triangles between cone-point lifts: excision, classification, fans and pivots.

A triangle is reduced by cutting off the saddle prefixes shared by the two
sides at each corner.  What remains is either a single point (the triangle
was a tripod) or a core triangle whose sides meet only at their endpoints.
Core triangles are *euclidean* when every side is one saddle connection,
*fans* when at least two sides are, and *general* otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .charts import (
    Chart, ChartError, ConeLift, DegenerateTriangle, GeodesicPath, NotAFan, flat_geodesic, sample_cone_lift,
)
from .disk import DiskPoint
from .exact import ZERO, Angle, Prong, Vec, ccw, cross, primitive, sub
from .origami import saddle_rays

EUCLIDEAN = "euclidean"
FAN = "fan"
GENERAL = "general"
COLLAPSED = "degenerate-reduced"


def _common_prefix(a: Sequence[Prong], b: Sequence[Prong]) -> int:
    k = 0
    while k < len(a) and k < len(b) and a[k] == b[k]:
        k += 1
    return k


@dataclass
class TriangleReport:
    vertices: tuple[ConeLift, ConeLift, ConeLift]
    sides: tuple[GeodesicPath, GeodesicPath, GeodesicPath]
    degenerate_prefixes: tuple[int, int, int]
    core: tuple[ConeLift, ConeLift, ConeLift] | None
    core_sides: tuple[GeodesicPath, ...] = ()
    classification: str = COLLAPSED
    interior_cone_count: int = 0

    @property
    def degenerate(self) -> bool:
        return self.core is None or any(self.degenerate_prefixes)

    @property
    def single_saddle_sides(self) -> list[int]:
        return [i for i, s in enumerate(self.core_sides) if len(s.segments) == 1]

    def area2(self) -> int:
        """Twice the developed area of the core (0 for a collapsed triangle)."""
        if self.core is None:
            return 0
        return abs(polygon_area2(boundary_points(self.core_sides)))

    def to_json(self) -> dict:
        return {
            "classification": self.classification,
            "degenerate_prefixes": list(self.degenerate_prefixes),
            "side_saddles": [len(s.segments) for s in self.sides],
            "core_side_saddles": [len(s.segments) for s in self.core_sides],
            "interior_cone_count": self.interior_cone_count,
            "core_area": str(Fraction(self.area2(), 2)),
        }


def boundary_points(paths: Sequence[GeodesicPath]) -> list[Vec]:
    pts = []
    for p in paths:
        pts.extend(v.pos for v in p.vertices[:-1])
    return pts


def polygon_area2(pts: Sequence[Vec]) -> int:
    return sum(cross(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts)))


def classify_triangle(chart: Chart, x: ConeLift, y: ConeLift, z: ConeLift) -> TriangleReport:
    gxy = flat_geodesic(chart, x, y)
    gyz = flat_geodesic(chart, y, z)
    gzx = flat_geodesic(chart, z, x)
    sides = (gxy, gyz, gzx)
    # the two sides leaving each corner, read from that corner
    outgoing = ((gxy, gzx.reversed()), (gyz, gxy.reversed()), (gzx, gyz.reversed()))
    prefixes = []
    cores = []
    collapsed = False
    for a, b in outgoing:
        k = _common_prefix(a.prongs, b.prongs)
        if a.vertices[0] == a.vertices[-1] or b.vertices[0] == b.vertices[-1]:
            collapsed = True
        if k == len(a.segments) or k == len(b.segments):
            collapsed = True
        prefixes.append(k)
        cores.append(a.vertices[k])
    report = TriangleReport((x, y, z), sides, tuple(prefixes), None)
    if collapsed or cores[0] == cores[1]:
        return report
    core = tuple(cores)
    core_sides = (flat_geodesic(chart, core[0], core[1]), flat_geodesic(chart, core[1], core[2]),
                  flat_geodesic(chart, core[2], core[0]))
    report.core = core
    report.core_sides = core_sides
    singles = sum(len(s.segments) == 1 for s in core_sides)
    report.classification = EUCLIDEAN if singles == 3 else FAN if singles == 2 else GENERAL
    report.interior_cone_count = len(interior_cone_points(chart, core_sides))
    return report


# ---------------------------------------------------------------------------
# cone points inside a core triangle


@dataclass
class _Corner:
    lift: ConeLift
    out: Prong
    back: Prong

    def sector(self, L: int) -> Angle:
        return ccw(self.out, self.back, L)


def _boundary_cycle(chart: Chart, paths: Sequence[GeodesicPath]) -> list[_Corner]:
    """Boundary vertices in counterclockwise order with their outgoing and incoming prongs."""
    verts: list[ConeLift] = []
    outs: list[Prong] = []
    arrivals: list[Prong] = []
    for p in paths:
        verts.extend(p.vertices[:-1])
        outs.extend(p.prongs)
        arrivals.extend(p.arrivals)
    if polygon_area2([v.pos for v in verts]) < 0:
        rev = [q.reversed() for q in reversed(paths)]
        return _boundary_cycle(chart, rev)
    corners = []
    n = len(verts)
    for i in range(n):
        corners.append(_Corner(verts[i], outs[i], arrivals[i - 1]))
    return corners


def _on_segment(p: Vec, a: Vec, b: Vec) -> bool:
    if cross(sub(b, a), sub(p, a)) != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def strictly_inside(p: Vec, poly: Sequence[Vec]) -> bool:
    n = len(poly)
    for i in range(n):
        if _on_segment(p, poly[i], poly[(i + 1) % n]):
            return False
    wn = 0
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if a[1] <= p[1]:
            if b[1] > p[1] and cross(sub(b, a), sub(p, a)) > 0:
                wn += 1
        elif b[1] <= p[1] and cross(sub(b, a), sub(p, a)) < 0:
            wn -= 1
    return wn != 0


def _proper_cross(a: Vec, b: Vec, c: Vec, d: Vec) -> bool:
    d1 = cross(sub(b, a), sub(c, a))
    d2 = cross(sub(b, a), sub(d, a))
    d3 = cross(sub(d, c), sub(a, c))
    d4 = cross(sub(d, c), sub(b, c))
    return ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0


def is_simple(poly: Sequence[Vec]) -> bool:
    n = len(poly)
    if len(set(poly)) != n:
        return False
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            c, d = poly[j], poly[(j + 1) % n]
            if _proper_cross(a, b, c, d) or _on_segment(c, a, b) or _on_segment(a, c, d):
                return False
    return True


def sees(u: Vec, p: Vec, poly: Sequence[Vec]) -> bool:
    """Whether the open segment from boundary vertex ``u`` to interior point ``p`` avoids the boundary."""
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if u in (a, b):
            continue
        if _proper_cross(u, p, a, b) or _on_segment(a, u, p) or _on_segment(b, u, p):
            return False
    # both ends of the segment are inside or on the boundary and it crosses nothing;
    # its midpoint decides whether it runs outside through the corner at u
    mid2 = (u[0] + p[0], u[1] + p[1])
    scaled = [(2 * q[0], 2 * q[1]) for q in poly]
    return strictly_inside(mid2, scaled)


def interior_cone_points(chart: Chart, paths: Sequence[GeodesicPath]) -> list[Vec]:
    """Developed positions of cone points strictly inside a closed saddle chain.

    Every interior point of a simple polygon sees some boundary vertex.  From
    each boundary vertex the surface is stepped exactly along the prong into
    the polygon, one lattice point at a time, and each lattice point met
    strictly inside is checked for being a cone point.
    """
    cycle = _boundary_cycle(chart, paths)
    poly = [c.lift.pos for c in cycle]
    if not is_simple(poly):
        raise ChartError("the chain does not develop to a simple polygon")
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    found = set()
    for px in range(min(xs) + 1, max(xs)):
        for py in range(min(ys) + 1, max(ys)):
            p = (px, py)
            if not strictly_inside(p, poly):
                continue
            for c in cycle:
                if not sees(c.lift.pos, p, poly):
                    continue
                hit = _step_to(chart, c, p, poly)
                if hit is not None:
                    found.add(hit)
                break
            else:
                raise ChartError(f"no boundary vertex sees {p}")
    return sorted(found)


def _step_to(chart: Chart, corner: _Corner, p: Vec, poly) -> Vec | None:
    """Walk from the corner toward ``p``; return the first cone point met before or at ``p``."""
    o = chart.origami
    L = o.quarters(corner.lift.cls)
    d = primitive(sub(p, corner.lift.pos))
    sector = corner.sector(L)
    prong = None
    for cand in o.prongs_for(corner.lift.cls, d):
        if ZERO < ccw(corner.out, cand, L) < sector:
            prong = cand
            break
    if prong is None:
        raise ChartError("direction does not enter the polygon")
    cls, pos, pr = corner.lift.cls, corner.lift.pos, prong
    while pos != p:
        cls, back = o._step(cls, pr)
        pos = (pos[0] + d[0], pos[1] + d[1])
        if o.is_cone(cls):
            return pos
        pr = back.opposite(4)
    return None


# ---------------------------------------------------------------------------
# fans and pivots


@dataclass
class Fan:
    apex: ConeLift
    base: list[ConeLift]

    @property
    def pieces(self) -> list[tuple[ConeLift, ConeLift, ConeLift]]:
        return [(self.apex, self.base[i], self.base[i + 1]) for i in range(len(self.base) - 1)]


@dataclass
class FanDecomposition:
    fans: list[Fan]
    pivots: list[tuple[str, int]] = field(default_factory=list)

    @property
    def pieces(self) -> list[tuple[ConeLift, ConeLift, ConeLift]]:
        return [p for f in self.fans for p in f.pieces]


def single_saddle(chart: Chart, a: ConeLift, b: ConeLift) -> bool:
    return a != b and len(flat_geodesic(chart, a, b).segments) == 1


def _fan_of(t: TriangleReport) -> Fan:
    core, sides = t.core, t.core_sides
    singles = t.single_saddle_sides
    if len(singles) < 2:
        raise NotAFan("fewer than two sides are single saddle connections")
    # side i joins core[i] to core[i+1]; the apex is shared by two single sides
    if len(singles) == 3:
        return Fan(core[2], [core[0], core[1]])
    missing = ({0, 1, 2} - set(singles)).pop()
    apex = core[(missing + 2) % 3]
    return Fan(apex, list(sides[missing].vertices))


def pivot_chain(chart: Chart, a: Sequence[ConeLift], b: Sequence[ConeLift]) -> FanDecomposition:
    """Fans with alternating pivots for a core whose third side joins ``a[0]`` and ``b[0]`` in one saddle.

    ``a`` and ``b`` are the vertex lists of the other two sides, both ending at
    the common far corner.
    """
    sides = {"a": list(a), "b": list(b)}
    if single_saddle(chart, a[0], b[1]):
        piv, other = "a", "b"
    elif single_saddle(chart, b[0], a[1]):
        piv, other = "b", "a"
    else:
        raise ChartError("neither first pivot exists")
    idx = {"a": 0, "b": 0}
    fans = []
    pivots = [(piv, 0)]
    while True:
        p = sides[piv][idx[piv]]
        opp = sides[other]
        start = idx[other]
        best = None
        for j in range(start + 1, len(opp)):
            if single_saddle(chart, p, opp[j]):
                best = j
        if best is None:
            raise ChartError("pivot chain stalled")
        fans.append(Fan(p, opp[start: best + 1]))
        idx[other] = best
        if best == len(opp) - 1:
            break
        pivots.append((other, best))
        piv, other = other, piv
    return FanDecomposition(fans, pivots)


def fan_decompose(chart: Chart, t: TriangleReport) -> FanDecomposition:
    if t.core is None:
        raise DegenerateTriangle("the triangle has no core")
    singles = t.single_saddle_sides
    if len(singles) == 3:
        return FanDecomposition([Fan(t.core[2], [t.core[0], t.core[1]])])
    if len(singles) == 2:
        return FanDecomposition([_fan_of(t)])
    if len(singles) == 1:
        s = singles[0]
        sides = t.core_sides
        # side s joins c[s] and c[s+1]; the far corner is c[s+2]
        far_a = sides[(s + 2) % 3].reversed().vertices  # c[s] ... c[s+2]
        far_b = sides[(s + 1) % 3].vertices  # c[s+1] ... c[s+2]
        return pivot_chain(chart, far_a, far_b)
    return _split_general(chart, t)


def _split_general(chart: Chart, t: TriangleReport) -> FanDecomposition:
    """Cut along the geodesic from a corner to the first cone point of the opposite side."""
    x, y, z = t.core
    w = t.core_sides[1].vertices[1]
    fans: list[Fan] = []
    pivots: list[tuple[str, int]] = []
    for tri in ((x, y, w), (x, w, z)):
        sub_t = classify_triangle(chart, *tri)
        if sub_t.core is None:
            continue
        d = fan_decompose(chart, sub_t)
        fans.extend(d.fans)
        pivots.extend(d.pivots)
    return FanDecomposition(fans, pivots)


# ---------------------------------------------------------------------------
# balance points and fan angles


@dataclass
class BalancePoint:
    matrix: np.ndarray
    disk_point: DiskPoint
    side_lengths_after: tuple[float, float, float]


def balance_matrix(sides: Sequence[Sequence[float]]) -> np.ndarray:
    """Determinant-one matrix taking the triangle with these side vectors to an equilateral one.

    ``sides`` holds two or three edge vectors of the triangle, in order around it.
    """
    u = np.asarray(sides[0], dtype=float)
    v = np.asarray(sides[1], dtype=float)
    if len(sides) > 2 and not np.allclose(u + v + np.asarray(sides[2], dtype=float), 0.0):
        raise DegenerateTriangle("side vectors do not close up")
    area2 = u[0] * v[1] - u[1] * v[0]
    if area2 == 0:
        raise DegenerateTriangle("collinear side vectors")
    s = math.sqrt(2 * abs(area2) / math.sqrt(3))
    turn = 2 * math.pi / 3 if area2 > 0 else -2 * math.pi / 3
    e1 = np.array([s, 0.0])
    e2 = s * np.array([math.cos(turn), math.sin(turn)])
    return np.column_stack([e1, e2]) @ np.linalg.inv(np.column_stack([u, v]))


def balance_point(chart: Chart, tri) -> BalancePoint:
    """Balance point of a euclidean triangle, given as a report or as three lifts."""
    if isinstance(tri, TriangleReport):
        if tri.core is None or tri.degenerate:
            raise DegenerateTriangle("balance points need a nondegenerate triangle")
        if tri.classification != EUCLIDEAN:
            raise ValueError("balance points are defined for euclidean triangles")
        a, b, c = tri.core
    else:
        a, b, c = tri
        for p, q in ((a, b), (b, c), (c, a)):
            if not single_saddle(chart, p, q):
                raise ValueError("balance points are defined for euclidean triangles")
    return balance_of_vectors([sub(b.pos, a.pos), sub(c.pos, b.pos), sub(a.pos, c.pos)])


def balance_of_vectors(sides) -> BalancePoint:
    A = balance_matrix(sides)
    lengths = tuple(float(np.linalg.norm(A @ np.asarray(s, dtype=float))) for s in sides[:3])
    if len(lengths) == 2:
        w = -(np.asarray(sides[0], dtype=float) + np.asarray(sides[1], dtype=float))
        lengths = lengths + (float(np.linalg.norm(A @ w)),)
    return BalancePoint(A, DiskPoint.of_matrix(A), lengths)


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    return math.atan2(abs(u[0] * v[1] - u[1] * v[0]), u[0] * v[0] + u[1] * v[1])


@dataclass
class FanProfile:
    lam: list[float]
    rho: list[float]

    @property
    def monotone(self) -> bool:
        return all(a < b for a, b in zip(self.lam, self.lam[1:])) and all(a > b for a, b in zip(self.rho, self.rho[1:]))


def fan_angle_profile(fan: Fan, X: DiskPoint | None = None) -> FanProfile:
    """Base angles of the fan's euclidean pieces after deforming to ``X``.

    Piece ``i`` has base from ``base[i]`` to ``base[i+1]``; ``lam[i]`` is its
    angle at the start of the base and ``rho[i]`` at the end.
    """
    if len(fan.base) < 2:
        raise NotAFan("a fan needs a base saddle")
    G = np.eye(2) if X is None else X.fiber_matrix()
    y = np.asarray(fan.apex.pos, dtype=float)
    lam, rho = [], []
    for i in range(len(fan.base) - 1):
        a = np.asarray(fan.base[i].pos, dtype=float)
        b = np.asarray(fan.base[i + 1].pos, dtype=float)
        lam.append(_angle(G @ (b - a), G @ (y - a)))
        rho.append(_angle(G @ (a - b), G @ (y - b)))
    return FanProfile(lam, rho)


def exact_fan_angles(fan: Fan) -> tuple[list[Angle], list[Angle]]:
    """Undeformed base angles as exact angles (no trigonometry)."""
    lam, rho = [], []
    for i in range(len(fan.base) - 1):
        a, b, y = fan.base[i].pos, fan.base[i + 1].pos, fan.apex.pos
        la = Angle.between(sub(b, a), sub(y, a))
        ra = Angle.between(sub(a, b), sub(y, b))
        lam.append(min(la, -la + Angle(4)))
        rho.append(min(ra, -ra + Angle(4)))
    return lam, rho


def fan_piece_balance_points(fan: Fan) -> list[BalancePoint]:
    out = []
    for apex, a, b in fan.pieces:
        out.append(balance_of_vectors([sub(b.pos, a.pos), sub(apex.pos, b.pos), sub(a.pos, apex.pos)]))
    return out


# ---------------------------------------------------------------------------
# sampling


def sample_triangle(chart: Chart, rng, max_tries: int = 1000, want=None) -> TriangleReport:
    """Random triangle with a nondegenerate core (of a wanted class, optionally)."""
    for _ in range(max_tries):
        x, y, z = (sample_cone_lift(chart, rng) for _ in range(3))
        t = classify_triangle(chart, x, y, z)
        if t.core is None:
            continue
        if want is None or t.classification in want:
            return t
    raise ChartError("could not sample a triangle with the requested core")


def sample_euclidean(chart: Chart, rng, max_tries: int = 1000):
    """A euclidean triangle from a random lift and two saddles leaving it."""
    o = chart.origami
    for _ in range(max_tries):
        x = sample_cone_lift(chart, rng)
        rays = saddle_rays(o, x.cls, 8)
        i, j = int(rng.integers(len(rays))), int(rng.integers(len(rays)))
        s1, s2 = rays[i], rays[j]
        L = o.quarters(x.cls)
        if not ZERO < ccw(s1.prong, s2.prong, L) < Angle(2):
            continue
        b = chart.lift(x.address + (s1.prong,))
        c = chart.lift(x.address + (s2.prong,))
        if not (chart.contains(b) and chart.contains(c)):
            continue
        if single_saddle(chart, b, c):
            return (x, b, c)
    raise ChartError("could not sample a euclidean triangle")
