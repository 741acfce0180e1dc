"""Windows, bridges, level maps and the coned-off neighbour graphs of a spine.

All queries are answered inside one chart (a metric ball of the universal
cover).  Points of the bundle over a horoball boundary are written as a shear
parameter ``s`` (the fiber ``P_s`` of the horocycle through the apex) plus a
developed position in the base flat structure; geodesic combinatorics do not
depend on the fiber, only lengths do.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .charts import ChartTooSmall, ConeLift, taut_geodesic
from .directions import straightening_matrix
from .disk import DiskPoint, Horoball, closest_point_projection
from .exact import HALF_TURN, Prong, ccw, cross, dot, norm2, strictly_between
from .origami import RationalDirection, saddle_rays
from .spines import Sector, SpineForest, SpineTree, Strip, lift_key

TOL = 1e-9


class NotInThickenedSpine(ValueError):
    pass


class EmptyLevelSet(ValueError):
    pass


# ---------------------------------------------------------------------------
# fibers over a horoball boundary


def boundary_fiber(direction: RationalDirection, shear, scale=None) -> DiskPoint:
    """The fiber on the horoball boundary of ``direction`` at shear ``s`` from its apex."""
    B = Horoball(direction) if scale is None else Horoball(direction, scale)
    G = fiber_matrix_on_boundary(direction, shear, B)
    return DiskPoint.of_matrix(G, tag=f"{direction}+{shear}")


def fiber_matrix_on_boundary(direction: RationalDirection, shear, B: Horoball | None = None) -> np.ndarray:
    B = B or Horoball(direction)
    return _fiber_matrix(B, float(shear))


@lru_cache(maxsize=4096)
def _fiber_matrix(B: Horoball, shear: float) -> np.ndarray:
    direction = B.cusp
    A = np.array(straightening_matrix(direction), dtype=float)
    Ainv = np.linalg.inv(A)
    P = Ainv @ np.array([[1.0, float(shear)], [0.0, 1.0]]) @ A
    return B.apex().fiber_matrix() @ P


def fiber_length(G: np.ndarray, vec) -> float:
    g = G @ np.asarray(vec, dtype=float)
    return float(math.hypot(g[0], g[1]))


def alpha_coordinate(direction: RationalDirection, pos) -> Fraction:
    d = direction.vector
    return Fraction(dot(pos, d), norm2(d))


# ---------------------------------------------------------------------------
# lines and the sector containing a prong


def sector_of(forest: SpineForest, lift: ConeLift, prong: Prong) -> Sector:
    """The half-turn sector at ``lift`` whose interior contains ``prong``."""
    L = forest.origami.quarters(lift.cls)
    for a in forest.alpha_prongs(lift.cls):
        if strictly_between(prong, a, a.opposite(L), L):
            return Sector(lift, a)
    raise ValueError("prong lies along the spine direction")


def full_line(forest: SpineForest, sector: Sector, overrun: int = 0) -> list[Sector]:
    """Every sector of the boundary line through ``sector`` inside the chart (plus ``overrun`` past it)."""
    return forest.line(sector, reach=10 ** 6, overrun=overrun)


def _line_keys(line: list[Sector]) -> dict[tuple, int]:
    return {s.lift.address: i for i, s in enumerate(line)}


def reverse_strip(forest: SpineForest, strip: Strip) -> Strip:
    try:
        back = forest.crossing(strip.far_sector)
    except ChartTooSmall:
        # the least crossing saddle back lands outside the chart; the two
        # boundary sectors already describe the strip
        return Strip(strip.far, strip.near, strip.width, strip.far_sector, strip.near_sector, ())
    if back.far != strip.near:
        raise AssertionError("strip crossing is not symmetric")
    return back


# ---------------------------------------------------------------------------
# windows


@dataclass
class WindowResult:
    v: str
    fiber: DiskPoint
    source: ConeLift
    case: str  # "outside", "boundary" or "inside"
    lifts: list[ConeLift]
    kind: str  # "point", "saddle" or "set"
    strip: Strip | None = None
    line: list[Sector] = field(default_factory=list)
    predicted: list[ConeLift] | None = None

    @property
    def keys(self) -> list[str]:
        return [l.key() for l in self.lifts]

    @property
    def structural(self) -> bool:
        return self.kind in ("point", "saddle")

    def to_json(self) -> dict:
        out = {"v": self.v, "x": self.source.key(), "case": self.case, "kind": self.kind,
               "window": self.keys, "fiber": [self.fiber.x, self.fiber.y]}
        if self.strip is not None:
            out["neighbor"] = self.strip.far
        if self.predicted is not None:
            out["angle_rule_agrees"] = sorted(l.key() for l in self.predicted) == sorted(self.keys)
        return out


def _kind(forest: SpineForest, line: list[Sector], lifts: list[ConeLift]) -> str:
    if len(lifts) == 1:
        return "point"
    if len(lifts) == 2 and line:
        idx = _line_keys(line)
        a, b = (idx.get(l.address) for l in lifts)
        if a is not None and b is not None and abs(a - b) == 1:
            return "saddle"
    return "set"


def _contact(path_vertices: list[ConeLift], keys) -> int | None:
    for i, v in enumerate(path_vertices):
        if v.address in keys:
            return i
    return None


def window(forest: SpineForest, v: SpineTree, x: ConeLift, fiber: DiskPoint | None = None,
           brute_force: bool = True) -> WindowResult:
    """Entrance locus in the thickened spine of ``v`` of geodesics from ``x``.

    Outside the spine the locus is found by the angle rule at the first point
    ``p`` where the geodesic towards the spine meets the boundary line, and
    (with ``brute_force``) cross-checked against geodesics from ``x`` to every
    cone lift of that line inside the chart.  Inside the spine it is the set
    of closest boundary cone lifts in the fiber over the horoball boundary.
    """
    chart = forest.chart
    o = forest.origami
    fiber = fiber or boundary_fiber(forest.direction, 0)
    if not chart.contains(x):
        raise ChartTooSmall("source outside the chart")
    if x.address in v.nodes:
        return _inside_window(forest, v, x, fiber)
    path = taut_geodesic(chart, v.base, x)
    verts = path.vertices
    j = max(i for i, u in enumerate(verts) if u.address in v.nodes)
    u = verts[j]
    sector = sector_of(forest, u, path.prongs[j])
    strip = forest.crossing(sector)
    line = full_line(forest, strip.far_sector)
    keys = _line_keys(line)
    if x.address in keys:
        return WindowResult(v.vertex.id, fiber, x, "boundary", [x], "point", strip, line, [x])
    # any geodesic from x to a cone lift of the line first meets it in a cone lift
    back_path = taut_geodesic(chart, x, strip.far_sector.lift)
    k = _contact(back_path.vertices, keys)
    p = back_path.vertices[k]
    # angle rule on the side of the line away from the strip
    sec = line[keys[p.address]]
    L = o.quarters(p.cls)
    b = back_path.arrivals[k - 1]
    predicted = [p]
    if ccw(b, sec.start, L) < HALF_TURN:
        predicted.append(forest.step(p, sec.start)[0])
    if ccw(sec.end(L), b, L) < HALF_TURN:
        predicted.append(forest.step(p, sec.end(L))[0])
    if any(q.address not in keys for q in predicted):
        raise ChartTooSmall("window runs off the chart")
    lifts = predicted
    if brute_force:
        found = {}
        for s in line:
            z = s.lift
            g = taut_geodesic(chart, x, z)
            i = _contact(g.vertices, keys)
            hit = g.vertices[i]
            found[hit.address] = hit
        lifts = list(found.values())
    lifts.sort(key=lambda l: keys[l.address])
    predicted.sort(key=lambda l: keys[l.address])
    return WindowResult(v.vertex.id, fiber, x, "outside", lifts, _kind(forest, line, lifts), strip, line,
                        predicted)


def _inside_window(forest: SpineForest, v: SpineTree, x: ConeLift, fiber: DiskPoint) -> WindowResult:
    chart = forest.chart
    B = Horoball(forest.direction)
    X = closest_point_projection(B, fiber)
    G = X.fiber_matrix()
    # candidates: far lines of strips at spine nodes near x
    near = _spine_ball(v, x, 2)
    cands: dict[tuple, ConeLift] = {}
    for y in near:
        for sec in forest.sectors(y):
            try:
                s = forest.crossing(sec)
            except ChartTooSmall:
                continue
            for t in forest.line(s.far_sector, 3):
                cands[t.lift.address] = t.lift
    if not cands:
        raise ChartTooSmall("no boundary cone lift near the spine point")
    dist = {}
    for a, z in cands.items():
        g = taut_geodesic(chart, x, z)
        dist[a] = sum(fiber_length(G, seg) for seg in g.segments)
    best = min(dist.values())
    lifts = sorted((cands[a] for a in dist if dist[a] <= best * (1 + TOL) + TOL), key=lift_key)
    kind = "point" if len(lifts) == 1 else "set"
    if len(lifts) == 2:
        a, b = lifts
        if any(forest.step(a, p)[0] == b for p in forest.alpha_prongs(a.cls)):
            kind = "saddle"
    return WindowResult(v.vertex.id, X, x, "inside", lifts, kind)


def _spine_ball(v: SpineTree, x: ConeLift, r: int) -> list[ConeLift]:
    adj: dict[tuple, list[tuple]] = {}
    for a, b, _, _ in v.edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    depth = {x.address: 0}
    q = deque([x.address])
    while q:
        a = q.popleft()
        if depth[a] == r:
            continue
        for b in adj.get(a, []):
            if b not in depth:
                depth[b] = depth[a] + 1
                q.append(b)
    return [v.nodes[a] for a in sorted(depth, key=lambda a: (len(a), a))]


def spine_distance(v: SpineTree, a: ConeLift, b: ConeLift) -> int:
    """Length in primitive steps of the spine path between two of its nodes."""
    adj: dict[tuple, list[tuple]] = {}
    for p, q, _, steps in v.edges:
        adj.setdefault(p, []).append((q, steps))
        adj.setdefault(q, []).append((p, steps))
    dist = {a.address: 0}
    todo = [a.address]
    while todo:
        p = todo.pop()
        for q, st in adj.get(p, []):
            if q not in dist:
                dist[q] = dist[p] + st
                todo.append(q)
    if b.address not in dist:
        raise ChartTooSmall("spine nodes not connected inside the window")
    return dist[b.address]


def window_diameter(forest: SpineForest, lifts, G: np.ndarray | None = None) -> float:
    """Diameter of a set of cone lifts in the fiber metric ``G`` (default: base fiber)."""
    lifts = list(lifts)
    best = 0.0
    for i in range(len(lifts)):
        for j in range(i + 1, len(lifts)):
            g = taut_geodesic(forest.chart, lifts[i], lifts[j])
            d = sum(fiber_length(G, s) for s in g.segments) if G is not None else g.length_float
            best = max(best, d)
    return best


# ---------------------------------------------------------------------------
# bridges


@dataclass
class BridgeResult:
    v: str
    w: str
    component: str  # the boundary line of U, named by its least sector
    lifts: list[ConeLift]
    case: str  # "overlap" or "tree_path"
    truncated: bool = False

    @property
    def kind(self) -> str:
        return "point" if len(self.lifts) == 1 else "saddle" if len(self.lifts) == 2 else "set"

    def to_json(self) -> dict:
        return {"v": self.v, "w": self.w, "U": self.component, "case": self.case, "kind": self.kind,
                "bridge": [l.key() for l in self.lifts], "truncated": self.truncated}


def _sector_name(s: Sector) -> str:
    return f"{s.lift.key() or 'root'}|{s.start.index}:{s.start.vec[0]},{s.start.vec[1]}"


def bridge(forest: SpineForest, strip: Strip, u_sector: Sector) -> BridgeResult:
    """The bridge for the component behind ``u_sector`` of the complement of the spine across ``strip``.

    ``strip`` runs from ``v`` to its neighbour ``w``; ``u_sector`` is a sector
    at a node of ``w`` that does not face back towards ``v``.
    """
    gamma_w = full_line(forest, strip.far_sector)
    w_keys = _line_keys(gamma_w)
    if any(s.lift.address == u_sector.lift.address and s.start == u_sector.start for s in gamma_w):
        raise ValueError("the chosen component contains the spine of v")
    gamma_u = full_line(forest, u_sector)
    u_keys = _line_keys(gamma_u)
    name = _sector_name(min(gamma_u, key=lambda s: (lift_key(s.lift), s.start)))
    common = [s.lift for s in gamma_w if s.lift.address in u_keys]
    if common:
        ends = {gamma_w[0].lift.address, gamma_w[-1].lift.address, gamma_u[0].lift.address,
                gamma_u[-1].lift.address}
        trunc = any(l.address in ends for l in common)
        return BridgeResult(strip.near, strip.far, name, common, "overlap", trunc)
    wtree = forest.spine(strip.far_sector.lift)
    adj: dict[tuple, list[tuple]] = {}
    for a, b, _, _ in wtree.edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    src = {a: a for a in w_keys}
    q = deque(sorted(w_keys, key=lambda a: (len(a), a)))
    while q:
        a = q.popleft()
        if a in u_keys:
            return BridgeResult(strip.near, strip.far, name, [wtree.nodes[src[a]]], "tree_path")
        for b in adj.get(a, []):
            if b not in src:
                src[b] = src[a]
                q.append(b)
    raise ChartTooSmall("boundary lines not connected inside the window")


def sample_behind(forest: SpineForest, u_sector: Sector, rng, count: int = 3, hops: int = 2) -> list[ConeLift]:
    """Cone lifts in the closure of the component behind ``u_sector``.

    Points on the boundary line plus endpoints of random geodesic rays that
    leave the line into the component (a ray leaving a spine never returns).
    """
    chart = forest.chart
    o = forest.origami
    line = full_line(forest, u_sector)
    out = [line[int(rng.integers(len(line)))].lift]
    for _ in range(count):
        sec = line[int(rng.integers(len(line)))]
        y = sec.lift
        L = o.quarters(y.cls)
        rays = [s for s in saddle_rays(o, y.cls, 8) if strictly_between(s.prong, sec.start, sec.end(L), L)]
        rays = [s for s in rays if chart.contains(chart.follow(y, [s.prong]))]
        if not rays:
            continue
        cur = chart.follow(y, [rays[int(rng.integers(len(rays)))].prong])
        for _ in range(int(rng.integers(hops + 1))):
            ext = chart.extensions(cur, 3)
            ext = [e for e in ext if chart.contains(chart.follow(cur, [e.prong]))]
            if not ext:
                break
            cur = chart.follow(cur, [ext[int(rng.integers(len(ext)))].prong])
        out.append(cur)
    return out


# ---------------------------------------------------------------------------
# level maps


@dataclass(frozen=True)
class StripPoint:
    """A point of the thickened spine: strip, shear of its fiber, base-fiber developed position."""

    strip: Strip
    shear: Fraction
    pos: tuple[Fraction, Fraction]


class LevelMap:
    """Integer level map on the windowed thickened spine of ``v``.

    In the strip towards ``w`` a point at transverse fraction ``r`` over the
    fiber of shear ``s`` gets level ``floor((1 - r) s + r u / h)`` where ``u``
    is the base-fiber coordinate along the direction of the boundary cone
    point across the strip nearest to it in its own fiber, measured from the
    spine's base lift, and ``h`` is the strip width.
    """

    def __init__(self, forest: SpineForest, v: SpineTree, overrun: int = 0):
        self.forest = forest
        self.v = v
        self.overrun = overrun
        self.direction = forest.direction
        self.origin = alpha_coordinate(self.direction, v.base.pos)
        self.transverse = v.transverse(v.base)
        self._lines: dict[tuple, list[Sector]] = {}

    def strip_table(self) -> list[dict]:
        out = []
        for s in self.forest.strips(self.v):
            out.append({"neighbor": s.far, "width": str(s.width), "scale": str(s.width)})
        return out

    def far_line(self, strip: Strip) -> list[Sector]:
        key = (strip.far_sector.lift.address, strip.far_sector.start)
        if key not in self._lines:
            self._lines[key] = full_line(self.forest, strip.far_sector, self.overrun)
        return self._lines[key]

    def fraction(self, z: StripPoint) -> Fraction:
        if z.strip.near != self.v.vertex.id:
            raise NotInThickenedSpine(f"strip does not border {self.v.vertex.id}")
        t = cross(self.direction.vector, z.pos)
        r = abs(Fraction(t) - self.transverse) / z.strip.width
        if r > 1:
            raise NotInThickenedSpine("point beyond the far side of the strip")
        return r

    def nearest_across(self, z: StripPoint) -> ConeLift:
        G = fiber_matrix_on_boundary(self.direction, z.shear)
        best = None
        for s in self.far_line(z.strip):
            p = s.lift
            dv = (float(p.pos[0] - z.pos[0]), float(p.pos[1] - z.pos[1]))
            key = (round(fiber_length(G, dv), 9), lift_key(p))
            if best is None or key < best[0]:
                best = (key, p)
        return best[1]

    def level(self, z: StripPoint) -> int:
        r = self.fraction(z)
        s = Fraction(z.shear)
        if r == 0:
            return math.floor(s)
        p = self.nearest_across(z)
        u = alpha_coordinate(self.direction, p.pos) - self.origin
        return math.floor((1 - r) * s + r * u / z.strip.width)

    def boundary_level(self, p: ConeLift, strip: Strip) -> int:
        """Level of a cone lift on the far line of ``strip`` (shear-free there)."""
        u = alpha_coordinate(self.direction, p.pos) - self.origin
        return math.floor(u / strip.width)

    def to_json(self) -> dict:
        return {"v": self.v.vertex.id, "origin": str(self.origin), "strips": self.strip_table(),
                "formula": "floor((1-r)*s + r*u/h)"}


def unit_transverse_vector(direction: RationalDirection) -> tuple[int, int]:
    from .spines import _unit_transverse

    return _unit_transverse(direction.vector)


def strip_point(strip: Strip, v: SpineTree, direction: RationalDirection, shear, along, r) -> StripPoint:
    """Point at ``along`` primitive steps from the strip's near lift and fraction ``r`` across it."""
    d = direction.vector
    w0 = unit_transverse_vector(direction)
    side = 1 if strip.near_sector.start.vec == d else -1
    h = strip.width
    base = strip.near_sector.lift.pos
    t = Fraction(r) * h * side
    pos = (base[0] + Fraction(along) * d[0] + t * w0[0], base[1] + Fraction(along) * d[1] + t * w0[1])
    return StripPoint(strip, Fraction(shear), pos)


def transfer(z: StripPoint, back: Strip) -> StripPoint:
    """The same point seen from the other side of its strip."""
    return StripPoint(back, z.shear, z.pos)


def bundle_distance(z1: StripPoint, z2: StripPoint) -> float:
    """Within one strip: shear difference plus fiber length of the displacement."""
    G = fiber_matrix_on_boundary(_direction_of(z1), z1.shear)
    dv = (float(z2.pos[0] - z1.pos[0]), float(z2.pos[1] - z1.pos[1]))
    return abs(float(z1.shear - z2.shear)) + fiber_length(G, dv)


def _direction_of(z: StripPoint) -> RationalDirection:
    return RationalDirection.of_vector(z.strip.near_sector.start.vec)


@dataclass
class LevelReport:
    constancy_checked: int = 0
    constancy_failures: list = field(default_factory=list)
    grid_block: tuple[int, int] | None = None
    grid_cells: int = 0
    lipschitz_max: float = 0.0
    lipschitz_pairs: int = 0

    def to_json(self) -> dict:
        return {"constancy_checked": self.constancy_checked, "constancy_failures": self.constancy_failures,
                "grid_block": list(self.grid_block) if self.grid_block else None, "grid_cells": self.grid_cells,
                "lipschitz_max": round(self.lipschitz_max, 9), "lipschitz_pairs": self.lipschitz_pairs}


def flow_constancy(lm: LevelMap, p: ConeLift, strip: Strip, shears=range(-3, 4)) -> bool:
    """Level of the flow line of a boundary cone lift is the same at every shear."""
    vals = {lm.level(StripPoint(strip, Fraction(s), (Fraction(p.pos[0]), Fraction(p.pos[1])))) for s in shears}
    return len(vals) == 1


def level_pairs(forest: SpineForest, v: SpineTree, strip: Strip, shears, rng=None, extra: int = 0):
    """Sampled (level at v, level at w) pairs on the strip from ``v`` to ``w``."""
    back = reverse_strip(forest, strip)
    lv = LevelMap(forest, v)
    lw = LevelMap(forest, forest.spine(strip.far_sector.lift))
    near = full_line(forest, strip.near_sector)
    out = set()
    for sec in near:
        pos = (Fraction(sec.lift.pos[0]), Fraction(sec.lift.pos[1]))
        for s in shears:
            z = StripPoint(strip, Fraction(s), pos)
            out.add((lv.level(z), lw.level(transfer(z, back))))
    if rng is not None:
        span = len(near)
        for _ in range(extra):
            s = Fraction(int(rng.integers(-4000, 4000)), 400)
            r = Fraction(int(rng.integers(0, 101)), 100)
            z = strip_point(strip, v, forest.direction, s, Fraction(int(rng.integers(-span * 50, span * 50)), 100), r)
            try:
                out.add((lv.level(z), lw.level(transfer(z, back))))
            except NotInThickenedSpine:
                continue
    return out


def covered_block(pairs, size: int = 10) -> tuple[int, int] | None:
    """Lower corner of a fully covered ``size`` x ``size`` block of integer pairs, if any."""
    pairs = set(pairs)
    for a, b in sorted(pairs):
        if all((a + i, b + j) in pairs for i in range(size) for j in range(size)):
            return (a, b)
    return None


def lipschitz_scatter(forest: SpineForest, v: SpineTree, strip: Strip, rng, n: int = 200) -> tuple[float, int]:
    """Max of level change over max(distance, 1) on nearby sampled pairs."""
    back = reverse_strip(forest, strip)
    lv = LevelMap(forest, v)
    lw = LevelMap(forest, forest.spine(strip.far_sector.lift))
    worst = 0.0
    for _ in range(n):
        s = Fraction(int(rng.integers(-2000, 2000)), 400)
        a = Fraction(int(rng.integers(-300, 300)), 100)
        r = Fraction(int(rng.integers(0, 101)), 100)
        z1 = strip_point(strip, v, forest.direction, s, a, r)
        ds = Fraction(int(rng.integers(-100, 101)), 100)
        da = Fraction(int(rng.integers(-100, 101)), 100)
        r2 = min(Fraction(1), max(Fraction(0), r + Fraction(int(rng.integers(-20, 21)), 100)))
        z2 = strip_point(strip, v, forest.direction, s + ds, a + da, r2)
        dl = max(abs(lv.level(z1) - lv.level(z2)),
                 abs(lw.level(transfer(z1, back)) - lw.level(transfer(z2, back))))
        worst = max(worst, dl / max(bundle_distance(z1, z2), 1.0))
    return worst, n


# ---------------------------------------------------------------------------
# M-sets


def m_set_points(forest: SpineForest, v: SpineTree, strip: Strip, shears, alongs, fractions, overrun: int = 0):
    """Grid of strip points keyed by (level at v, level at the neighbour)."""
    back = reverse_strip(forest, strip)
    lv = LevelMap(forest, v, overrun)
    lw = LevelMap(forest, forest.spine(strip.far_sector.lift), overrun)
    out: dict[tuple[int, int], list[StripPoint]] = {}
    for s in shears:
        for a in alongs:
            for r in fractions:
                z = strip_point(strip, v, forest.direction, s, a, r)
                key = (lv.level(z), lw.level(transfer(z, back)))
                out.setdefault(key, []).append(z)
    return out


def _foot(forest: SpineForest, z: StripPoint, line: list[Sector]) -> tuple[ConeLift, float]:
    a = alpha_coordinate(forest.direction, z.pos)
    best = min(line, key=lambda s: (abs(alpha_coordinate(forest.direction, s.lift.pos) - a), lift_key(s.lift)))
    return best.lift, float(abs(alpha_coordinate(forest.direction, best.lift.pos) - a))


class WindowMetric:
    """l1 model of the bundle metric on a thickened spine.

    Within one strip: shear difference plus fiber length of the displacement.
    Across strips: shear difference plus, for each point, the transverse leg
    to the spine and the offset to the nearest spine cone lift, plus the spine
    path between those two lifts.
    """

    def __init__(self, forest: SpineForest, v: SpineTree):
        self.forest = forest
        self.v = v
        self._lines: dict[tuple, list[Sector]] = {}
        self._feet: dict[tuple, tuple[ConeLift, float, float]] = {}
        self._spine: dict[tuple, int] = {}
        self.t0 = v.transverse(v.base)

    def foot_data(self, z: StripPoint):
        key = (z.strip.far, z.pos)
        hit = self._feet.get(key)
        if hit is None:
            lk = (z.strip.near_sector.lift.address, z.strip.near_sector.start)
            if lk not in self._lines:
                self._lines[lk] = full_line(self.forest, z.strip.near_sector)
            foot, off = _foot(self.forest, z, self._lines[lk])
            leg = float(abs(cross(self.forest.direction.vector, z.pos) - self.t0))
            hit = self._feet[key] = (foot, off, leg)
        return hit

    def spine_distance(self, a: ConeLift, b: ConeLift) -> int:
        key = tuple(sorted((a.address, b.address)))
        if key not in self._spine:
            self._spine[key] = spine_distance(self.v, a, b)
        return self._spine[key]

    def __call__(self, z1: StripPoint, z2: StripPoint) -> float:
        if z1.strip.far == z2.strip.far:
            return bundle_distance(z1, z2)
        f1, o1, r1 = self.foot_data(z1)
        f2, o2, r2 = self.foot_data(z2)
        return abs(float(z1.shear - z2.shear)) + o1 + o2 + r1 + r2 + self.spine_distance(f1, f2)


def window_distance(forest: SpineForest, v: SpineTree, z1: StripPoint, z2: StripPoint) -> float:
    return WindowMetric(forest, v)(z1, z2)


def _set_gap(metric: WindowMetric, A, B) -> float:
    return min(metric(a, b) for a in A for b in B)


def m_set_gap(forest: SpineForest, v: SpineTree, s: int, first: tuple[Strip, int], second: tuple[Strip, int],
              shears, alongs, fractions) -> tuple[float, float]:
    """Gaps between M(s) meet M(t1) and M(s) meet M(t2), and between M(t1) and M(t2), on grid samples."""
    grids = []
    for strip, t in (first, second):
        pts = m_set_points(forest, v, strip, shears, alongs, fractions)
        both = pts.get((s, t), [])
        only = [z for (a, b), zs in pts.items() if b == t for z in zs]
        if not both or not only:
            raise EmptyLevelSet(f"no sampled point with levels ({s}, {t})")
        grids.append((both, only))
    (a1, b1), (a2, b2) = grids
    if first[0].far == second[0].far and first[1] == second[1]:
        return 0.0, 0.0
    metric = WindowMetric(forest, v)
    return _set_gap(metric, a1, a2), _set_gap(metric, b1, b2)


def m_set_diameter(forest: SpineForest, points: list[StripPoint]) -> float:
    best = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            best = max(best, bundle_distance(points[i], points[j]), bundle_distance(points[j], points[i]))
    return best


# ---------------------------------------------------------------------------
# coned-off neighbour graphs


@dataclass
class XiGraph:
    v: str
    vertices: list[str]
    edges: set[tuple[str, str]]
    strips: dict[str, Strip]
    node_strips: dict[tuple, list[str]]  # spine node address -> neighbours whose strips contain it

    def adjacency(self) -> dict[str, set[str]]:
        adj = {w: set() for w in self.vertices}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def distances(self, src: str, removed: set[str] = frozenset()) -> dict[str, int]:
        adj = self.adjacency()
        dist = {src: 0}
        q = deque([src])
        while q:
            a = q.popleft()
            for b in sorted(adj[a]):
                if b not in dist and b not in removed:
                    dist[b] = dist[a] + 1
                    q.append(b)
        return dist

    def to_json(self) -> dict:
        return {"v": self.v, "vertices": len(self.vertices), "edges": len(self.edges)}


def xi_graph(forest: SpineForest, v: SpineTree) -> XiGraph:
    """Neighbours of ``v`` with an edge whenever their boundary lines on ``v`` share a cone lift."""
    strips: dict[str, Strip] = {}
    node_strips: dict[tuple, list[str]] = {}
    for a in sorted(v.nodes, key=lambda a: (len(a), a)):
        ids = []
        for sec in forest.sectors(v.nodes[a]):
            try:
                s = forest.crossing(sec)
            except ChartTooSmall:
                continue
            strips.setdefault(s.far, s)
            ids.append(s.far)
        node_strips[a] = ids
    edges = set()
    for ids in node_strips.values():
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                if ids[i] != ids[j]:
                    edges.add(tuple(sorted((ids[i], ids[j]))))
    return XiGraph(v.vertex.id, sorted(strips), edges, strips, node_strips)


def xi_graph_by_lines(forest: SpineForest, v: SpineTree) -> set[tuple[str, str]]:
    """Independent edge set: pairwise intersections of the strips' boundary lines on ``v``."""
    lines = {}
    for s in forest.strips(v):
        lines[s.far] = {sec.lift.address for sec in full_line(forest, s.near_sector)}
    ids = sorted(lines)
    out = set()
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if lines[ids[i]] & lines[ids[j]]:
                out.add((ids[i], ids[j]))
    return out


@dataclass
class BottleneckResult:
    w: str
    w2: str
    path: list[str]
    ok: bool
    bfs_distance: int
    failures: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"w": self.w, "w2": self.w2, "path": self.path, "ok": self.ok, "bfs_distance": self.bfs_distance,
                "failures": self.failures}


def star_path(forest: SpineForest, v: SpineTree, xi: XiGraph, w: str, w2: str) -> list[str]:
    """Edge path through the strips on one side of each saddle of the spine geodesic between the two strips."""
    if w == w2:
        return [w]
    start = {sec.lift.address for sec in full_line(forest, xi.strips[w].near_sector)} & set(v.nodes)
    goal = {sec.lift.address for sec in full_line(forest, xi.strips[w2].near_sector)} & set(v.nodes)
    adj: dict[tuple, list[tuple[tuple, Prong]]] = {}
    for a, b, p, _ in v.edges:
        adj.setdefault(a, []).append((b, p))
        back = forest.step(v.nodes[a], p)[1]
        adj.setdefault(b, []).append((a, back))
    prev: dict[tuple, tuple | None] = {a: None for a in start}
    q = deque(sorted(start, key=lambda a: (len(a), a)))
    end = None
    while q:
        a = q.popleft()
        if a in goal:
            end = a
            break
        for b, p in adj.get(a, []):
            if b not in prev:
                prev[b] = (a, p)
                q.append(b)
    if end is None:
        raise ChartTooSmall("strips not joined inside the spine window")
    steps = []
    a = end
    while prev[a] is not None:
        a0, p = prev[a]
        steps.append((a0, p))
        a = a0
    steps.reverse()
    path = [w]
    for a0, p in steps:
        lift = v.nodes[a0]
        plus = forest.crossing(Sector(lift, p)).far
        if plus != path[-1]:
            path.append(plus)
    if w2 != path[-1]:
        path.append(w2)
    return path


def bottleneck_check(forest: SpineForest, v: SpineTree, xi: XiGraph, w: str, w2: str, B: int = 3) -> BottleneckResult:
    """Every path from ``w`` to ``w2`` meets the ``B``-ball of every vertex of the star path."""
    path = star_path(forest, v, xi, w, w2)
    adj = xi.adjacency()
    bad = [f"{a}-{b}" for a, b in zip(path, path[1:]) if b not in adj[a]]
    for m in path:
        ball = {u for u, d in xi.distances(m).items() if d <= B}
        if w in ball or w2 in ball:
            continue
        if w2 in xi.distances(w, removed=ball):
            bad.append(m)
    dist = xi.distances(w).get(w2, -1)
    return BottleneckResult(w, w2, path, not bad, dist, bad)


# ---------------------------------------------------------------------------
# composite projections


@dataclass
class CompositeProjection:
    levels: set[int]
    neighbours: set[str]

    def to_json(self) -> dict:
        return {"levels": sorted(self.levels), "neighbours": sorted(self.neighbours)}


def composite_projections(forest: SpineForest, v: SpineTree, x: ConeLift, fiber: DiskPoint | None = None,
                          lm: LevelMap | None = None) -> CompositeProjection:
    res = window(forest, v, x, fiber, brute_force=False)
    lm = lm or LevelMap(forest, v)
    levels, nbrs = set(), set()
    for p in res.lifts:
        w = forest.spine_id(p)
        strip = None
        for sec in forest.sectors(p):
            s = forest.crossing(sec)
            if s.far == v.vertex.id:
                strip = reverse_strip(forest, s)
                break
        if strip is None:
            raise ChartTooSmall("window point does not border the spine")
        levels.add(lm.boundary_level(p, strip))
        nbrs.add(w)
    return CompositeProjection(levels, nbrs)


def crossing_spine_diameter(forest_v: SpineForest, v: SpineTree, other: SpineTree, shears=(-2, -1, 0, 1, 2)) -> float:
    """Diameter of the windows of a crossing spine's nodes, maximised over fibers on the horoball boundary."""
    lifts = {}
    for a, y in other.nodes.items():
        if a in v.nodes:
            continue
        try:
            res = window(forest_v, v, y, brute_force=False)
        except ChartTooSmall:
            continue
        for p in res.lifts:
            lifts[p.address] = p
    best = 0.0
    for s in shears:
        Y = closest_point_projection(Horoball(forest_v.direction), boundary_fiber(other.direction, s))
        G = Y.fiber_matrix()
        best = max(best, window_diameter(forest_v, lifts.values(), G))
    return best


# ---------------------------------------------------------------------------
# samplers


def random_neighbour_sector(forest: SpineForest, strip: Strip, rng, tries: int = 50) -> Sector | None:
    """A sector of the spine across ``strip`` whose line is not the one facing back."""
    wtree = forest.spine(strip.far_sector.lift)
    gamma_w = {(s.lift.address, s.start) for s in full_line(forest, strip.far_sector)}
    nodes = sorted(wtree.nodes, key=lambda a: (len(a), a))
    for _ in range(tries):
        y = wtree.nodes[nodes[int(rng.integers(len(nodes)))]]
        secs = forest.sectors(y)
        sec = secs[int(rng.integers(len(secs)))]
        if (y.address, sec.start) not in gamma_w:
            return sec
    return None


__all__ = [
    "BottleneckResult", "BridgeResult", "CompositeProjection", "EmptyLevelSet", "LevelMap", "LevelReport",
    "NotInThickenedSpine", "StripPoint", "WindowMetric", "WindowResult", "XiGraph", "alpha_coordinate", "bottleneck_check",
    "boundary_fiber", "bridge", "bundle_distance", "composite_projections", "covered_block",
    "crossing_spine_diameter", "fiber_matrix_on_boundary", "flow_constancy", "full_line", "level_pairs",
    "lipschitz_scatter", "m_set_diameter", "m_set_gap", "m_set_points", "random_neighbour_sector",
    "reverse_strip", "sample_behind", "sector_of", "spine_distance", "star_path", "strip_point", "transfer",
    "window", "window_diameter", "window_distance", "xi_graph", "xi_graph_by_lines",
]
