"""Windows of the universal cover, flat geodesics and the triangle taxonomy.

A point of the universal cover over a cone point is addressed by the unique
geodesic reaching it from the chart root, written as the sequence of prongs
leaving each cone point along the way.  Geodesics in the flat CAT(0) metric
are exactly the saddle-connection chains whose turning angle at every
interior cone point is at least pi on both sides, so the address is
canonical, and two lifts are equal exactly when their addresses are.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .exact import (
    HALF_TURN, ZERO, Angle, Prong, Surd, Vec, add, ccw, norm2, orient, primitive, sub, vec_length,
)
from .origami import NoConePoint, Origami, Saddle, saddle_rays


class ChartError(RuntimeError):
    pass


class ChartTooSmall(ChartError):
    pass


class RadiusTooLargeForBudget(ChartError):
    pass


class DegenerateTriangle(ValueError):
    pass


class NotAFan(ValueError):
    pass


# ---------------------------------------------------------------------------
# walking and tightening saddle chains


@dataclass(frozen=True)
class Vertex:
    cls: int
    pos: Vec
    back: Prong | None  # prong pointing back along the arriving saddle
    out: Prong | None   # prong of the leaving saddle


def walk(o: Origami, cls0: int, prongs: Sequence[Prong], origin: Vec = (0, 0)) -> list[Vertex]:
    verts = []
    cls, pos, back = cls0, origin, None
    for pr in prongs:
        verts.append(Vertex(cls, pos, back, pr))
        sad = o.trace(cls, pr)
        pos = add(pos, sad.holonomy)
        cls, back = sad.target, sad.end_prong
    verts.append(Vertex(cls, pos, back, None))
    return verts


def turn_ok(L: int, back: Prong, out: Prong) -> bool:
    """Both angles between the arriving and leaving directions are at least pi."""
    a = ccw(back, out, L)
    return HALF_TURN <= a and a <= Angle(L - 2)


def reverse_prongs(o: Origami, cls0: int, prongs: Sequence[Prong]) -> tuple[int, list[Prong]]:
    verts = walk(o, cls0, prongs)
    return verts[-1].cls, [verts[i].back for i in range(len(verts) - 1, 0, -1)]


def _lattice_points_in_triangle(a: Vec, b: Vec, c: Vec) -> Iterable[Vec]:
    xs = (a[0], b[0], c[0])
    ys = (a[1], b[1], c[1])
    s = orient(a, b, c)
    for x in range(min(xs), max(xs) + 1):
        for y in range(min(ys), max(ys) + 1):
            p = (x, y)
            if s * orient(a, b, p) >= 0 and s * orient(b, c, p) >= 0 and s * orient(c, a, p) >= 0:
                yield p


def visible_in_wedge(o: Origami, cls: int, apex: Vec, start: Prong, sweep: Angle,
                     far: Vec, other: Vec) -> list[tuple[Vec, Prong, Saddle]]:
    """Cone points inside the triangle (apex, far, other) first met by rays from the apex.

    ``start`` points at ``far`` and the open wedge of angle ``sweep < pi``
    sweeps counterclockwise towards ``other``.
    """
    L = o.quarters(cls)
    d0 = start.vec
    seen = set()
    found = []
    for p in _lattice_points_in_triangle(apex, far, other):
        if p == apex:
            continue
        d = primitive(sub(p, apex))
        if d in seen:
            continue
        seen.add(d)
        turn = Angle.between(d0, d)
        if not (ZERO < turn < sweep):
            continue
        pr = start.turned(turn, L)
        sad = o.trace(cls, pr)
        q = add(apex, sad.holonomy)
        s = orient(apex, far, other)
        if s * orient(far, other, q) >= 0:
            found.append((q, pr, sad))
    found.sort(key=lambda t: Angle.between(d0, t[1].vec))
    return found


def tighten(o: Origami, cls0: int, prongs: Sequence[Prong], max_rounds: int = 100000,
            taut_prefix: int = 0) -> list[Prong]:
    """Pull a saddle chain taut: the geodesic with the same endpoints.

    Each violated turn is replaced by the near convex chain of the cone points
    visible inside the triangle it cuts off, which strictly shortens the path.
    The first ``taut_prefix`` prongs may be declared taut already.
    """
    prongs = list(prongs)
    j = max(1, taut_prefix)
    rounds = 0
    while True:
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("tightening did not converge")
        verts = walk(o, cls0, prongs)
        k = len(prongs)
        bad = None
        for i in range(max(1, j), k):
            vv = verts[i]
            if not turn_ok(o.quarters(vv.cls), vv.back, vv.out):
                bad = i
                break
        if bad is None:
            return prongs
        i = bad
        vv = verts[i]
        L = o.quarters(vv.cls)
        a = ccw(vv.back, vv.out, L)
        if a == ZERO:
            del prongs[i - 1:i + 1]
            j = max(1, i - 1)
            continue
        A, V, C = verts[i - 1].pos, vv.pos, verts[i + 1].pos
        if a < HALF_TURN:
            start, sweep, first, last = vv.back, a, A, C
        else:
            start, sweep, first, last = vv.out, ccw(vv.out, vv.back, L), C, A
        cands = visible_in_wedge(o, vv.cls, V, start, sweep, first, last)
        chain = [(first, None, None)]
        for item in cands + [(last, None, None)]:
            P = item[0]
            while len(chain) >= 2:
                S1, S2 = chain[-2][0], chain[-1][0]
                if orient(S1, P, S2) * orient(S1, P, V) < 0:
                    chain.pop()
                else:
                    break
            chain.append(item)
        if first != A:
            chain.reverse()
        # new prongs: at A towards the first chain point, then along the chain
        pA = prongs[i - 1]
        nxt = chain[1][0]
        new = [pA.turned(Angle.signed(sub(V, A), sub(nxt, A)), o.quarters(verts[i - 1].cls))]
        for m in range(1, len(chain) - 1):
            Q, _, sad = chain[m]
            LQ = o.quarters(sad.target)
            new.append(sad.end_prong.turned(Angle.signed(sub(V, Q), sub(chain[m + 1][0], Q)), LQ))
        prongs[i - 1:i + 1] = new
        j = max(1, i - 1)


def chain_length(o: Origami, cls0: int, prongs: Sequence[Prong]) -> Surd:
    total = Surd()
    cls = cls0
    for pr in prongs:
        sad = o.trace(cls, pr)
        total = total + vec_length(sad.holonomy)
        cls = sad.target
    return total


def chain_length_float(o: Origami, cls0: int, prongs: Sequence[Prong]) -> float:
    total = 0.0
    cls = cls0
    for pr in prongs:
        sad = o.trace(cls, pr)
        total += math.sqrt(sad.length2)
        cls = sad.target
    return total


# ---------------------------------------------------------------------------
# cone-point lifts and charts


@dataclass(frozen=True)
class ConeLift:
    """A lift of a cone point, addressed by its geodesic from the chart root."""

    address: tuple[Prong, ...]
    cls: int
    pos: Vec
    back: Prong | None

    def __eq__(self, other) -> bool:
        return isinstance(other, ConeLift) and self.address == other.address

    def __hash__(self) -> int:
        return hash(self.address)

    @property
    def depth(self) -> int:
        return len(self.address)

    def key(self) -> str:
        return ";".join(f"{p.index}:{p.vec[0]},{p.vec[1]}" for p in self.address)


@dataclass
class Cell:
    """A lifted unit square, named through one of its cone-point corners."""

    corner: ConeLift
    slot: int
    square: int
    lower_left: Vec


class Chart:
    """A ball of the universal cover around a root cone-point lift.

    With ``lazy=True`` no enumeration happens up front; lifts are created on
    demand and membership is decided by distance to the root.
    """

    def __init__(self, o: Origami, root_class: int, radius, max_lifts: int = 200000, lazy: bool = False):
        if not o.cone_classes:
            raise NoConePoint("surface has no cone point to root a chart at")
        if root_class not in o.cone_classes:
            raise NoConePoint(f"vertex class {root_class} is not a cone point")
        self.origami = o
        self.root_class = root_class
        self.radius = Fraction(radius)
        self.max_lifts = max_lifts
        self.lazy = lazy
        self.root = ConeLift((), root_class, (0, 0), None)
        self._lifts: dict[tuple, ConeLift] = {(): self.root}
        self._dist: dict[tuple, float] = {(): 0.0}
        self._inside: dict[tuple, bool] = {}
        if not lazy:
            self._enumerate()

    # -- construction -----------------------------------------------------
    def _enumerate(self) -> None:
        R = float(self.radius)
        stack = [(self.root, 0.0)]
        lifts = [self.root]
        while stack:
            lift, d = stack.pop()
            for sad in self.extensions(lift, R - d):
                nd = d + math.sqrt(sad.length2)
                if nd > R + 1e-9 and not self._within(lift, sad):
                    continue
                child = ConeLift(lift.address + (sad.prong,), sad.target, add(lift.pos, sad.holonomy), sad.end_prong)
                self._lifts[child.address] = child
                self._dist[child.address] = nd
                lifts.append(child)
                if len(lifts) > self.max_lifts:
                    raise RadiusTooLargeForBudget(
                        f"more than {self.max_lifts} cone lifts within radius {self.radius}")
                stack.append((child, nd))
        self._order = sorted(lifts, key=lambda c: (self._dist[c.address], c.address))

    def _within(self, lift: ConeLift, sad: Saddle) -> bool:
        length = chain_length(self.origami, self.root_class, lift.address) + vec_length(sad.holonomy)
        return length <= Surd.of(self.radius)

    def extensions(self, lift: ConeLift, budget: float) -> list[Saddle]:
        """Saddles leaving ``lift`` that continue its root geodesic, up to length ``budget``."""
        o = self.origami
        if budget < 1 - 1e-12:
            return []
        r2 = int(math.floor(budget * budget + 1e-9))
        rays = saddle_rays(o, lift.cls, r2)
        if lift.back is None:
            return rays
        L = o.quarters(lift.cls)
        return [s for s in rays if turn_ok(L, lift.back, s.prong)]

    # -- lookup -----------------------------------------------------------
    def lift(self, address: Sequence[Prong], taut_prefix: int = 0) -> ConeLift:
        """The lift at the end of a saddle chain from the root (tightened)."""
        address = tuple(tighten(self.origami, self.root_class, address, taut_prefix=taut_prefix))
        got = self._lifts.get(address)
        if got is not None:
            return got
        verts = walk(self.origami, self.root_class, address)
        lift = ConeLift(address, verts[-1].cls, verts[-1].pos, verts[-1].back)
        if self.lazy:
            self._lifts[address] = lift
        return lift

    def follow(self, start: ConeLift, prongs: Sequence[Prong]) -> ConeLift:
        return self.lift(start.address + tuple(prongs), taut_prefix=len(start.address))

    def distance_from_root(self, lift: ConeLift) -> Surd:
        return chain_length(self.origami, self.root_class, lift.address)

    def contains(self, lift: ConeLift) -> bool:
        if not self.lazy:
            return lift.address in self._lifts
        hit = self._inside.get(lift.address)
        if hit is None:
            f = chain_length_float(self.origami, self.root_class, lift.address)
            R = float(self.radius)
            if abs(f - R) > 1e-7:
                hit = f < R
            else:
                hit = self.distance_from_root(lift) <= Surd.of(self.radius)
            self._inside[lift.address] = hit
        return hit

    @property
    def cone_lifts(self) -> list[ConeLift]:
        if self.lazy:
            raise ChartError("a lazy chart does not enumerate its lifts")
        return list(self._order)

    def distance_float(self, lift: ConeLift) -> float:
        d = self._dist.get(lift.address)
        if d is None:
            d = chain_length_float(self.origami, self.root_class, lift.address)
        return d

    def cells(self) -> list[Cell]:
        """Lifted squares with a cone-point corner in the chart, each listed once."""
        o = self.origami
        out = {}
        for lift in self.cone_lifts:
            L = o.quarters(lift.cls)
            for slot in range(L):
                key = self._cell_key(lift, slot)
                if key not in out:
                    s, k = o.vertex_classes[lift.cls].corner_cycle[slot]
                    off = [(0, 0), (-1, 0), (-1, -1), (0, -1)][k]
                    out[key] = Cell(lift, slot, s, add(lift.pos, off))
        return [out[k] for k in sorted(out, key=lambda t: (len(t[0]), t))]

    def _cell_key(self, lift: ConeLift, slot: int):
        o = self.origami
        k = slot % 4
        best = (lift.address, slot)
        corners = {(1, 0): 1, (1, 1): 2, (0, 1): 3}
        for vec, shift in corners.items():
            from .exact import rotate

            pr = Prong(slot, rotate(vec, k))
            sad = o.trace(lift.cls, pr)
            if sad.steps != 1:
                continue
            other = self.lift(lift.address + (pr,))
            oslot = sad.end_prong.index
            # the cell sits at the corner (k + shift) of the square seen from the other end
            L2 = o.quarters(other.cls)
            want = (k + shift) % 4
            for cand in (oslot, (oslot - 1) % L2):
                if cand % 4 == want:
                    best = min(best, (other.address, cand))
                    break
        return best

    def stats(self) -> dict:
        d: dict = {"radius": str(self.radius), "lazy": self.lazy}
        if not self.lazy:
            lifts = self.cone_lifts
            d["cone_lifts"] = len(lifts)
            d["max_depth"] = max(c.depth for c in lifts)
        return d


def build_chart(o: Origami, root_class: int | None = None, radius=3, max_lifts: int = 200000,
                lazy: bool = False) -> Chart:
    if root_class is None:
        if not o.cone_classes:
            raise NoConePoint("surface has no cone point to root a chart at")
        root_class = o.cone_classes[0]
    return Chart(o, root_class, radius, max_lifts=max_lifts, lazy=lazy)


# ---------------------------------------------------------------------------
# geodesics


@dataclass
class AngleCertificate:
    vertex: ConeLift
    left: Angle
    right: Angle

    @property
    def ok(self) -> bool:
        return self.left >= HALF_TURN and self.right >= HALF_TURN


@dataclass
class GeodesicPath:
    """Saddle chain between two lifts.

    ``prongs[i]`` leaves vertex ``i`` along segment ``i`` and ``arrivals[i]``
    is the prong at vertex ``i + 1`` pointing back along it.
    """

    vertices: list[ConeLift]
    segments: list[Vec]
    certificates: list[AngleCertificate] = field(default_factory=list)
    prongs: list[Prong] = field(default_factory=list)
    arrivals: list[Prong] = field(default_factory=list)

    @property
    def length2s(self) -> list[int]:
        return [norm2(s) for s in self.segments]

    @property
    def length(self) -> Surd:
        total = Surd()
        for s in self.segments:
            total = total + vec_length(s)
        return total

    @property
    def length_float(self) -> float:
        return sum(math.sqrt(norm2(s)) for s in self.segments)

    @property
    def certified(self) -> bool:
        return all(c.ok for c in self.certificates)

    def reversed(self) -> "GeodesicPath":
        return GeodesicPath(self.vertices[::-1], [(-s[0], -s[1]) for s in self.segments[::-1]],
                            [AngleCertificate(c.vertex, c.right, c.left) for c in self.certificates[::-1]],
                            self.arrivals[::-1], self.prongs[::-1])

    @property
    def directions(self) -> list[Vec]:
        return [primitive(s) for s in self.segments]


def _relative_path(chart: Chart, x: ConeLift, prongs: Sequence[Prong]) -> GeodesicPath:
    o = chart.origami
    verts = walk(o, x.cls, prongs, x.pos)
    lifts = [x]
    segs = []
    certs = []
    for i, pr in enumerate(prongs):
        segs.append(sub(verts[i + 1].pos, verts[i].pos))
        lifts.append(chart.follow(x, prongs[: i + 1]))
    for i in range(1, len(verts) - 1):
        L = o.quarters(verts[i].cls)
        certs.append(AngleCertificate(lifts[i], ccw(verts[i].back, verts[i].out, L),
                                      ccw(verts[i].out, verts[i].back, L)))
    return GeodesicPath(lifts, segs, certs, list(prongs), [v.back for v in verts[1:]])


def taut_geodesic(chart: Chart, x: ConeLift, y: ConeLift) -> GeodesicPath:
    """Pull the chain x -> root -> y tight."""
    o = chart.origami
    if x == y:
        return GeodesicPath([x], [], [])
    _, back = reverse_prongs(o, chart.root_class, x.address)
    prongs = tighten(o, x.cls, list(back) + list(y.address))
    return _relative_path(chart, x, prongs)


def _root_profile(chart: Chart, address: Sequence[Prong]) -> list[float]:
    """Cumulative float lengths along a root address."""
    o = chart.origami
    out = [0.0]
    cls = chart.root_class
    for pr in address:
        sad = o.trace(cls, pr)
        out.append(out[-1] + math.sqrt(sad.length2))
        cls = sad.target
    return out


def comparison_bound(chart: Chart, z: ConeLift, y: ConeLift, profile_y: list[float] | None = None) -> float:
    """Lower bound for d(z, y) from the root geodesics of both lifts.

    The two root geodesics share a prefix up to a lift p.  If they leave p at
    angle at least pi they concatenate to the geodesic; otherwise the CAT(0)
    angle comparison bounds d(z, y) below by the Euclidean third side.
    """
    a, b = z.address, y.address
    k = 0
    while k < len(a) and k < len(b) and a[k] == b[k]:
        k += 1
    pz = _root_profile(chart, a)
    py = profile_y if profile_y is not None else _root_profile(chart, b)
    dz = pz[-1] - pz[k]
    dy = py[-1] - py[k]
    if k == len(a) or k == len(b):
        return abs(dz - dy)
    cls = walk(chart.origami, chart.root_class, a[:k])[-1].cls
    L = chart.origami.quarters(cls)
    theta = min(ccw(a[k], b[k], L).radians(), ccw(b[k], a[k], L).radians())
    if theta >= math.pi:
        return dz + dy
    return math.sqrt(max(0.0, dz * dz + dy * dy - 2 * dz * dy * math.cos(theta)))


class _Sector:
    """Lifts whose root geodesic runs between the root geodesics to x and y.

    By convexity every lift on the geodesic from x to y lies in the disk cut
    out by the triangle (x, root, y), hence in this sector.
    """

    def __init__(self, chart: Chart, x: ConeLift, y: ConeLift):
        o = chart.origami
        a, b = x.address, y.address
        k = 0
        while k < len(a) and k < len(b) and a[k] == b[k]:
            k += 1
        self.a, self.b, self.k = a, b, k
        self.active = k < len(a) and k < len(b)
        if not self.active:
            return
        va = walk(o, chart.root_class, a)
        vb = walk(o, chart.root_class, b)
        L = o.quarters(va[k].cls)
        self.L0 = L
        # True when the triangle sits counterclockwise from the x branch
        self.ccw_from_a = ccw(a[k], b[k], L) < HALF_TURN
        if not (ccw(a[k], b[k], L) < HALF_TURN or ccw(b[k], a[k], L) < HALF_TURN):
            self.active = False
        self.va, self.vb = va, vb
        self.o = o

    def contains(self, z: ConeLift) -> bool:
        if not self.active:
            return True
        c, a, b, k = z.address, self.a, self.b, self.k
        if len(c) <= k:
            return c == a[: len(c)]
        if c[:k] != a[:k]:
            return False
        if c[k] != a[k] and c[k] != b[k]:
            lo, hi = (a[k], b[k]) if self.ccw_from_a else (b[k], a[k])
            return ZERO < ccw(lo, c[k], self.L0) < ccw(lo, hi, self.L0)
        left_of_branch = self.ccw_from_a if c[k] == a[k] else not self.ccw_from_a
        path, verts = (a, self.va) if c[k] == a[k] else (b, self.vb)
        j = k
        while j < len(c) and j < len(path) and c[j] == path[j]:
            j += 1
        if j == len(c):
            return True
        if j == len(path):
            return False
        v = verts[j]
        L = self.o.quarters(v.cls)
        if left_of_branch:
            return ZERO < ccw(path[j], c[j], L) < ccw(path[j], v.back, L)
        return ZERO < ccw(v.back, c[j], L) < ccw(v.back, path[j], L)


def flat_geodesic(chart: Chart, x: ConeLift, y: ConeLift, method: str = "taut",
                  max_expansions: int = 200000) -> GeodesicPath:
    """The geodesic from ``x`` to ``y`` as a certified saddle chain.

    ``method="taut"`` tightens the chain through the root; ``"search"`` runs
    a best-first search over local geodesics from ``x``.  Either way the
    answer is accepted only if every interior angle certificate passes and
    every vertex lies in the chart.
    """
    if not chart.contains(x) or not chart.contains(y):
        raise ChartTooSmall("endpoint outside the chart")
    if method == "taut":
        path = taut_geodesic(chart, x, y)
    elif method == "search":
        path = search_geodesic(chart, x, y, max_expansions)
    else:
        raise ValueError(f"unknown geodesic method {method!r}")
    if not path.certified or path.vertices[-1] != y:
        raise ChartError("geodesic failed its angle certificates")
    if not all(chart.contains(v) for v in path.vertices):
        raise ChartTooSmall("geodesic leaves the chart")
    return path


def search_geodesic(chart: Chart, x: ConeLift, y: ConeLift, max_expansions: int = 200000) -> GeodesicPath:
    """Best-first search over saddle extensions from ``x`` that keep every turn geodesic.

    Each search node is the end of a local geodesic from ``x``, hence a
    distinct lift, and its cost is its true distance from ``x``.  The heuristic
    is the larger of the developed Euclidean distance and the comparison
    bound; it is evaluated lazily, only for nodes reaching the queue front.
    Practical on small windows only: the number of local geodesics grows
    exponentially with length.
    """
    o = chart.origami
    if x == y:
        return GeodesicPath([x], [], [])
    target = sub(y.pos, x.pos)
    bound = chart.distance_float(x) + chart.distance_float(y) + 1e-9
    # geodesics between points of a ball stay in the ball
    radius = max(chart.distance_float(x), chart.distance_float(y)) + 1e-9
    prof_y = _root_profile(chart, y.address)
    sector = _Sector(chart, x, y)
    max_r2 = int(bound * bound) + 1
    # node: (lift, back prong relative to x, g, parent, prong)
    nodes: list = [(x, None, 0.0, -1, None)]
    heap = [(math.hypot(*target), False, 0)]
    ray_cache: dict[int, list] = {}
    expansions = 0
    while heap:
        f, strong, idx = heapq.heappop(heap)
        z, back, g, parent, _ = nodes[idx]
        if z == y:
            prongs = []
            k = idx
            while k:
                prongs.append(nodes[k][4])
                k = nodes[k][3]
            prongs.reverse()
            return _relative_path(chart, x, prongs)
        if not strong:
            h = comparison_bound(chart, z, y, prof_y)
            if g + h > f + 1e-12:
                heapq.heappush(heap, (g + h, True, idx))
                continue
        expansions += 1
        if expansions > max_expansions:
            raise ChartTooSmall("geodesic search exceeded its expansion budget")
        rays = ray_cache.get(z.cls)
        if rays is None:
            rays = [(s, math.sqrt(s.length2), s.prong.angle().radians()) for s in saddle_rays(o, z.cls, max_r2)]
            ray_cache[z.cls] = rays
        L = o.quarters(z.cls)
        total = L * math.pi / 2
        bang = back.angle().radians() if back is not None else 0.0
        rel = sub(z.pos, x.pos)
        dz = chart.distance_float(z)
        zang = z.back.angle().radians() if z.back is not None else None
        for sad, ln, ang in rays:
            ng = g + ln
            if ng > bound:
                break
            if back is not None:
                turn = (ang - bang) % total
                if turn < math.pi - 1e-9 or turn > total - math.pi + 1e-9:
                    continue
                if abs(turn - math.pi) < 1e-7 or abs(turn - (total - math.pi)) < 1e-7:
                    if not turn_ok(L, back, sad.prong):
                        continue
            hx, hy = sad.holonomy
            nf = ng + math.hypot(target[0] - rel[0] - hx, target[1] - rel[1] - hy)
            if nf > bound:
                continue
            if zang is None:
                if ln > radius:
                    continue
            else:
                t = (ang - zang) % total
                t = min(t, total - t, math.pi)
                if dz * dz + ln * ln - 2 * dz * ln * math.cos(t) > radius * radius + 1e-6:
                    continue
            child = chart.lift(z.address + (sad.prong,))
            if chart.distance_float(child) > radius or not sector.contains(child):
                continue
            nodes.append((child, sad.end_prong, ng, idx, sad.prong))
            heapq.heappush(heap, (nf, False, len(nodes) - 1))
    raise ChartTooSmall("no geodesic found inside the chart")


def sample_cone_lift(chart: Chart, rng, max_radius=None, stop: float = 0.15) -> ConeLift:
    """Random lift reached by a random geodesic walk from the root."""
    R = float(chart.radius if max_radius is None else max_radius)
    lift, d = chart.root, 0.0
    while True:
        ext = chart.extensions(lift, R - d)
        if not ext or rng.random() < stop:
            return lift
        sad = ext[int(rng.integers(len(ext)))] if hasattr(rng, "integers") else rng.choice(ext)
        d += math.sqrt(sad.length2)
        lift = chart.lift(lift.address + (sad.prong,))


def funnel_oracle(chart: Chart, x: ConeLift, y: ConeLift):
    """Independent route: funnel passes with vertex release along the chain x -> root -> y.

    Returns the x-relative prongs and segment holonomies of the geodesic.
    """
    from .sleeves import funnel_geodesic

    o = chart.origami
    if x == y:
        return [], []
    _, back = reverse_prongs(o, chart.root_class, x.address)
    prongs = list(back) + list(y.address)
    verts = walk(o, x.cls, prongs, x.pos)
    res = funnel_geodesic(o, [v.pos for v in verts], [v.cls for v in verts], prongs,
                          [v.back for v in verts])
    if res.points[-1] != y.pos:
        raise ChartError("funnel route ended at the wrong point")
    return res.prongs, res.holonomies
