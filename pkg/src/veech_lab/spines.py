"""Spines, strips and windows of the dual trees in a rational direction.

In the universal cover the saddle connections in direction ``d`` form a
forest of trees (spines); the strips between neighbouring spines are lifts of
the cylinders.  Every cone-point lift meets exactly one spine per direction,
and at a cone lift the directions ``+d`` and ``-d`` alternate, cutting the
full angle into half-turn sectors each of which faces one strip.

Everything is windowed: spines are explored inside the chart's metric ball,
which meets each spine in a connected subtree because both are convex.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .charts import Chart, ChartTooSmall, ConeLift
from .directions import cylinder_decomposition
from .exact import Prong, cross, dot, norm2, primitive, strictly_between
from .origami import RationalDirection


def lift_key(lift: ConeLift) -> tuple:
    return (len(lift.address), lift.address)


@dataclass(frozen=True)
class Sector:
    """The half-turn at ``lift`` swept counterclockwise from ``start`` (a ``+-d`` prong)."""

    lift: ConeLift
    start: Prong

    def end(self, L: int) -> Prong:
        return self.start.opposite(L)


@dataclass(frozen=True)
class TreeVertex:
    """A spine, named by its least cone lift inside the window."""

    id: str
    direction: RationalDirection
    spine_component: int
    chart_lift: ConeLift | None = None


@dataclass
class SpineTree:
    vertex: TreeVertex
    nodes: dict[tuple, ConeLift]
    edges: list[tuple[tuple, tuple, Prong, int]]  # (from key, to key, prong, primitive steps)
    truncated: bool
    base: ConeLift

    @property
    def direction(self) -> RationalDirection:
        return self.vertex.direction

    def x_coordinate(self, lift: ConeLift) -> Fraction:
        d = self.direction.vector
        return Fraction(dot(tuple(a - b for a, b in zip(lift.pos, self.base.pos)), d), norm2(d))

    def transverse(self, lift: ConeLift) -> int:
        return cross(self.direction.vector, lift.pos)

    def is_tree(self) -> bool:
        if len(self.edges) != len(self.nodes) - 1:
            return False
        parent = {k: k for k in self.nodes}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b, _, _ in self.edges:
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
        return len({find(k) for k in self.nodes}) == 1

    def to_json(self) -> dict:
        return {"id": self.vertex.id, "direction": str(self.direction), "nodes": len(self.nodes),
                "edges": len(self.edges), "truncated": self.truncated}


@dataclass(frozen=True)
class Strip:
    near: str  # spine ids
    far: str
    width: Fraction
    near_sector: Sector
    far_sector: Sector
    crossing: tuple[Prong, ...]

    @property
    def pair(self) -> tuple[str, str]:
        return tuple(sorted((self.near, self.far)))


@dataclass
class TreeBall:
    direction: RationalDirection
    center: str
    radius: int
    vertices: list[str]
    edges: dict[tuple[str, str], Fraction]
    depth: dict[str, int]

    def is_tree(self) -> bool:
        if len(self.edges) != len(self.vertices) - 1:
            return False
        adj: dict[str, list[str]] = {v: [] for v in self.vertices}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        seen = {self.center}
        todo = [self.center]
        while todo:
            a = todo.pop()
            for b in adj[a]:
                if b not in seen:
                    seen.add(b)
                    todo.append(b)
        return len(seen) == len(self.vertices)

    def distance(self, a: str, b: str) -> float:
        """Combinatorial distance inside the ball, or infinity if either vertex is outside it."""
        if a not in self.depth or b not in self.depth:
            return float("inf")
        adj: dict[str, list[str]] = {v: [] for v in self.vertices}
        for x, y in self.edges:
            adj[x].append(y)
            adj[y].append(x)
        dist = {a: 0}
        q = deque([a])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        return dist.get(b, float("inf"))

    def to_json(self) -> dict:
        return {
            "direction": str(self.direction),
            "center": self.center,
            "radius": self.radius,
            "vertices": self.vertices,
            "edges": [{"a": a, "b": b, "weight": str(w)} for (a, b), w in sorted(self.edges.items())],
        }


class SpineForest:
    """Spines and strips of one direction inside one chart."""

    def __init__(self, chart: Chart, direction: RationalDirection):
        self.chart = chart
        self.origami = chart.origami
        self.direction = direction
        self._spine_of: dict[tuple, str] = {}
        self._spines: dict[str, SpineTree] = {}
        self._crossing: dict[tuple, Strip] = {}
        self._crossing_prong: dict[tuple, tuple[int, Prong]] = {}

    @cached_property
    def decomposition(self):
        return cylinder_decomposition(self.origami, self.direction)

    @cached_property
    def heights(self) -> list[Fraction]:
        return sorted({c.height for c in self.decomposition.cylinders})

    def alpha_prongs(self, cls: int) -> list[Prong]:
        d = self.direction.vector
        o = self.origami
        return sorted(o.prongs_for(cls, d) + o.prongs_for(cls, (-d[0], -d[1])))

    def sectors(self, lift: ConeLift) -> list[Sector]:
        return [Sector(lift, p) for p in self.alpha_prongs(lift.cls)]

    def step(self, lift: ConeLift, prong: Prong) -> tuple[ConeLift, Prong, int]:
        """Follow a saddle from a lift; return the far lift, arrival prong and length in steps."""
        sad = self.origami.trace(lift.cls, prong)
        return self.chart.follow(lift, [prong]), sad.end_prong, sad.steps

    # -- spines ------------------------------------------------------------
    def spine(self, lift: ConeLift) -> SpineTree:
        if not self.chart.contains(lift):
            raise ChartTooSmall("cone lift outside the chart")
        sid = self._spine_of.get(lift.address)
        if sid is not None:
            return self._spines[sid]
        nodes = {lift.address: lift}
        edges = []
        truncated = False
        todo = [lift]
        while todo:
            cur = todo.pop()
            for p in self.alpha_prongs(cur.cls):
                nxt, _, steps = self.step(cur, p)
                if not self.chart.contains(nxt):
                    truncated = True
                    continue
                if nxt.address not in nodes:
                    nodes[nxt.address] = nxt
                    edges.append((cur.address, nxt.address, p, steps))
                    todo.append(nxt)
        base = min(nodes.values(), key=lift_key)
        sid = f"{self.direction}@{base.key() or 'root'}"
        vertex = TreeVertex(sid, self.direction, self._component(base), base)
        tree = SpineTree(vertex, nodes, edges, truncated, base)
        for a in nodes:
            self._spine_of[a] = sid
        self._spines[sid] = tree
        return tree

    def _component(self, lift: ConeLift) -> int:
        """Index of the quotient spine component through the lift's cone class."""
        comps = self.spine_components_by_class()
        return comps.get(lift.cls, -1)

    @cached_property
    def _class_components(self) -> dict[int, int]:
        o = self.origami
        parent = {c: c for c in o.cone_classes}

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        for c in o.cone_classes:
            for p in self.alpha_prongs(c):
                t = o.trace(c, p).target
                parent[find(c)] = find(t)
        roots = sorted({find(c) for c in o.cone_classes})
        return {c: roots.index(find(c)) for c in o.cone_classes}

    def spine_components_by_class(self) -> dict[int, int]:
        return self._class_components

    def spine_id(self, lift: ConeLift) -> str:
        return self.spine(lift).vertex.id

    def spine_by_id(self, sid: str) -> SpineTree:
        """A spine already explored in this forest (for instance by ``tree_ball``)."""
        try:
            return self._spines[sid]
        except KeyError:
            raise KeyError(f"spine {sid} has not been explored") from None

    # -- strips ------------------------------------------------------------
    def _side(self, sector: Sector) -> int:
        return 1 if sector.start.vec == self.direction.vector else -1

    def crossing(self, sector: Sector) -> Strip:
        """The strip facing a sector: its width and the spine on the other side."""
        key = (sector.lift.address, sector.start)
        hit = self._crossing.get(key)
        if hit is not None:
            return hit
        lift = sector.lift
        found = self._crossing_prong.get((lift.cls, sector.start))
        if found is None:
            found = self._crossing_prong[(lift.cls, sector.start)] = self._search_crossing(sector)
        width, prong = found
        o = self.origami
        far, back, _ = self.step(lift, prong)
        fL = o.quarters(far.cls)
        far_start = None
        for a in self.alpha_prongs(far.cls):
            if strictly_between(back, a, a.opposite(fL), fL):
                far_start = a
                break
        near_id = self.spine_id(lift)
        if not self.chart.contains(far):
            raise ChartTooSmall("strip leaves the chart")
        far_id = self.spine_id(far)
        strip = Strip(near_id, far_id, Fraction(width), sector, Sector(far, far_start), (prong,))
        self._crossing[key] = strip
        return strip

    def _search_crossing(self, sector: Sector) -> tuple[int, Prong]:
        """Least-transverse saddle into the sector; depends only on the cone class."""
        o = self.origami
        lift = sector.lift
        L = o.quarters(lift.cls)
        d = self.direction.vector
        side = self._side(sector)
        hmax = max(self.heights)
        cmax = max(c.circumference for c in self.decomposition.cylinders)
        K = int(cmax) + 2
        # w0 with det(d, w0) = 1
        w0 = _unit_transverse(d)
        best = None
        for t in range(1, int(hmax) + 1):
            for k in range(-K - t * K, K + t * K + 1):
                v = (side * t * w0[0] + k * d[0], side * t * w0[1] + k * d[1])
                if primitive(v) != v:
                    continue
                for p in o.prongs_for(lift.cls, v):
                    if not strictly_between(p, sector.start, sector.end(L), L):
                        continue
                    sad = o.trace(lift.cls, p)
                    hol = sad.holonomy
                    tr = side * cross(d, hol)
                    cand = (tr, norm2(hol), p)
                    if best is None or cand < best:
                        best = cand
            if best is not None and best[0] <= t:
                break
        if best is None:
            raise ChartTooSmall("no crossing saddle found for the sector")
        return best[0], best[2]

    def strips(self, spine: SpineTree) -> list[Strip]:
        """Distinct strips along the windowed spine, one per neighbouring spine."""
        out: dict[str, Strip] = {}
        for key in sorted(spine.nodes, key=lambda a: (len(a), a)):
            lift = spine.nodes[key]
            for sec in self.sectors(lift):
                try:
                    s = self.crossing(sec)
                except ChartTooSmall:
                    continue
                out.setdefault(s.far, s)
        return [out[k] for k in sorted(out)]

    # -- lines along strip boundaries ------------------------------------
    def line(self, sector: Sector, reach: int = 4, overrun: int = 0) -> list[Sector]:
        """Sectors along the boundary line through ``sector``, ordered along ``+d``.

        The walk stops at the chart boundary, or ``overrun`` cone lifts past it.
        """
        o = self.origami

        def admit(lift, outside):
            if self.chart.contains(lift):
                return outside
            return outside + 1 if outside < overrun else None

        fwd = []
        cur = sector
        outside = 0
        for _ in range(reach):
            nxt, back, _ = self.step(cur.lift, cur.start)
            outside = admit(nxt, outside)
            if outside is None:
                break
            L = o.quarters(nxt.cls)
            cur = Sector(nxt, Prong((back.index - 2) % L, (-back.vec[0], -back.vec[1])))
            fwd.append(cur)
        bwd = []
        cur = sector
        outside = 0
        for _ in range(reach):
            L = o.quarters(cur.lift.cls)
            nxt, back, _ = self.step(cur.lift, cur.start.opposite(L))
            outside = admit(nxt, outside)
            if outside is None:
                break
            cur = Sector(nxt, back)
            bwd.append(cur)
        seq = bwd[::-1] + [sector] + fwd
        if self._side(sector) < 0:
            seq = seq[::-1]
        return seq

    def line_position(self, sector: Sector) -> Fraction:
        d = self.direction.vector
        return Fraction(dot(sector.lift.pos, d), norm2(d))


def _unit_transverse(d) -> tuple[int, int]:
    """An integer vector ``w`` with ``det(d, w) = 1``."""
    p, q = d
    # extended Euclid: a p + b q = 1 gives det((p, q), (-b, a)) = 1
    old_r, r, old_s, s, old_t, t = p, q, 1, 0, 0, 1
    while r:
        k = old_r // r
        old_r, r = r, old_r - k * r
        old_s, s = s, old_s - k * s
        old_t, t = t, old_t - k * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return (-old_t, old_s)


def spine_through(chart: Chart, x: ConeLift, direction: RationalDirection,
                  forest: SpineForest | None = None) -> SpineTree:
    forest = forest or SpineForest(chart, direction)
    return forest.spine(x)


def tree_ball(forest: SpineForest, r: int, center: ConeLift | None = None,
              max_children: int | None = None) -> TreeBall:
    """Combinatorial ball of the dual tree around the spine through ``center`` (default the chart root).

    With ``max_children`` each vertex keeps only its first few new neighbours,
    preferring strips that cross near the chart root; the result is a subtree.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    start = forest.spine(center or forest.chart.root)
    cid = start.vertex.id
    depth = {cid: 0}
    edges: dict[tuple[str, str], Fraction] = {}
    q = deque([start])
    while q:
        sp = q.popleft()
        k = depth[sp.vertex.id]
        if k == r:
            continue
        strips = forest.strips(sp)
        if max_children is not None:
            strips = sorted(strips, key=lambda s: (lift_key(s.near_sector.lift), s.far))
        taken = 0
        for s in strips:
            pair = s.pair
            if pair in edges:
                continue
            if s.far in depth and depth[s.far] <= k:
                continue
            if max_children is not None and s.far not in depth and taken >= max_children:
                continue
            edges[pair] = s.width
            if s.far not in depth:
                taken += 1
                depth[s.far] = k + 1
                q.append(forest.spine_by_id(s.far))
    verts = sorted(depth, key=lambda v: (depth[v], v))
    return TreeBall(forest.direction, cid, r, verts, edges, depth)


@dataclass
class ThickenedSpine:
    spine: SpineTree
    strips: list[Strip]
    boundary: dict[str, list[ConeLift]] = field(default_factory=dict)

    @property
    def neighbors(self) -> list[str]:
        return [s.far for s in self.strips]

    def to_json(self) -> dict:
        return {"spine": self.spine.to_json(),
                "strips": [{"neighbor": s.far, "width": str(s.width)} for s in self.strips]}


def thickened_spine(forest: SpineForest, spine: SpineTree, reach: int = 3) -> ThickenedSpine:
    strips = forest.strips(spine)
    boundary = {}
    for s in strips:
        boundary[s.far] = [sec.lift for sec in forest.line(s.far_sector, reach)]
    return ThickenedSpine(spine, strips, boundary)
