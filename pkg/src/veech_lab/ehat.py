"""A finite graph model of the coned-off space and slimness of preferred paths.

Nodes are the spines (tree vertices) of several directions met by the cone
lifts of one chart.  Two kinds of weighted edges:

* jumps: a cone lift lies on one spine per direction; its spines are joined
  by a star centred at the spine of the first listed direction, each edge
  weighted ``max(1, gap)`` where ``gap`` is the electrified distance between
  the two horoballs;
* strips: neighbouring spines of one direction, weighted by the strip width.

A base-fiber cone lift is represented by its spine in the first direction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .charts import Chart, ChartTooSmall, ConeLift, GeodesicPath, build_chart, flat_geodesic, sample_cone_lift
from .disk import BASE, DEFAULT_SCALE, Horoball, gap_exact, hyp_distance
from .origami import Origami, RationalDirection
from .spines import SpineForest, lift_key
from .triangles import classify_triangle


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EhatEdge:
    a: str
    b: str
    weight: float
    kind: str  # "jump" or "strip"
    witness: str

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "weight": round(self.weight, 9), "kind": self.kind,
                "witness": self.witness}


class EhatGraph:
    def __init__(self, chart: Chart, directions: list[RationalDirection], scale=DEFAULT_SCALE):
        self.chart = chart
        self.origami = chart.origami
        self.directions = list(directions)
        self.scale = Fraction(scale)
        self.forests = {d: SpineForest(chart, d) for d in self.directions}
        self.nodes: list[str] = []
        self.index: dict[str, int] = {}
        self.direction_of: dict[str, RationalDirection] = {}
        self.edges: dict[tuple[str, str], EhatEdge] = {}
        self._matrix = None
        self._rows: dict[int, np.ndarray] = {}

    # -- construction ------------------------------------------------------
    def add_node(self, nid: str, d: RationalDirection) -> None:
        if nid not in self.index:
            self.index[nid] = len(self.nodes)
            self.nodes.append(nid)
            self.direction_of[nid] = d

    def add_edge(self, a: str, b: str, weight: float, kind: str, witness: str) -> None:
        if a == b:
            return
        key = (a, b) if a < b else (b, a)
        old = self.edges.get(key)
        if old is None or weight < old.weight:
            self.edges[key] = EhatEdge(key[0], key[1], weight, kind, witness)

    def jump_weight(self, a: RationalDirection, b: RationalDirection) -> float:
        return max(1.0, gap_exact(a, b, self.scale))

    def vertex_of(self, lift: ConeLift, d: RationalDirection) -> str:
        return self.forests[d].spine_id(lift)

    # -- metric ----------------------------------------------------------
    @property
    def matrix(self) -> csr_matrix:
        if self._matrix is None:
            n = len(self.nodes)
            rows, cols, vals = [], [], []
            for e in self.edges.values():
                i, j = self.index[e.a], self.index[e.b]
                rows += [i, j]
                cols += [j, i]
                vals += [e.weight, e.weight]
            self._matrix = csr_matrix((vals, (rows, cols)), shape=(n, n))
        return self._matrix

    def distances_from(self, node: str) -> np.ndarray:
        i = self.index[node]
        if i not in self._rows:
            self._rows[i] = dijkstra(self.matrix, directed=False, indices=i)
        return self._rows[i]

    def distance(self, a: str, b: str) -> float:
        return float(self.distances_from(a)[self.index[b]])

    def distance_to_set(self, sources) -> np.ndarray:
        idx = sorted({self.index[s] for s in sources})
        return dijkstra(self.matrix, directed=False, indices=idx, min_only=True)

    def components(self) -> int:
        return int(connected_components(self.matrix, directed=False)[0])

    def component_of(self, node: str) -> set[str]:
        _, labels = connected_components(self.matrix, directed=False)
        lab = labels[self.index[node]]
        return {n for n in self.nodes if labels[self.index[n]] == lab}

    def to_json(self) -> dict:
        kinds: dict[str, int] = {}
        for e in self.edges.values():
            kinds[e.kind] = kinds.get(e.kind, 0) + 1
        weights = sorted({round(e.weight, 9) for e in self.edges.values()})
        return {"directions": [str(d) for d in self.directions], "nodes": len(self.nodes),
                "edges": kinds, "weights": weights[:20], "components": self.components(),
                "scale": str(self.scale), "chart_radius": str(self.chart.radius)}


def build_ehat(o: Origami, directions, depth, scale=DEFAULT_SCALE, budget: int = 200000,
               chart: Chart | None = None, strips: bool = True) -> EhatGraph:
    """Graph over all spines met by cone lifts of the chart of radius ``depth``."""
    dirs = []
    for d in directions:
        d = d if isinstance(d, RationalDirection) else RationalDirection.parse(str(d))
        if d not in dirs:
            dirs.append(d)
    if not dirs:
        raise ValueError("at least one direction is needed")
    chart = chart or build_chart(o, radius=depth)
    G = EhatGraph(chart, dirs, scale)
    lifts = chart.cone_lifts
    if len(lifts) * len(dirs) > budget:
        raise BudgetExceeded(f"{len(lifts)} lifts x {len(dirs)} directions exceeds the budget {budget}")
    center = dirs[0]
    for lift in lifts:
        ids = []
        for d in dirs:
            nid = G.vertex_of(lift, d)
            G.add_node(nid, d)
            ids.append(nid)
        for d, nid in zip(dirs[1:], ids[1:]):
            G.add_edge(ids[0], nid, G.jump_weight(center, d), "jump", lift.key() or "root")
    if strips:
        for d in dirs:
            f = G.forests[d]
            done = set()
            for lift in lifts:
                sid = f.spine_id(lift)
                for sec in f.sectors(lift):
                    key = (lift.address, sec.start)
                    if key in done:
                        continue
                    done.add(key)
                    try:
                        s = f.crossing(sec)
                    except ChartTooSmall:
                        continue
                    if s.far in G.index:
                        G.add_edge(sid, s.far, float(s.width), "strip", lift.key() or "root")
    return G


# ---------------------------------------------------------------------------
# preferred paths


@dataclass
class Piece:
    kind: str  # "horizontal" or "saddle"
    length: float
    direction: str | None = None
    fibers: tuple | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "length": round(self.length, 9)}
        if self.direction is not None:
            out["direction"] = self.direction
        return out


@dataclass
class PreferredPath:
    x: ConeLift
    y: ConeLift
    directions: list[RationalDirection]
    pieces: list[Piece]
    collapsed: list[str]
    weights: list[float]
    base: GeodesicPath | None = None
    degenerate: list[int] = field(default_factory=list)

    @property
    def length(self) -> float:
        return sum(self.weights)

    @property
    def jumps(self) -> int:
        return len(self.weights)

    def reversed(self) -> "PreferredPath":
        return PreferredPath(self.y, self.x, self.directions[::-1], self.pieces[::-1], self.collapsed[::-1],
                             self.weights[::-1], self.base.reversed() if self.base else None,
                             sorted(len(self.directions) - i for i in self.degenerate))

    def to_json(self) -> dict:
        return {"x": self.x.key(), "y": self.y.key(), "directions": [str(d) for d in self.directions],
                "pieces": [p.to_json() for p in self.pieces], "collapsed": self.collapsed,
                "weights": [round(w, 9) for w in self.weights], "degenerate": self.degenerate}


def saddle_directions(path: GeodesicPath) -> list[RationalDirection]:
    return [RationalDirection.of_vector(s) for s in path.segments]


def _apex(d: RationalDirection):
    return Horoball(d).apex()


def preferred_path(G: EhatGraph, x: ConeLift, y: ConeLift, start: str | None = None,
                   end: str | None = None) -> PreferredPath:
    """Horizontal pieces through the designated fibers and saddle pieces of the base geodesic.

    The collapsed form walks the graph: each saddle piece becomes the spine
    containing it, consecutive pieces of different directions are joined by
    the jumps at their common cone lift (through the star centre when neither
    direction is the first one), equal directions give a degenerate
    horizontal piece.
    """
    if x == y:
        return PreferredPath(x, y, [], [], [], [])
    base = flat_geodesic(G.chart, x, y)
    dirs = saddle_directions(base)
    missing = [d for d in dirs if d not in G.forests]
    if missing:
        raise KeyError(f"graph lacks direction {missing[0]}")
    pieces = []
    fiber = BASE
    degenerate = []
    for i, (d, seg) in enumerate(zip(dirs, base.segments)):
        if i > 0 and dirs[i - 1] == d:
            pieces.append(Piece("horizontal", 0.0, fibers=(str(d), str(d))))
            degenerate.append(i)
        else:
            X = _apex(d)
            pieces.append(Piece("horizontal", hyp_distance(fiber, X)))
        fiber = _apex(d)
        pieces.append(Piece("saddle", Horoball(d).length_on_boundary(seg), str(d)))
    pieces.append(Piece("horizontal", hyp_distance(fiber, BASE)))
    center = G.directions[0]
    nodes = [start or G.vertex_of(x, center)]
    cur_dir = G.direction_of[nodes[0]]
    for i, d in enumerate(dirs):
        u = base.vertices[i]
        _jump(G, nodes, cur_dir, d, u)
        cur_dir = d
    _jump(G, nodes, cur_dir, center, y)
    if end is not None and end != nodes[-1]:
        _jump(G, nodes, center, G.direction_of[end], y)
        if nodes[-1] != end:
            raise ValueError("end node does not contain the endpoint")
    weights = []
    for a, b in zip(nodes, nodes[1:]):
        e = G.edges.get((a, b) if a < b else (b, a))
        if e is None:
            raise AssertionError(f"collapsed path uses a missing edge {a} - {b}")
        weights.append(e.weight)
    return PreferredPath(x, y, dirs, pieces, nodes, weights, base, degenerate)


def _jump(G: EhatGraph, nodes: list[str], a: RationalDirection, b: RationalDirection, at: ConeLift) -> None:
    target = G.vertex_of(at, b)
    if a == b:
        if nodes[-1] != target:
            raise AssertionError("consecutive saddles of one direction lie on different spines")
        return
    center = G.directions[0]
    if a != center and b != center:
        nodes.append(G.vertex_of(at, center))
    nodes.append(target)


# ---------------------------------------------------------------------------
# slimness


@dataclass
class SlimnessReport:
    triple: tuple[str, str, str]
    paths: tuple[PreferredPath, PreferredPath, PreferredPath]
    sides: tuple[float, float, float]
    classification: str

    @property
    def delta(self) -> float:
        return max(self.sides)

    def to_row(self) -> dict:
        return {"x": self.triple[0], "y": self.triple[1], "z": self.triple[2],
                "classification": self.classification, "delta": round(self.delta, 9),
                "len_xy": round(self.paths[0].length, 9), "len_yz": round(self.paths[1].length, 9),
                "len_zx": round(self.paths[2].length, 9)}


def one_sided_hausdorff(G: EhatGraph, side: list[str], others: list[str]) -> float:
    if not side:
        return 0.0
    if not others:
        return math.inf
    dist = G.distance_to_set(others)
    return float(max(dist[G.index[n]] for n in side))


def triangle_slimness(G: EhatGraph, x: ConeLift, y: ConeLift, z: ConeLift, classify: bool = True) -> SlimnessReport:
    pxy, pyz, pzx = preferred_path(G, x, y), preferred_path(G, y, z), preferred_path(G, z, x)
    ends = {G.vertex_of(p, G.directions[0]) for p in (x, y, z)}
    sides = []
    paths = (pxy, pyz, pzx)
    for i in range(3):
        mine = paths[i].collapsed or [G.vertex_of((x, y, z)[i], G.directions[0])]
        others = [n for j in range(3) if j != i for n in paths[j].collapsed] or sorted(ends)
        sides.append(one_sided_hausdorff(G, mine, others))
    tag = "unclassified"
    if classify:
        tag = classify_triangle(G.chart, x, y, z).classification
    return SlimnessReport((x.key(), y.key(), z.key()), paths, tuple(sides), tag)


def sample_triples(chart: Chart, rng, n: int, radius) -> list[tuple[ConeLift, ConeLift, ConeLift]]:
    return [tuple(sample_cone_lift(chart, rng, max_radius=radius) for _ in range(3)) for _ in range(n)]


def needed_directions(chart: Chart, triples) -> list[RationalDirection]:
    out = set()
    for t in triples:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            if a != b:
                out.update(saddle_directions(flat_geodesic(chart, a, b)))
    return sorted(out, key=lambda d: (abs(d.p) + abs(d.q), d.q, d.p))


@dataclass
class SweepResult:
    reports: list[SlimnessReport]
    skipped: int
    graph: dict

    @property
    def delta_hat(self) -> float:
        return max((r.delta for r in self.reports), default=0.0)

    def quantiles(self) -> dict:
        if not self.reports:
            return {}
        vals = np.array([r.delta for r in self.reports])
        return {f"q{int(q * 100)}": round(float(np.quantile(vals, q)), 9) for q in (0.5, 0.9, 1.0)}

    def to_json(self) -> dict:
        return {"delta_hat": round(self.delta_hat, 9), "count": len(self.reports), "skipped": self.skipped,
                "quantiles": self.quantiles(), "graph": self.graph}


def slimness_sweep(o: Origami, base_directions, depth, triples, scale=DEFAULT_SCALE,
                   classify: bool = True) -> SweepResult:
    """Slimness of collapsed preferred triangles on a graph of the given depth.

    The graph carries every direction used by a side of a sampled triangle,
    after the base directions.
    """
    chart = build_chart(o, radius=depth)
    dirs = list(base_directions) + [d for d in needed_directions(chart, triples) if d not in base_directions]
    G = build_ehat(o, dirs, depth, scale, chart=chart)
    reports = []
    skipped = 0
    for t in triples:
        if not all(chart.contains(p) for p in t):
            skipped += 1
            continue
        reports.append(triangle_slimness(G, *t, classify=classify))
    return SweepResult(reports, skipped, G.to_json())


def sweep_csv_rows(result: SweepResult) -> list[dict]:
    return [r.to_row() for r in result.reports]


def four_point_delta(G: EhatGraph, nodes, rng=None, samples: int = 2000) -> float:
    """Largest four-point defect over quadruples of the node sample."""
    nodes = sorted(set(nodes), key=lambda n: G.index[n])
    if len(nodes) < 4:
        return 0.0
    D = np.array([G.distances_from(a)[[G.index[b] for b in nodes]] for a in nodes])
    quads = list(itertools.combinations(range(len(nodes)), 4))
    if rng is not None and len(quads) > samples:
        pick = rng.choice(len(quads), size=samples, replace=False)
        quads = [quads[i] for i in sorted(pick)]
    worst = 0.0
    for a, b, c, d in quads:
        s = sorted((D[a, b] + D[c, d], D[a, c] + D[b, d], D[a, d] + D[b, c]))
        if math.isinf(s[2]):
            continue
        worst = max(worst, (s[2] - s[1]) / 2)
    return float(worst)


def close_pair_diameters(G: EhatGraph, rng, pairs: int = 10, per_side: int = 2, R0: float | None = None) -> float:
    """Diameter of unions of collapsed preferred paths between spines at distance at most three R0."""
    R0 = R0 if R0 is not None else min((e.weight for e in G.edges.values() if e.kind == "jump"), default=1.0)
    center = G.directions[0]
    f = G.forests[center]
    lifts = G.chart.cone_lifts
    worst = 0.0
    for _ in range(pairs):
        x0 = lifts[int(rng.integers(len(lifts)))]
        u = G.vertex_of(x0, center)
        du = G.distances_from(u)
        close = [n for n in G.nodes if G.direction_of[n] == center and du[G.index[n]] <= 3 * R0]
        v = close[int(rng.integers(len(close)))]
        su = sorted(f.spine_by_id(u).nodes.values(), key=lift_key)
        sv = sorted(f.spine_by_id(v).nodes.values(), key=lift_key)
        union = set()
        for x in su[:per_side]:
            for y in sv[:per_side]:
                try:
                    union.update(preferred_path(G, x, y, start=u, end=v).collapsed)
                except (KeyError, ChartTooSmall):
                    continue
        union = sorted(union)
        for a in union:
            row = G.distances_from(a)
            worst = max(worst, max(row[G.index[b]] for b in union))
    return float(worst)


__all__ = [
    "BudgetExceeded", "EhatEdge", "EhatGraph", "Piece", "PreferredPath", "SlimnessReport", "SweepResult",
    "build_ehat", "close_pair_diameters", "four_point_delta", "needed_directions", "one_sided_hausdorff",
    "preferred_path", "sample_triples", "saddle_directions", "slimness_sweep", "sweep_csv_rows",
    "triangle_slimness",
]
