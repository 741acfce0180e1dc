"""Finite windows of the flag complex and the graph on its maximal simplices.

The complex has one vertex per spine (a vertex of the dual tree) and one per
integer level of each spine.  Writing ``v(s)`` for the spine of a level
vertex ``s``:

* two spines are joined when they are adjacent in the tree,
* two levels are joined when their spines are adjacent,
* a level ``s`` and a spine ``w`` are joined when ``w`` is ``v(s)`` or adjacent to it.

Maximal simplices are the quadruples ``{s, v(s), t, v(t)}`` over tree edges.
The graph on them joins two maximal simplices when their level regions
(points of the thickened spines carrying both prescribed levels) come close.

Everything lives on a window: a combinatorial ball of the tree, a finite set
of levels per spine and a sampling grid on each strip.  Gaps between regions
that share no spine are never measured and are reported as unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import shortest_path

from .ehat import BudgetExceeded
from .projections import (LevelMap, StripPoint, WindowMetric, alpha_coordinate, fiber_matrix_on_boundary,
                          lipschitz_scatter, m_set_points, reverse_strip, strip_point, transfer)
from .spines import SpineForest, Strip, TreeBall

SEP = "#"

TYPES = ("empty", "xi", "kl", "tree-vertex", "level-vertex", "tree-edge", "level-edge",
         "level-neighbour", "level-edge-base")


def level_id(v: str, k: int) -> str:
    return f"{v}{SEP}{k}"


def _sorted(xs) -> tuple[str, ...]:
    return tuple(sorted(xs))


# ---------------------------------------------------------------------------
# the complex


@dataclass
class ComplexWindow:
    tree: TreeBall
    levels: tuple[int, ...]
    tree_adj: dict[str, set[str]]
    base: dict[str, str]  # level vertex -> its spine
    height: dict[str, int]
    adj: dict[str, set[str]]
    simplices: list[tuple[str, ...]]  # all nonempty flag simplices, sorted tuples
    maximal: list[tuple[str, ...]]
    checks: dict = field(default_factory=dict)

    @property
    def vertices(self) -> list[str]:
        return sorted(self.adj)

    def is_level(self, x: str) -> bool:
        return x in self.base

    def K(self, v: str) -> list[str]:
        return [level_id(v, k) for k in self.levels]

    def xi_link(self, v: str) -> set[str]:
        out = set()
        for u in self.tree_adj[v]:
            out.add(u)
            out.update(self.K(u))
        return out

    def spine_of(self, x: str) -> str:
        return self.base.get(x, x)

    def link(self, simplex) -> set[str]:
        if not simplex:
            return set(self.adj)
        it = iter(simplex)
        out = set(self.adj[next(it)])
        for x in it:
            out &= self.adj[x]
        return out - set(simplex)

    def stats(self) -> dict:
        by_dim: dict[int, int] = {}
        for s in self.simplices:
            by_dim[len(s) - 1] = by_dim.get(len(s) - 1, 0) + 1
        return {"tree_vertices": len(self.tree.vertices), "level_vertices": len(self.base),
                "simplices_by_dimension": {str(k): by_dim[k] for k in sorted(by_dim)},
                "maximal": len(self.maximal)}

    def to_json(self) -> dict:
        return {"center": self.tree.center, "radius": self.tree.radius, "levels": list(self.levels),
                "stats": self.stats(), "checks": self.checks}


def _cliques(adj: dict[str, set[str]], budget: int) -> list[tuple[str, ...]]:
    order = sorted(adj)
    rank = {x: i for i, x in enumerate(order)}
    out: list[tuple[str, ...]] = []

    def grow(clique, cands):
        for i, x in enumerate(cands):
            c = clique + (x,)
            out.append(c)
            if len(out) > budget:
                raise BudgetExceeded(f"more than {budget} simplices in the window")
            grow(c, [y for y in cands[i + 1:] if y in adj[x]])

    for x in order:
        out.append((x,))
        if len(out) > budget:
            raise BudgetExceeded(f"more than {budget} simplices in the window")
        grow((x,), sorted((y for y in adj[x] if rank[y] > rank[x]), key=rank.get))
    return out


def build_complex(tree: TreeBall, levels=(-1, 0, 1), budget: int = 200000) -> ComplexWindow:
    """Flag complex on a tree window and level windows, with the structural checks."""
    levels = tuple(sorted(set(int(k) for k in levels)))
    tree_adj: dict[str, set[str]] = {v: set() for v in tree.vertices}
    for a, b in tree.edges:
        tree_adj[a].add(b)
        tree_adj[b].add(a)
    base = {level_id(v, k): v for v in tree.vertices for k in levels}
    height = {level_id(v, k): k for v in tree.vertices for k in levels}
    adj: dict[str, set[str]] = {x: set() for x in list(tree.vertices) + list(base)}

    def join(a, b):
        adj[a].add(b)
        adj[b].add(a)

    for a, b in tree.edges:
        join(a, b)
        for k in levels:
            for j in levels:
                join(level_id(a, k), level_id(b, j))
    for s, v in base.items():
        join(s, v)
        for w in tree_adj[v]:
            join(s, w)
    simplices = _cliques(adj, budget)
    simplex_set = set(simplices)
    maximal = [s for s in simplices if not _common(adj, s)]
    c = ComplexWindow(tree, levels, tree_adj, base, height, adj, simplices, sorted(maximal))
    c.checks = {
        "edge_rules": _check_edge_rules(c),
        "maximal_simplices": _check_maximal(c),
        "retraction": _check_retraction(c, simplex_set),
    }
    return c


def _common(adj, simplex) -> set[str]:
    it = iter(simplex)
    out = set(adj[next(it)])
    for x in it:
        out &= adj[x]
    return out - set(simplex)


def _d_tree_le1(c: ComplexWindow, a: str, b: str) -> bool:
    return a == b or b in c.tree_adj[a]


def _check_edge_rules(c: ComplexWindow) -> dict:
    """Re-derive every edge from the three rules, pair by pair."""
    bad = []
    xs = c.vertices
    for i, a in enumerate(xs):
        for b in xs[i + 1:]:
            la, lb = c.is_level(a), c.is_level(b)
            if not la and not lb:
                want = b in c.tree_adj[a]
            elif la and lb:
                want = c.base[b] in c.tree_adj[c.base[a]]
            else:
                s, w = (a, b) if la else (b, a)
                want = _d_tree_le1(c, c.base[s], w)
            if want != (b in c.adj[a]):
                bad.append([a, b])
    return {"ok": not bad, "violations": bad[:20]}


def expected_maximal(c: ComplexWindow) -> set[tuple[str, ...]]:
    out = set()
    for a, b in c.tree.edges:
        if not c.levels:
            out.add(_sorted((a, b)))
        for s in c.K(a):
            for t in c.K(b):
                out.add(_sorted((s, a, t, b)))
    for v in c.tree.vertices:
        if c.tree_adj[v]:
            continue
        if not c.levels:
            out.add((v,))
        for s in c.K(v):
            out.add(_sorted((v, s)))
    return out


def _check_maximal(c: ComplexWindow) -> dict:
    got = set(c.maximal)
    want = expected_maximal(c)
    dims = sorted({len(s) - 1 for s in got})
    return {"ok": got == want, "count": len(got), "dimensions": dims,
            "missing": [list(s) for s in sorted(want - got)][:10],
            "unexpected": [list(s) for s in sorted(got - want)][:10]}


def _faces_with_empty(vertices: list[str], adj) -> set[tuple[str, ...]]:
    out = {()}
    for r in range(1, len(vertices) + 1):
        for combo in combinations(sorted(vertices), r):
            if all(b in adj[a] for a, b in combinations(combo, 2)):
                out.add(combo)
    return out


def _check_retraction(c: ComplexWindow, simplex_set) -> dict:
    """The map sending levels to their spines is simplicial with the expected preimages."""
    bad = []
    image: dict[tuple, tuple] = {}
    for s in c.simplices:
        im = tuple(sorted({c.spine_of(x) for x in s}))
        image[s] = im
        if len(im) > 2 or (len(im) == 2 and im[1] not in c.tree_adj[im[0]]):
            bad.append({"simplex": list(s), "image": list(im)})
    pre_v: dict[str, set] = {v: set() for v in c.tree.vertices}
    pre_e: dict[tuple, set] = {e: set() for e in c.tree.edges}
    for s, im in image.items():
        if len(im) == 1:
            pre_v[im[0]].add(s)
            for w in c.tree_adj[im[0]]:
                pre_e[tuple(sorted((im[0], w)))].add(s)
        elif len(im) == 2:
            pre_e[im].add(s)
    for v, got in pre_v.items():
        want = _faces_with_empty([v] + c.K(v), c.adj) - {()}
        if got != want:
            bad.append({"vertex": v})
    for (a, b), got in pre_e.items():
        left = _faces_with_empty([a] + c.K(a), c.adj)
        right = _faces_with_empty([b] + c.K(b), c.adj)
        want = {_sorted(x + y) for x in left for y in right} - {()}
        if got != want or not want <= simplex_set:
            bad.append({"edge": [a, b]})
    return {"ok": not bad, "violations": bad[:20]}


def simplex_type(c: ComplexWindow, simplex) -> str:
    """Combinatorial type of a non-maximal simplex."""
    simplex = tuple(simplex)
    levels = [x for x in simplex if c.is_level(x)]
    spines = [x for x in simplex if not c.is_level(x)]
    n = len(simplex)
    if n == 0:
        return "empty"
    if n == 1:
        return "level-vertex" if levels else "tree-vertex"
    if n == 2:
        if not levels:
            return "tree-edge"
        if len(levels) == 2:
            return "level-edge"
        return "xi" if c.base[levels[0]] == spines[0] else "level-neighbour"
    if n == 3:
        if len(levels) == 1:
            return "kl"
        if len(levels) == 2:
            return "level-edge-base"
    return "maximal" if n == 4 else "unknown"


def closed_form_link(c: ComplexWindow, simplex) -> tuple[str, set[str]]:
    simplex = tuple(simplex)
    kind = simplex_type(c, simplex)
    levels = [x for x in simplex if c.is_level(x)]
    spines = [x for x in simplex if not c.is_level(x)]
    if kind == "empty":
        return kind, set(c.adj)
    if kind == "tree-vertex":
        u = spines[0]
        return kind, set(c.K(u)) | c.xi_link(u)
    if kind == "level-vertex":
        v = c.base[levels[0]]
        return kind, {v} | c.xi_link(v)
    if kind == "tree-edge":
        u, w = spines
        return kind, set(c.K(u)) | set(c.K(w))
    if kind == "level-edge":
        return kind, {c.base[levels[0]], c.base[levels[1]]}
    if kind == "level-neighbour":
        return kind, {c.base[levels[0]]} | set(c.K(spines[0]))
    if kind == "xi":
        return kind, c.xi_link(spines[0])
    if kind == "kl":
        s = levels[0]
        (w,) = [u for u in spines if u != c.base[s]]
        return kind, set(c.K(w))
    if kind == "level-edge-base":
        s, t = levels
        other = c.base[t] if c.base[s] in spines else c.base[s]
        return kind, {other}
    return kind, set()


def twins(c: ComplexWindow, v: str) -> list[str]:
    """Spines of the window with the same tree neighbours as ``v``.

    The full tree has infinite valence so ``v`` is its own only twin; in a
    window, leaves hanging off a common vertex become indistinguishable.
    """
    return [x for x in c.tree.vertices if c.tree_adj[x] == c.tree_adj[v]]


def closed_form_saturation(c: ComplexWindow, simplex) -> set[str] | None:
    kind = simplex_type(c, simplex)
    spines = [x for x in simplex if not c.is_level(x)]
    levels = [x for x in simplex if c.is_level(x)]
    if kind == "xi":
        out = set()
        for v in twins(c, spines[0]):
            out |= {v} | set(c.K(v))
        return out
    if kind == "kl":
        (w,) = [u for u in spines if u != c.base[levels[0]]]
        return {w} | c.xi_link(w)
    return None


# ---------------------------------------------------------------------------
# level regions and the graph on maximal simplices


@dataclass
class MaximalSimplex:
    s: str
    t: str
    vertices: tuple[str, ...]
    points: int
    diameter: float

    @property
    def id(self) -> str:
        return "|".join(self.vertices)


@dataclass
class WEdge:
    a: int
    b: int
    rule: str  # "close" or "shared-level"
    gap: float


@dataclass
class WGraphWindow:
    nodes: list[MaximalSimplex]
    edges: list[WEdge]
    R: float
    measured_diameter: float
    slack: float
    unknown_pairs: int
    density: dict
    empty_regions: list[tuple[str, str]]

    def __post_init__(self):
        self.index = {n.vertices: i for i, n in enumerate(self.nodes)}
        self.neighbours: list[set[int]] = [set() for _ in self.nodes]
        for e in self.edges:
            self.neighbours[e.a].add(e.b)
            self.neighbours[e.b].add(e.a)
        self.containing: dict[str, set[int]] = {}
        for i, n in enumerate(self.nodes):
            for x in n.vertices:
                self.containing.setdefault(x, set()).add(i)

    def is_symmetric(self) -> bool:
        return all(a in self.neighbours[b] for a in range(len(self.nodes)) for b in self.neighbours[a])

    def augmented_adjacency(self) -> dict[str, set[str]]:
        """Vertices lying in W-adjacent maximal simplices."""
        out: dict[str, set[str]] = {}
        for e in self.edges:
            A, B = self.nodes[e.a].vertices, self.nodes[e.b].vertices
            for x in A:
                for y in B:
                    if x != y:
                        out.setdefault(x, set()).add(y)
                        out.setdefault(y, set()).add(x)
        return out

    def to_json(self) -> dict:
        rules: dict[str, int] = {}
        for e in self.edges:
            rules[e.rule] = rules.get(e.rule, 0) + 1
        return {"nodes": len(self.nodes), "edges": len(self.edges), "edges_by_rule": rules,
                "R": round(self.R, 6), "measured_diameter": round(self.measured_diameter, 6),
                "slack": round(self.slack, 6), "threshold": round(10 * self.R, 6),
                "unknown_pairs": self.unknown_pairs, "density": self.density,
                "empty_regions": [list(p) for p in self.empty_regions],
                "max_gap": round(max((e.gap for e in self.edges), default=0.0), 6)}


@dataclass
class _Atlas:
    """Sampled points of one thickened spine with their levels and metric data."""

    v: str
    far: list[str]  # far spine of each strip
    shear: list[np.ndarray]  # per strip
    pos: list[np.ndarray]
    near_level: list[np.ndarray]
    far_level: list[np.ndarray]
    foot: list[np.ndarray]
    offset: list[np.ndarray]
    fibers: list[np.ndarray]
    foot_distance: np.ndarray


DEFAULT_GRID = ([Fraction(k, 2) for k in range(-2, 4)], [Fraction(k, 2) for k in range(-2, 3)],
                [Fraction(k, 3) for k in range(4)])


def _directed_strips(forest: SpineForest, c: ComplexWindow) -> dict[tuple[str, str], Strip]:
    out = {}
    for a, b in sorted(c.tree.edges):
        near, far = (a, b) if c.tree.depth[a] <= c.tree.depth[b] else (b, a)
        hits = [s for s in forest.strips(forest.spine_by_id(near)) if s.far == far]
        if not hits:
            raise KeyError(f"no strip from {near} to {far}")
        out[(near, far)] = hits[0]
        out[(far, near)] = reverse_strip(forest, hits[0])
    return out


def _solve_levels(a: int, b: int, Uv: float, Uw: float) -> list[tuple[float, float]]:
    """Shear and fraction putting the two level formulas at ``a + 1/2`` and ``b + 1/2``.

    With ``r`` the fraction from the near side: ``(1 - r) s + r Uv = a'`` and
    ``r s + (1 - r) Uw = b'``; eliminating ``s`` leaves a quadratic in ``r``.
    """
    a_, b_ = a + 0.5, b + 0.5
    roots = np.roots([Uw - Uv, a_ - 2 * Uw + b_, Uw - b_]) if Uw != Uv else np.roots([a_ - 2 * Uw + b_, Uw - b_])
    out = []
    for r in roots:
        if abs(r.imag) > 1e-12 or not 0.02 < r.real < 0.98:
            continue
        r = float(r.real)
        out.append(((a_ - r * Uv) / (1 - r), r))
    return sorted(out, key=lambda t: abs(t[1] - 0.5))


def _find_region(lv: LevelMap, lw: LevelMap, strip: Strip, back: Strip, a: int, b: int) -> StripPoint | None:
    """A point with levels ``(a, b)``.

    Each level only depends on the boundary cone point nearest across, so we
    run over pairs of such points (one per boundary line), solve for shear and
    fraction, place the point between the two and keep it if both exact levels agree.
    """
    h = float(strip.width)
    d = lv.direction
    far_line = [sec.lift for sec in lv.far_line(strip)]
    near_line = [sec.lift for sec in lw.far_line(back)]
    pairs = sorted(((p, q) for p in far_line for q in near_line),
                   key=lambda pq: (abs(alpha_coordinate(d, pq[0].pos) - alpha_coordinate(d, pq[1].pos)),
                                   pq[0].address, pq[1].address))
    for p, q in pairs:
        ap, aq = alpha_coordinate(d, p.pos), alpha_coordinate(d, q.pos)
        Uv = float(ap - lv.origin) / h
        Uw = float(aq - lw.origin) / h
        for s_, r_ in _solve_levels(a, b, Uv, Uw):
            s = Fraction(s_).limit_denominator(1000)
            r = Fraction(r_).limit_denominator(1000)
            offset = alpha_coordinate(d, strip_point(strip, lv.v, d, s, 0, r).pos)
            for target in ((ap + aq) / 2, ap, aq):
                z = strip_point(strip, lv.v, d, s, target - offset, r)
                if (lv.level(z), lw.level(transfer(z, back))) == (a, b):
                    return z
    return None


def _atlas(forest: SpineForest, v: str, strips: list[Strip], grid, levels=(), overrun: int = 0) -> _Atlas:
    sp = forest.spine_by_id(v)
    metric = WindowMetric(forest, sp)
    feet: dict[tuple, tuple[int, object]] = {}
    cols = {k: [] for k in ("shear", "pos", "near", "far", "foot", "off", "fib")}
    for strip in strips:
        rows = {k: [] for k in cols}
        pts = m_set_points(forest, sp, strip, *grid, overrun=overrun)
        missing = [(a, b) for a in levels for b in levels if (a, b) not in pts]
        if missing:
            lv = LevelMap(forest, sp, overrun)
            lw = LevelMap(forest, forest.spine_by_id(strip.far), overrun)
            back = reverse_strip(forest, strip)
            for a, b in missing:
                z = _find_region(lv, lw, strip, back, a, b)
                if z is not None:
                    pts[(a, b)] = [z]
        for (a, b), zs in sorted(pts.items()):
            for z in zs:
                foot, off, leg = metric.foot_data(z)
                fid = feet.setdefault(foot.address, (len(feet), foot))[0]
                rows["shear"].append(float(z.shear))
                rows["pos"].append((float(z.pos[0]), float(z.pos[1])))
                rows["near"].append(a)
                rows["far"].append(b)
                rows["foot"].append(fid)
                rows["off"].append(off + leg)
                rows["fib"].append(fiber_matrix_on_boundary(forest.direction, z.shear))
        cols["shear"].append(np.array(rows["shear"]))
        cols["pos"].append(np.array(rows["pos"]).reshape(-1, 2))
        cols["near"].append(np.array(rows["near"], dtype=int))
        cols["far"].append(np.array(rows["far"], dtype=int))
        cols["foot"].append(np.array(rows["foot"], dtype=int))
        cols["off"].append(np.array(rows["off"]))
        cols["fib"].append(np.array(rows["fib"]).reshape(-1, 2, 2))
    lifts = [f for _, f in sorted(feet.values(), key=lambda t: t[0])]
    fd = np.zeros((len(lifts), len(lifts)))
    for i in range(len(lifts)):
        for j in range(i + 1, len(lifts)):
            fd[i, j] = fd[j, i] = metric.spine_distance(lifts[i], lifts[j])
    return _Atlas(v, [s.far for s in strips], cols["shear"], cols["pos"], cols["near"], cols["far"],
                  cols["foot"], cols["off"], cols["fib"], fd)


def _block(A: _Atlas, i: int, j: int) -> np.ndarray:
    """Distances between the sampled points of strips ``i`` and ``j`` (symmetrised)."""
    ds = np.abs(A.shear[i][:, None] - A.shear[j][None, :])
    if i != j:
        return ds + A.offset[i][:, None] + A.offset[j][None, :] + A.foot_distance[np.ix_(A.foot[i], A.foot[j])]
    P, G = A.pos[i], A.fibers[i]
    diff = P[None, :, :] - P[:, None, :]
    fl = np.linalg.norm(np.einsum("iab,ijb->ija", G, diff), axis=2)
    return ds + np.maximum(fl, fl.T)


def _groups(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray, list]:
    """Order of points grouped by key, group starts and the keys in group order."""
    if len(keys) == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int), []
    order = np.lexsort(keys.T[::-1])
    sk = keys[order]
    new = np.ones(len(sk), dtype=bool)
    new[1:] = np.any(sk[1:] != sk[:-1], axis=1)
    starts = np.nonzero(new)[0]
    return order, starts, [tuple(int(x) for x in sk[s]) for s in starts]


def _block_reduce(D: np.ndarray, rows, cols, op) -> np.ndarray:
    (ro, rs, _), (co, cs, _) = rows, cols
    if len(ro) == 0 or len(co) == 0:
        return np.zeros((len(rs), len(cs)))
    sub = D[np.ix_(ro, co)]
    return op.reduceat(op.reduceat(sub, rs, axis=0), cs, axis=1)


def _sigma(v: str, a: int, w: str, b: int) -> tuple[str, ...]:
    return _sorted((v, level_id(v, a), w, level_id(w, b)))


def build_w_graph(forest: SpineForest, c: ComplexWindow, grid=DEFAULT_GRID, slack: float | None = None,
                  seed: int = 0, lipschitz_samples: int = 100, R: float | None = None,
                  overrun: int = 6) -> WGraphWindow:
    """Sample every level region of the window and join close maximal simplices.

    ``R`` is the largest sampled region diameter plus ``slack``; by default the
    slack is ``K^2 + K`` for the measured level-map Lipschitz ratio ``K``.
    Passing ``R`` overrides the measured value (useful to thin out the graph).
    Level maps read boundary lines up to ``overrun`` cone lifts past the chart.
    """
    L = set(c.levels)
    strips = _directed_strips(forest, c)
    atlases = {}
    for v in sorted(c.tree.vertices):
        mine = [strips[(v, w)] for w in sorted(c.tree_adj[v])]
        atlases[v] = _atlas(forest, v, mine, grid, c.levels, overrun)

    pair_groups = {}
    far_groups = {}
    diam: dict[tuple, float] = {}
    count: dict[tuple, int] = {}
    total = inside = 0
    for v, A in atlases.items():
        pg, fg = [], []
        for i, w in enumerate(A.far):
            keep = np.nonzero(np.isin(A.near_level[i], list(L)) & np.isin(A.far_level[i], list(L)))[0]
            keys = np.stack([A.near_level[i][keep], A.far_level[i][keep]], axis=1) if len(keep) else np.zeros((0, 2), int)
            o, s, k = _groups(keys)
            pg.append((keep[o], s, k))
            keepf = np.nonzero(np.isin(A.far_level[i], list(L)))[0]
            fkeys = A.far_level[i][keepf][:, None] if len(keepf) else np.zeros((0, 1), int)
            o, s, k = _groups(fkeys)
            fg.append((keepf[o], s, k))
            total += len(A.shear[i])
            inside += len(keep)
            D = _block(A, i, i)
            dmax = _block_reduce(D, pg[i], pg[i], np.maximum)
            for g, (a, b) in enumerate(pg[i][2]):
                key = _sigma(v, a, w, b)
                diam[key] = max(diam.get(key, 0.0), float(dmax[g, g]))
                count[key] = count.get(key, 0) + int((np.diff(np.append(pg[i][1], len(pg[i][0]))))[g])
        pair_groups[v] = pg
        far_groups[v] = fg

    want = {k for k in expected_maximal(c) if len(k) == 4}
    empty = sorted(k for k in want if k not in diam)
    measured = max(diam.values(), default=0.0)
    if slack is None:
        K = 0.0
        if c.tree.edges:
            v0 = c.tree.center
            w0 = sorted(c.tree_adj[v0])[0] if c.tree_adj[v0] else None
            if w0 is not None:
                rng = np.random.Generator(np.random.Philox(seed))
                K, _ = lipschitz_scatter(forest, forest.spine_by_id(v0), strips[(v0, w0)], rng, lipschitz_samples)
        slack = K * K + K
    if R is None:
        R = measured + slack
    cut = 10 * R

    nodes = []
    for key in sorted(want):
        lv = [x for x in key if c.is_level(x)]
        s, t = sorted(lv)
        nodes.append(MaximalSimplex(s, t, key, count.get(key, 0), diam.get(key, math.nan)))
    index = {n.vertices: i for i, n in enumerate(nodes)}

    best: dict[tuple[int, int], tuple[str, float]] = {}

    def offer(k1, k2, rule, gap):
        if k1 not in index or k2 not in index or k1 == k2:
            return
        a, b = sorted((index[k1], index[k2]))
        old = best.get((a, b))
        rank = 0 if rule == "close" else 1
        if old is None or (rank, gap) < (0 if old[0] == "close" else 1, old[1]):
            best[(a, b)] = (rule, gap)

    # pass 1: block minima between pair regions, far-level regions and whole level sets
    blocks = {}
    level_gap: dict[str, dict[tuple[int, int], float]] = {}
    for v, A in atlases.items():
        pg, fg = pair_groups[v], far_groups[v]
        ng = []
        for i in range(len(A.far)):
            keep = np.nonzero(np.isin(A.near_level[i], list(L)))[0]
            keys = A.near_level[i][keep][:, None] if len(keep) else np.zeros((0, 1), int)
            o, st, k = _groups(keys)
            ng.append((keep[o], st, k))
        mins = level_gap[v] = {}
        for i in range(len(A.far)):
            for j in range(i, len(A.far)):
                D = _block(A, i, j)
                blocks[(v, i, j)] = (_block_reduce(D, pg[i], pg[j], np.minimum),
                                     _block_reduce(D, fg[i], fg[j], np.minimum))
                Nm = _block_reduce(D, ng[i], ng[j], np.minimum)
                for g1, (a1,) in enumerate(ng[i][2]):
                    for g2, (a2,) in enumerate(ng[j][2]):
                        key = tuple(sorted((a1, a2)))
                        mins[key] = min(mins.get(key, math.inf), float(Nm[g1, g2]))

    # pass 2: the two edge rules
    for v, A in atlases.items():
        pg, fg = pair_groups[v], far_groups[v]
        n = len(A.far)
        for i in range(n):
            for j in range(i, n):
                Pm, Fm = blocks[(v, i, j)]
                fpos_i = {k[0]: g for g, k in enumerate(fg[i][2])}
                fpos_j = {k[0]: g for g, k in enumerate(fg[j][2])}
                for g1, (a1, b1) in enumerate(pg[i][2]):
                    k1 = _sigma(v, a1, A.far[i], b1)
                    for g2, (a2, b2) in enumerate(pg[j][2]):
                        k2 = _sigma(v, a2, A.far[j], b2)
                        gap = float(Pm[g1, g2])
                        if gap <= cut:
                            offer(k1, k2, "close", gap)
                        elif a1 == a2:
                            # level sets of the other two levels: seen from here, and in
                            # full from their own spine when they share one
                            fgap = float(Fm[fpos_i[b1], fpos_j[b2]])
                            if A.far[i] == A.far[j]:
                                fgap = min(fgap, level_gap[A.far[i]].get(tuple(sorted((b1, b2))), math.inf))
                            if fgap <= cut:
                                offer(k1, k2, "shared-level", fgap)

    edges = [WEdge(a, b, rule, gap) for (a, b), (rule, gap) in sorted(best.items())]
    N = len(nodes)
    sharing = 0
    per_spine: dict[str, int] = {}
    for n_ in nodes:
        for x in n_.vertices:
            if not c.is_level(x):
                per_spine[x] = per_spine.get(x, 0) + 1
    sharing = sum(k * (k - 1) // 2 for k in per_spine.values())
    sq = len(c.levels) ** 2
    sharing -= len(c.tree.edges) * (sq * (sq - 1) // 2)
    unknown = N * (N - 1) // 2 - sharing
    density = {"points": total, "in_level_window": inside}
    return WGraphWindow(nodes, edges, R, measured, slack, unknown, density, [tuple(k) for k in empty])


# ---------------------------------------------------------------------------
# links, saturations and the graphs they span


@dataclass
class LinkReport:
    simplex: tuple[str, ...]
    kind: str
    link: tuple[str, ...]
    saturation: tuple[str, ...]
    closed_form: bool
    saturation_closed_form: bool | None
    join: bool | None  # residual types only: the link is a join or a point
    class_id: int
    c_diameter: float
    c_delta: float

    def to_json(self) -> dict:
        return {"simplex": list(self.simplex), "type": self.kind, "link_size": len(self.link),
                "saturation_size": len(self.saturation), "closed_form": self.closed_form,
                "saturation_closed_form": self.saturation_closed_form, "join": self.join,
                "class": self.class_id, "c_diameter": _num(self.c_diameter), "c_delta": _num(self.c_delta)}


def _num(x: float):
    if x is None or math.isnan(x):
        return None
    return "inf" if math.isinf(x) else round(float(x), 6)


def _distance_matrix(vertices: list[str], adj: dict[str, set[str]], extra: dict[str, set[str]]) -> np.ndarray:
    idx = {x: i for i, x in enumerate(vertices)}
    rows, cols = [], []
    for x in vertices:
        for y in adj.get(x, ()) | extra.get(x, set()):
            j = idx.get(y)
            if j is not None:
                rows.append(idx[x])
                cols.append(j)
    n = len(vertices)
    M = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return shortest_path(M, directed=False, unweighted=True)


def four_point_delta(D: np.ndarray, rng, samples: int = 200) -> float:
    """Largest four-point defect over sampled quadruples of a finite distance matrix."""
    n = len(D)
    if n < 4:
        return 0.0
    if not np.all(np.isfinite(D)):
        return math.inf
    q = rng.integers(0, n, size=(samples, 4))
    a, b, c_, d = q.T
    sums = np.sort(np.stack([D[a, b] + D[c_, d], D[a, c_] + D[b, d], D[a, d] + D[b, c_]], axis=1), axis=1)
    return float(np.max(sums[:, 2] - sums[:, 1]) / 2)


def _is_join(vertices: list[str], adj: dict[str, set[str]]) -> bool:
    """A graph on two or more vertices is a nontrivial join iff its complement is disconnected."""
    if len(vertices) <= 1:
        return True
    vs = set(vertices)
    seen = {vertices[0]}
    todo = [vertices[0]]
    while todo:
        x = todo.pop()
        for y in vs - adj[x] - seen - {x}:
            seen.add(y)
            todo.append(y)
    return len(seen) < len(vs)


def enumerate_links(c: ComplexWindow, w: WGraphWindow | None = None, seed: int = 0,
                    delta_samples: int = 200) -> list[LinkReport]:
    """Classify every non-maximal simplex and compare its link with the closed form."""
    maximal = set(c.maximal)
    simplices = [()] + [s for s in c.simplices if s not in maximal]
    link_of = {s: frozenset(c.link(s)) for s in simplices}
    class_id: dict[frozenset, int] = {}
    sat: dict[frozenset, set[str]] = {}
    for s in simplices:
        lk = link_of[s]
        class_id.setdefault(lk, len(class_id))
        sat.setdefault(lk, set()).update(s)
    extra = w.augmented_adjacency() if w is not None else {}
    rng = np.random.Generator(np.random.Philox(seed))
    geometry: dict[frozenset, tuple[float, float]] = {}
    for lk in sorted(class_id, key=class_id.get):
        vs = sorted(lk - sat[lk])
        if not vs:
            geometry[lk] = (0.0, 0.0)
            continue
        D = _distance_matrix(vs, c.adj, extra)
        finite = D[np.isfinite(D)]
        diam = math.inf if finite.size < D.size else float(finite.max())
        geometry[lk] = (diam, four_point_delta(D, rng, delta_samples))
    out = []
    for s in simplices:
        lk = link_of[s]
        kind, want = closed_form_link(c, s)
        want_sat = closed_form_saturation(c, s)
        residual = kind not in ("empty", "xi", "kl")
        diam, delta = geometry[lk]
        out.append(LinkReport(
            s, kind, _sorted(lk), _sorted(sat[lk]), set(lk) == want,
            None if want_sat is None else sat[lk] == want_sat,
            _is_join(sorted(lk), c.adj) if residual else None,
            class_id[lk], diam, delta))
    return out


def link_summary(reports: list[LinkReport]) -> dict:
    by_type: dict[str, dict] = {}
    for r in reports:
        t = by_type.setdefault(r.kind, {"simplices": 0, "closed_form_failures": 0, "saturation_failures": 0,
                                        "join_failures": 0, "max_c_diameter": 0.0, "max_c_delta": 0.0})
        t["simplices"] += 1
        t["closed_form_failures"] += not r.closed_form
        t["saturation_failures"] += r.saturation_closed_form is False
        t["join_failures"] += r.join is False
        t["max_c_diameter"] = max(t["max_c_diameter"], r.c_diameter)
        t["max_c_delta"] = max(t["max_c_delta"], r.c_delta)
    for t in by_type.values():
        t["max_c_diameter"] = _num(t["max_c_diameter"])
        t["max_c_delta"] = _num(t["max_c_delta"])
    return {"types": {k: by_type[k] for k in TYPES if k in by_type},
            "type_count": len(by_type),
            "classes": len({r.class_id for r in reports})}


# ---------------------------------------------------------------------------
# axiom audits


def _nesting_order(reports: list[LinkReport]):
    """Distinct links, and for each the set of links containing it (sparse incidence products)."""
    links: dict[int, tuple[str, ...]] = {}
    kinds: dict[int, set[str]] = {}
    for r in reports:
        links.setdefault(r.class_id, r.link)
        kinds.setdefault(r.class_id, set()).add(r.kind)
    ids = sorted(links)
    verts = sorted({x for lk in links.values() for x in lk})
    vidx = {x: i for i, x in enumerate(verts)}
    rows, cols = [], []
    for i, cid in enumerate(ids):
        for x in links[cid]:
            rows.append(i)
            cols.append(vidx[x])
    A = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(ids), len(verts)))
    inter = (A @ A.T).tocoo()
    size = np.array([len(links[cid]) for cid in ids])
    up: dict[int, set[int]] = {cid: {cid} for cid in ids}
    for i, j, val in zip(inter.row, inter.col, inter.data):
        if int(round(val)) == size[i]:
            up[ids[i]].add(ids[j])
    for i, cid in enumerate(ids):
        if size[i] == 0:
            up[cid] = set(ids)
    return links, kinds, up


def audit_chains(reports: list[LinkReport], bound: int = 9) -> dict:
    """Longest strictly increasing chain of link classes under inclusion."""
    links, kinds, up = _nesting_order(reports)
    order = sorted(links, key=lambda cid: (len(links[cid]), cid))
    best: dict[int, tuple[int, int | None]] = {}
    down: dict[int, list[int]] = {cid: [] for cid in links}
    for a, bs in up.items():
        for b in bs:
            if b != a:
                down[b].append(a)
    for cid in order:
        prev = max(((best[a][0], a) for a in down[cid]), default=(0, None))
        best[cid] = (prev[0] + 1, prev[1])
    top = max(order, key=lambda cid: (best[cid][0], -cid)) if order else None
    chain = []
    while top is not None:
        chain.append(sorted(kinds[top]))
        top = best[top][1]
    length = len(chain)
    return {"ok": length <= bound, "longest": length, "bound": bound, "classes": len(links),
            "witness": chain}


def _maximal_cliques(vertices: set[str], adj: dict[str, set[str]]) -> list[tuple[str, ...]]:
    out = []

    def expand(R, P, X):
        if not P and not X:
            out.append(_sorted(R))
            return
        pivot = max(P | X, key=lambda u: (len(P & adj[u]), u))
        for x in sorted(P - adj[pivot]):
            expand(R | {x}, P & adj[x], X & adj[x])
            P = P - {x}
            X = X | {x}

    if vertices:
        expand(set(), set(vertices), set())
    return out


def audit_fullness(c: ComplexWindow, w: WGraphWindow, limit: int = 20) -> dict:
    """Fullness of links on every generated edge of the graph on maximal simplices.

    For non-adjacent ``x, y`` lying in adjacent maximal simplices, every simplex
    with both in its link must extend through ``x`` and through ``y`` to
    adjacent maximal simplices.  It suffices to test the maximal such simplices
    (maximal cliques of the common neighbourhood): extensions of a simplex also
    extend its faces, and the empty simplex is the hypothesis itself.
    """
    rule = {(e.a, e.b): e.rule for e in w.edges}
    aug = w.augmented_adjacency()
    pairs = simplices = 0
    witnessed: dict[str, int] = {}
    bad = []
    for x in sorted(aug):
        for y in sorted(aug[x]):
            if y <= x or y in c.adj[x]:
                continue
            pairs += 1
            common = c.adj[x] & c.adj[y]
            for delta in _maximal_cliques(common, c.adj):
                simplices += 1
                first = set.intersection(*(w.containing.get(z, set()) for z in delta + (x,)))
                second = set.intersection(*(w.containing.get(z, set()) for z in delta + (y,)))
                hit = None
                for m in sorted(first):
                    both = w.neighbours[m] & second
                    if both:
                        hit = (m, min(both))
                        break
                if hit is None:
                    if len(bad) < limit:
                        bad.append({"simplex": list(delta), "x": x, "y": y})
                    else:
                        bad.append(None)
                    continue
                r = rule[tuple(sorted(hit))]
                witnessed[r] = witnessed.get(r, 0) + 1
    violations = [b for b in bad if b is not None]
    return {"ok": not bad, "pairs": pairs, "simplices_checked": simplices, "violation_count": len(bad),
            "violations": violations, "witness_rules": {k: witnessed[k] for k in sorted(witnessed)},
            "w_edges": len(w.edges), "unknown_pairs": w.unknown_pairs}


def audit_nesting(c: ComplexWindow, reports: list[LinkReport], threshold: float = 3.0,
                  budget: int = 2_000_000) -> dict:
    """Common nesting for every pair of simplices over a class with a large link graph.

    Status is "vacuous" when no class in the window has link-graph diameter
    above ``threshold`` and "unknown" when the budget runs out.
    """
    links, _, up = _nesting_order(reports)
    diam = {}
    for r in reports:
        diam[r.class_id] = r.c_diameter
    big = sorted(cid for cid in links if diam[cid] > threshold)
    if not big:
        return {"status": "vacuous", "ok": True, "large_classes": 0, "checked": 0, "threshold": threshold}
    by_class: dict[int, list[tuple]] = {}
    for r in reports:
        by_class.setdefault(r.class_id, []).append(r.simplex)
    class_of = {r.simplex: r.class_id for r in reports}
    containing: dict[str, set[tuple]] = {}
    for s in class_of:
        for x in s:
            containing.setdefault(x, set()).add(s)
    everything = set(class_of)
    candidates = sorted(set().union(*(up[g] for g in big)))
    checked = work = 0
    bad = []
    for d2 in candidates:
        for S in by_class[d2]:
            supers = set.intersection(*(containing[x] for x in S)) if S else everything
            for d1 in candidates:
                G = [g for g in big if d1 in up[g] and d2 in up[g]]
                if not G:
                    continue
                checked += 1
                work += len(supers)
                if work > budget:
                    return {"status": "unknown", "ok": True, "large_classes": len(big), "checked": checked,
                            "threshold": threshold, "violations": bad}
                found = any(d1 in up[class_of[O]] and all(class_of[O] in up[g] for g in G)
                            for O in sorted(supers))
                if not found:
                    bad.append({"delta": d1, "delta_prime": list(S)})
    return {"status": "checked", "ok": not bad, "large_classes": len(big), "checked": checked,
            "threshold": threshold, "violations": bad[:20]}


def audit_axioms(c: ComplexWindow, w: WGraphWindow, reports: list[LinkReport] | None = None,
                 chain_bound: int = 9, nesting_threshold: float = 3.0) -> dict:
    reports = reports if reports is not None else enumerate_links(c, w)
    links = link_summary(reports)
    chains = audit_chains(reports, chain_bound)
    full = audit_fullness(c, w)
    nest = audit_nesting(c, reports, nesting_threshold)
    deltas = [r.c_delta for r in reports]
    structural = {k: v["ok"] for k, v in c.checks.items()}
    violations = [k for k, ok in structural.items() if not ok]
    if any(t["closed_form_failures"] or t["saturation_failures"] or t["join_failures"]
           for t in links["types"].values()):
        violations.append("links")
    if w.empty_regions:
        violations.append("empty_regions")
    if not w.is_symmetric():
        violations.append("w_symmetry")
    for name, part in (("chains", chains), ("fullness", full), ("nesting", nest)):
        if not part["ok"]:
            violations.append(name)
    return {"complex": c.to_json(), "w_graph": w.to_json(), "links": links, "chains": chains,
            "fullness": full, "nesting": nest,
            "hyperbolicity": {"max_four_point_delta": _num(max(deltas, default=0.0)),
                              "max_link_diameter": _num(max((r.c_diameter for r in reports), default=0.0))},
            "embedding": {"status": "not certified",
                          "lipschitz_slack": round(w.slack, 6)},
            "violations": violations, "ok": not violations}
