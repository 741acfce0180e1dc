"""Shortest paths in the universal cover by string pulling inside a sleeve of squares.

A sleeve is a walk of edge-adjacent unit squares in the cover, developed into
the plane.  The funnel algorithm gives the shortest path inside the sleeve;
wherever that path wraps a vertex with less than pi on the far side, the
sleeve is rerouted around the other side of the vertex and the funnel is run
again.  The fixed point bends only at cone points, with at least pi on both
sides, so it is the geodesic.

This route shares no code with the taut-string tightening in ``charts`` and
serves as its oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exact import HALF_TURN, Angle, Prong, Vec, add, cross, quadrant, rotate, sub
from .origami import Origami

_OFFSET = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
_CORNER = {v: k for k, v in _OFFSET.items()}
_MOVE = {(1, 0): "R", (0, 1): "U", (-1, 0): "L", (0, -1): "D"}


class SleeveError(RuntimeError):
    pass


@dataclass(frozen=True)
class Cell:
    square: int
    pos: Vec  # developed lower-left corner


def _move(o: Origami, c: Cell, d: Vec) -> Cell:
    s = c.square
    m = _MOVE[d]
    if m == "R":
        s = o.h[s]
    elif m == "L":
        s = o.h_inv[s]
    elif m == "U":
        s = o.v[s]
    else:
        s = o.v_inv[s]
    return Cell(s, add(c.pos, d))


def _vertex_of(o: Origami, c: Cell, w: Vec) -> tuple[int, int]:
    """(class, cycle position) of the corner ``w`` of cell ``c``."""
    return o.corner_index[(c.square, _CORNER[sub(w, c.pos)])]


def _cell_at(o: Origami, cls: int, position: int, w: Vec) -> Cell:
    L = o.quarters(cls)
    s, k = o.vertex_classes[cls].corner_cycle[position % L]
    return Cell(s, sub(w, _OFFSET[k]))


def _fan(o: Origami, cls: int, w: Vec, start: int, steps: int) -> list[Cell]:
    sign = 1 if steps >= 0 else -1
    return [_cell_at(o, cls, start + sign * t, w) for t in range(abs(steps) + 1)]


def segment_cells(o: Origami, cls: int, index: int, w: Vec, hol: Vec) -> list[Cell]:
    """Squares met by a straight segment leaving vertex ``w`` in sector ``index``.

    Segments along an edge use the squares on their left; at lattice points
    inside the segment the walk passes on the left as well.
    """
    L = o.quarters(cls)
    k = index % 4
    cell = _cell_at(o, cls, index % L, w)
    a, b = rotate(hol, -k)
    if a <= 0 or b < 0:
        raise SleeveError("segment direction does not match its sector")
    from math import gcd

    g = gcd(a, b)
    a, b = a // g, b // g
    ex, ey = rotate((1, 0), k), rotate((0, 1), k)
    cells = [cell]
    for rep in range(g):
        if rep:
            if b:
                cell = _move(o, cell, ey)
                cells.append(cell)
            cell = _move(o, cell, ex)
            cells.append(cell)
        i = j = 1
        while i < a or j < b:
            if i < a and (j >= b or i * b < j * a):
                cell = _move(o, cell, ex)
                i += 1
            else:
                cell = _move(o, cell, ey)
                j += 1
            cells.append(cell)
    return cells


def _run_between(o: Origami, w: Vec, c_in: Cell, c_out: Cell) -> list[Cell]:
    cls, m_in = _vertex_of(o, c_in, w)
    _, m_out = _vertex_of(o, c_out, w)
    L = o.quarters(cls)
    fwd = (m_out - m_in) % L
    steps = fwd if fwd <= L - fwd else fwd - L
    return _fan(o, cls, w, m_in, steps)


def _reduce(cells: list[Cell]) -> list[Cell]:
    out: list[Cell] = []
    for c in cells:
        if out and out[-1] == c:
            continue
        if len(out) >= 2 and out[-2] == c:
            out.pop()
            continue
        out.append(c)
    return out


def chain_sleeve(o: Origami, points: Sequence[Vec], classes: Sequence[int], prongs: Sequence[Prong],
                 backs: Sequence[Prong]) -> list[Cell]:
    """Sleeve following a saddle chain given by its developed vertices and prongs."""
    cells: list[Cell] = []
    for i, pr in enumerate(prongs):
        seg = segment_cells(o, classes[i], pr.index, points[i], sub(points[i + 1], points[i]))
        if cells:
            cells.extend(_run_between(o, points[i], cells[-1], seg[0])[1:-1])
        cells.extend(seg)
    return _reduce(cells)


# ---------------------------------------------------------------------------
# portals and the funnel


@dataclass
class _Portal:
    left: Vec
    right: Vec
    lid: int
    rid: int


def _portals(cells: list[Cell], start: Vec, end: Vec) -> list[_Portal]:
    ports = [_Portal(start, start, 0, 0)]
    nid = 1
    prev_pts: dict[Vec, int] = {}
    # the start vertex is a corner of the first cell
    prev_pts = {start: 0}
    for j in range(1, len(cells)):
        d = sub(cells[j].pos, cells[j - 1].pos)
        p = cells[j - 1].pos
        if d == (1, 0):
            left, right = add(p, (1, 1)), add(p, (1, 0))
        elif d == (0, 1):
            left, right = add(p, (0, 1)), add(p, (1, 1))
        elif d == (-1, 0):
            left, right = p, add(p, (0, 1))
        elif d == (0, -1):
            left, right = add(p, (1, 0)), p
        else:
            raise SleeveError("sleeve cells are not edge-adjacent")
        ids = []
        for pt in (left, right):
            if pt in prev_pts:
                ids.append(prev_pts[pt])
            else:
                ids.append(nid)
                nid += 1
        ports.append(_Portal(left, right, ids[0], ids[1]))
        # points shared with the next portal are corners of cell j
        prev_pts = {left: ids[0], right: ids[1]}
    eid = prev_pts.get(end, nid)
    ports.append(_Portal(end, end, eid, eid))
    return ports


def _area(a: Vec, b: Vec, c: Vec) -> int:
    return cross(sub(b, a), sub(c, a))


def funnel(ports: list[_Portal]) -> list[tuple[Vec, int, int]]:
    """Shortest path through a portal sequence; returns (point, vertex id, portal index)."""
    apex, aid, ai = ports[0].left, ports[0].lid, 0
    left, lid, li = apex, aid, 0
    right, rid, ri = apex, aid, 0
    path = [(apex, aid, 0)]
    i = 1
    n = len(ports)
    while i < n:
        pl, pr = ports[i].left, ports[i].right
        plid, prid = ports[i].lid, ports[i].rid
        # right side: candidate must not lie to the right of the current right edge
        if _area(apex, right, pr) >= 0:
            if rid == aid or lid == aid or _area(apex, left, pr) < 0:
                right, rid, ri = pr, prid, i
            else:
                apex, aid, ai = left, lid, li
                path.append((apex, aid, ai))
                left, lid, li = apex, aid, ai
                right, rid, ri = apex, aid, ai
                i = ai + 1
                continue
        if _area(apex, left, pl) <= 0:
            if lid == aid or rid == aid or _area(apex, right, pl) > 0:
                left, lid, li = pl, plid, i
            else:
                apex, aid, ai = right, rid, ri
                path.append((apex, aid, ai))
                left, lid, li = apex, aid, ai
                right, rid, ri = apex, aid, ai
                i = ai + 1
                continue
        i += 1
    end = ports[-1]
    if path[-1][1] != end.lid:
        path.append((end.left, end.lid, n - 1))
    return path


# ---------------------------------------------------------------------------
# vertex bookkeeping


def _run(ports: list[_Portal], vid: int, near: int) -> tuple[int, int]:
    """Cells entering and leaving the run of portals around vertex ``vid``.

    Portal j sits between cells j-1 and j; returns (first cell, last cell) of
    the run of cells having the vertex as a corner.
    """
    def has(j):
        return 0 < j < len(ports) - 1 and vid in (ports[j].lid, ports[j].rid)

    j = near
    if not has(j):
        # search nearby; the vertex is an endpoint of a portal close to ``near``
        for d in range(1, len(ports)):
            if has(near + d):
                j = near + d
                break
            if has(near - d):
                j = near - d
                break
        else:
            return (min(near, len(ports) - 2), min(near, len(ports) - 2))
    lo = j
    while has(lo - 1):
        lo -= 1
    hi = j
    while has(hi + 1):
        hi += 1
    return lo - 1, hi


def _prong_in_run(d: Vec, m_lo: int, m_hi: int, latest: bool) -> Prong:
    """Prong of direction ``d`` inside the closed sectors m_lo..m_hi (unwrapped)."""
    q = quadrant(d)
    rng = range(m_hi, m_lo - 1, -1) if latest else range(m_lo, m_hi + 1)
    for m in rng:
        if q == m % 4:
            return Prong(m, d)
        if q == (m + 1) % 4 and rotate(d, -q)[1] == 0:
            return Prong(m + 1, d)
    raise SleeveError("direction does not lie in the sleeve around the vertex")


@dataclass
class _Bend:
    point: Vec
    cls: int
    cell_in: int
    cell_out: int
    m_in: int
    m_out: int   # unwrapped
    sigma: int
    back: Prong | None
    out: Prong | None
    sleeve_side: Angle | None
    far_side: Angle | None


def _analyze(o: Origami, cells: list[Cell], ports: list[_Portal], path) -> list[_Bend]:
    bends = []
    k = len(path)
    for t, (pt, vid, pidx) in enumerate(path):
        if t == 0:
            lo, hi = _run(ports, vid, 1) if len(ports) > 2 and vid in (ports[1].lid, ports[1].rid) else (0, 0)
            c_in, c_out = 0, hi if hi > 0 else 0
        elif t == k - 1:
            last = len(ports) - 2
            if last >= 1 and vid in (ports[last].lid, ports[last].rid):
                lo, hi = _run(ports, vid, last)
                c_in = lo
            else:
                c_in = len(cells) - 1
            c_out = len(cells) - 1
        else:
            c_in, c_out = _run(ports, vid, pidx)
        cls, m_in = _vertex_of(o, cells[c_in], pt)
        L = o.quarters(cls)
        sigma = 0
        if c_out > c_in:
            _, m1 = _vertex_of(o, cells[c_in + 1], pt)
            sigma = 1 if (m1 - m_in) % L == 1 else -1
        m_out = m_in + sigma * (c_out - c_in)
        back = out = None
        sleeve_side = far_side = None
        lo_m, hi_m = min(m_in, m_out), max(m_in, m_out)
        if t > 0:
            d_in = _prim(sub(path[t - 1][0], pt))
            back = _prong_in_run(d_in, lo_m, hi_m, latest=sigma < 0)
        if t < k - 1:
            d_out = _prim(sub(path[t + 1][0], pt))
            out = _prong_in_run(d_out, lo_m, hi_m, latest=sigma >= 0)
        if back is not None and out is not None:
            diff = out.angle() - back.angle()
            if sigma < 0 or (sigma == 0 and diff < Angle(0)):
                diff = -diff
            sleeve_side = diff
            far_side = Angle(L) - diff
        bends.append(_Bend(pt, cls, c_in, c_out, m_in, m_out, sigma, back, out, sleeve_side, far_side))
    return bends


def _prim(v: Vec) -> Vec:
    from math import gcd

    g = gcd(v[0], v[1])
    return (v[0] // g, v[1] // g)


def _split_path(o: Origami, cells, ports, path):
    """Insert the lattice points lying inside straight stretches of the path."""
    out = [path[0]]
    for t in range(1, len(path)):
        a, b = path[t - 1][0], path[t][0]
        d = sub(b, a)
        from math import gcd

        g = gcd(d[0], d[1])
        step = (d[0] // g, d[1] // g)
        # the stretch leaves the previous vertex from the end of its run of portals
        lo = path[t - 1][2]
        vid = out[-1][1]
        while lo + 1 < len(ports) - 1 and vid in (ports[lo + 1].lid, ports[lo + 1].rid):
            lo += 1
        for r in range(1, g):
            q = (a[0] + r * step[0], a[1] + r * step[1])
            found = None
            for j in range(max(1, lo), len(ports) - 1):
                if ports[j].left == q:
                    found = (q, ports[j].lid, j)
                    break
                if ports[j].right == q:
                    found = (q, ports[j].rid, j)
                    break
            if found is None:
                raise SleeveError("lattice point on the path is not a sleeve vertex")
            out.append(found)
            lo = found[2]
        out.append(path[t])
    return out


@dataclass
class FunnelResult:
    classes: list[int]
    prongs: list[Prong]
    holonomies: list[Vec]
    points: list[Vec]
    side_angles: list[tuple[Angle, Angle]]
    releases: int


def funnel_geodesic(o: Origami, points: Sequence[Vec], classes: Sequence[int], prongs: Sequence[Prong],
                    backs: Sequence[Prong], max_releases: int = 100000) -> FunnelResult:
    """Geodesic homotopic to a saddle chain, by funnel passes and vertex release."""
    start, end = points[0], points[-1]
    if len(prongs) == 0:
        return FunnelResult([classes[0]], [], [], [start], [], 0)
    cells = chain_sleeve(o, points, classes, prongs, backs)
    releases = 0
    while True:
        ports = _portals(cells, start, end)
        path = funnel(ports)
        path = _split_path(o, cells, ports, path)
        bends = _analyze(o, cells, ports, path)
        bad = None
        for b in bends[1:-1]:
            regular = not o.is_cone(b.cls)
            if regular and b.sleeve_side != HALF_TURN:
                bad = b
                break
            if b.far_side < HALF_TURN:
                bad = b
                break
        if bad is None:
            break
        releases += 1
        if releases > max_releases:
            raise SleeveError("vertex release did not converge")
        L = o.quarters(bad.cls)
        delta = bad.sigma * (bad.cell_out - bad.cell_in)
        sign = 1 if delta >= 0 else -1
        new_delta = delta - sign * L
        run = _fan(o, bad.cls, bad.point, bad.m_in, new_delta)
        cells = _reduce(cells[: bad.cell_in] + run + cells[bad.cell_out + 1:])
    keep = [b for i, b in enumerate(bends) if i in (0, len(bends) - 1) or o.is_cone(b.cls)]
    res = FunnelResult([], [], [], [], [], releases)
    for i, b in enumerate(keep):
        res.classes.append(b.cls)
        res.points.append(b.point)
        if i < len(keep) - 1:
            nxt = keep[i + 1].point
            d = sub(nxt, b.point)
            res.holonomies.append(d)
            res.prongs.append(Prong(b.out.index % o.quarters(b.cls), b.out.vec))
        if 0 < i < len(keep) - 1:
            res.side_angles.append((b.sleeve_side, b.far_side))
    return res
