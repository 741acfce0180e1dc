"""Square-tiled translation surfaces (origamis) and their flat invariants.

An origami on ``n`` unit squares is a pair of permutations: ``h`` sends a
square to its right neighbour and ``v`` to the one above.  Squares are
0-indexed internally; the JSON format and :func:`build_origami` use the
1-indexed convention.

Corners are numbered counterclockwise ``0=LL, 1=LR, 2=UR, 3=UL``.  Around a
vertex the incident corners form a cycle; position ``i`` of the cycle is the
quarter-plane sector ``[i pi/2, (i+1) pi/2)`` and ``i % 4`` is the corner type.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from pathlib import Path
from typing import Sequence

from .exact import Prong, Vec, primitive, quadrant, rotate, Surd, vec_length


class OrigamiError(ValueError):
    pass


class NonBijective(OrigamiError):
    pass


class Disconnected(OrigamiError):
    pass


class NoConePoint(OrigamiError):
    pass


@dataclass(frozen=True)
class RationalDirection:
    """A rational direction written ``"p/q"``: holonomy vector ``(p, q)``.

    The same string names the boundary point ``p/q`` of the upper half-plane,
    so horizontal is ``"1/0"`` (the cusp at infinity) and vertical ``"0/1"``.
    Canonical sign: ``q > 0``, or ``q == 0`` and ``p == 1``.
    """

    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        if p == 0 and q == 0:
            raise ValueError("direction (0, 0)")
        g = gcd(p, q)
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @staticmethod
    def parse(text: str) -> "RationalDirection":
        text = text.strip()
        if text in ("inf", "horizontal"):
            return RationalDirection(1, 0)
        if text == "vertical":
            return RationalDirection(0, 1)
        if "/" in text:
            p, q = text.split("/")
            return RationalDirection(int(p), int(q))
        return RationalDirection(int(text), 1)

    @staticmethod
    def of_vector(vec) -> "RationalDirection":
        return RationalDirection(int(vec[0]), int(vec[1]))

    @property
    def vector(self) -> Vec:
        return (self.p, self.q)

    @property
    def cusp(self) -> str:
        return "inf" if self.q == 0 else f"{self.p}/{self.q}"

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


HORIZONTAL = RationalDirection(1, 0)
VERTICAL = RationalDirection(0, 1)


@dataclass(frozen=True)
class HolonomyVector:
    dx: Fraction
    dy: Fraction

    def length(self) -> Surd:
        return vec_length((self.dx, self.dy))

    def as_tuple(self) -> tuple[Fraction, Fraction]:
        return (self.dx, self.dy)


@dataclass(frozen=True)
class ConePointClass:
    id: int
    corner_cycle: tuple[tuple[int, int], ...]

    @property
    def quarters(self) -> int:
        return len(self.corner_cycle)

    @property
    def cone_angle(self) -> Fraction:
        """Total angle as a rational multiple of pi."""
        return Fraction(len(self.corner_cycle), 2)

    @property
    def regular(self) -> bool:
        return len(self.corner_cycle) == 4


@dataclass(frozen=True)
class Saddle:
    """An oriented saddle connection leaving a cone point along a prong.

    ``end_prong`` is the direction at the far end pointing back along the
    saddle.  ``steps`` counts lattice steps of the primitive vector.
    """

    source: int
    prong: Prong
    target: int
    end_prong: Prong
    steps: int

    @property
    def holonomy(self) -> Vec:
        return (self.prong.vec[0] * self.steps, self.prong.vec[1] * self.steps)

    @property
    def length2(self) -> int:
        dx, dy = self.holonomy
        return dx * dx + dy * dy


@dataclass(frozen=True, eq=False)
class Origami:
    n: int
    h: tuple[int, ...]
    v: tuple[int, ...]
    name: str = ""
    labels: tuple[str, ...] | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # permutation helpers -------------------------------------------------
    @cached_property
    def h_inv(self) -> tuple[int, ...]:
        inv = [0] * self.n
        for a, b in enumerate(self.h):
            inv[b] = a
        return tuple(inv)

    @cached_property
    def v_inv(self) -> tuple[int, ...]:
        inv = [0] * self.n
        for a, b in enumerate(self.v):
            inv[b] = a
        return tuple(inv)

    def __eq__(self, other) -> bool:
        return isinstance(other, Origami) and (self.n, self.h, self.v) == (other.n, other.h, other.v)

    def __hash__(self) -> int:
        return hash((self.n, self.h, self.v))

    # vertex structure -----------------------------------------------------
    def _corner_cycle(self, s: int, corner: int) -> list[tuple[int, int]]:
        # rotate the starting corner to LL of some square
        start = s
        if corner == 1:
            start = self.h[s]
        elif corner == 2:
            start = self.v[self.h[s]]
        elif corner == 3:
            start = self.v[s]
        out = []
        cur = start
        while True:
            a = self.h_inv[cur]
            b = self.v_inv[a]
            c = self.h[b]
            out += [(cur, 0), (a, 1), (b, 2), (c, 3)]
            cur = self.v[c]
            if cur == start:
                return out

    @cached_property
    def vertex_classes(self) -> tuple[ConePointClass, ...]:
        seen: set[tuple[int, int]] = set()
        classes = []
        for s in range(self.n):
            for k in range(4):
                if (s, k) in seen:
                    continue
                cyc = self._corner_cycle(s, k)
                seen.update(cyc)
                classes.append(ConePointClass(len(classes), tuple(cyc)))
        return tuple(classes)

    @cached_property
    def corner_index(self) -> dict[tuple[int, int], tuple[int, int]]:
        """(square, corner) -> (class id, cycle position)."""
        out = {}
        for c in self.vertex_classes:
            for i, sc in enumerate(c.corner_cycle):
                out[sc] = (c.id, i)
        return out

    def quarters(self, cls: int) -> int:
        return self.vertex_classes[cls].quarters

    def is_cone(self, cls: int) -> bool:
        return self.vertex_classes[cls].quarters > 4

    @cached_property
    def cone_classes(self) -> tuple[int, ...]:
        return tuple(c.id for c in self.vertex_classes if c.quarters > 4)

    # straight-line tracing -------------------------------------------------
    def _step(self, cls: int, prong: Prong) -> tuple[int, Prong]:
        """Follow one primitive lattice step from a vertex; return arrival vertex and back prong."""
        L = self.quarters(cls)
        idx = prong.index % L
        s, k = self.vertex_classes[cls].corner_cycle[idx]
        a, b = rotate(prong.vec, -k)  # frame in which the square is [0,1]^2
        # a > 0, b >= 0 in this frame
        moves_x, moves_y = self._turn_moves(k)
        if b == 0:
            cur = s
            end_corner_local = 1
        else:
            cur = s
            i = j = 1
            while i < a or j < b:
                if i < a and (j >= b or i * b < j * a):
                    cur = moves_x(cur)
                    i += 1
                else:
                    cur = moves_y(cur)
                    j += 1
            end_corner_local = 2
        end_corner = (k + end_corner_local) % 4
        ecls, epos = self.corner_index[(cur, end_corner)]
        back = (-prong.vec[0], -prong.vec[1])
        eL = self.quarters(ecls)
        if quadrant(back) != epos % 4:
            epos = (epos + 1) % eL
        return ecls, Prong(epos, back)

    def _turn_moves(self, k: int):
        # in the local frame (rotated by -k quarter turns), +x and +y steps
        h, hi, v, vi = self.h, self.h_inv, self.v, self.v_inv
        right = lambda s: h[s]
        left = lambda s: hi[s]
        up = lambda s: v[s]
        down = lambda s: vi[s]
        return [(right, up), (up, left), (left, down), (down, right)][k]

    def trace(self, cls: int, prong: Prong) -> Saddle:
        """Follow the ray from a cone point until it first meets a cone point."""
        key = ("trace", cls, prong)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not self.is_cone(cls):
            raise NoConePoint("rays are traced from cone points only")
        cur, p = cls, prong
        steps = 0
        while True:
            cur, back = self._step(cur, p)
            steps += 1
            if self.is_cone(cur):
                sad = Saddle(cls, prong, cur, back, steps)
                self._cache[key] = sad
                return sad
            if steps > 4 * self.n + 4:
                raise RuntimeError("ray did not reach a cone point")
            p = back.opposite(4)

    def prongs_for(self, cls: int, vec: Vec) -> list[Prong]:
        """All prongs at a vertex of class ``cls`` pointing along ``vec``."""
        vec = primitive(vec)
        q = quadrant(vec)
        return [Prong(q + 4 * m, vec) for m in range(self.quarters(cls) // 4)]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "h": [x + 1 for x in self.h],
            "v": [x + 1 for x in self.v],
            "name": self.name,
        }


def _check_perm(n: int, perm: Sequence[int], name: str) -> tuple[int, ...]:
    if len(perm) != n or sorted(perm) != list(range(1, n + 1)):
        raise NonBijective(f"{name} is not a permutation of 1..{n}")
    return tuple(x - 1 for x in perm)


def build_origami(n: int, h_perm: Sequence[int], v_perm: Sequence[int], name: str = "",
                  labels: Sequence[str] | None = None) -> Origami:
    """Validate a 1-indexed permutation pair and return the origami."""
    if n < 1:
        raise NonBijective("an origami needs at least one square")
    h = _check_perm(n, h_perm, "h")
    v = _check_perm(n, v_perm, "v")
    seen = {0}
    stack = [0]
    while stack:
        s = stack.pop()
        for t in (h[s], v[s]):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    if len(seen) != n:
        raise Disconnected("the permutations do not act transitively")
    return Origami(n, h, v, name, tuple(labels) if labels else None)


def from_cycles(n: int, cycles: Sequence[Sequence[int]]) -> list[int]:
    """1-indexed permutation list from a cycle description."""
    perm = list(range(1, n + 1))
    for cyc in cycles:
        for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
            perm[a - 1] = b
    return perm


BUILTINS = {
    "silver-L": dict(n=3, h=[2, 1, 3], v=[3, 2, 1], labels=["A", "B", "C"]),
    "torus": dict(n=1, h=[1], v=[1]),
    "two-cylinder": dict(n=2, h=[2, 1], v=[1, 2]),
    "L4": dict(n=4, h=[2, 3, 1, 4], v=[4, 2, 3, 1]),
}


def builtin(name: str) -> Origami:
    if name not in BUILTINS:
        raise KeyError(f"unknown origami {name!r}; known: {sorted(BUILTINS)}")
    d = BUILTINS[name]
    return build_origami(d["n"], d["h"], d["v"], name=name, labels=d.get("labels"))


def silver_l() -> Origami:
    return builtin("silver-L")


def load_origami(source: str | Path) -> Origami:
    """Built-in name or path to an origami JSON file."""
    if isinstance(source, str) and source in BUILTINS:
        return builtin(source)
    data = json.loads(Path(source).read_text())
    return build_origami(data["n"], data["h"], data["v"], name=data.get("name", ""))


# ---------------------------------------------------------------------------
# invariants


def cone_points(o: Origami) -> list[ConePointClass]:
    return list(o.vertex_classes)


def euler_characteristic(o: Origami) -> int:
    return len(o.vertex_classes) - 2 * o.n + o.n


def genus(o: Origami) -> int:
    return (2 - euler_characteristic(o)) // 2


def gauss_bonnet_excess(o: Origami) -> Fraction:
    """Sum over vertex classes of (angle - 2 pi), as a multiple of pi."""
    return sum((c.cone_angle - 2 for c in o.vertex_classes), Fraction(0))


def primitive_vectors(max_len2: int) -> list[Vec]:
    """Primitive integer vectors with squared length at most ``max_len2``, sorted by length."""
    r = int(max_len2 ** 0.5) + 1
    out = []
    for x in range(-r, r + 1):
        for y in range(-r, r + 1):
            if (x or y) and x * x + y * y <= max_len2 and gcd(x, y) == 1:
                out.append((x, y))
    out.sort(key=lambda v: (v[0] * v[0] + v[1] * v[1], v))
    return out


def saddle_rays(o: Origami, cls: int, max_len2: int) -> list[Saddle]:
    """Every oriented saddle connection from cone class ``cls`` of squared length <= max_len2."""
    key = ("rays", cls)
    cached = o._cache.get(key)
    if cached is not None and cached[0] >= max_len2:
        return [s for s in cached[1] if s.length2 <= max_len2]
    out = []
    for vec in primitive_vectors(max_len2):
        for pr in o.prongs_for(cls, vec):
            sad = o.trace(cls, pr)
            if sad.length2 <= max_len2:
                out.append(sad)
    out.sort(key=lambda s: (s.length2, s.prong))
    o._cache[key] = (max_len2, out)
    return out


@dataclass(frozen=True)
class SaddleRecord:
    holonomy: HolonomyVector
    source: int
    target: int
    multiplicity: int


def saddle_connections_up_to(o: Origami, L) -> list[SaddleRecord]:
    """All oriented saddle connections of flat length <= L, grouped by endpoint data.

    ``multiplicity`` counts the distinct saddle connections on the surface that
    share holonomy, source and target.
    """
    L = Fraction(L)
    if L <= 0:
        raise ValueError("L must be positive")
    if not o.cone_classes:
        return []
    bound = L * L
    counts: dict[tuple, int] = {}
    for cls in o.cone_classes:
        for sad in saddle_rays(o, cls, int(bound)):
            if sad.length2 <= bound:
                key = (sad.holonomy, sad.source, sad.target)
                counts[key] = counts.get(key, 0) + 1
    out = [SaddleRecord(HolonomyVector(Fraction(h[0]), Fraction(h[1])), s, t, m)
           for (h, s, t), m in counts.items()]
    out.sort(key=lambda r: (r.holonomy.dx ** 2 + r.holonomy.dy ** 2, r.holonomy.dx, r.holonomy.dy, r.source, r.target))
    return out


def min_saddle_length2(o: Origami) -> int | None:
    """Smallest squared saddle-connection length (None without cone points)."""
    if not o.cone_classes:
        return None
    best = None
    for cls in o.cone_classes:
        for vec in [(1, 0), (0, 1), (-1, 0), (0, -1)]:
            for pr in o.prongs_for(cls, vec):
                l2 = o.trace(cls, pr).length2
                best = l2 if best is None else min(best, l2)
    # any saddle is at least one lattice step long; axis saddles give an upper bound
    r2 = best
    for cls in o.cone_classes:
        for sad in saddle_rays(o, cls, r2):
            best = min(best, sad.length2)
    return best
