"""Command line runner: every module as a subcommand with a deterministic JSON report."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .charts import ChartTooSmall, build_chart, flat_geodesic, funnel_oracle, sample_cone_lift
from .chhs import audit_axioms, build_complex, build_w_graph, enumerate_links
from .directions import (cylinder_decomposition, isomorphic, leaf_cylinders, multitwist, renormalize,
                         strip_and_saddle_bounds)
from .disk import (DiskPoint, Horoball, WindowTooSmall, closest_point_projection, cusp_window,
                   electrified_distance, gap_exact, horoball_gap)
from .ehat import (BudgetExceeded, build_ehat, four_point_delta, needed_directions, preferred_path, sample_triples,
                   slimness_sweep)
from .exact import HALF_TURN, cross, sub
from .origami import (NoConePoint, OrigamiError, RationalDirection, cone_points, gauss_bonnet_excess, genus,
                      load_origami, saddle_connections_up_to)
from .projections import (EmptyLevelSet, LevelMap, boundary_fiber, bridge, composite_projections, covered_block,
                          flow_constancy, full_line, level_pairs, lipschitz_scatter, m_set_gap,
                          random_neighbour_sector, sample_behind, window, xi_graph, xi_graph_by_lines)
from .spines import SpineForest, thickened_spine, tree_ball
from .triangles import (EUCLIDEAN, balance_of_vectors, exact_fan_angles, fan_angle_profile, fan_decompose,
                        fan_piece_balance_points, sample_triangle, single_saddle)

SCHEMA = "veech-lab/1"
SUBCOMMANDS = ("surface", "cylinders", "geodesic", "triangle", "fan", "disk", "tree", "window", "xi",
               "levels", "ehat", "slimness", "chhs")
BOTTLENECK = 3

DEFAULT_SAMPLES = {"surface": 0, "cylinders": 0, "geodesic": 40, "triangle": 40, "fan": 40, "disk": 100,
                   "tree": 0, "window": 60, "xi": 30, "levels": 40, "ehat": 30, "slimness": 20, "chhs": 0}


class ConfigInvalid(ValueError):
    pass


@dataclass
class ExperimentConfig:
    origami: str = "silver-L"
    directions: list[str] = field(default_factory=lambda: ["1/0", "0/1"])
    chart_radius: float = 6.0
    window_radius: float = 4.0
    tree_depth: int = 2
    tree_radius: float = 2.0
    ehat_depth: int = 2
    scale: str = "1/8"
    cusp_bound: int = 6
    saddle_length: str = "3"
    w_slack: float | None = None  # added to the measured region diameter; None uses K^2 + K
    seed: int = 0
    samples: dict = field(default_factory=dict)
    tolerance: float = 1e-9
    budget: int = 200000
    workers: int = 1
    output: str | None = None
    csv: str | None = None
    timing: bool = False

    def sample_count(self, name: str) -> int:
        return int(self.samples.get(name, DEFAULT_SAMPLES[name]))

    def parsed_directions(self) -> list[RationalDirection]:
        out = []
        for d in self.directions:
            r = RationalDirection.parse(str(d))
            if r not in out:
                out.append(r)
        return out

    def validate(self) -> "ExperimentConfig":
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigInvalid("seed must be a non-negative integer")
        if self.budget <= 0:
            raise ConfigInvalid("budget must be positive")
        if self.workers <= 0:
            raise ConfigInvalid("workers must be positive")
        for name in ("chart_radius", "window_radius", "tree_radius"):
            if not getattr(self, name) > 0:
                raise ConfigInvalid(f"{name} must be positive")
        if self.tree_depth < 0 or self.ehat_depth < 1 or self.cusp_bound < 1:
            raise ConfigInvalid("depths and bounds must be positive")
        if self.w_slack is not None and not self.w_slack >= 0:
            raise ConfigInvalid("w_slack must be non-negative")
        if not self.tolerance > 0:
            raise ConfigInvalid("tolerance must be positive")
        try:
            if Fraction(self.scale) <= 0 or Fraction(self.saddle_length) <= 0:
                raise ConfigInvalid("scale and saddle length must be positive")
            if not self.parsed_directions():
                raise ConfigInvalid("at least one direction is needed")
        except (ValueError, ZeroDivisionError) as e:
            if isinstance(e, ConfigInvalid):
                raise
            raise ConfigInvalid(str(e)) from None
        for k, v in self.samples.items():
            if k not in DEFAULT_SAMPLES:
                raise ConfigInvalid(f"unknown subcommand {k!r} in samples")
            if int(v) < 0:
                raise ConfigInvalid("sample counts must be non-negative")
        return self

    def echo(self) -> dict:
        d = asdict(self)
        for k in ("output", "csv", "timing", "workers"):
            d.pop(k)
        d["samples"] = {k: self.sample_count(k) for k in SUBCOMMANDS}
        return d

    @staticmethod
    def from_file(path: str) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigInvalid(f"cannot read config {path}: {e}") from None
        known = {f.name for f in fields(ExperimentConfig)}
        extra = set(data) - known
        if extra:
            raise ConfigInvalid(f"unknown config keys {sorted(extra)}")
        return ExperimentConfig(**data)


def rng_for(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Counter-based stream for one subcommand; independent of run order and worker count."""
    ss = np.random.SeedSequence(seed, spawn_key=(SUBCOMMANDS.index(name), index))
    return np.random.Generator(np.random.Philox(ss))


def _clean(x):
    """Make a report JSON-safe and stable: floats rounded, sets sorted, fractions as strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted((_clean(v) for v in x), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return round(x, 9) + 0.0
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


@dataclass
class Section:
    results: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    budget_exceeded: bool = False


def _forest(cfg: ExperimentConfig, o, d, radius=None) -> SpineForest:
    return SpineForest(build_chart(o, radius=radius or cfg.window_radius, lazy=True), d)


# ---------------------------------------------------------------------------
# subcommands


def run_surface(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    g = genus(o)
    excess = gauss_bonnet_excess(o)
    cones = [c for c in cone_points(o) if not c.regular]
    saddles = saddle_connections_up_to(o, Fraction(cfg.saddle_length)) if cones else []
    sec.results = {
        "origami": o.to_json(), "squares": o.n, "genus": g,
        "cone_classes": [{"id": c.id, "angle_over_pi": str(c.cone_angle), "corners": c.quarters} for c in cones],
        "regular_vertices": sum(1 for c in cone_points(o) if c.regular),
        "gauss_bonnet_over_pi": str(excess),
        "saddle_length": cfg.saddle_length,
        "saddles": [{"holonomy": [str(r.holonomy.dx), str(r.holonomy.dy)], "source": r.source, "target": r.target,
                     "multiplicity": r.multiplicity} for r in saddles],
    }
    if excess != 4 * g - 4:
        sec.violations.append(f"angle excess {excess} pi differs from 2 pi (2g - 2) = {4 * g - 4} pi")
    # a saddle read backwards is a saddle
    table = {((r.holonomy.dx, r.holonomy.dy), r.source, r.target): r.multiplicity for r in saddles}
    for (h, s, t), m in table.items():
        if table.get(((-h[0], -h[1]), t, s)) != m:
            sec.violations.append(f"saddle {h} from {s} to {t} has no reverse of the same multiplicity")
    return sec


def run_cylinders(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    out = []
    for d in cfg.parsed_directions():
        dec = cylinder_decomposition(o, d)
        found = sorted((c.circumference, c.height) for c in dec.cylinders)
        oracle = leaf_cylinders(o, d)
        item = dec.to_json()
        item["leaf_oracle_agrees"] = found == oracle
        if found != oracle:
            sec.violations.append(f"{d}: cylinders {found} differ from the first-return oracle {oracle}")
        if dec.area != o.n:
            sec.violations.append(f"{d}: cylinder area {dec.area} is not {o.n}")
        try:
            mt = multitwist(o, d)
        except ValueError as e:
            item["multitwist"] = None
            item["multitwist_note"] = str(e)
        else:
            item["multitwist"] = mt.to_json()
            fixed = isomorphic(renormalize(o, mt.derivative), o)
            item["derivative_stabilises_surface"] = fixed
            if not fixed:
                sec.violations.append(f"{d}: derivative {mt.derivative} does not preserve the surface")
        bounds = strip_and_saddle_bounds(o, d, Fraction(cfg.scale))
        item["bounds"] = bounds
        out.append(item)
    sec.results = {"directions": out}
    return sec


def run_geodesic(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    chart = build_chart(o, radius=cfg.chart_radius, lazy=True)
    agree = skipped = 0
    for i in range(cfg.sample_count("geodesic")):
        x, y = sample_cone_lift(chart, rng), sample_cone_lift(chart, rng)
        try:
            path = flat_geodesic(chart, x, y)
        except ChartTooSmall:
            skipped += 1
            continue
        prongs, hols = funnel_oracle(chart, x, y)
        same = list(path.prongs) == list(prongs) and [tuple(s) for s in path.segments] == [tuple(h) for h in hols]
        same = same and path.length2s == [h[0] * h[0] + h[1] * h[1] for h in hols]
        agree += same
        if not same:
            sec.violations.append(f"geodesic {x.key()} -> {y.key()} disagrees with the funnel oracle")
        sec.rows.append({"sample": i, "x": x.key(), "y": y.key(), "saddles": len(path.segments),
                         "length": round(path.length_float, 9), "oracle_agrees": same})
    sec.results = {"chart_radius": str(chart.radius),
                   "pairs": len(sec.rows), "agree": agree, "skipped_chart_escapes": skipped}
    return sec


def _triangle_checks(chart, t) -> list[str]:
    bad = []
    if t.interior_cone_count:
        bad.append(f"core triangle with {t.interior_cone_count} interior cone points")
    dec = fan_decompose(chart, t)
    area = sum(abs(cross(sub(b.pos, a.pos), sub(c.pos, a.pos))) for a, b, c in dec.pieces)
    if area != t.area2():
        bad.append(f"fan pieces cover area {area}/2 instead of {t.area2()}/2")
    for a, b, c in dec.pieces:
        if not (single_saddle(chart, a, b) and single_saddle(chart, b, c) and single_saddle(chart, c, a)):
            bad.append("fan piece is not euclidean")
    return bad


def run_triangle(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    chart = build_chart(o, radius=cfg.chart_radius, lazy=True)
    kinds: dict[str, int] = {}
    for i in range(cfg.sample_count("triangle")):
        t = sample_triangle(chart, rng)
        kinds[t.classification] = kinds.get(t.classification, 0) + 1
        sec.violations += _triangle_checks(chart, t)
        sec.rows.append({"sample": i, **{k: v for k, v in t.to_json().items() if not isinstance(v, list)}})
        if t.classification == EUCLIDEAN:
            bp = balance_of_vectors([sub(b.pos, a.pos) for a, b in zip(t.core, t.core[1:] + t.core[:1])])
            if max(bp.side_lengths_after) - min(bp.side_lengths_after) > 1e-6:
                sec.violations.append("balance point does not make the triangle equilateral")
    sec.results = {"triangles": len(sec.rows), "classes": dict(sorted(kinds.items())),
                   "interior_cone_max": max((r["interior_cone_count"] for r in sec.rows), default=0)}
    return sec


def run_fan(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    chart = build_chart(o, radius=cfg.chart_radius, lazy=True)
    fans = 0
    worst = 0.0
    target = cfg.sample_count("fan")
    tries = 0
    while fans < target and tries < 20 * max(target, 1):
        tries += 1
        t = sample_triangle(chart, rng)
        for fan in fan_decompose(chart, t).fans:
            if len(fan.base) < 3:
                continue
            fans += 1
            lam, rho = exact_fan_angles(fan)
            exact_ok = all(a < b for a, b in zip(lam, lam[1:])) and all(a > b for a, b in zip(rho, rho[1:]))
            exact_ok = exact_ok and all(a < HALF_TURN for a in lam + rho)
            prof = fan_angle_profile(fan)
            bps = fan_piece_balance_points(fan)
            first = fan_angle_profile(fan, bps[0].disk_point).rho[0]
            last = fan_angle_profile(fan, bps[-1].disk_point).lam[-1]
            err = max(abs(first - math.pi / 3), abs(last - math.pi / 3))
            worst = max(worst, err)
            if not (exact_ok and prof.monotone):
                sec.violations.append(f"fan at {fan.apex.key()} with {len(fan.base) - 1} pieces is not monotone")
            if err > 1e-9:
                sec.violations.append(f"balance angle off pi/3 by {err:.3g}")
            sec.rows.append({"fan": fans, "apex": fan.apex.key(), "pieces": len(fan.base) - 1,
                             "monotone": exact_ok and prof.monotone, "balance_error": err})
    sec.results = {"fans": fans, "triangles_drawn": tries, "max_balance_error": worst}
    return sec


def run_disk(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    scale = Fraction(cfg.scale)
    cusps = cusp_window(cfg.cusp_bound)
    worst = 0.0
    least = math.inf
    for _ in range(cfg.sample_count("disk")):
        i, j = (int(k) for k in rng.choice(len(cusps), 2, replace=False))
        a, b = Horoball(cusps[i], scale), Horoball(cusps[j], scale)
        g = horoball_gap(a, b)
        exact = gap_exact(a.cusp, b.cusp, scale)
        worst = max(worst, abs(g.distance - exact) / max(1.0, exact))
        least = min(least, g.distance)
        if not (a.on_boundary(g.start) and b.on_boundary(g.end)):
            sec.violations.append(f"gap feet for {a.cusp}, {b.cusp} are off the horoball boundaries")
        X = DiskPoint(complex(float(rng.uniform(-3, 3)), float(rng.uniform(0.05, 3))))
        P = closest_point_projection(a, X)
        if not (a.contains(X) or a.on_boundary(P)):
            sec.violations.append(f"projection to {a.cusp} is off the boundary")
    if worst > 1e-7:
        sec.violations.append(f"horoball gaps differ from 2 log(|det|/scale) by {worst:.3g}")
    if least < 1:
        sec.violations.append(f"horoballs are not 1-separated: gap {least}")
    ref = cusps[0]
    table = {}
    for d in cusps[1:8]:
        try:
            table[d.cusp] = electrified_distance(ref, d, cfg.cusp_bound, scale)
        except WindowTooSmall:
            continue
        if table[d.cusp] > gap_exact(ref, d, scale) + cfg.tolerance:
            sec.violations.append(f"electrified distance to {d.cusp} exceeds the direct gap")
    sec.results = {"cusps": len(cusps), "pairs": cfg.sample_count("disk"), "max_gap_error": worst,
                   "min_gap": least, "electrified_from_inf": table}
    sec.constants = {"horoball_scale": cfg.scale, "min_horoball_gap": least}
    return sec


def run_tree(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    out = []
    for d in cfg.parsed_directions():
        f = _forest(cfg, o, d, cfg.tree_radius)
        tb = tree_ball(f, cfg.tree_depth)
        root = f.spine(f.chart.root)
        th = thickened_spine(f, root)
        widths = set(f.heights)
        weights = set(tb.edges.values())
        if not tb.is_tree():
            sec.violations.append(f"{d}: tree ball is not a tree")
        if not weights <= widths:
            sec.violations.append(f"{d}: edge weights {sorted(weights)} are not strip widths {sorted(widths)}")
        if not root.is_tree():
            sec.violations.append(f"{d}: spine of the root is not a tree")
        out.append({"direction": str(d), "vertices": len(tb.vertices), "edges": len(tb.edges),
                    "edge_weights": sorted(str(w) for w in weights), "strip_widths": sorted(str(w) for w in widths),
                    "root_spine_nodes": len(root.nodes), "thickened_strips": len(th.strips),
                    "root_spine_truncated": root.truncated})
    sec.results = {"depth": cfg.tree_depth, "directions": out}
    return sec


def run_window(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    n = cfg.sample_count("window")
    out = []
    for d in cfg.parsed_directions():
        f = _forest(cfg, o, d)
        chart = f.chart
        v = f.spine(chart.root)
        kinds: dict[str, int] = {}
        inside: dict[str, int] = {}
        skipped = tries = 0
        while sum(kinds.values()) < n and tries < 20 * max(n, 1):
            tries += 1
            x = sample_cone_lift(chart, rng)
            fiber = boundary_fiber(d, Fraction(int(rng.integers(-60, 61)), 20))
            try:
                w = window(f, v, x, fiber)
            except ChartTooSmall:
                skipped += 1
                continue
            if w.case == "inside":
                # nearest boundary points of a spine point; ties are expected and not a window
                inside[w.kind] = inside.get(w.kind, 0) + 1
                continue
            key = f"{w.case}/{w.kind}"
            kinds[key] = kinds.get(key, 0) + 1
            if not w.structural:
                sec.violations.append(f"{d}: window of {x.key()} is a {w.kind}, not a point or a saddle")
        contained = bridges = bskipped = 0
        strips = f.strips(v)
        for _ in range(n):
            S = strips[int(rng.integers(len(strips)))]
            U = random_neighbour_sector(f, S, rng)
            if U is None:
                bskipped += 1
                continue
            try:
                b = bridge(f, S, U)
                xs = sample_behind(f, U, rng)
            except ChartTooSmall:
                bskipped += 1
                continue
            bridges += 1
            keys = {p.address for p in b.lifts}
            for x in xs:
                try:
                    w = window(f, v, x, brute_force=False)
                except ChartTooSmall:
                    bskipped += 1
                    continue
                if {p.address for p in w.lifts} <= keys:
                    contained += 1
                else:
                    sec.violations.append(f"{d}: window of {x.key()} leaves the bridge {b.to_json()['bridge']}")
        out.append({"direction": str(d), "windows": sum(kinds.values()), "kinds": dict(sorted(kinds.items())),
                    "inside_spine": dict(sorted(inside.items())), "skipped_chart_escapes": skipped, "bridges": bridges, "contained_windows": contained,
                    "bridge_skips": bskipped})
    sec.results = {"directions": out}
    return sec


def run_xi(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    out = []
    for d in cfg.parsed_directions():
        f = _forest(cfg, o, d)
        v = f.spine(f.chart.root)
        xi = xi_graph(f, v)
        agree = xi.edges == xi_graph_by_lines(f, v)
        if not agree:
            sec.violations.append(f"{d}: coned-off graph differs between the strip and line constructions")
        passed = 0
        pairs = 0
        if len(xi.vertices) >= 2:
            for _ in range(cfg.sample_count("xi")):
                a, b = (str(s) for s in rng.choice(xi.vertices, 2, replace=False))
                r = bottleneck_check_pair(f, v, xi, a, b)
                pairs += 1
                passed += r.ok
                if not r.ok:
                    sec.violations.append(f"{d}: bottleneck fails for {a}, {b}")
        proj = []
        for _ in range(3):
            x = sample_cone_lift(f.chart, rng)
            try:
                proj.append({"x": x.key(), **composite_projections(f, v, x).to_json()})
            except ChartTooSmall:
                continue
        out.append({"direction": str(d), **xi.to_json(), "line_construction_agrees": agree, "pairs": pairs,
                    "bottleneck_passed": passed, "composite_samples": proj})
    sec.results = {"directions": out}
    sec.constants = {"bottleneck_B": BOTTLENECK}
    return sec


def bottleneck_check_pair(f, v, xi, a, b):
    from .projections import bottleneck_check

    return bottleneck_check(f, v, xi, a, b, B=BOTTLENECK)


def run_levels(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    d = cfg.parsed_directions()[0]
    f = _forest(cfg, o, d)
    chart = f.chart
    v = f.spine(chart.root)
    lm = LevelMap(f, v)
    strips = []
    for s in f.sectors(chart.root):
        try:
            strips.append(f.crossing(s))
        except ChartTooSmall:
            continue
    # far boundary cone lifts of every strip of the windowed thickened spine
    lifts = [(S, sc.lift) for S in f.strips(v) for sc in full_line(f, S.far_sector)]
    n = min(cfg.sample_count("levels"), len(lifts))
    picks = sorted(int(i) for i in rng.choice(len(lifts), n, replace=False)) if n else []
    failures = 0
    for i in picks:
        S, p = lifts[i]
        if not flow_constancy(lm, p, S, shears=range(-3, 4)):
            failures += 1
            sec.violations.append(f"level of {p.key()} changes along its flow line")
    S = strips[0]
    pairs = level_pairs(f, v, S, [Fraction(k, 2) for k in range(-30, 30)], rng, 2000)
    block = covered_block(pairs)
    if block is None:
        sec.violations.append("no fully covered 10 x 10 block of level pairs")
    lip, lip_n = lipschitz_scatter(f, v, S, rng, max(cfg.sample_count("levels"), 1) * 5)
    if not math.isfinite(lip):
        sec.violations.append("level maps have unbounded scatter")
    gap = None
    if len(strips) > 1:
        grid = ([Fraction(k, 2) for k in range(-4, 4)], [Fraction(k, 2) for k in range(-6, 6)],
                [Fraction(k, 4) for k in range(5)])
        try:
            gap = m_set_gap(f, v, 0, (S, 0), (strips[1], 0), *grid)
        except EmptyLevelSet:
            gap = None
    sec.results = {"direction": str(d), "strips": len(strips), "boundary_lifts_checked": n,
                   "shears_per_lift": 7, "constancy_failures": failures, "level_pairs": len(pairs),
                   "block_corner": list(block) if block else None, "lipschitz_max": lip,
                   "lipschitz_pairs": lip_n, "m_set_gaps": list(gap) if gap else None}
    sec.constants = {"K_lipschitz": lip}
    return sec


def run_ehat(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    dirs = cfg.parsed_directions()
    scale = Fraction(cfg.scale)
    chart = build_chart(o, radius=cfg.ehat_depth)
    pairs = [(sample_cone_lift(chart, rng), sample_cone_lift(chart, rng)) for _ in range(min(5, cfg.sample_count("ehat")))]
    extra = [d for d in needed_directions(chart, [(x, y, y) for x, y in pairs]) if d not in dirs]
    G = build_ehat(o, dirs + extra, cfg.ehat_depth, scale, budget=cfg.budget, chart=chart)
    for e in G.edges.values():
        if e.kind == "jump":
            want = max(1.0, gap_exact(G.direction_of[e.a], G.direction_of[e.b], scale))
            if abs(e.weight - want) > cfg.tolerance:
                sec.violations.append(f"jump {e.a} -> {e.b} has weight {e.weight}, expected {want}")
    paths = []
    for x, y in pairs:
        p = preferred_path(G, x, y)
        paths.append({"x": x.key(), "y": y.key(), "length": p.length, "pieces": len(p.pieces)})
    nodes = sorted(G.nodes)
    k = min(len(nodes), max(4, cfg.sample_count("ehat")))
    sample = [nodes[int(i)] for i in sorted(rng.choice(len(nodes), k, replace=False))]
    delta = four_point_delta(G, sample, rng, samples=2000)
    sec.results = {"graph": G.to_json(), "preferred_paths": paths, "four_point_nodes": k, "four_point_delta": delta}
    sec.constants = {"ehat_four_point": delta}
    return sec


def run_slimness(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    dirs = cfg.parsed_directions()
    scale = Fraction(cfg.scale)
    depth = cfg.ehat_depth
    chart = build_chart(o, radius=depth)
    triples = sample_triples(chart, rng, cfg.sample_count("slimness"), depth)
    low = slimness_sweep(o, dirs, depth, triples, scale)
    high = slimness_sweep(o, dirs, depth + 1, triples, scale)
    unit = 1.0
    diff = abs(low.delta_hat - high.delta_hat)
    if not (math.isfinite(low.delta_hat) and math.isfinite(high.delta_hat)):
        sec.violations.append("slimness is infinite")
    if diff > unit + cfg.tolerance:
        sec.violations.append(f"slimness moves by {diff} between depths {depth} and {depth + 1}")
    for tag, res in ((depth, low), (depth + 1, high)):
        for r in res.reports:
            sec.rows.append({"depth": tag, **r.to_row()})
    sec.results = {"depths": {str(depth): low.to_json(), str(depth + 1): high.to_json()}, "difference": diff,
                   "unit": unit}
    sec.constants = {"delta_hat": max(low.delta_hat, high.delta_hat)}
    return sec


def run_chhs(cfg: ExperimentConfig, o, rng) -> Section:
    sec = Section()
    out = []
    radius = 0.0
    longest = 0
    for i, d in enumerate(cfg.parsed_directions()):
        f = _forest(cfg, o, d, cfg.tree_radius)
        tb = tree_ball(f, cfg.tree_depth)
        c = build_complex(tb, budget=cfg.budget)
        w = build_w_graph(f, c, seed=cfg.seed + i, slack=cfg.w_slack)
        reps = enumerate_links(c, w, seed=cfg.seed + i)
        audit = audit_axioms(c, w, reps)
        sec.violations += [f"{d}: {v}" for v in audit["violations"]]
        radius = max(radius, w.R)
        longest = max(longest, audit["chains"]["longest"])
        out.append({"direction": str(d), "tree_vertices": len(tb.vertices), "audit": audit})
    sec.results = {"depth": cfg.tree_depth, "chart_radius": cfg.tree_radius, "directions": out}
    sec.constants = {"R_w_threshold": radius, "longest_chain": longest}
    return sec


RUNNERS = {
    "surface": run_surface, "cylinders": run_cylinders, "geodesic": run_geodesic, "triangle": run_triangle,
    "fan": run_fan, "disk": run_disk, "tree": run_tree, "window": run_window, "xi": run_xi,
    "levels": run_levels, "ehat": run_ehat, "slimness": run_slimness, "chhs": run_chhs,
}


def _needs_cone(name: str) -> bool:
    return name not in ("surface", "cylinders", "disk")


def run_one(name: str, cfg: ExperimentConfig) -> tuple[Section, float]:
    o = load_origami(cfg.origami)
    if _needs_cone(name) and not o.cone_classes:
        raise ConfigInvalid(f"{name} needs a surface with a cone point; {o.name or cfg.origami} has none")
    t = time.perf_counter()
    try:
        sec = RUNNERS[name](cfg, o, rng_for(cfg.seed, name))
    except BudgetExceeded as e:
        sec = Section(results={"error": str(e)}, budget_exceeded=True)
    except NoConePoint as e:
        raise ConfigInvalid(str(e)) from None
    return sec, time.perf_counter() - t


def _run_named(args):
    name, cfg = args
    return name, run_one(name, cfg)


def run(subcommand: str, config: ExperimentConfig) -> dict:
    """Run a subcommand (or ``all``) and return the report as plain data."""
    if subcommand not in SUBCOMMANDS + ("all",):
        raise ConfigInvalid(f"unknown subcommand {subcommand!r}")
    config.validate()
    try:
        load_origami(config.origami)
    except (OSError, KeyError, OrigamiError, ValueError) as e:
        raise ConfigInvalid(f"cannot load origami {config.origami!r}: {e}") from None
    names = SUBCOMMANDS if subcommand == "all" else (subcommand,)
    if subcommand == "all":
        o = load_origami(config.origami)
        if not o.cone_classes:
            names = tuple(n for n in names if not _needs_cone(n))
    if config.workers > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            done = dict(ex.map(_run_named, [(n, config) for n in names]))
    else:
        done = dict(_run_named((n, config)) for n in names)
    report = {"schema": SCHEMA, "version": __version__, "subcommand": subcommand, "config": config.echo(),
              "results": {}, "constants": {"bottleneck_B": BOTTLENECK}, "violations": [], "budget_exceeded": False}
    timing = {}
    rows = []
    for n in names:
        sec, secs = done[n]
        report["results"][n] = sec.results
        report["constants"].update(sec.constants)
        report["violations"] += [f"{n}: {v}" for v in sec.violations]
        report["budget_exceeded"] |= sec.budget_exceeded
        rows += [{"subcommand": n, **r} for r in sec.rows]
        timing[n] = secs
    report = _clean(report)
    report["ok"] = not report["violations"] and not report["budget_exceeded"]
    if config.timing:
        report["timing_seconds"] = _clean(timing)
    report["_rows"] = _clean(rows)
    report["_timing"] = timing
    return report


def dumps(report: dict) -> str:
    return json.dumps({k: v for k, v in report.items() if not k.startswith("_")}, sort_keys=True, indent=2) + "\n"


def write_csv(path: str, rows: list[dict]) -> None:
    names: list[str] = []
    for r in rows:
        for k in r:
            if k not in names:
                names.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=names, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


# ---------------------------------------------------------------------------
# argument parsing


def _samples(values: list[str]) -> dict:
    out = {}
    for v in values or []:
        if "=" in v:
            k, n = v.split("=", 1)
            out[k.strip()] = int(n)
        else:
            out.update({k: int(v) for k in DEFAULT_SAMPLES if DEFAULT_SAMPLES[k]})
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="veech-lab", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS + ("all",):
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with configuration fields; flags override it")
        s.add_argument("--origami", help="builtin name or path to an origami JSON file")
        s.add_argument("--direction", "--directions", dest="directions", action="append",
                       help="rational direction p/q (repeatable or comma separated)")
        for flag, typ in (("chart-radius", float), ("window-radius", float), ("tree-radius", float),
                          ("tree-depth", int), ("ehat-depth", int), ("cusp-bound", int), ("budget", int),
                          ("workers", int), ("tolerance", float), ("w-slack", float)):
            s.add_argument(f"--{flag}", type=typ)
        s.add_argument("--scale", help="horoball scale, a positive rational")
        s.add_argument("--saddle-length", help="saddle enumeration bound, a positive rational")
        s.add_argument("--seed", type=int)
        s.add_argument("--samples", action="append", metavar="N|NAME=N",
                       help="sample count for every sweep, or for one subcommand")
        s.add_argument("--output", "-o", help="report path (default stdout)")
        s.add_argument("--csv", help="CSV path for per-sample sweep rows")
        s.add_argument("--timing", action="store_true", help="include wall times in the report")
    return p


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(ns.config) if ns.config else ExperimentConfig()
    env = os.environ.get("VEECH_LAB_WORKERS")
    if env:
        try:
            cfg.workers = int(env)
        except ValueError:
            raise ConfigInvalid(f"VEECH_LAB_WORKERS={env!r} is not an integer") from None
    for name in ("origami", "chart_radius", "window_radius", "tree_radius", "tree_depth", "ehat_depth",
                 "cusp_bound", "budget", "workers", "tolerance", "w_slack", "scale", "saddle_length", "seed", "output", "csv"):
        val = getattr(ns, name)
        if val is not None:
            setattr(cfg, name, val)
    if ns.directions:
        cfg.directions = [d for item in ns.directions for d in item.split(",") if d.strip()]
    if ns.samples:
        try:
            cfg.samples = {**cfg.samples, **_samples(ns.samples)}
        except ValueError:
            raise ConfigInvalid(f"bad --samples value {ns.samples}") from None
    cfg.timing = cfg.timing or ns.timing
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        report = run(ns.subcommand, cfg)
    except ConfigInvalid as e:
        print(f"veech-lab: invalid configuration: {e}", file=sys.stderr)
        return 2
    text = dumps(report)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.csv:
        write_csv(cfg.csv, report["_rows"])
    times = ", ".join(f"{k} {v:.1f}s" for k, v in report["_timing"].items())
    status = "ok" if report["ok"] else f"{len(report['violations'])} violations"
    print(f"veech-lab {ns.subcommand}: {status} ({times})", file=sys.stderr)
    if report["budget_exceeded"]:
        return 3
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
