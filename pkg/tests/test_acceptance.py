"""The twelve acceptance criteria, each printing one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from veech_lab.cli import ExperimentConfig, main, run
from veech_lab.directions import random_direction


@pytest.fixture
def verdict(capsys):
    def report(label, ok, detail=""):
        with capsys.disabled():
            print(f"\n{label}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        assert ok, detail
    return report


def timed(subcommand, **kw):
    t = time.perf_counter()
    rep = run(subcommand, ExperimentConfig(seed=1, **kw))
    return rep, time.perf_counter() - t


def test_c01_silver_l_invariants(verdict):
    rep, secs = timed("surface")
    s = rep["results"]["surface"]
    ok = (s["genus"] == 2 and len(s["cone_classes"]) == 1 and s["cone_classes"][0]["angle_over_pi"] == "6"
          and s["gauss_bonnet_over_pi"] == "4" and rep["ok"] and secs < 1)
    verdict("C1 silver-L invariants", ok, f"genus {s['genus']}, {len(s['cone_classes'])} cone class, {secs:.2f}s")


def test_c02_multitwist_derivatives(verdict):
    rep, _ = timed("cylinders")
    got = {d["direction"]: d["multitwist"]["derivative"] for d in rep["results"]["cylinders"]["directions"]}
    ok = got == {"1/0": [[1, 2], [0, 1]], "0/1": [[1, 0], [2, 1]]} and rep["ok"]
    verdict("C2 multitwist derivatives", ok, str(got))


def test_c03_random_directions_decompose(verdict):
    rng = np.random.Generator(np.random.Philox(2024))
    dirs = []
    while len(dirs) < 25:
        d = str(random_direction(rng, 12))
        if d not in dirs:
            dirs.append(d)
    rep, secs = timed("cylinders", directions=dirs)
    items = rep["results"]["cylinders"]["directions"]
    ok = (len(items) == 25 and all(i["area"] == "3" and i["leaf_oracle_agrees"] and i["cylinders"] for i in items)
          and rep["ok"] and secs < 10)
    verdict("C3 cylinder decompositions in 25 random directions", ok, f"{secs:.2f}s")


def test_c04_geodesics_match_oracle(verdict):
    rep, secs = timed("geodesic", chart_radius=10.0, samples={"geodesic": 200})
    g = rep["results"]["geodesic"]
    ok = g["pairs"] == 200 and g["agree"] == 200 and rep["ok"] and secs < 60
    verdict("C4 geodesics agree with the funnel oracle", ok,
            f"{g['agree']}/{g['pairs']} agree, {g['skipped_chart_escapes']} escapes, {secs:.1f}s")


def test_c05_triangles_and_fans(verdict):
    tri, _ = timed("triangle", samples={"triangle": 200})
    fan, _ = timed("fan", samples={"fan": 100})
    t, f = tri["results"]["triangle"], fan["results"]["fan"]
    ok = (t["triangles"] == 200 and t["interior_cone_max"] == 0 and tri["ok"]
          and f["fans"] == 100 and f["max_balance_error"] <= 1e-9 and fan["ok"])
    verdict("C5 empty core triangles and monotone fans", ok,
            f"{t['triangles']} triangles, {f['fans']} fans, balance error {f['max_balance_error']:.1e}")


@pytest.fixture(scope="module")
def windows():
    return timed("window", directions=["1/0"], samples={"window": 500})


def test_c06_windows_are_points_or_saddles(verdict, windows):
    rep, secs = windows
    w = rep["results"]["window"]["directions"][0]
    ok = w["windows"] == 500 and rep["ok"]
    verdict("C6 windows are a point or one saddle", ok,
            f"{w['kinds']}, {w['skipped_chart_escapes']} escapes, inside-spine ties {w['inside_spine']}, {secs:.1f}s")


def test_c07_bridge_containment(verdict, windows):
    rep, _ = windows
    w = rep["results"]["window"]["directions"][0]
    ok = w["bridges"] >= 200 and w["contained_windows"] >= 200 and rep["ok"]
    verdict("C7 windows behind a sector stay in its bridge", ok,
            f"{w['contained_windows']} windows over {w['bridges']} bridges, {w['bridge_skips']} skips")


def test_c08_level_map(verdict):
    rep, _ = timed("levels", samples={"levels": 100})
    lv = rep["results"]["levels"]
    ok = (lv["boundary_lifts_checked"] == 100 and lv["shears_per_lift"] == 7 and lv["constancy_failures"] == 0
          and lv["block_corner"] is not None and math.isfinite(lv["lipschitz_max"]) and rep["ok"])
    verdict("C8 level map contract", ok,
            f"block at {lv['block_corner']}, lipschitz max {lv['lipschitz_max']}")


def test_c09_xi_bottleneck(verdict):
    rep, secs = timed("xi", samples={"xi": 100})
    items = rep["results"]["xi"]["directions"]
    ok = all(i["pairs"] == 100 and i["bottleneck_passed"] == 100 for i in items) and rep["ok"]
    verdict("C9 bottleneck with B = 3", ok,
            ", ".join(f"{i['v']} {i['bottleneck_passed']}/{i['pairs']}" for i in items) + f", {secs:.1f}s")


def test_c10_chhs_window(verdict):
    rep, secs = timed("chhs", tree_depth=2)
    audits = [d["audit"] for d in rep["results"]["chhs"]["directions"]]
    ok = secs < 120 and rep["ok"]
    for a in audits:
        ok = ok and a["complex"]["checks"]["maximal_simplices"]["ok"]
        ok = ok and all(t["closed_form_failures"] == 0 for t in a["links"]["types"].values())
        ok = ok and a["chains"]["longest"] <= 9
        ok = ok and a["fullness"]["violation_count"] == 0 and a["w_graph"]["edges"] > 0
    verdict("C10 complex links, chains and fullness", ok,
            ", ".join(f"chain {a['chains']['longest']}, {a['w_graph']['edges']} W-edges" for a in audits)
            + f", {secs:.1f}s")


def test_c11_slimness_stability(verdict):
    rep, _ = timed("slimness", samples={"slimness": 100})
    s = rep["results"]["slimness"]
    vals = [d["delta_hat"] for d in s["depths"].values()]
    ok = (all(d["count"] == 100 for d in s["depths"].values()) and all(math.isfinite(v) for v in vals)
          and s["difference"] <= s["unit"] and rep["ok"])
    verdict("C11 slimness stable across depths", ok, f"delta-hat {vals}, difference {s['difference']}")


def test_c12_all_is_deterministic(verdict, tmp_path):
    paths = [tmp_path / f"r{i}.json" for i in range(2)]
    codes = [main(["all", "--seed", "7", "-o", str(p)]) for p in paths]
    a, b = (p.read_bytes() for p in paths)
    ok = codes == [0, 0] and a == b
    verdict("C12 all run twice is byte-identical", ok, f"exit codes {codes}, {len(a)} bytes")
