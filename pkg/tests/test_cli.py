import csv
import json
import subprocess
import sys

import pytest

from veech_lab.cli import SCHEMA, ConfigInvalid, ExperimentConfig, dumps, main, rng_for, run

SMALL = {"geodesic": 3, "triangle": 3, "fan": 3, "disk": 5, "window": 3, "xi": 2, "levels": 3, "ehat": 3,
         "slimness": 2}


@pytest.mark.parametrize("kwargs", [
    {"seed": -1}, {"seed": 1.5}, {"budget": 0}, {"workers": 0}, {"chart_radius": 0.0},
    {"samples": {"nonsense": 3}}, {"samples": {"geodesic": -1}}, {"directions": ["1/0/2"]},
    {"directions": []}, {"scale": "0"}, {"tolerance": 0.0}, {"w_slack": -1.0},
])
def test_invalid_configs(kwargs):
    with pytest.raises(ConfigInvalid):
        run("surface", ExperimentConfig(**kwargs))


def test_unknown_origami_and_subcommand():
    with pytest.raises(ConfigInvalid):
        run("surface", ExperimentConfig(origami="no-such-surface"))
    with pytest.raises(ConfigInvalid):
        run("bogus", ExperimentConfig())


def test_cone_free_surface_is_rejected_where_needed():
    assert run("surface", ExperimentConfig(origami="torus"))["ok"]
    with pytest.raises(ConfigInvalid):
        run("geodesic", ExperimentConfig(origami="torus"))
    rep = run("all", ExperimentConfig(origami="torus", samples=SMALL))
    assert set(rep["results"]) == {"surface", "cylinders", "disk"}


def test_bad_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_file(str(p))
    p.write_text(json.dumps({"seeed": 3}))
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_file(str(p))
    assert main(["surface", "--config", str(p)]) == 2


def test_surface_report(capsys):
    assert main(["surface"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["schema"] == SCHEMA
    assert rep["ok"] and rep["violations"] == []
    s = rep["results"]["surface"]
    assert s["genus"] == 2
    assert "timing_seconds" not in rep


def test_cylinders_report(capsys):
    assert main(["cylinders", "--direction", "1/0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert list(rep["config"]["directions"]) == ["1/0"]
    assert rep["results"]["cylinders"]


def test_flags_override_config_file(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 4, "samples": {"geodesic": 2}, "chart_radius": 5.0}))
    assert main(["geodesic", "--config", str(p), "--samples", "geodesic=5", "--seed", "9", "--timing"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["config"]["seed"] == 9
    assert rep["config"]["chart_radius"] == 5.0
    assert rep["config"]["samples"]["geodesic"] == 5
    assert "geodesic" in rep["timing_seconds"]


def test_budget_exit_code(capsys):
    assert main(["chhs", "--direction", "1/0", "--budget", "5"]) == 3
    rep = json.loads(capsys.readouterr().out)
    assert rep["budget_exceeded"] and not rep["ok"]


def test_output_and_csv(tmp_path):
    out, rows = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["geodesic", "--samples", "4", "-o", str(out), "--csv", str(rows)]) == 0
    rep = json.loads(out.read_text())
    assert rep["results"]["geodesic"]
    with open(rows) as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 4
    assert all(r["subcommand"] == "geodesic" for r in table)


def test_reports_are_deterministic():
    cfg = dict(seed=3, samples=SMALL, directions=["1/0"], tree_radius=1.0, chart_radius=4.0, ehat_depth=1)
    a = dumps(run("all", ExperimentConfig(**cfg)))
    b = dumps(run("all", ExperimentConfig(**cfg)))
    c = dumps(run("all", ExperimentConfig(workers=2, **cfg)))
    assert a == b == c
    assert json.loads(a)["ok"]
    geo = dict(samples={"geodesic": 10})
    assert dumps(run("geodesic", ExperimentConfig(seed=4, **geo))) != dumps(run("geodesic", ExperimentConfig(seed=3, **geo)))


def test_streams_are_keyed_by_subcommand():
    x = rng_for(1, "geodesic").random(3)
    assert (x == rng_for(1, "geodesic").random(3)).all()
    assert not (x == rng_for(1, "triangle").random(3)).all()


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "veech_lab.cli", "surface", "--origami", "torus"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["results"]["surface"]["genus"] == 1
    assert "ok" in r.stderr


def test_w_slack_sets_the_threshold(capsys):
    assert main(["chhs", "--direction", "1/0", "--tree-radius", "1", "--w-slack", "0.5"]) == 0
    rep = json.loads(capsys.readouterr().out)
    w = rep["results"]["chhs"]["directions"][0]["audit"]["w_graph"]
    assert w["slack"] == 0.5
    assert w["R"] == pytest.approx(w["measured_diameter"] + 0.5, abs=1e-6)
