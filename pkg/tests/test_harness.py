"""Experiment pipeline: determinism, artifacts, CLI surface."""

import json
import os

import pytest

from collapsegeo import cli, harness
from collapsegeo.generators import FamilyConfig
from collapsegeo.space import ValidationError, load_space


def test_preset_configs_validate():
    for name in harness.preset_names():
        harness.preset(name).validate()
    with pytest.raises(ValidationError):
        harness.preset("nope")


def test_experiment_config_roundtrip():
    cfg = harness.preset("tori-collapse")
    doc = cfg.to_json()
    again = harness.ExperimentConfig.from_json(doc)
    assert again.to_json() == doc


def test_empty_schedule_rejected():
    cfg = harness.ExperimentConfig(
        family=FamilyConfig("torus", [], 500), eps_grid=[0.1], graph_eps=0.1)
    with pytest.raises(ValidationError):
        cfg.validate()


def _tree_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            p = os.path.join(dirpath, f)
            out[os.path.relpath(p, root)] = open(p, "rb").read()
    return out


def test_run_determinism(tmp_path):
    cfg = harness.preset("tori-collapse")
    h1 = harness.run_experiment(cfg, tmp_path / "r1")
    h2 = harness.run_experiment(cfg, tmp_path / "r2")
    t1, t2 = _tree_bytes(tmp_path / "r1"), _tree_bytes(tmp_path / "r2")
    assert t1.keys() == t2.keys()
    for name in t1:
        assert t1[name] == t2[name], f"artifact {name} differs between runs"


def test_manifest_and_artifacts(preset_runs):
    for name, handles in preset_runs["handles"].items():
        man = json.load(open(os.path.join(handles["dir"], "manifest.json")))
        assert man["complete"], f"{name} incomplete"
        for f in man["files"]:
            assert os.path.exists(os.path.join(handles["dir"], f))
        summary = open(os.path.join(handles["dir"], "summary.csv")).read()
        assert summary.startswith("k,n_points,total_mass")


def test_summary_values_traceable(preset_runs):
    handles = preset_runs["handles"]["tori-collapse"]
    rows = open(os.path.join(handles["dir"], "summary.csv")).read().strip().split("\n")[1:]
    for k, row in enumerate(rows):
        cells = row.split(",")
        space = load_space(os.path.join(handles["dir"], f"space_{k}.json"))
        assert int(cells[1]) == space.n_points
        assert float(cells[2]) == space.total_mass
        field_rows = open(os.path.join(handles["dir"], f"field_{k}.csv")).read()
        vs = [float(line.split(",")[1])
              for line in field_rows.strip().split("\n")[1:]]
        assert float(cells[3]) == max(vs)


def test_plots_emitted_and_deterministic(tmp_path):
    cfg = harness.preset("tori-collapse")
    h = harness.run_experiment(cfg, tmp_path / "p1")
    names1 = harness.emit_plots(h)
    h2 = harness.run_experiment(cfg, tmp_path / "p2")
    names2 = harness.emit_plots(h2)
    assert names1 == names2
    for n in names1:
        b1 = open(os.path.join(h["dir"], "plots", n), "rb").read()
        b2 = open(os.path.join(h2["dir"], "plots", n), "rb").read()
        assert b1 == b2, f"plot {n} not byte-identical"


def test_failure_keeps_partial_manifest(tmp_path, monkeypatch):
    cfg = harness.preset("tori-collapse")

    def boom(*a, **k):
        raise RuntimeError("synthetic failure")
    monkeypatch.setattr(harness, "volume_exhausted_check", boom)
    with pytest.raises(RuntimeError):
        harness.run_experiment(cfg, tmp_path / "fail")
    man = json.load(open(tmp_path / "fail" / "manifest.json"))
    assert not man["complete"]
    assert man["failed_stage"] == "volume_exhausted"
    assert "synthetic failure" in man["error"]
    assert os.path.exists(tmp_path / "fail" / "space_0.json")


# ---------------------------------------------------------------------------
# CLI


def test_cli_generate_and_analyze(tmp_path, capsys):
    fam = tmp_path / "fam.json"
    json.dump(FamilyConfig("torus", [{"a": 1.0, "b": 0.3}], 400).to_json(),
              open(fam, "w"))
    rc = cli.main(["generate", "--family", str(fam), "--k", "0",
                   "--out", str(tmp_path)])
    assert rc == 0
    space_file = tmp_path / "space_0.json"
    assert space_file.exists()
    rc = cli.main(["analyze", "--space", str(space_file), "--eps-grid", "0.05,0.2",
                   "--out", str(tmp_path / "field.csv")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "mass: 0.3" in out
    assert (tmp_path / "field.csv").read_text().startswith("point_id,v,nu")


def test_cli_graph_and_gh(tmp_path):
    fam = tmp_path / "fam.json"
    json.dump(FamilyConfig("torus", [{"a": 1.0, "b": 0.3}], 400).to_json(),
              open(fam, "w"))
    assert cli.main(["generate", "--family", str(fam), "--k", "0",
                     "--out", str(tmp_path)]) == 0
    rc = cli.main(["graph", "--space", str(tmp_path / "space_0.json"),
                   "--eps", "0.1", "--out", str(tmp_path / "g.json")])
    assert rc == 0
    doc = json.load(open(tmp_path / "g.json"))
    assert doc["schema"] == "cls-graph-1"
    rc = cli.main(["gh", "--x", str(tmp_path / "space_0.json"),
                   "--y", str(tmp_path / "space_0.json"), "--mode", "upper",
                   "--out", str(tmp_path / "gh.json")])
    assert rc == 0
    est = json.load(open(tmp_path / "gh.json"))
    assert est["upper"] == 0.0


def test_cli_exit_codes(tmp_path):
    # validation failure: unknown preset
    assert cli.main(["run", "--preset", "nope", "--out", str(tmp_path)]) == 2
    # validation failure: exact mode over the size cap
    fam = tmp_path / "fam.json"
    json.dump(FamilyConfig("torus", [{"a": 1.0, "b": 0.3}], 400).to_json(),
              open(fam, "w"))
    cli.main(["generate", "--family", str(fam), "--k", "0", "--out", str(tmp_path)])
    rc = cli.main(["gh", "--x", str(tmp_path / "space_0.json"),
                   "--y", str(tmp_path / "space_0.json"), "--mode", "exact"])
    assert rc == 2
    # malformed space file -> validation error
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "cls-space-1", "points": [], "edges": [], '
                   '"mesh_fill_radius": 0.1}')
    ok = cli.main(["analyze", "--space", str(bad)])
    assert ok == 0  # empty space is degenerate but valid
    worse = tmp_path / "worse.json"
    worse.write_text('{"schema": "other"}')
    assert cli.main(["analyze", "--space", str(worse)]) == 2


def test_cli_run_preset(tmp_path):
    rc = cli.main(["run", "--preset", "cr-cusp", "--out", str(tmp_path / "run"),
                   "--plots"])
    assert rc == 0
    assert (tmp_path / "run" / "manifest.json").exists()
    assert (tmp_path / "run" / "plots" / "profiles.svg").exists()
