import json
import math
import subprocess
import sys
import time
from pathlib import Path

import pytest

from agcomp.cli import main
from agcomp.errors import ConfigError
from agcomp.harness import (
    CSV_COLUMNS,
    Report,
    emit_table,
    load_spec,
    parse_spec,
    parse_table,
    run_campaign,
    workers_from_env,
)

SPECS = Path(__file__).resolve().parents[1] / "scripts" / "specs"


def spec(**kw):
    base = {"schema": "agcomp.campaign/1", "kind": "ag1-sample", "seeds": [0], "samples": 50,
            "space": {"type": "euclidean", "dim": 2}}
    base.update(kw)
    return base


@pytest.mark.parametrize(
    "doc, field",
    [
        (spec(space={"type": "euclidean", "radius": -1.0}), "space.radius"),
        ({k: v for k, v in spec().items() if k != "seeds"}, "seeds"),
        (spec(seeds=[]), "seeds"),
        (spec(seeds=[1.5]), "seeds[0]"),
        (spec(kind="nope"), "kind"),
        (spec(samples=0), "samples"),
        (spec(tol=0), "tol"),
        (spec(space={"type": "torus"}), "space.type"),
        (spec(space={"type": "euclidean", "colour": 1}), "space.colour"),
        (spec(extra=1), "extra"),
        (spec(schema="other/2"), "schema"),
        (spec(kind="laplace-compare"), "meshes"),
        (spec(meshes=[0.1, -0.1]), "meshes[1]"),
        (spec(space={"type": "sphere", "K": -1.0}), "space"),
    ],
)
def test_config_errors(doc, field):
    with pytest.raises(ConfigError) as exc:
        parse_spec(doc)
    assert exc.value.field == field


def test_shipped_specs_parse():
    paths = sorted(SPECS.glob("*.json"))
    assert len(paths) >= 8
    for p in paths:
        load_spec(p)


def test_ag1_campaign_and_determinism():
    a = run_campaign(spec(seeds=[0, 1]), workers=1)
    b = run_campaign(spec(seeds=[0, 1]), workers=2)
    assert a.ok and a.summary["failed"] == 0
    assert json.dumps(a.body(), sort_keys=True) == json.dumps(b.body(), sort_keys=True)
    assert all(r["seed"] in (0, 1) for r in a.records)
    assert a.campaign["seeds"] == [0, 1]


def test_worker_env(monkeypatch):
    monkeypatch.setenv("AGCOMP_WORKERS", "3")
    assert workers_from_env() == 3
    monkeypatch.setenv("AGCOMP_WORKERS", "x")
    with pytest.raises(ConfigError):
        workers_from_env()


def test_linf_campaign():
    rep = run_campaign({"kind": "linf-counterexample", "seeds": [0], "params": {"L": 1.0, "n_scan": 40}})
    assert rep.ok
    (eps,) = rep.summary["eps_star"]
    assert 0 < eps < 0.5
    assert any(r.get("phase") == "scan" for r in rep.records)


def test_bishop_gromov_campaign():
    rep = run_campaign({"kind": "bishop-gromov", "seeds": [3], "samples": 30,
                        "space": {"type": "hyperbolic", "dim": 3, "K": -0.5, "radius": 2.0}})
    assert rep.ok


def test_graph_campaign():
    rep = run_campaign({"kind": "graph-identities", "seeds": [0], "samples": 3, "tol": 1e-12,
                        "params": {"max_vertices": 80}})
    assert rep.ok
    checks = {r["check"] for r in rep.records}
    assert checks == {"parallelogram", "integration_by_parts", "leibniz", "cauchy_schwarz", "linearity",
                      "max_principle"}


def test_laplace_campaign_convergence():
    rep = run_campaign({"kind": "laplace-compare", "seeds": [0], "meshes": [0.08, 0.04],
                        "space": {"type": "euclidean", "dim": 2, "radius": 1.0}})
    assert rep.ok
    conv = rep.summary["convergence"]
    assert conv["dist"]["ratios"][0] > 1.8


def test_cd1d_campaigns():
    bad = run_campaign({"kind": "cd1d", "seeds": [0], "params": {"reference": "exp", "cells": 1000}})
    summ = [r for r in bad.records if r.get("phase") == "summary"][0]
    assert summ["oracle_cd"] is False and summ["pass"]
    good = run_campaign({"kind": "cd1d", "seeds": [0, 1], "params": {"reference": "uniform", "cells": 500}})
    assert good.ok


def test_replay_campaigns():
    ok = run_campaign(load_spec(SPECS / "replay_euclidean.json"))
    assert ok.ok
    fail = run_campaign({"kind": "proof-replay", "seeds": [0], "meshes": [0.005],
                         "space": {"type": "normed", "p": "inf"}, "params": {"eps": 0.1}})
    assert not fail.ok


def test_csv_round_trip():
    rep = run_campaign(spec(samples=40))
    text = emit_table(rep, "csv")
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    rows = parse_table(text)
    assert len(rows) == len(rep.records)
    for row, rec in zip(rows, rep.records):
        assert row == {c: rec[c] for c in CSV_COLUMNS}


def test_csv_nonfinite_and_none():
    recs = [{"campaign": "x", "seed": 1, "K": None, "N": None, "h": None, "l": None, "E": "inf",
             "bound": "nan", "margin": -0.5, "pass": False}]
    rep = Report({"kind": "x"}, recs, {"failed": 1})
    assert parse_table(emit_table(rep, "csv")) == recs


def test_json_round_trip(tmp_path):
    rep = run_campaign(spec(samples=10))
    p = tmp_path / "r.json"
    emit_table(rep, "json", p)
    back = Report.from_dict(json.loads(p.read_text()))
    assert back.to_dict() == rep.to_dict()


def test_empty_report_header_only():
    rep = Report({"kind": "ag1-sample"}, [], {"records": 0, "passed": 0, "failed": 0, "worst_margin": None})
    assert emit_table(rep, "csv") == ",".join(CSV_COLUMNS) + "\n"


def test_emit_speed():
    rec = {"campaign": "ag1-sample", "seed": 0, "K": 0.0, "N": 2.0, "h": 0.1, "l": 1.0, "E": 0.01,
           "bound": 0.05, "margin": 0.04, "pass": True}
    rep = Report({"kind": "ag1-sample"}, [dict(rec, seed=i) for i in range(10_000)], {"failed": 0})
    t = time.perf_counter()
    text = emit_table(rep, "csv")
    assert time.perf_counter() - t < 1.0
    assert len(text.splitlines()) == 10_001


def test_emit_bad_format():
    with pytest.raises(ConfigError):
        emit_table(Report({}, [], {"failed": 0}), "xml")


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(spec(samples=20)))
    out = tmp_path / "rep.json"
    assert main(["run", str(good), "-o", str(out)]) == 0
    csv_path = tmp_path / "rep.csv"
    assert main(["emit", str(out), "--format", "csv", "-o", str(csv_path)]) == 0
    assert csv_path.read_text().startswith("campaign,seed")

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(spec(space={"type": "euclidean", "radius": -2})))
    assert main(["run", str(bad)]) == 2
    assert "space.radius" in capsys.readouterr().err

    failing = tmp_path / "fail.json"
    failing.write_text(json.dumps({"kind": "proof-replay", "seeds": [0], "meshes": [0.005],
                                   "space": {"type": "normed", "p": "inf"}, "params": {"eps": 0.1}}))
    assert main(["run", str(failing), "-o", str(tmp_path / "f.json")]) == 1


def test_module_entry_point(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(spec(space={"type": "euclidean", "radius": -2})))
    res = subprocess.run([sys.executable, "-m", "agcomp", "run", str(bad)], capture_output=True, text=True)
    assert res.returncode == 2
