from __future__ import annotations

import json
import math
import os
import subprocess
import sys

import pytest

from qlectra import cli
from qlectra.errors import IOFailure, SchemaViolation, UnknownExperiment

EXPECTED_IDS = {"grover", "grover-adiabatic", "grover-continuous", "qft", "phase-estimate", "shor", "zalka",
                "anneal", "lindblad", "rabi", "cocsign", "decouple", "teleport", "bb84", "chsh", "polymer",
                "granular", "quanta", "complexity", "phonons"}


def _run(name, seed=0, workers=None, **params):
    cfg = cli.build_config(name, None, seed=seed, params={k: str(v) for k, v in params.items()})
    return cli.run(cfg, workers)


def test_registry():
    reg = cli.list_experiments()
    assert len(reg) >= 20
    assert EXPECTED_IDS <= set(reg)
    for exp in reg.values():
        assert isinstance(exp.params, dict)
        for p in exp.params.values():
            assert isinstance(p, cli.Param)


def test_grover_metrics():
    r = _run("grover", n=3)
    assert r.metrics["iterations"] == 2
    assert r.metrics["success_prob"] == pytest.approx(0.9453125, abs=1e-9)


def test_chsh_metrics():
    r = _run("chsh", seed=7, shots=100000)
    assert r.metrics["exact"] == pytest.approx(math.sqrt(2) / 2)
    assert abs(r.metrics["estimate"] - r.metrics["exact"]) < 4 * r.metrics["stderr"]


def test_same_config_same_metrics():
    a = cli.to_json(_run("polymer", seed=3, M=30000).metrics)
    b = cli.to_json(_run("polymer", seed=3, M=30000).metrics)
    assert a == b


@pytest.mark.parametrize("name,params", [("chsh", {"shots": 50000}), ("polymer", {"M": 50000})])
def test_metrics_independent_of_workers(name, params):
    one = cli.to_json(_run(name, seed=9, workers=1, **params).metrics)
    four = cli.to_json(_run(name, seed=9, workers=4, **params).metrics)
    assert one == four


def test_threads_env_var(monkeypatch):
    monkeypatch.setenv("QLECTRA_THREADS", "3")
    from qlectra import streams
    assert streams.worker_count() == 3
    monkeypatch.setenv("QLECTRA_THREADS", "junk")
    assert streams.worker_count() == 1


def test_json_round_trip():
    r = _run("lindblad", T=0.5, store_every=50)
    doc = json.loads(cli.render(r, "json"))
    assert set(doc) == {"name", "params", "seed", "metrics", "series", "wall_time"}
    assert doc["metrics"] == r.metrics
    assert doc["series"]["columns"] == ["t", "p_excited", "exact"]
    assert all(isinstance(v, (int, float)) for v in doc["metrics"].values())


def test_float_format_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 2.0, -5e17, math.pi):
        assert float(cli.fmt_float(x)) == x
    assert cli.fmt_float(2.0) == "2.0"
    assert cli.fmt_float(float("nan")) == "null"


def test_csv_empty_series_header_only():
    rep = cli.Report("x", {}, 0, {"a": 1.0}, {"columns": ["t", "y"], "rows": []})
    assert cli.render(rep, "csv") == "t,y\n"


def test_rabi_csv_columns():
    text = cli.render(_run("rabi", T=1.0, dt=0.1), "csv")
    lines = text.strip().split("\n")
    assert lines[0] == "t,p_n0,p_n1m1"
    assert len(lines) > 5


def test_schema_errors():
    with pytest.raises(UnknownExperiment):
        cli.build_config("nope", None)
    with pytest.raises(SchemaViolation):
        cli.build_config("grover", None, params={"bogus": "1"})
    with pytest.raises(SchemaViolation):
        cli.build_config("grover", None, seed=-1)
    with pytest.raises(SchemaViolation):
        cli.build_config("grover", None, seed=2 ** 64)


def test_config_file_and_override(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"schema": 1, "name": "grover", "params": {"n": 2}, "seed": 4}))
    cfg = cli.build_config(None, cli.load_config_file(str(p)), seed=5, params={"n": "3"})
    assert cfg.params["n"] == 3 and cfg.seed == 5
    p.write_text(json.dumps({"schema": 2, "name": "grover"}))
    with pytest.raises(SchemaViolation):
        cli.load_config_file(str(p))
    p.write_text(json.dumps({"schema": 1, "name": "grover", "colour": "red"}))
    with pytest.raises(SchemaViolation):
        cli.load_config_file(str(p))


def test_atomic_write(tmp_path):
    out = tmp_path / "r.json"
    out.write_text("old")
    cli.emit(_run("grover", n=2), "json", str(out))
    assert json.loads(out.read_text())["name"] == "grover"
    assert [f.name for f in tmp_path.iterdir()] == ["r.json"]
    with pytest.raises(IOFailure):
        cli.write_atomic(str(tmp_path / "missing" / "r.json"), "x")


def test_main_exit_codes(capsys, tmp_path):
    assert cli.main(["grover", "--param", "n=3"]) == 0
    assert json.loads(capsys.readouterr().out)["metrics"]["iterations"] == 2

    assert cli.main(["grover", "--param", "zzz=1"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and err["error"] == "SchemaViolation"

    assert cli.main(["grover", "--seed", "banana"]) == 2
    capsys.readouterr()
    assert cli.main(["not-an-experiment"]) == 2
    capsys.readouterr()

    # the commensuration search has no answer this tight under a small cap
    assert cli.main(["cocsign", "--param", "tol=1e-9", "n_cap=3"]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 3

    assert cli.main(["grover", "--out", str(tmp_path / "no" / "x.json")]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "IOFailure"


def test_run_file_subcommand(capsys, tmp_path):
    p = tmp_path / "cfg.json"
    out = tmp_path / "out.csv"
    p.write_text(json.dumps({"schema": 1, "name": "rabi", "params": {"T": 1.0, "dt": 0.25},
                             "output": {"path": str(out), "format": "csv"}}))
    assert cli.main(["run", "-f", str(p)]) == 0
    assert out.read_text().startswith("t,p_n0,p_n1m1\n")


def test_console_script_threads_identical(tmp_path):
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, QLECTRA_THREADS=threads)
        proc = subprocess.run([sys.executable, "-m", "qlectra", "chsh", "--seed", "21", "--param", "shots=40000"],
                              capture_output=True, text=True, env=env, check=True)
        outs.append(json.loads(proc.stdout)["metrics"])
    assert cli.to_json(outs[0]) == cli.to_json(outs[1])


def test_every_experiment_runs_with_defaults():
    # cheap settings for the heavier ones
    small = {"chsh": {"shots": 2000}, "polymer": {"M": 2000}, "decouple": {"seeds": 3},
             "quanta": {"eps": 0.01}, "shor": {"q": 15}, "cocsign": {"nu": 200.0}}
    for name in cli.list_experiments():
        r = _run(name, **small.get(name, {}))
        assert r.metrics, name
