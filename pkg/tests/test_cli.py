import json

import pytest

from graphene_zeromodes import cli, pipeline
from graphene_zeromodes.config import parse_config
from graphene_zeromodes.errors import SolverError

SMALL = """format = 1
[profile]
B0 = 1
[grid]
L = 8
N = 64
[lattice]
size = 16
[run]
j = 0, 1
"""


@pytest.fixture
def cfg_file(tmp_path):
    def make(extra=""):
        p = tmp_path / "s.cfg"
        p.write_text(SMALL + extra, encoding="utf-8")
        return str(p)

    return make


def test_spectrum_run_passes(cfg_file, tmp_path, capsys):
    out = tmp_path / "o"
    assert cli.main(["spectrum", "--config", cfg_file(), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "overall: pass" in text
    rep = json.loads((out / "report.json").read_text())
    assert rep["passed"] and rep["failed_stage"] is None
    assert {"spectrum.csv", "lambda.csv", "field.dat", "ladder.dat", "mode_j0.csv"} <= set(rep["artifacts"])
    assert all((out / a).exists() for a in rep["artifacts"])
    assert all(v["tolerance"] is not None for v in rep["verdicts"])
    assert "timings" not in rep and (out / "timings.json").exists()


def test_gauge_stage_only(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert cli.main(["gauge", "--config", cfg_file(), "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert set(rep["stages"]) == {"gauge"}
    assert not (out / "spectrum.csv").exists()


def test_quiet_prints_nothing(cfg_file, tmp_path, capsys):
    assert cli.main(["modes", "--config", cfg_file(), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    assert capsys.readouterr().out == ""


def test_default_output_from_environment(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setenv("ZEROMODE_OUT", str(tmp_path / "env"))
    assert cli.main(["gauge", "--config", cfg_file(), "--quiet"]) == 0
    assert (tmp_path / "env" / "report.json").exists()


def test_config_output_dir_beats_environment(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setenv("ZEROMODE_OUT", str(tmp_path / "env"))
    path = cfg_file(f"[output]\ndir = {tmp_path / 'cfgdir'}\n")
    assert cli.main(["gauge", "--config", path, "--quiet"]) == 0
    assert (tmp_path / "cfgdir" / "report.json").exists()
    assert not (tmp_path / "env").exists()


def test_verdict_failure_exits_1(cfg_file, tmp_path):
    # a window below every eigenvalue leaves the index at zero
    path = cfg_file("window = 1e-12\n")
    out = tmp_path / "o"
    assert cli.main(["spectrum", "--config", path, "--out", str(out), "--quiet"]) == 1
    rep = json.loads((out / "report.json").read_text())
    failed = [v["name"] for v in rep["verdicts"] if not v["passed"]]
    assert failed == ["index_flux"]


def test_config_error_exits_2(cfg_file, tmp_path, capsys):
    assert cli.main(["gauge", "--config", cfg_file("[grid]\nN = 8\n"), "--out", str(tmp_path)]) == 2
    assert "grid.N below minimum 16" in capsys.readouterr().err
    assert cli.main(["gauge", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_parse_failure_exits_2_before_output(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("profile.B0 = 1\n", encoding="utf-8")
    assert cli.main(["gauge", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_solver_failure_exits_3(cfg_file, tmp_path, monkeypatch):
    def broken(*a, **k):
        raise SolverError("no convergence", residual=1.0)

    monkeypatch.setattr(pipeline, "near_zero_spectrum", broken)
    out = tmp_path / "o"
    assert cli.main(["spectrum", "--config", cfg_file(), "--out", str(out), "--quiet"]) == 3
    rep = json.loads((out / "report.json").read_text())
    assert rep["failed_stage"] == "spectrum"
    assert "SolverError" in rep["error"]
    assert "gauge" in rep["stages"]


def test_exit_code_mapping():
    rep = pipeline.RunReport({})
    assert pipeline.exit_code(rep) == 0
    rep.verdict("x", "gauge", 1.0, 0.5, False, "r")
    assert pipeline.exit_code(rep) == 1
    assert pipeline.exit_code(None, ValueError("bad")) == 2
    assert pipeline.exit_code(None, RuntimeError("boom")) == 3


def test_report_subcommand(cfg_file, tmp_path, capsys):
    out = tmp_path / "o"
    path = cfg_file()
    cli.main(["gauge", "--config", path, "--out", str(out), "--quiet"])
    assert cli.main(["report", "--config", path, "--out", str(out)]) == 0
    assert "curl_residual" in capsys.readouterr().out
    assert cli.main(["report", "--config", path, "--out", str(tmp_path / "none")]) == 2


def test_seed_flag_changes_bumps(tmp_path):
    text = "format = 1\n[profile]\nkind = uniform-plus-bumps\nbump_count = 2\nseed = 1\n[grid]\nL = 8\nN = 64\n"
    p = tmp_path / "b.cfg"
    p.write_text(text, encoding="utf-8")
    for seed, d in ((None, "a"), (1, "b"), (2, "c")):
        argv = ["gauge", "--config", str(p), "--out", str(tmp_path / d), "--quiet"]
        cli.main(argv + (["--seed", str(seed)] if seed is not None else []))
    read = lambda d: (tmp_path / d / "lambda.csv").read_bytes()
    assert read("a") == read("b")
    assert read("a") != read("c")


def test_pipeline_without_writing():
    rep = pipeline.run_pipeline(parse_config(SMALL), until="modes", write=False)
    assert rep.passed and rep.artifacts == []


def test_unknown_stage_rejected():
    with pytest.raises(ValueError):
        pipeline.run_pipeline(parse_config(SMALL), until="everything", write=False)
