import json
import os
import re
import subprocess
import sys

import numpy as np
import pytest

from feller import cli
from feller.euler import simulate_ensemble
from feller.symbol import figure1_symbol

FIG = """# stable-like preset
[symbol]
family = figure1

[run]
seed = 42
x0 = 0.5
T = 5
n_steps = 1000
n_paths = {n}
"""


def run(tmp_path, cfg_text, *args, name="exp.cfg"):
    cfg = tmp_path / name
    cfg.write_text(cfg_text)
    out = tmp_path / "out"
    return cli.main([*args[:1], "--config", str(cfg), "--out", str(out), "--quiet", *args[1:]]), out


def test_simulate_figure1_csv(tmp_path):
    code, out = run(tmp_path, FIG.format(n=1), "simulate")
    assert code == 0
    raw = (out / "path_0.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "t,x1"
    assert len(lines) == 1002
    assert lines[1] == "0,0.5"
    t, x = np.loadtxt(out / "path_0.csv", delimiter=",", skiprows=1, unpack=True)
    ens = simulate_ensemble(figure1_symbol(), [0.5], 0.005, 1000, 1, 42)
    assert np.array_equal(x, ens.paths[0, :, 0])  # 17 significant digits round-trip exactly
    assert t[-1] == pytest.approx(5.0)


def test_simulate_three_paths(tmp_path):
    code, out = run(tmp_path, FIG.format(n=3), "simulate")
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "manifest.cfg", "path_0.csv", "path_1.csv", "path_2.csv", "terminal.csv"]
    term = (out / "terminal.csv").read_text().splitlines()
    assert term[0] == "path,x1" and len(term) == 4


def test_h_and_T_together_rejected(tmp_path, capsys):
    text = FIG.format(n=1).replace("T = 5", "T = 5\nh = 0.005")
    code, _ = run(tmp_path, text, "simulate")
    assert code == 2
    assert "line" in capsys.readouterr().err


def test_missing_seed_rejected(tmp_path, capsys):
    code, _ = run(tmp_path, FIG.format(n=1).replace("seed = 42\n", ""), "simulate")
    assert code == 2
    assert "seed" in capsys.readouterr().err


def test_seed_flag_overrides(tmp_path):
    _, out = run(tmp_path, FIG.format(n=1).replace("seed = 42\n", ""), "simulate", "--seed", "42")
    (tmp_path / "ref").mkdir()
    _, ref = run(tmp_path / "ref", FIG.format(n=1), "simulate")
    assert (out / "path_0.csv").read_bytes() == (ref / "path_0.csv").read_bytes()


def test_manifest_round_trip(tmp_path):
    text = FIG.format(n=2) + "record = all\n\n[sampler]\nsmall_jump_threshold = 0.25\n"
    code, out = run(tmp_path, text, "simulate")
    assert code == 0
    manifest = (out / "manifest.cfg").read_text()
    assert "version = " in manifest and "seed = 42" in manifest
    out2 = tmp_path / "again"
    assert cli.main(["simulate", "--config", str(out / "manifest.cfg"), "--out", str(out2),
                     "--quiet"]) == 0
    for f in os.listdir(out):
        assert (out / f).read_bytes() == (out2 / f).read_bytes(), f


def test_thread_count_does_not_change_csv(tmp_path, monkeypatch):
    text = FIG.format(n=5000).replace("n_steps = 1000", "n_steps = 20") + "record = 3\n"
    _, a = run(tmp_path, text, "simulate")
    monkeypatch.setenv("FELLER_THREADS", "3")
    b = tmp_path / "threaded"
    cli.main(["simulate", "--config", str(tmp_path / "exp.cfg"), "--out", str(b), "--quiet"])
    for f in ("terminal.csv", "path_0.csv", "path_2.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


@pytest.mark.parametrize("family,code", [("figure1", 0), ("brownian", 0), ("cauchy", 0),
                                         ("killing", 1), ("cubic", 1)])
def test_check_symbol_exit_codes(tmp_path, family, code):
    got, out = run(tmp_path, f"[symbol]\nfamily = {family}\n", "check-symbol")
    assert got == code
    report = json.loads((out / "check_report.json").read_text())
    assert report["passed"] == (code == 0)
    if family == "killing":
        a3 = report["checks"][0]
        assert a3["condition"] == "A3" and a3["witness"]["value"] == [1.0, 0.0]
        assert "witness" in (out / "check_report.txt").read_text()


def test_check_symbol_bad_family(tmp_path, capsys):
    code, _ = run(tmp_path, "[symbol]\nfamily = bogus\n", "check-symbol")
    assert code == 2
    assert "line 2" in capsys.readouterr().err


def test_validate_brownian(tmp_path):
    text = "[symbol]\nfamily = brownian\n[run]\nseed = 1\n[validate]\ntests = cf\ncf_n = 20000\n"
    code, out = run(tmp_path, text, "validate")
    assert code == 0
    summary = json.loads((out / "validation_summary.json").read_text())
    assert summary["passed"] and summary["results"][0]["seed"] == 1
    assert "[result.0]" in (out / "validation_report.txt").read_text()


def test_validate_stable_like_frozen_states(tmp_path):
    text = ("[symbol]\nfamily = figure1\n[run]\nseed = 2\n[validate]\ntests = cf\n"
            "cf_x = -1, 2\n")
    code, out = run(tmp_path, text, "validate")
    assert code == 0
    names = [r["name"] for r in json.loads((out / "validation_summary.json").read_text())["results"]]
    assert names == ["cf_match(x=[-1.0])", "cf_match(x=[2.0])"]


def test_validate_failure_exit_code(tmp_path):
    # a negative bias budget pushes the threshold below zero, so the CF check must fail
    text = ("[symbol]\nfamily = brownian\n[run]\nseed = 3\n[validate]\ntests = cf\n"
            "cf_n = 5000\nbias_budget = -1\n")
    code, _ = run(tmp_path, text, "validate")
    assert code == 1


def test_validate_convergence_single_h_is_config_error(tmp_path):
    text = ("[symbol]\nfamily = figure1\n[run]\nseed = 3\n[validate]\ntests = convergence\n"
            "conv_h = 0.1\n")
    code, _ = run(tmp_path, text, "validate")
    assert code == 2


def test_validate_jump_count_and_state_dependence(tmp_path):
    text = ("[symbol]\nfamily = compound_poisson\nrate = 2\n[run]\nseed = 4\n[validate]\n"
            "tests = jump_count\njump_n = 20000\n")
    assert run(tmp_path, text, "validate")[0] == 0
    text = ("[symbol]\nfamily = figure1\n[run]\nseed = 4\n[validate]\n"
            "tests = state_dependence\nsd_n = 5000\n")
    assert run(tmp_path, text, "validate", name="sd.cfg")[0] == 0


def test_demo_figure1(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["demo-figure1", "--seed", "7", "--out", str(a), "--quiet"]) == 0
    assert cli.main(["demo-figure1", "--seed", "7", "--out", str(b), "--quiet"]) == 0
    for f in ("figure1.csv", "figure1.svg", "manifest.cfg"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    svg = (a / "figure1.svg").read_text()
    assert svg.count("<polyline") == 1
    pts = re.search(r'points="([^"]*)"', svg).group(1).split()
    assert len(pts) == 1001
    rows = (a / "figure1.csv").read_text().splitlines()
    assert len(rows) == 1002 and rows[1] == "0,0"


def test_demo_needs_seed(capsys):
    assert cli.main(["demo-figure1", "--quiet"]) == 2


@pytest.mark.parametrize("text,fragment", [
    ("seed = 1\n", "line 1"),
    ("[symbol]\nfamily = brownian\nfamily = cauchy\n", "line 3"),
    ("[symbol]\nfamily = brownian\nbogus_key = 1\n", "line 3"),
    ("[symbol]\nfamily = brownian\n[oops]\nx = 1\n", "unknown section"),
    ("[symbol]\nfamily = brownian\nsigma = abc\n", "field 'sigma'"),
    ("[symbol]\nfamily = brownian\nthis line has no equals\n", "line 3"),
])
def test_config_diagnostics(tmp_path, capsys, text, fragment):
    code, _ = run(tmp_path, text, "check-symbol")
    assert code == 2
    assert fragment in capsys.readouterr().err


def test_parse_and_format_round_trip():
    secs = {"symbol": {"family": "stable_like", "alpha_lo": 0.9}, "run": {"x0": [0.1, -2.0]}}
    parsed = cli.parse_config(cli.format_config(secs))
    assert parsed["run"]["x0"][0] == "0.1, -2.0"
    assert parsed["symbol"]["alpha_lo"] == ("0.9", 3)


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        cli.main([])
    assert info.value.code == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "feller", "demo-figure1", "--seed", "1",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    assert "1001 points" in out.stdout


@pytest.mark.parametrize("family,extra", [
    ("symmetric_stable", "alpha = 1.3\n"), ("compound_poisson", "rate = 1\njump_law = gaussian\n"),
    ("stable_like", "alpha_slope = 0.5\n"), ("sde_linear", "driver = cauchy\ncoef_b = 0.2\n"),
    ("brownian", "dim = 2\nsigma = 0.5\n"),
])
def test_families_simulate(tmp_path, family, extra):
    x0 = "0, 0" if "dim = 2" in extra else "0"
    text = (f"[symbol]\nfamily = {family}\n{extra}[run]\nseed = 1\nx0 = {x0}\nh = 0.1\n"
            "n_steps = 10\nn_paths = 2\n")
    code, out = run(tmp_path, text, "simulate")
    assert code == 0
    header = (out / "path_1.csv").read_text().splitlines()[0]
    assert header == ("t,x1,x2" if "dim = 2" in extra else "t,x1")
