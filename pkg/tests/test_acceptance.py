"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line (collected in
the terminal summary) and asserts both the verdict and the runtime limit.
"""
import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from feller import cli
from feller import symbol as S
from feller import validation as V
from feller.euler import simulate_ensemble, step
from feller.jumps import Gaussian
from feller.levy_sampler import Strategy, build_sampler, sample_stable
from feller.rng import RngStream

SEED = 20261018
CF_N = 100_000


def _report(number, title, passed, elapsed, limit, detail):
    ok = passed and (limit is None or elapsed <= limit)
    budget = "no limit" if limit is None else f"of {limit:g}s"
    line = (f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} "
            f"({elapsed:.1f}s {budget}) {detail}")
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def test_criterion_1_increment_law():
    t0 = time.perf_counter()
    h = 0.1
    cases = [("brownian", S.brownian(), 0.0), ("cauchy", S.cauchy(), 0.0),
             ("stable(1.9)", S.symmetric_stable(1.9), 0.0),
             ("compound_poisson", S.compound_poisson(2.0, 1.0), 0.0)]
    cases += [(f"stable_like(x={x:g})", S.figure1_symbol(), x) for x in (-1.0, 0.5, 2.0)]
    worst = []
    for i, (name, sym, x) in enumerate(cases):
        xv = np.array([x])
        bias = 0.0
        if sym.is_constant:
            smp = build_sampler(sym.triplet_at(xv), h)
            bias = 1e-3 if smp.strategy is Strategy.TRUNCATED else 0.0
        dx = step(sym, xv, h, RngStream(SEED, i, domain=1), size=CF_N) - xv
        r = V.cf_match_test(dx, V.cf_grid(sym, xv, h, CF_N), bias, SEED, name)
        worst.append((r.passed, name, r.statistic, r.threshold))
    elapsed = time.perf_counter() - t0
    passed = all(p for p, *_ in worst)
    detail = "; ".join(f"{n} {s:.4f}/{t:.4f}" for _, n, s, t in worst)
    assert _report(1, "increment CF contract", passed, elapsed, 60, detail)


BUILTINS = [S.brownian(), S.brownian(2), S.cauchy(), S.symmetric_stable(0.9),
            S.symmetric_stable(1.5), S.symmetric_stable(1.9), S.compound_poisson(2.0, 1.0),
            S.figure1_symbol(),
            S.symbol_from_sde(lambda x: np.array([[1.0 + 0.5 * math.sin(x[0])]]), S.cauchy())]


def test_criterion_2_condition_checks():
    t0 = time.perf_counter()
    builtin_ok = all(S.check_condition_A3(s).passed and S.check_condition_A2(s).passed
                     for s in BUILTINS)
    kill = S.check_condition_A3(S.killing_fixture(1.0))
    cubic = S.check_condition_A2(S.cubic_fixture())
    kill_ok = not kill.passed and abs(kill.witness[2] - 1.0) <= 1e-12
    # the growth witness sits on the outermost |xi| decade, where |xi|^3 / (1 + |xi|^2) peaks
    cubic_ok = (not cubic.passed and abs(abs(cubic.witness[1][0]) - 1e3) <= 1e-9
                and abs(cubic.witness[2] - 1e9) <= 1e-3)
    elapsed = time.perf_counter() - t0
    detail = (f"builtins {'ok' if builtin_ok else 'BAD'} ({len(BUILTINS)}); killing witness "
              f"q={kill.witness[2].real:g}; cubic witness xi={cubic.witness[1][0]:g}")
    assert _report(2, "A2/A3 checks", builtin_ok and kill_ok and cubic_ok, elapsed, 5, detail)


def test_criterion_3_quadrature_vs_closed_form():
    t0 = time.perf_counter()
    syms = [S.symmetric_stable(a) for a in (0.9, 1.5, 1.9)]
    syms += [S.compound_poisson(2.0, 1.0), S.compound_poisson(1.5, Gaussian([0.3], [[0.49]]))]
    worst = 0.0
    for sym in syms:
        for xi in S.default_xi_grid(1):
            closed = S.eval_symbol(sym, [0.0], xi, method="closed")
            quad = S.eval_symbol(sym, [0.0], xi, method="quadrature")
            worst = max(worst, abs(closed - quad) / (1 + abs(closed)))
    elapsed = time.perf_counter() - t0
    assert _report(3, "quadrature vs closed form", worst <= 1e-6, elapsed, 30,
                   f"max relative error {worst:.2e}")


def test_criterion_4_frozen_state_dispatch():
    t0 = time.perf_counter()
    sym, h, n = S.figure1_symbol(), 0.1, 10_000
    results = []
    for i, (x, a) in enumerate(((2.0, 1.9), (-1.0, 0.9))):
        dx = step(sym, [x], h, RngStream(SEED, 2 * i, domain=4), size=n)[:, 0] - x
        ref = sample_stable(a, 1.0, h, RngStream(SEED, 2 * i + 1, domain=4), size=n)
        results.append(V.ks_two_sample(dx, ref, 0.01, SEED, f"x={x:g}"))
    elapsed = time.perf_counter() - t0
    detail = "; ".join(f"{r.name} D={r.statistic:.4f}/{r.threshold:.4f}" for r in results)
    assert _report(4, "frozen-state KS", all(r.passed for r in results), elapsed, 10, detail)


def test_criterion_5_constant_symbol_exactness():
    t0 = time.perf_counter()
    sym = S.brownian()
    xi = V.symmetric_grid(5.0, 41)
    grid = V.CFGrid(xi, np.exp(-xi ** 2 / 2), CF_N, 1.0, np.zeros(1))
    parts, ok = [], True
    for m in (1, 4, 16):
        ens = simulate_ensemble(sym, [0.0], 1.0 / m, m, CF_N, SEED, record="none", domain=5)
        var = float(ens.terminal.var())
        r = V.cf_match_test(ens.terminal, grid, 0.0, SEED)
        ok &= abs(var - 1.0) <= 0.03 and r.passed
        parts.append(f"m={m} var={var:.4f} cf={r.statistic:.4f}/{r.threshold:.4f}")
    elapsed = time.perf_counter() - t0
    assert _report(5, "constant-symbol exactness", ok, elapsed, 60, "; ".join(parts))


def test_criterion_6_jump_count_law():
    t0 = time.perf_counter()
    sym = S.compound_poisson(2.0, 1.0)
    # delta_1 jumps with the compensating drift: each step increment is its jump count
    ens = simulate_ensemble(sym, [0.0], 0.5, 10, 10_000, SEED, record="all", domain=6)
    inc = np.diff(ens.paths[:, :, 0], axis=1).ravel()
    counts = np.rint(inc).astype(np.int64)
    exact = bool(np.all(inc == counts))
    r = V.jump_count_test(counts, 2.0, 0.5, 0.01, SEED)
    elapsed = time.perf_counter() - t0
    assert _report(6, "jump counts ~ Poisson(1)", r.passed and exact and counts.size == 100_000,
                   elapsed, 20, f"chi2={r.statistic:.3f}/{r.threshold:.3f} n={counts.size}")


def test_criterion_7_convergence_trend():
    t0 = time.perf_counter()
    r = V.convergence_study(S.figure1_symbol(), [0.0], 1.0, [0.2, 0.1, 0.05, 0.025], 10_000,
                            SEED)
    elapsed = time.perf_counter() - t0
    detail = (f"distances {', '.join(f'{d:.4f}' for d in r.distances)}; "
              f"noise floor {r.noise_floor:.4f}")
    assert _report(7, "weak-convergence trend proxy", r.passed, elapsed, 300, detail)


def test_criterion_8_figure1(tmp_path):
    t0 = time.perf_counter()
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [cli.main(["demo-figure1", "--seed", str(SEED), "--out", str(o), "--quiet"])
             for o in outs]
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
               for f in ("figure1.csv", "figure1.svg"))
    rows = (outs[0] / "figure1.csv").read_text().splitlines()
    data = np.loadtxt(outs[0] / "figure1.csv", delimiter=",", skiprows=1)
    structural = (codes == [0, 0] and same and rows[0] == "t,x1" and data.shape == (1001, 2)
                  and data[0, 1] == 0.0 and data[-1, 0] == pytest.approx(5.0)
                  and (outs[0] / "figure1.svg").read_text().count("<polyline") == 1)
    exp = V.state_dependence_experiment(n=10_000, seed=SEED)
    elapsed = time.perf_counter() - t0
    detail = "; ".join(f"{r.name} {r.statistic:.4f}/{r.threshold:.4f}" for r in exp.results)
    assert _report(8, "Figure-1 reproduction", structural and exp.passed, elapsed, 60,
                   f"1001-point path reproducible: {structural}; {detail}")


def test_criterion_9_determinism(tmp_path, monkeypatch):
    t0 = time.perf_counter()
    ok = True
    for sym in (S.figure1_symbol(), S.compound_poisson(2.0, Gaussian([0.2], [[1.0]])),
                S.symbol_from_sde(lambda x: np.array([[1.0 + 0.5 * math.sin(x[0])]]),
                                  S.symmetric_stable(1.4))):
        runs = [simulate_ensemble(sym, [0.0], 0.05, 20, 10_000, SEED, threads=t).terminal
                for t in (1, 2, 4)]
        ok &= all(np.array_equal(runs[0], r) for r in runs[1:])
    cfg = tmp_path / "det.cfg"
    cfg.write_text("[symbol]\nfamily = figure1\n[run]\nseed = 9\nh = 0.01\nn_steps = 50\n"
                   "n_paths = 9000\nrecord = 5\n")
    outs = []
    for t in ("1", "2", "4"):
        monkeypatch.setenv("FELLER_THREADS", t)
        out = tmp_path / f"t{t}"
        ok &= cli.main(["simulate", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
        outs.append(out)
    files = sorted(os.listdir(outs[0]))
    ok &= all((outs[0] / f).read_bytes() == (o / f).read_bytes() for o in outs[1:] for f in files)
    elapsed = time.perf_counter() - t0
    assert _report(9, "determinism across thread counts", ok, elapsed, None,
                   f"3 symbols x threads 1/2/4; {len(files)} CLI files compared")
