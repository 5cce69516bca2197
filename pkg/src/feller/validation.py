"""Statistical checks for the Euler scheme's distributional identities."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import special, stats

from .euler import simulate_ensemble, step
from .levy_sampler import sample_stable
from .rng import RngStream
from .symbol import Family, eval_symbol, figure1_symbol

CF_CONST = 3.3
DEFAULT_LEVEL = 0.01


def empirical_cf(samples, xi):
    """Mean of exp(i Y.xi) over the rows of ``samples``.

    ``xi`` may be a single frequency (length d) or a (k, d) grid, giving a
    complex scalar or a length-k array. Uses cos|t| and sign(t) sin|t| so
    that the value at -xi is the exact conjugate of the value at xi.
    """
    y = np.asarray(samples, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] < 1:
        raise ValueError("need at least one sample")
    xi_arr = np.asarray(xi, dtype=np.float64)
    single = xi_arr.ndim <= 1 and (xi_arr.ndim == 0 or xi_arr.shape[0] == y.shape[1])
    grid = np.atleast_2d(xi_arr.reshape(1, -1) if single else xi_arr)
    if grid.shape[1] != y.shape[1] and y.shape[1] == 1:
        grid = grid.reshape(-1, 1)
    t = y @ grid.T
    at = np.abs(t)
    val = np.cos(at).mean(axis=0) + 1j * (np.sign(t) * np.sin(at)).mean(axis=0)
    return complex(val[0]) if single else val


@dataclass(frozen=True, eq=False)
class CFGrid:
    """Frequencies and target values exp(-h q(x, xi)) for a frozen state."""

    points: np.ndarray
    targets: np.ndarray
    n: int
    h: float = 0.0
    x: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        pts = pts[:, None] if pts.ndim == 1 else pts
        tg = np.asarray(self.targets, dtype=np.complex128).ravel()
        if tg.shape[0] != pts.shape[0]:
            raise ValueError("one target per grid point")
        rows = {tuple(p) for p in pts}
        if any(tuple(-p) not in rows for p in pts):
            raise ValueError("CF grid must be sign-symmetric")
        if int(self.n) < 1000:
            raise ValueError("CF grids are meant for n >= 1000 samples")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "targets", tg)


def symmetric_grid(r, n_points=41):
    """``n_points`` (odd) evenly spaced values on [-r, r], exactly sign-symmetric."""
    if n_points % 2 == 0:
        raise ValueError("n_points must be odd")
    half = np.linspace(0.0, r, n_points // 2 + 1)
    return np.concatenate([-half[:0:-1], half])


def cf_grid(sym, x, h, n, points=None, n_points=41, level=3.0, r_max=50.0):
    """CF grid for a frozen state.

    Without explicit ``points`` the grid is ``n_points`` values spread evenly
    over [-r, r] along the diagonal, with r the radius where h * Re q first
    reaches ``level`` (so the target decays to about exp(-level)), capped at
    ``r_max`` for bounded symbols such as compound Poisson ones.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    d = sym.dim
    u = np.ones(d) / math.sqrt(d)
    if points is None:
        def decay(r):
            return h * eval_symbol(sym, x, r * u).real - level
        lo, hi = 1e-6, 1.0
        while decay(hi) < 0 and hi < r_max:
            hi *= 2.0
        if decay(hi) < 0:
            r = r_max
        else:
            for _ in range(80):
                mid = math.sqrt(lo * hi)
                lo, hi = (mid, hi) if decay(mid) < 0 else (lo, mid)
            r = min(hi, r_max)
        points = np.outer(symmetric_grid(r, n_points), u)
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None] if d == 1 else points[None, :]
    targets = np.array([np.exp(-h * eval_symbol(sym, x, p)) for p in points])
    return CFGrid(points, targets, int(n), float(h), x)


@dataclass
class TestResult:
    name: str
    statistic: float
    threshold: float
    passed: bool
    n: int
    description: str = ""
    seed: Optional[int] = None
    details: dict = field(default_factory=dict)

    def as_dict(self):
        out = asdict(self)
        out["passed"] = bool(self.passed)
        return out


def cf_match_test(samples, grid, bias_budget=0.0, seed=None, name="cf_match"):
    """sup over the grid of |empirical CF - target| against 3.3/sqrt(n) + bias.

    3.3/sqrt(n) bounds the per-point deviation at level about 0.001 under the
    normal approximation (family-wise about 0.04 over 41 points by Bonferroni).
    """
    y = np.asarray(samples, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    n = y.shape[0]
    ecf = empirical_cf(y, grid.points)
    dev = np.abs(ecf - grid.targets)
    k = int(np.argmax(dev))
    thr = CF_CONST / math.sqrt(n) + bias_budget
    stat = float(dev[k])
    return TestResult(name, stat, thr, stat <= thr, n,
                      f"sup |phi_hat - exp(-h q)| over {len(dev)} points; "
                      f"3.3/sqrt(n) + bias {bias_budget:g}", seed,
                      {"worst_xi": grid.points[k].tolist(), "h": grid.h})


def ks_two_sample(a, b, level=DEFAULT_LEVEL, seed=None, name="ks_two_sample"):
    """Two-sample Kolmogorov-Smirnov statistic vs the asymptotic critical value."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    allv = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, allv, side="right") / a.size
    cdf_b = np.searchsorted(b, allv, side="right") / b.size
    stat = float(np.max(np.abs(cdf_a - cdf_b)))
    m, n = a.size, b.size
    en = math.sqrt(m * n / (m + n))
    thr = float(special.kolmogi(level)) / en
    p = float(special.kolmogorov(en * stat))
    return TestResult(name, stat, thr, stat <= thr, m + n,
                      f"two-sample KS, asymptotic level {level:g}", seed,
                      {"p_value": p, "n_a": m, "n_b": n, "level": level})


def jump_count_test(counts, rate, h, level=DEFAULT_LEVEL, seed=None, name="jump_count"):
    """Chi-square goodness of fit of per-step jump counts to Poisson(rate * h).

    Cells k = 0, 1, ... while the expected count is >= 5, the rest pooled.
    """
    counts = np.asarray(counts, dtype=np.int64).ravel()
    n = counts.size
    mu = rate * h
    if mu == 0.0:
        ok = bool(np.all(counts == 0))
        return TestResult(name, float(np.count_nonzero(counts)), 0.0, ok, n,
                          "Poisson(0): every count must be zero", seed, {"mu": 0.0})
    k_pool = 0
    while n * stats.poisson.pmf(k_pool, mu) >= 5 and n * stats.poisson.sf(k_pool, mu) >= 5:
        k_pool += 1
    expected = np.array([n * stats.poisson.pmf(k, mu) for k in range(k_pool)]
                        + [n * stats.poisson.sf(k_pool - 1, mu)])
    observed = np.array([np.count_nonzero(counts == k) for k in range(k_pool)]
                        + [np.count_nonzero(counts >= k_pool)])
    if expected.size < 2:
        return TestResult(name, 0.0, 0.0, True, n, "too few samples for a chi-square cell",
                          seed, {"mu": mu})
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    df = expected.size - 1
    thr = float(stats.chi2.ppf(1.0 - level, df))
    return TestResult(name, chi2, thr, chi2 <= thr, n,
                      f"chi-square vs Poisson({mu:g}), {df} df, level {level:g}", seed,
                      {"mu": mu, "observed": observed.tolist(),
                       "expected": expected.tolist()})


def noise_floor(n):
    """Bound on the sup distance between the CFs of two independent n-samples of one law."""
    return CF_CONST * math.sqrt(2.0 / n)


@dataclass
class ConvergenceReport:
    h_list: list
    distances: list
    noise_floor: float
    excess: float  # max over k of d[k+1] - d[k] - 2 * noise_floor
    passed: bool
    n_paths: int
    seed: int
    note: str = ("terminal-marginal CF distances between successive step sizes; a proxy "
                 "for weak convergence, not a test of it")

    def as_dict(self):
        return asdict(self)


def convergence_study(sym, x0, T, h_list, n_paths, seed, grid=None, threads=None):
    """CF sup-distances between terminal laws at successive step sizes.

    Each level uses its own random domain, so the ensembles are independent.
    Passes when every distance is at most the previous one plus twice the
    noise floor 3.3 * sqrt(2 / n).
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3:
        raise ValueError("convergence study needs at least three step sizes")
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h_list must be strictly decreasing")
    steps = []
    for h in h_list:
        m = T / h
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ValueError(f"T / h must be an integer (h = {h})")
        steps.append(int(round(m)))
    if grid is None:
        grid = np.linspace(-5.0, 5.0, 41)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim == 1:
        grid = np.outer(grid, np.ones(sym.dim) / math.sqrt(sym.dim))
    cfs = []
    for level, (h, m) in enumerate(zip(h_list, steps)):
        ens = simulate_ensemble(sym, x0, h, m, n_paths, seed, threads=threads,
                                record="none", domain=level + 1)
        cfs.append(empirical_cf(ens.terminal, grid))
    dist = [float(np.max(np.abs(a - b))) for a, b in zip(cfs, cfs[1:])]
    floor = noise_floor(n_paths)
    excess = max(b - a - 2.0 * floor for a, b in zip(dist, dist[1:]))
    return ConvergenceReport(h_list, dist, floor, float(excess), excess <= 0.0, int(n_paths),
                             int(seed))


@dataclass
class ExperimentReport:
    name: str
    results: list
    passed: bool
    metadata: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "metadata": self.metadata,
                "results": [r.as_dict() for r in self.results]}


def state_dependence_experiment(sym=None, n=10_000, seed=0, h=1.0, x_cauchy=-1.0,
                                x_gauss=2.0, tail=5.0, level=DEFAULT_LEVEL):
    """One-step increments from x = 2 and x = -1 under the stable-like preset.

    Checks (i) x=2 increments vs direct alpha=1.9 stable draws (KS), (ii) x=-1
    increments vs alpha=0.9 draws (KS), (iii) P(|dX| > tail) larger at x=-1.
    """
    sym = figure1_symbol() if sym is None else sym
    if sym.family is not Family.STABLE_LIKE:
        raise ValueError("state dependence experiment needs a stable-like symbol")
    if int(n) < 2:
        raise ValueError("need n >= 2 increments per state")
    alpha_fn = sym.params["alpha_fn"]
    scale = sym.params["scale"]
    results = []
    incs = {}
    for label, x, stream in (("x=2", x_gauss, 0), ("x=-1", x_cauchy, 1)):
        xv = np.full(sym.dim, float(x))
        a = float(alpha_fn(xv))
        rng = RngStream(seed, stream)
        dx = step(sym, xv, h, rng, size=n)[:, 0] - x
        ref = sample_stable(a, scale, h, RngStream(seed, 100 + stream), size=n)
        incs[label] = dx
        r = ks_two_sample(dx, ref, level, seed, f"ks_{label}_vs_stable({a:g})")
        r.details["alpha"] = a
        results.append(r)
    p_c = float(np.mean(np.abs(incs["x=-1"]) > tail))
    p_g = float(np.mean(np.abs(incs["x=2"]) > tail))
    # tail frequencies are multiples of 1/n, so p_c > p_g iff p_g - p_c <= -0.5/n
    thr = -0.5 / int(n)
    results.append(TestResult("tail_ordering", p_g - p_c, thr, p_g - p_c <= thr, 2 * int(n),
                              f"P(|dX|>{tail:g} | x=-1) > P(|dX|>{tail:g} | x=2)", seed,
                              {"p_x_minus1": p_c, "p_x_2": p_g}))
    return ExperimentReport("state_dependence", results, all(r.passed for r in results),
                            {"h": h, "n": int(n), "seed": int(seed)})


@dataclass
class ValidationReport:
    """Collection of test results with run metadata."""

    title: str
    results: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(_passed(r) for r in self.results)

    def add(self, result):
        self.results.append(result)
        return result

    def as_dict(self):
        return {"title": self.title, "passed": self.passed, "metadata": self.metadata,
                "results": [r.as_dict() for r in self.results]}

    def to_json(self):
        return json.dumps(_plain(self.as_dict()), indent=2, sort_keys=True) + "\n"

    def to_text(self):
        lines = [f"title = {self.title}", f"passed = {str(self.passed).lower()}"]
        for k in sorted(self.metadata):
            lines.append(f"{k} = {_fmt(self.metadata[k])}")
        for i, r in enumerate(self.results):
            lines.append("")
            lines.append(f"[result.{i}]")
            for k, v in _plain(r.as_dict()).items():
                if isinstance(v, list) and v and isinstance(v[0], dict):
                    for j, sub in enumerate(v):
                        lines.append(f"[result.{i}.{k}.{j}]")
                        for kk, vv in sub.items():
                            lines.append(f"{kk} = {_fmt(vv)}")
                else:
                    lines.append(f"{k} = {_fmt(v)}")
        return "\n".join(lines) + "\n"


def _passed(r):
    return bool(getattr(r, "passed"))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(_plain(v), sort_keys=True)
    return str(v)
