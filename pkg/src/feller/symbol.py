"""State-dependent symbols q(x, xi) with their Levy-Khinchine triplets.

Also numerical checks of the growth bound (A2) and no-killing (A3)
conditions plus structural invariants of the symbol.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numpy as np

from .jumps import (CompoundPoisson, Discrete, Gaussian, Generic, JumpMeasureSpec,
                    NoJumps, SymmetricStable)

SYM_TOL = 1e-12
PSD_TOL = 1e-10
A3_TOL = 1e-10
REAL_PART_TOL = 1e-10
CONJ_TOL = 1e-10
A2_GROWTH_PER_DECADE = 0.05


class Family(str, enum.Enum):
    BROWNIAN = "brownian"
    STABLE_LIKE = "stable_like"
    LEVY_CONSTANT = "levy_constant"
    SDE_DRIVEN = "sde_driven"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class LevyTriplet:
    """Drift, diffusion matrix, jump measure and killing rate at one state."""

    drift: np.ndarray
    diffusion: np.ndarray
    jumps: JumpMeasureSpec
    killing: float = 0.0

    def __post_init__(self):
        drift = np.atleast_1d(np.asarray(self.drift, dtype=np.float64)).copy()
        d = drift.shape[0]
        diffusion = np.atleast_2d(np.asarray(self.diffusion, dtype=np.float64)).copy()
        if drift.ndim != 1 or diffusion.shape != (d, d):
            raise ValueError(f"diffusion must be ({d}, {d}) to match the drift")
        if not (np.all(np.isfinite(drift)) and np.all(np.isfinite(diffusion))):
            raise ValueError("triplet entries must be finite")
        if np.max(np.abs(diffusion - diffusion.T), initial=0.0) > SYM_TOL:
            raise ValueError("diffusion matrix is not symmetric")
        if np.linalg.eigvalsh(diffusion).min() < -PSD_TOL:
            raise ValueError("diffusion matrix is not positive semidefinite")
        if self.jumps.dim != d:
            raise ValueError(f"jump measure has dimension {self.jumps.dim}, expected {d}")
        killing = float(self.killing)
        if not (math.isfinite(killing) and killing >= 0.0):
            raise ValueError("killing rate must be finite and nonnegative")
        drift.setflags(write=False)
        diffusion.setflags(write=False)
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "diffusion", diffusion)
        object.__setattr__(self, "killing", killing)

    @property
    def dim(self):
        return self.drift.shape[0]

    def exponent(self, xi, method="auto"):
        """q(xi) for this frozen triplet.

        ``method`` is ``"closed"`` (parametric jump formula), ``"quadrature"``
        (integrate against the measure) or ``"auto"``.
        """
        xi = np.asarray(xi, dtype=np.float64)
        base = complex(self.killing - 1j * (self.drift @ xi) + 0.5 * (xi @ self.diffusion @ xi))
        if method == "quadrature" or (method == "auto" and not self.jumps.has_closed_form):
            jump = self.jumps.exponent_quadrature(xi)
        elif method in ("closed", "auto"):
            jump = self.jumps.exponent(xi)
        else:
            raise ValueError(f"unknown evaluation method {method!r}")
        return base + jump


@dataclass(frozen=True, eq=False)
class StateDependentSymbol:
    """x -> LevyTriplet together with an optional closed form for q(x, xi)."""

    dim: int
    triplet_at: Callable[[np.ndarray], LevyTriplet]
    closed_form: Optional[Callable[[np.ndarray, np.ndarray], complex]] = None
    family: Family = Family.CUSTOM
    name: str = "custom"
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def __call__(self, x, xi):
        return eval_symbol(self, x, xi)

    @property
    def is_constant(self):
        return self.family in (Family.BROWNIAN, Family.LEVY_CONSTANT)


class DimensionError(ValueError):
    pass


def _vec(v, d, what):
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if arr.shape != (d,):
        raise DimensionError(f"{what} has shape {arr.shape}, expected ({d},)")
    return arr


def eval_symbol(sym, x, xi, method="auto"):
    """q(x, xi).

    With ``method="auto"`` the closed form is used when the symbol has one;
    ``"quadrature"`` always goes through the triplet at ``x``.
    """
    x = _vec(x, sym.dim, "x")
    xi = _vec(xi, sym.dim, "xi")
    if method == "auto" and sym.closed_form is not None:
        return complex(sym.closed_form(x, xi))
    if method == "closed":
        if sym.closed_form is None:
            raise ValueError(f"symbol {sym.name!r} has no closed form")
        return complex(sym.closed_form(x, xi))
    return sym.triplet_at(x).exponent(xi, "quadrature" if method == "quadrature" else "auto")


# --- families -------------------------------------------------------------

def _constant_symbol(triplet, family, name, params):
    def triplet_at(x):
        return triplet

    if triplet.jumps.has_closed_form:
        def closed_form(x, xi):
            return triplet.exponent(xi, "closed")
    else:
        closed_form = None
    return StateDependentSymbol(triplet.dim, triplet_at, closed_form, family, name,
                                dict(params, triplet=triplet))


def brownian(dim=1, diffusion=None, drift=None, killing=0.0):
    """q(x, xi) = -i drift.xi + xi' diffusion xi / 2 (+ killing)."""
    diffusion = np.eye(dim) if diffusion is None else np.atleast_2d(diffusion)
    drift = np.zeros(dim) if drift is None else drift
    t = LevyTriplet(drift, diffusion, NoJumps(dim), killing)
    return _constant_symbol(t, Family.BROWNIAN, "brownian", {})


def levy_constant(triplet, name="levy"):
    return _constant_symbol(triplet, Family.LEVY_CONSTANT, name, {})


def symmetric_stable(alpha, scale=1.0, dim=1, drift=None, killing=0.0):
    """Per-axis symmetric stable Levy process: scale**alpha * sum |xi_k|**alpha."""
    drift = np.zeros(dim) if drift is None else drift
    t = LevyTriplet(drift, np.zeros((dim, dim)), SymmetricStable(alpha, scale, dim), killing)
    return _constant_symbol(t, Family.LEVY_CONSTANT, f"stable({alpha:g})",
                            {"alpha": float(alpha), "scale": float(scale)})


def cauchy(scale=1.0, dim=1):
    return symmetric_stable(1.0, scale, dim)


def compound_poisson(rate, law, killing=0.0):
    """Plain compound Poisson process: q(xi) = rate * (1 - cf_law(xi)).

    The triplet carries drift ``rate * E[Y; |Y| <= 1]`` so that it cancels
    the small-jump compensator; increments with no jumps are exactly zero.
    """
    if not isinstance(law, (Discrete, Gaussian)):
        # a bare jump size means a point mass
        law = Discrete(np.atleast_1d(np.asarray(law, dtype=np.float64)).reshape(1, -1), [1.0])
    jumps = CompoundPoisson(rate, law)
    t = LevyTriplet(jumps.compensator_mean(), np.zeros((jumps.dim, jumps.dim)), jumps, killing)
    return _constant_symbol(t, Family.LEVY_CONSTANT, "compound_poisson", {"rate": float(rate)})


def figure1_alpha(x):
    """alpha(x) = ((0.9 + x) min 1.9) max 0.9 on the first coordinate."""
    x = np.asarray(x, dtype=np.float64)
    return np.clip(0.9 + x[..., 0], 0.9, 1.9)


def clamped_linear_alpha(offset, slope, lo, hi):
    if not 0.0 < lo <= hi < 2.0:
        raise ValueError("alpha bounds must satisfy 0 < lo <= hi < 2")

    def alpha_fn(x):
        x = np.asarray(x, dtype=np.float64)
        return np.clip(offset + slope * x[..., 0], lo, hi)

    alpha_fn.bounds = (lo, hi)
    alpha_fn.params = {"offset": offset, "slope": slope, "lo": lo, "hi": hi}
    return alpha_fn


figure1_alpha.bounds = (0.9, 1.9)
figure1_alpha.params = {"offset": 0.9, "slope": 1.0, "lo": 0.9, "hi": 1.9}


def stable_like(alpha_fn=figure1_alpha, scale=1.0, dim=1, bounds=None, name="stable_like"):
    """Stable-like symbol q(x, xi) = scale**alpha(x) * sum_k |xi_k|**alpha(x).

    ``alpha_fn`` maps an array of states with trailing axis ``dim`` to
    indices in ``bounds``, a closed sub-interval of (0, 2). It must accept
    batches because the path engine evaluates it on all paths at once.
    """
    lo, hi = bounds if bounds is not None else getattr(alpha_fn, "bounds", (None, None))
    if lo is None or not 0.0 < lo <= hi < 2.0:
        raise ValueError("stable-like symbols need alpha bounds inside (0, 2)")
    scale = float(scale)

    def alpha_at(x):
        a = float(alpha_fn(np.asarray(x, dtype=np.float64)))
        if not lo - 1e-12 <= a <= hi + 1e-12:
            raise ValueError(f"alpha({x}) = {a} outside declared bounds [{lo}, {hi}]")
        return a

    def triplet_at(x):
        return LevyTriplet(np.zeros(dim), np.zeros((dim, dim)),
                           SymmetricStable(alpha_at(x), scale, dim))

    def closed_form(x, xi):
        a = alpha_at(x)
        return complex(scale ** a * np.sum(np.abs(xi) ** a))

    params = {"alpha_fn": alpha_fn, "scale": scale, "bounds": (lo, hi)}
    params.update(getattr(alpha_fn, "params", {}))
    return StateDependentSymbol(dim, triplet_at, closed_form, Family.STABLE_LIKE, name, params)


def figure1_symbol():
    """The stable-like preset with alpha(x) = ((0.9 + x) min 1.9) max 0.9."""
    return stable_like(figure1_alpha, 1.0, 1, name="figure1")


def killing_fixture(rate=1.0, dim=1):
    """Brownian motion with killing: q(x, 0) = rate, so the no-killing check fails."""
    sym = brownian(dim, killing=rate)
    return StateDependentSymbol(sym.dim, sym.triplet_at, sym.closed_form, Family.CUSTOM,
                                "killing", {"killing": float(rate)})


def cubic_fixture(dim=1):
    """q(x, xi) = sum |xi_k|**3, which outgrows c (1 + |xi|^2).

    Not a negative definite function, so it has no triplet; meant only for
    exercising the growth check.
    """
    def triplet_at(x):
        raise ValueError("|xi|^3 is not a Levy exponent and has no triplet")

    def closed_form(x, xi):
        return complex(np.sum(np.abs(xi) ** 3))

    return StateDependentSymbol(dim, triplet_at, closed_form, Family.CUSTOM, "cubic", {})


def custom(dim, triplet_at, closed_form=None, name="custom", **params):
    return StateDependentSymbol(dim, triplet_at, closed_form, Family.CUSTOM, name, params)


def symbol_from_sde(coefficient, driver, dim=None, vectorized=False):
    """Symbol of X_t = X_0 + int f(X_{s-}) dZ_s, namely q(x, xi) = psi(f(x)' xi).

    ``coefficient`` maps a state (length d) to a (d, n) matrix; ``driver`` is
    the x-independent symbol psi of the n-dimensional Levy process Z. With
    ``vectorized=True`` the coefficient also accepts a batch (N, d) and
    returns (N, d, n).
    """
    if not driver.is_constant:
        raise ValueError("driving symbol must be x-independent (a Levy exponent)")
    n = driver.dim
    base = driver.triplet_at(np.zeros(n))
    if dim is None:
        dim = n

    def f_at(x):
        m = np.asarray(coefficient(np.asarray(x, dtype=np.float64)), dtype=np.float64)
        m = m.reshape(dim, n) if m.size == dim * n else m
        if m.shape != (dim, n):
            raise DimensionError(f"coefficient returned shape {m.shape}, expected ({dim}, {n})")
        return m

    def closed_form(x, xi):
        return driver.closed_form(np.zeros(n), f_at(x).T @ xi)

    def triplet_at(x):
        f = f_at(x)
        jumps, corr = base.jumps.image(f)
        return LevyTriplet(f @ base.drift + corr, f @ base.diffusion @ f.T, jumps, base.killing)

    if driver.closed_form is None:
        def closed_form(x, xi):
            return base.exponent(f_at(x).T @ xi)

    params = {"coefficient": coefficient, "driver": driver, "vectorized": vectorized,
              "coefficient_at": f_at}
    return StateDependentSymbol(dim, triplet_at, closed_form, Family.SDE_DRIVEN,
                                f"sde[{driver.name}]", params)


# --- grids and condition checks ---------------------------------------------

def default_x_grid(dim=1, box=(-5.0, 5.0), n=41):
    """n points uniform over the box; along the diagonal when dim > 1."""
    t = np.linspace(box[0], box[1], n)
    return np.repeat(t[:, None], dim, axis=1)


def default_xi_grid(dim=1, n=61, lo=1e-2, hi=1e3):
    """Sign-symmetric grid: 0 plus +/- (n-1)/2 log-spaced magnitudes along the diagonal."""
    if n % 2 == 0:
        raise ValueError("xi grid size must be odd to be sign-symmetric with 0")
    mags = np.geomspace(lo, hi, (n - 1) // 2)
    vals = np.concatenate([-mags[::-1], [0.0], mags])
    return np.outer(vals, np.ones(dim) / math.sqrt(dim))


def _grid(points, dim):
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None] if dim == 1 else arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim or arr.shape[0] == 0:
        raise ValueError(f"grid must be a nonempty (k, {dim}) array")
    return arr


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    passed: bool
    witness: Optional[tuple] = None
    grid: str = ""
    constant: Optional[float] = None
    note: str = ""

    def __post_init__(self):
        if not self.passed and self.witness is None:
            raise ValueError("a failed condition must carry a witness")

    def as_dict(self):
        w = None
        if self.witness is not None:
            x, xi, val = self.witness
            w = {"x": np.asarray(x).tolist(), "xi": np.asarray(xi).tolist(),
                 "value": [complex(val).real, complex(val).imag]}
        return {"condition": self.condition, "passed": self.passed, "witness": w,
                "grid": self.grid, "constant": self.constant, "note": self.note}


def _describe(x_grid, xi_grid=None):
    s = f"x: {len(x_grid)} pts in [{x_grid.min():g}, {x_grid.max():g}]"
    if xi_grid is not None:
        mags = np.linalg.norm(xi_grid, axis=1)
        nz = mags[mags > 0]
        lo = nz.min() if nz.size else 0.0
        s += f"; xi: {len(xi_grid)} pts, |xi| in [{lo:g}, {mags.max():g}]"
    return s


def check_condition_A3(sym, x_grid=None):
    """q(x, 0) = 0 on the grid, within 1e-10."""
    x_grid = _grid(default_x_grid(sym.dim) if x_grid is None else x_grid, sym.dim)
    zero = np.zeros(sym.dim)
    vals = np.array([eval_symbol(sym, x, zero) for x in x_grid])
    k = int(np.argmax(np.abs(vals)))
    worst = abs(vals[k])
    return ConditionReport("A3", bool(worst <= A3_TOL), (x_grid[k], zero, vals[k]),
                           _describe(x_grid), note=f"max |q(x,0)| = {worst:.3g}")


def _symbol_table(sym, x_grid, xi_grid):
    return np.array([[eval_symbol(sym, x, xi) for xi in xi_grid] for x in x_grid])


def check_condition_A2(sym, x_grid=None, xi_grid=None):
    """Grid evidence for |q(x, xi)| <= c (1 + |xi|^2).

    Records c_hat = max |q| / (1 + |xi|^2). Fails when c_hat is not finite or
    when the max ratio still grows by more than 5% per decade between the
    largest |xi| on the grid and the magnitude one decade below it.
    """
    x_grid = _grid(default_x_grid(sym.dim) if x_grid is None else x_grid, sym.dim)
    xi_grid = _grid(default_xi_grid(sym.dim) if xi_grid is None else xi_grid, sym.dim)
    q = _symbol_table(sym, x_grid, xi_grid)
    mags = np.linalg.norm(xi_grid, axis=1)
    ratio = np.abs(q) / (1.0 + mags ** 2)[None, :]
    if not np.all(np.isfinite(ratio)):
        i, j = np.argwhere(~np.isfinite(ratio))[0]
        return ConditionReport("A2", False, (x_grid[i], xi_grid[j], q[i, j]),
                               _describe(x_grid, xi_grid), math.inf, "grid evidence; non-finite q")
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    c_hat = float(ratio[i, j])

    per_mag = ratio.max(axis=0)
    top = mags.max()
    growth = 0.0
    if top > 0:
        lower = mags[(mags > 0) & (mags <= top / 10.0 * (1 + 1e-9))]
        if lower.size:
            ref = lower.max()
            r_top = per_mag[mags == top].max()
            r_ref = per_mag[mags == ref].max()
            decades = math.log10(top / ref)
            if r_ref > 0:
                growth = (r_top / r_ref) ** (1.0 / decades) - 1.0
            elif r_top > 0:
                growth = math.inf
    passed = growth <= A2_GROWTH_PER_DECADE
    if passed:
        witness = (x_grid[i], xi_grid[j], q[i, j])
    else:
        jt = int(np.argmax(np.where(mags == top, per_mag, -np.inf)))
        it = int(np.argmax(ratio[:, jt]))
        witness = (x_grid[it], xi_grid[jt], q[it, jt])
    return ConditionReport("A2", bool(passed), witness, _describe(x_grid, xi_grid), c_hat,
                           f"grid evidence, not proof; top-decade ratio growth {growth:.3g}")


def check_structural(sym, x_grid=None, xi_grid=None, continuity_step=1e-7, continuity_rtol=1e-4):
    """Structural checks: Re q >= 0, conjugate symmetry, continuity in x."""
    x_grid = _grid(default_x_grid(sym.dim) if x_grid is None else x_grid, sym.dim)
    xi_grid = _grid(default_xi_grid(sym.dim) if xi_grid is None else xi_grid, sym.dim)
    desc = _describe(x_grid, xi_grid)
    q = _symbol_table(sym, x_grid, xi_grid)
    q_neg = _symbol_table(sym, x_grid, -xi_grid)
    reports = []

    i, j = np.unravel_index(int(np.argmin(q.real)), q.shape)
    reports.append(ConditionReport("RealPartNonneg", bool(q[i, j].real >= -REAL_PART_TOL),
                                   (x_grid[i], xi_grid[j], q[i, j]), desc,
                                   note=f"min Re q = {q[i, j].real:.3g}"))

    dev = np.abs(q_neg - np.conj(q))
    i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
    reports.append(ConditionReport("ConjSymmetry", bool(dev[i, j] <= CONJ_TOL),
                                   (x_grid[i], xi_grid[j], q[i, j]), desc,
                                   note=f"max |q(x,-xi) - conj q(x,xi)| = {dev[i, j]:.3g}"))

    worst = -1.0
    witness = None
    for a, x in enumerate(x_grid):
        step = continuity_step * max(1.0, float(np.max(np.abs(x))))
        for axis in range(sym.dim):
            xs = x.copy()
            xs[axis] += step
            for b, xi in enumerate(xi_grid):
                diff = abs(eval_symbol(sym, xs, xi) - q[a, b]) / (1.0 + abs(q[a, b]))
                if diff > worst:
                    worst, witness = diff, (x, xi, q[a, b])
    reports.append(ConditionReport("ContinuityInX", bool(worst <= continuity_rtol), witness, desc,
                                   note=f"max relative change over dx={continuity_step:g}: "
                                        f"{worst:.3g}"))
    return reports
