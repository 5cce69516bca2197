"""Levy increments for a frozen triplet.

The increment over time ``h`` is assembled from independent parts, each
reading its own lane of the caller's RandomBlock:

    lane 0  Gaussian part (Box-Muller normals)
    lane 1  stable variates, or the Poisson jump count
    lane 2  jump sizes (variable count per row)
    lane 3  Gaussian small-jump substitute (truncated strategy)
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import interpolate, optimize

from . import _kernels
from .jumps import CompoundPoisson, Discrete, Gaussian, Generic, NoJumps, SymmetricStable
from .rng import RngStream

LANE_GAUSS = 0
LANE_COUNT = 1
LANE_SIZES = 2
LANE_SMALL = 3

_JUMP_CHUNK = 1024


class SamplerError(ValueError):
    """The triplet cannot be turned into an increment sampler."""


class Strategy(str, enum.Enum):
    EXACT = "exact"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class SamplerOptions:
    """Tuning for the truncated-jump strategy.

    ``epsilon`` fixes the truncation radius; otherwise it is the smallest
    radius with at most ``max_jumps_per_step`` expected big jumps per step,
    raised to the radius below which the small-jump variance ``h * Sigma`` is
    under ``small_jump_budget``. Small jumps become a Gaussian when
    ``sqrt(Sigma) / epsilon >= small_jump_threshold`` (policy ``"auto"``).
    """

    epsilon: Optional[float] = None
    small_jump_policy: str = "auto"
    small_jump_threshold: float = 0.3
    max_jumps_per_step: float = 50.0
    small_jump_budget: float = 1e-6
    max_expected_jumps: float = 1e7

    def __post_init__(self):
        if self.small_jump_policy not in ("auto", "gaussian", "drop"):
            raise ValueError("small_jump_policy must be auto, gaussian or drop")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def _diffusion_factor(q):
    """L with L L' = q; Cholesky, else eigen-decomposition with clipped eigenvalues."""
    if not np.any(q):
        return None
    try:
        return np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(q)
        if w.min() < -1e-10:
            raise SamplerError("diffusion matrix is not positive semidefinite")
        return v * np.sqrt(np.clip(w, 0.0, None))


class _TailInverse:
    """Inverse of the normalised tail function of one side of a 1-d density.

    Tabulates S(r) = int_r^inf n(y) dy on a log grid and interpolates
    log r against -log S with a monotone cubic; beyond the table it
    extrapolates the last power-law slope.
    """

    def __init__(self, density, eps, tail_radius=None, nodes=241):
        from .quadrature import _quad_log, _quad_to_inf

        top = tail_radius if tail_radius is not None else eps * 1e10
        r = np.geomspace(eps, top, nodes)
        seg = np.array([_quad_log(density, r[k], r[k + 1])[0] for k in range(nodes - 1)])
        beyond = 0.0 if tail_radius is not None else _quad_to_inf(density, top)[0]
        surv = np.concatenate([np.cumsum(seg[::-1])[::-1] + beyond, [beyond]])
        self.mass = float(surv[0])
        if self.mass <= 0:
            self._spline = None
            return
        keep = surv > 0
        s = surv[keep] / self.mass
        lr = np.log(r[keep])
        ls = -np.log(s)
        uniq = np.concatenate([[True], np.diff(ls) > 1e-14])
        ls, lr = ls[uniq], lr[uniq]
        self._ls_max = ls[-1]
        self._lr_max = lr[-1]
        self._bounded = tail_radius is not None or beyond == 0.0
        if len(ls) >= 2:
            self._slope = (lr[-1] - lr[-2]) / (ls[-1] - ls[-2])
            self._spline = interpolate.PchipInterpolator(ls, lr, extrapolate=False)
        else:  # all mass sits in the first cell
            self._slope = 0.0
            self._spline = None
        self._eps = eps

    def __call__(self, u):
        """Radii r >= eps with S(r) / S(eps) = u."""
        ls = -np.log(u)
        if self._spline is None:
            return np.full_like(ls, self._eps)
        out = self._spline(np.minimum(ls, self._ls_max))
        far = ls > self._ls_max
        if np.any(far):
            if self._bounded:
                out[far] = self._lr_max
            else:
                out[far] = self._lr_max + self._slope * (ls[far] - self._ls_max)
        return np.exp(out)


@dataclass(frozen=True, eq=False)
class IncrementSampler:
    """Precomputed sampler for the Levy increment of one frozen triplet."""

    triplet: object
    strategy: Strategy
    drift: np.ndarray  # drift plus cutoff compensation b(eps)
    factor: Optional[np.ndarray]
    kind: str  # none | compound_poisson | stable | truncated
    rate: float = 0.0
    epsilon: Optional[float] = None
    small_cov: float = 0.0
    small_policy: str = "none"
    h_hint: float = 1.0
    _extras: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self):
        return self.drift.shape[0]

    def draw(self, h, block, counts=None):
        """Increments over time ``h`` for every row of ``block``; shape (n, d).

        ``counts`` (optional int array of length n) receives the number of
        jumps per row for the compound Poisson and truncated strategies.
        """
        n = len(block)
        d = self.dim
        out = np.broadcast_to(h * self.drift, (n, d)).copy()
        if self.factor is not None:
            out += math.sqrt(h) * (block.normal(d, LANE_GAUSS) @ self.factor.T)
        if self.kind == "stable":
            out += self._draw_stable(h, block)
        elif self.kind == "compound_poisson":
            out += self._draw_compound(h, block, counts)
        elif self.kind == "truncated":
            out += self._draw_truncated(h, block, counts)
        return out

    def _draw_stable(self, h, block):
        jumps = self.triplet.jumps
        n, d = len(block), self.dim
        b0 = block.reserve(LANE_COUNT, (2 * d + 3) // 4)
        k0, k1 = block.key
        return _kernels.stable_like_increments(
            np.full(n, jumps.alpha), jumps.scale, h, k0, k1, b0, block.step,
            block.streams, block.tags(LANE_COUNT), d)

    def _sum_jumps(self, block, k, draw_sizes, width):
        """Sum of the first k[i] jump sizes in row i; sizes use ``width`` uniforms each."""
        n, d = len(block), self.dim
        total = np.zeros((n, d))
        kmax = int(k.max(initial=0))
        for j0 in range(0, kmax, _JUMP_CHUNK):
            j1 = min(kmax, j0 + _JUMP_CHUNK)
            live = np.nonzero(k > j0)[0]
            sub = block.take(live)
            # slot blocks for jumps j0.. start at j0 * width / 4 (j0 is a multiple of 4)
            u = sub.uniform_at((j1 - j0) * width, LANE_SIZES, (j0 * width) // 4)
            sizes = draw_sizes(u.reshape(len(live), j1 - j0, width))
            mask = (np.arange(j0, j1)[None, :] < k[live, None])
            total[live] += np.einsum("ij,ijk->ik", mask, sizes)
        return total

    def _draw_compound(self, h, block, counts):
        jumps = self.triplet.jumps
        k = _kernels.poisson_inverse(block.uniform(1, LANE_COUNT)[:, 0], h * jumps.rate)
        if counts is not None:
            counts[:] = k
        law = jumps.law
        if isinstance(law, Discrete):
            cdf = np.cumsum(law.probs)
            cdf[-1] = 1.0

            def sizes(u):
                idx = np.minimum(np.searchsorted(cdf, u[..., 0], side="right"), len(cdf) - 1)
                return law.values[idx]
            return self._sum_jumps(block, k, sizes, 1)
        d = self.dim
        width = d + (d & 1)
        chol = _diffusion_factor(law.cov)

        def sizes(u):
            shape = u.shape
            z = _kernels.box_muller(u.reshape(-1, width))[:, :d]
            z = z @ chol.T if chol is not None else np.zeros_like(z)
            return (z + law.mean).reshape(shape[0], shape[1], d)
        return self._sum_jumps(block, k, sizes, width)

    def _draw_truncated(self, h, block, counts):
        ex = self._extras
        n = len(block)
        k = _kernels.poisson_inverse(block.uniform(1, LANE_COUNT)[:, 0], h * self.rate)
        if counts is not None:
            counts[:] = k
        p_pos = ex["p_pos"]
        pos, neg = ex["pos"], ex["neg"]

        def sizes(u):
            side = u[..., 0] < p_pos
            out = np.empty(u.shape[:2])
            if pos is not None and np.any(side):
                out[side] = pos(u[..., 1][side])
            if neg is not None and np.any(~side):
                out[~side] = -neg(u[..., 1][~side])
            return out[..., None]
        total = self._sum_jumps(block, k, sizes, 2)
        if self.small_policy == "gaussian":
            total += math.sqrt(h * self.small_cov) * block.normal(1, LANE_SMALL)
        return total


def _choose_epsilon(jumps, h, opts):
    def excess(log_eps):
        return h * jumps.tail_mass(math.exp(log_eps)) - opts.max_jumps_per_step

    lo, hi = math.log(1e-12), math.log(1e6)
    if excess(lo) <= 0:
        eps_jumps = 1e-12
    elif excess(hi) > 0:
        raise SamplerError("jump measure has too much mass far from the origin")
    else:
        # step to the safe side of the root so the jump cap holds exactly
        root = optimize.brentq(excess, lo, hi, xtol=1e-10)
        eps_jumps = math.exp(root + 1e-9)

    def small_excess(log_eps):
        return h * jumps.small_second_moment(math.exp(log_eps)) - opts.small_jump_budget

    if small_excess(lo) > 0:
        eps_budget = 1e-12
    elif small_excess(hi) <= 0:
        eps_budget = 1e6
    else:
        eps_budget = math.exp(optimize.brentq(small_excess, lo, hi, xtol=1e-6))
    return max(eps_jumps, min(eps_budget, 1e6))


def build_sampler(triplet, h_hint=1.0, options=None):
    """Precompute an IncrementSampler for ``triplet``.

    Exact samplers cover the Gaussian part, compound Poisson measures and
    per-axis symmetric stable measures; generic 1-d densities use the
    truncated-jump strategy.
    """
    opts = options or SamplerOptions()
    if not h_hint > 0:
        raise SamplerError("h_hint must be positive")
    if triplet.killing != 0.0:
        raise SamplerError("killing rate must be zero: the scheme has no cemetery state")
    factor = _diffusion_factor(np.asarray(triplet.diffusion))
    jumps = triplet.jumps
    drift = np.array(triplet.drift, dtype=np.float64)

    if isinstance(jumps, NoJumps):
        return IncrementSampler(triplet, Strategy.EXACT, drift, factor, "none", h_hint=h_hint)
    if isinstance(jumps, SymmetricStable):
        return IncrementSampler(triplet, Strategy.EXACT, drift, factor, "stable", h_hint=h_hint)
    if isinstance(jumps, CompoundPoisson):
        if jumps.rate * h_hint > opts.max_expected_jumps:
            raise SamplerError(f"expected {jumps.rate * h_hint:.3g} jumps per step is too many")
        return IncrementSampler(triplet, Strategy.EXACT, drift - jumps.compensator_mean(), factor,
                                "compound_poisson", rate=jumps.rate, h_hint=h_hint)
    if not isinstance(jumps, Generic):
        raise SamplerError(f"no sampler for jump measure {type(jumps).__name__}")
    if jumps.dim != 1:
        raise SamplerError("truncated sampling of generic densities is one-dimensional only")

    eps = opts.epsilon if opts.epsilon is not None else _choose_epsilon(jumps, h_hint, opts)
    rate = jumps.tail_mass(eps)
    if not math.isfinite(rate) or rate * h_hint > opts.max_expected_jumps:
        raise SamplerError(f"lambda(eps) * h = {rate * h_hint:.3g} jumps per step is too many")
    # b(eps) = -int_{eps<|y|<=1} y N(dy) (or + int_{1<|y|<=eps} when eps > 1)
    if eps <= 1.0:
        comp = -jumps.first_moment(eps, 1.0)
    else:
        comp = jumps.first_moment(1.0, eps)
    small = jumps.small_second_moment(eps)
    policy = opts.small_jump_policy
    if policy == "auto":
        policy = "gaussian" if math.sqrt(small) / eps >= opts.small_jump_threshold else "drop"
    # small jumps |y| <= eps are compensated: mean zero under either policy
    tr = jumps.tail_radius
    pos = _TailInverse(lambda y: jumps.density(y), eps, tr)
    neg = _TailInverse(lambda y: jumps.density(-y), eps, tr)
    p_pos = pos.mass / (pos.mass + neg.mass) if rate > 0 else 1.0
    extras = {"p_pos": p_pos, "pos": pos if pos.mass > 0 else None,
              "neg": neg if neg.mass > 0 else None}
    return IncrementSampler(triplet, Strategy.TRUNCATED, drift + comp, factor, "truncated",
                            rate=rate, epsilon=eps, small_cov=small, small_policy=policy,
                            h_hint=h_hint, _extras=extras)


def sample_increment(sampler, h, rng, size=None, return_counts=False):
    """Draw Levy increments over time ``h``.

    Returns a length-d vector, or an (size, d) array when ``size`` is given.
    With ``return_counts`` the per-draw jump counts come back as well.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    n = 1 if size is None else int(size)
    block = rng.next_block(n)
    counts = np.zeros(n, dtype=np.int64) if return_counts else None
    out = sampler.draw(h, block, counts)
    if size is None:
        out = out[0]
        counts = None if counts is None else int(counts[0])
    return (out, counts) if return_counts else out


def sample_stable(alpha, scale=1.0, h=1.0, rng=None, size=None):
    """Symmetric alpha-stable variates with characteristic function exp(-h scale**a |xi|**a)."""
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    if not (scale > 0 and h > 0):
        raise ValueError("scale and h must be positive")
    rng = rng if rng is not None else RngStream(0)
    n = 1 if size is None else int(size)
    block = rng.next_block(n)
    b0 = block.reserve(LANE_COUNT, 1)
    k0, k1 = block.key
    out = _kernels.stable_like_increments(np.full(n, float(alpha)), scale, h, k0, k1, b0,
                                          block.step, block.streams, block.tags(LANE_COUNT), 1)
    return float(out[0, 0]) if size is None else out[:, 0]
