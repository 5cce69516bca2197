"""Levy measures: jump laws plus parametric and generic jump densities.

All measures use the closed unit ball as the compensation cutoff, i.e. the
jump part of a symbol is

    -int (exp(i xi.y) - 1 - i xi.y 1{|y| <= 1}) N(dy).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import quadrature


def stable_density_constant(alpha):
    """C such that C |y|**(-1-alpha) dy on R has exponent |xi|**alpha."""
    return math.gamma(1.0 + alpha) * math.sin(math.pi * alpha / 2.0) / math.pi


def _as_vector(v, dim=None, name="vector"):
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


# --- jump-size laws for compound Poisson measures --------------------------

@dataclass(frozen=True, eq=False)
class Discrete:
    """Finitely many jump sizes ``values[j]`` with probabilities ``probs[j]``."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        probs = np.asarray(self.probs, dtype=np.float64).ravel()
        if values.ndim != 2 or values.shape[0] != probs.shape[0] or probs.size == 0:
            raise ValueError("values must be (m, d) with m matching probs")
        if np.any(probs < 0) or not math.isclose(probs.sum(), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("probs must be nonnegative and sum to 1")
        if not np.all(np.isfinite(values)):
            raise ValueError("jump values must be finite")
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self):
        return self.values.shape[1]

    def cf(self, xi):
        return complex(np.sum(self.probs * np.exp(1j * (self.values @ xi))))

    def truncated_mean(self, radius=1.0):
        inside = np.linalg.norm(self.values, axis=1) <= radius
        return (self.probs[inside, None] * self.values[inside]).sum(axis=0)

    def prob_outside(self, radius):
        return float(self.probs[np.linalg.norm(self.values, axis=1) > radius].sum())

    def image(self, matrix):
        return Discrete(self.values @ matrix.T, self.probs)


@dataclass(frozen=True, eq=False)
class Gaussian:
    """Normal jump sizes. Nonzero means are supported in one dimension only."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _as_vector(self.mean, name="mean")
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValueError("cov must be (d, d)")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("cov must be symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise ValueError("cov must be positive semidefinite")
        if d > 1 and np.any(mean != 0.0):
            raise ValueError("multivariate Gaussian jump laws must be centred")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def std(self):
        return math.sqrt(self.cov[0, 0])

    def cf(self, xi):
        return complex(np.exp(1j * self.mean @ xi - 0.5 * xi @ self.cov @ xi))

    def truncated_mean(self, radius=1.0):
        if self.dim > 1:
            return np.zeros(self.dim)  # centred and symmetric
        mu, sd = float(self.mean[0]), self.std
        if sd == 0.0:
            return np.array([mu if abs(mu) <= radius else 0.0])
        a = (-radius - mu) / sd
        b = (radius - mu) / sd
        phi = special.ndtr
        pdf = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return np.array([mu * (phi(b) - phi(a)) - sd * (pdf(b) - pdf(a))])

    def pdf(self, y):
        mu, sd = float(self.mean[0]), self.std
        z = (y - mu) / sd
        return math.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))

    def image(self, matrix):
        return Gaussian(matrix @ self.mean, matrix @ self.cov @ matrix.T)


# --- Levy measures -----------------------------------------------------------

class JumpMeasureSpec:
    """Base class for the jump part of a Levy triplet."""

    dim: int
    has_closed_form = True

    def exponent(self, xi):
        """Closed-form jump part of the symbol at ``xi``."""
        raise NotImplementedError

    def exponent_quadrature(self, xi):
        """Jump part of the symbol by integrating against the measure."""
        raise NotImplementedError

    def image(self, matrix):
        """Push-forward under ``y -> matrix @ y`` and the cutoff drift correction."""
        raise NotImplementedError


@dataclass(frozen=True)
class NoJumps(JumpMeasureSpec):
    dim: int = 1

    def exponent(self, xi):
        return 0j

    def exponent_quadrature(self, xi):
        return 0j

    def image(self, matrix):
        return NoJumps(matrix.shape[0]), np.zeros(matrix.shape[0])


@dataclass(frozen=True, eq=False)
class CompoundPoisson(JumpMeasureSpec):
    """``rate * law``: finitely many jumps per unit time."""

    rate: float
    law: object

    def __post_init__(self):
        rate = float(self.rate)
        if not (math.isfinite(rate) and rate > 0.0):
            raise ValueError("compound Poisson rate must be finite and positive")
        if not isinstance(self.law, (Discrete, Gaussian)):
            raise TypeError("law must be Discrete or Gaussian")
        object.__setattr__(self, "rate", rate)

    @property
    def dim(self):
        return self.law.dim

    def compensator_mean(self):
        """int_{|y|<=1} y N(dy)."""
        return self.rate * self.law.truncated_mean(1.0)

    def exponent(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return (self.rate * (1.0 - self.law.cf(xi))
                + 1j * float(xi @ self.compensator_mean()))

    def exponent_quadrature(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        law = self.law
        if isinstance(law, Discrete):
            # integral against an atomic measure is the finite sum over atoms
            t = law.values @ xi
            inside = np.linalg.norm(law.values, axis=1) <= 1.0
            terms = np.exp(1j * t) - 1.0 - 1j * t * inside
            return complex(-self.rate * np.sum(law.probs * terms))
        if law.dim != 1:
            raise ValueError("quadrature for Gaussian jump laws is one-dimensional only")
        if law.std == 0.0:
            return CompoundPoisson(self.rate, Discrete(law.mean[None, :], [1.0])).exponent_quadrature(xi)
        rate = self.rate
        return quadrature.lk_exponent_1d(lambda y: rate * law.pdf(y), float(xi[0]),
                                         symmetric=bool(law.mean[0] == 0.0))

    def image(self, matrix):
        new_law = self.law.image(matrix)
        corr = self.rate * (new_law.truncated_mean(1.0) - matrix @ self.law.truncated_mean(1.0))
        if isinstance(new_law, Discrete):
            keep = np.linalg.norm(new_law.values, axis=1) > 0.0
            if not np.any(keep):
                return NoJumps(matrix.shape[0]), corr
        return CompoundPoisson(self.rate, new_law), corr

    def tail_mass(self, eps):
        if isinstance(self.law, Discrete):
            return self.rate * self.law.prob_outside(eps)
        return self.rate


@dataclass(frozen=True)
class SymmetricStable(JumpMeasureSpec):
    """Independent symmetric alpha-stable jumps along each coordinate axis.

    Exponent ``scale**alpha * sum_k |xi_k|**alpha``; per axis the Levy
    density is ``C_alpha * scale**alpha * |y|**(-1-alpha)``.
    """

    alpha: float
    scale: float = 1.0
    dim: int = 1

    def __post_init__(self):
        alpha = float(self.alpha)
        if not 0.0 < alpha < 2.0:
            raise ValueError("stable index must satisfy 0 < alpha < 2")
        if not float(self.scale) > 0.0:
            raise ValueError("stable scale must be positive")
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def density_constant(self):
        return stable_density_constant(self.alpha) * self.scale ** self.alpha

    def axis_density(self, y):
        return self.density_constant * abs(y) ** (-1.0 - self.alpha)

    def exponent(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return complex(self.scale ** self.alpha * np.sum(np.abs(xi) ** self.alpha))

    def exponent_quadrature(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        return sum(quadrature.lk_exponent_1d(self.axis_density, float(v), symmetric=True)
                   for v in xi)

    def tail_mass(self, eps):
        return self.dim * 2.0 * self.density_constant * eps ** (-self.alpha) / self.alpha

    def image(self, matrix):
        if matrix.shape != (1, 1) or self.dim != 1:
            raise NotImplementedError(
                "push-forward of stable jumps is implemented for scalar coefficients only")
        f = abs(float(matrix[0, 0]))
        if f == 0.0:
            return NoJumps(1), np.zeros(1)
        return SymmetricStable(self.alpha, self.scale * f, 1), np.zeros(1)


@dataclass(frozen=True, eq=False)
class Generic(JumpMeasureSpec):
    """One-dimensional Levy measure with density ``density(y)`` on R minus {0}.

    Integrability of ``min(|y|**2, 1)`` is checked numerically at
    construction. ``tail_radius`` (optional) declares that the density
    vanishes for ``|y| > tail_radius``.
    """

    density: Callable[[float], float]
    dim: int = 1
    symmetric: bool = False
    tail_radius: Optional[float] = None
    name: str = "generic"
    _small_moment: float = field(default=math.nan, init=False, repr=False)
    _big_mass: float = field(default=math.nan, init=False, repr=False)

    has_closed_form = False

    def __post_init__(self):
        if self.dim != 1:
            raise ValueError("generic Levy densities are supported in one dimension only")
        probe = np.concatenate([-np.geomspace(1e-6, 1e3, 40), np.geomspace(1e-6, 1e3, 40)])
        vals = np.array([self.density(float(y)) for y in probe])
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("Levy density must be finite and nonnegative away from 0")
        small = quadrature.radial_moment(self.density, 2, 0.0, 1.0, tail_radius=self.tail_radius)
        big = quadrature.radial_mass(self.density, 1.0, tail_radius=self.tail_radius)
        if not (math.isfinite(small) and math.isfinite(big)) or small > 1e12 or big > 1e12:
            raise ValueError("density is not a Levy density: int min(|y|^2, 1) n(y) dy diverges")
        object.__setattr__(self, "_small_moment", small)
        object.__setattr__(self, "_big_mass", big)

    def exponent(self, xi):
        return self.exponent_quadrature(xi)

    def exponent_quadrature(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        return quadrature.lk_exponent_1d(self.density, float(xi[0]), symmetric=self.symmetric,
                                         tail_radius=self.tail_radius)

    def tail_mass(self, eps):
        return quadrature.radial_mass(self.density, eps, tail_radius=self.tail_radius)

    def side_mass(self, eps, side):
        f = self.density if side > 0 else (lambda y: self.density(-y))
        return quadrature.radial_mass(lambda y: f(y) if y > 0 else 0.0, eps,
                                      tail_radius=self.tail_radius)

    def small_second_moment(self, eps):
        return quadrature.radial_moment(self.density, 2, 0.0, eps, tail_radius=self.tail_radius)

    def first_moment(self, a, b):
        """int_{a < |y| <= b} y n(y) dy."""
        if self.symmetric:
            return 0.0
        return quadrature.radial_moment(self.density, 1, a, b, signed=True,
                                        tail_radius=self.tail_radius)

    def image(self, matrix):
        if matrix.shape != (1, 1):
            raise NotImplementedError("generic densities push forward under scalars only")
        f = float(matrix[0, 0])
        if f == 0.0:
            return NoJumps(1), np.zeros(1)
        base = self.density
        af = abs(f)
        new = Generic(lambda y: base(y / f) / af, 1, self.symmetric,
                      None if self.tail_radius is None else self.tail_radius * af,
                      name=f"{self.name}*{f:g}")
        # int f y (1{|f y|<=1} - 1{|y|<=1}) N(dy) = new_first(<=1) - f * old_first(<=1)
        corr = new.first_moment(0.0, 1.0) - f * self.first_moment(0.0, 1.0)
        return new, np.array([corr])
