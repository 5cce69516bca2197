"""Adaptive quadrature for one-dimensional Levy measures given by a density.

The Levy-Khinchine jump integral is split at the unit ball and again at
``pi / |xi|`` so that the part next to the origin is handled in the
cancellation-free form ``2 sin(xi y / 2)**2`` and the oscillatory remainder
goes to QUADPACK's Fourier-weighted rules (QAWO on finite ranges, QAWF on the
tail).
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

INNER_RTOL = 1e-10
TAIL_ATOL = 1e-12
LIMIT = 400


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def _quad(f, a, b, **kw):
    kw.setdefault("limit", LIMIT)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, **kw)[:2]
    return val, err


def _quad_log(f, a, b):
    """Integrate ``f`` over ``[a, b]`` (0 < a < b) after substituting y = exp(t)."""
    if b <= a:
        return 0.0, 0.0
    la, lb = math.log(a), math.log(b)
    return _quad(lambda t: f(math.exp(t)) * math.exp(t), la, lb,
                 epsabs=TAIL_ATOL, epsrel=INNER_RTOL)


def _quad_to_inf(f, a, tail_radius=None):
    """Integrate ``f`` over ``[a, inf)`` (or up to ``tail_radius``)."""
    if tail_radius is not None:
        if tail_radius <= a:
            return 0.0, 0.0
        return _quad_log(f, a, tail_radius)
    # y = a / t maps the tail onto (0, 1]; QAGI alone misjudges slow power tails
    def g(t):
        return f(a / t) * a / (t * t)
    return _quad_origin(g, 1.0)


def _quad_origin(f, b):
    """Integrate ``f`` over ``(0, b]`` where ``f`` may be singular at 0."""
    # geometric split towards the origin keeps each piece well conditioned
    total = 0.0
    err = 0.0
    hi = b
    for _ in range(40):
        lo = hi * 1e-2
        v, e = _quad(f, lo, hi, epsabs=TAIL_ATOL * 1e-2, epsrel=INNER_RTOL)
        total += v
        err += e
        hi = lo
        if abs(v) <= 1e-16 * max(abs(total), 1e-300) or hi < 1e-300:
            break
    v, e = _quad(f, 0.0, hi, epsabs=TAIL_ATOL * 1e-2, epsrel=INNER_RTOL)
    return total + v, err + e


def radial_mass(density, a, b=math.inf, tail_radius=None):
    """Integral of ``density(y) + density(-y)`` over ``a < y <= b`` (0 < a)."""
    def s(y):
        return density(y) + density(-y)
    if math.isinf(b):
        v, _ = _quad_to_inf(s, a, tail_radius)
    else:
        v, _ = _quad_log(s, a, b)
    return v


def radial_moment(density, power, a, b, signed=False, tail_radius=None):
    """Integral of ``|y|**power`` (times sign(y) if ``signed``) over ``a < |y| <= b``.

    ``a`` may be 0 (origin singularity allowed); ``b`` may be ``inf``.
    """
    if signed:
        def g(y):
            return y ** power * (density(y) - density(-y))
    else:
        def g(y):
            return y ** power * (density(y) + density(-y))
    if b <= a:
        return 0.0
    if a == 0.0:
        head, _ = _quad_origin(g, min(b, 1.0))
        if b > 1.0:
            head += radial_moment(density, power, 1.0, b, signed, tail_radius)
        return head
    if math.isinf(b):
        v, _ = _quad_to_inf(g, a, tail_radius)
    else:
        if tail_radius is not None:
            b = min(b, tail_radius)
        v, _ = _quad_log(g, a, b) if b > a else (0.0, 0.0)
    return v


def lk_exponent_1d(density, xi, symmetric=False, tail_radius=None, rtol=1e-7):
    """Jump part of a 1-d symbol by quadrature.

    Returns ``-int (exp(i xi y) - 1 - i xi y 1{|y|<=1}) density(y) dy``.

    Raises QuadratureError when the summed error estimate exceeds
    ``rtol * (1 + |result|)``.
    """
    xi = float(xi)
    if xi == 0.0:
        return 0j
    r = abs(xi)
    sign = 1.0 if xi > 0 else -1.0

    def s(y):
        return density(y) + density(-y)

    def dlt(y):
        return density(y) - density(-y)

    a = min(1.0, math.pi / r)
    errs = []

    # real part: int_0^inf (1 - cos(r y)) s(y) dy
    v, e = _quad_origin(lambda y: 2.0 * math.sin(0.5 * r * y) ** 2 * s(y), a)
    real = v
    errs.append(e)
    if a < 1.0:
        m, e1 = _quad_log(s, a, 1.0)
        c, e2 = _quad(s, a, 1.0, weight="cos", wvar=r, epsabs=TAIL_ATOL, epsrel=INNER_RTOL)
        real += m - c
        errs += [e1, e2]
    if tail_radius is None or tail_radius > 1.0:
        m, e1 = _quad_to_inf(s, 1.0, tail_radius)
        if tail_radius is None:
            c, e2 = _quad(s, 1.0, np.inf, weight="cos", wvar=r, epsabs=TAIL_ATOL)
        else:
            c, e2 = _quad(s, 1.0, tail_radius, weight="cos", wvar=r,
                          epsabs=TAIL_ATOL, epsrel=INNER_RTOL)
        real += m - c
        errs += [e1, e2]

    imag = 0.0
    if not symmetric:
        # int_0^inf (sin(r y) - r y 1{y<=1}) dlt(y) dy
        v, e = _quad_origin(lambda y: (math.sin(r * y) - r * y) * dlt(y), a)
        imag = v
        errs.append(e)
        if a < 1.0:
            c, e1 = _quad(dlt, a, 1.0, weight="sin", wvar=r, epsabs=TAIL_ATOL, epsrel=INNER_RTOL)
            m, e2 = _quad_log(lambda y: y * dlt(y), a, 1.0)
            imag += c - r * m
            errs += [e1, e2]
        if tail_radius is None:
            c, e1 = _quad(dlt, 1.0, np.inf, weight="sin", wvar=r, epsabs=TAIL_ATOL)
            imag += c
            errs.append(e1)
        elif tail_radius > 1.0:
            c, e1 = _quad(dlt, 1.0, tail_radius, weight="sin", wvar=r,
                          epsabs=TAIL_ATOL, epsrel=INNER_RTOL)
            imag += c
            errs.append(e1)
        imag *= sign

    value = complex(real, -imag)
    err = float(sum(errs))
    if not (math.isfinite(real) and math.isfinite(imag)):
        raise QuadratureError("non-finite quadrature result", value, err)
    if err > rtol * (1.0 + abs(value)):
        raise QuadratureError(
            f"quadrature error estimate {err:.3g} exceeds tolerance at xi={xi}", value, err)
    return value
