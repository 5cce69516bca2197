import math

import numpy as np
import pytest

from feller import quadrature as Q
from feller.jumps import stable_density_constant


def _stable(alpha):
    c = stable_density_constant(alpha)
    return lambda y: c * abs(y) ** (-1.0 - alpha)


@pytest.mark.parametrize("alpha", [0.5, 0.9, 1.0, 1.5, 1.9])
@pytest.mark.parametrize("xi", [-700.0, -3.0, 0.01, 0.4, 1.0, 25.0])
def test_stable_exponent(alpha, xi):
    got = Q.lk_exponent_1d(_stable(alpha), xi, symmetric=True)
    want = abs(xi) ** alpha
    assert abs(got - want) <= 1e-7 * (1 + want)


def test_stable_constant_alpha_one_is_one_over_pi():
    assert stable_density_constant(1.0) == pytest.approx(1.0 / math.pi, rel=1e-15)


@pytest.mark.parametrize("eps", [1e-3, 0.1, 1.0, 30.0])
def test_power_tail_mass(eps):
    # int_{|y| > eps} |y|^{-2.5} dy = 2 eps^{-1.5} / 1.5
    got = Q.radial_mass(lambda y: abs(y) ** -2.5, eps)
    assert got == pytest.approx(2 * eps ** -1.5 / 1.5, rel=1e-8)


def test_small_second_moment():
    # int_{|y| <= eps} y^2 |y|^{-2.5} dy = 2 * 2 eps^{0.5}
    got = Q.radial_moment(lambda y: abs(y) ** -2.5, 2, 0.0, 0.04)
    assert got == pytest.approx(4 * 0.2, rel=1e-8)


@pytest.mark.parametrize("xi", [-5.0, -0.3, 0.7, 2.0, 40.0])
def test_one_sided_exponential_density(xi):
    # finite measure e^{-y} dy on y > 0 with the unit-ball compensator:
    # q = 1 - 1/(1 - i xi) + i xi * int_0^1 y e^{-y} dy
    dens = lambda y: math.exp(-y) if y > 0 else 0.0
    want = 1 - 1 / (1 - 1j * xi) + 1j * xi * (1 - 2 / math.e)
    got = Q.lk_exponent_1d(dens, xi)
    assert abs(got - want) <= 1e-7 * (1 + abs(want))


@pytest.mark.parametrize("xi", [-8.0, 0.5, 3.0, 300.0])
def test_gamma_process_density(xi):
    # infinite activity e^{-y}/y on y > 0: q = log(1 - i xi) + i xi (1 - e^{-1})
    dens = lambda y: math.exp(-y) / y if y > 0 else 0.0
    want = np.log(1 - 1j * xi) + 1j * xi * (1 - math.exp(-1))
    got = Q.lk_exponent_1d(dens, xi)
    assert abs(got - want) <= 1e-7 * (1 + abs(want))


@pytest.mark.parametrize("xi", [0.2, 1.0, 9.0])
def test_compact_support_with_tail_radius(xi):
    # density 1 on 0 < |y| <= 2: q = 4 - 2 sin(2 xi) / xi
    dens = lambda y: 1.0 if abs(y) <= 2 else 0.0
    got = Q.lk_exponent_1d(dens, xi, symmetric=True, tail_radius=2.0)
    assert got == pytest.approx(4 - 2 * math.sin(2 * xi) / xi, rel=1e-8)


def test_zero_frequency_is_zero():
    assert Q.lk_exponent_1d(_stable(1.5), 0.0) == 0
