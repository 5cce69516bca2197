import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feller import symbol as S
from feller.jumps import CompoundPoisson, Discrete, Gaussian, Generic, NoJumps, SymmetricStable

reals = st.floats(-50, 50, allow_nan=False)
freqs = st.floats(-1e3, 1e3, allow_nan=False)

BUILTINS = {
    "brownian": S.brownian(),
    "cauchy": S.cauchy(),
    "stable_0.9": S.symmetric_stable(0.9),
    "stable_1.9": S.symmetric_stable(1.9),
    "compound_poisson": S.compound_poisson(2.0, 1.0),
    "compound_poisson_gauss": S.compound_poisson(1.5, Gaussian([0.3], [[0.49]])),
    "figure1": S.figure1_symbol(),
    "sde_cauchy": S.symbol_from_sde(lambda x: np.array([[1.0 + 0.5 * math.tanh(x[0])]]),
                                    S.cauchy()),
}


def test_brownian_value():
    assert S.eval_symbol(S.brownian(3), [1, 2, 3], [1, 0, 0]) == pytest.approx(0.5)


def test_figure1_value():
    assert S.eval_symbol(S.figure1_symbol(), [2.0], [3.0]) == pytest.approx(3 ** 1.9)
    assert S.eval_symbol(S.figure1_symbol(), [2.0], [3.0]).real == pytest.approx(8.0636, abs=1e-4)


def test_compound_poisson_point_mass_closed_vs_quadrature():
    sym = S.compound_poisson(1.0, 1.0)
    closed = S.eval_symbol(sym, [0.0], [math.pi], method="closed")
    quad = S.eval_symbol(sym, [0.0], [math.pi], method="quadrature")
    assert closed == pytest.approx(2.0, abs=1e-14)
    assert quad == pytest.approx(2.0, abs=1e-12)


def test_raw_point_mass_triplet_uses_closed_unit_ball():
    # N = delta_1 with zero drift: the jump at |y| = 1 lies in the compensated ball
    t = S.LevyTriplet([0.0], [[0.0]], CompoundPoisson(1.0, Discrete([[1.0]], [1.0])))
    assert t.exponent(np.array([math.pi])) == pytest.approx(2.0 + 1j * math.pi)


@pytest.mark.parametrize("alpha", [0.9, 1.5, 1.9])
def test_alpha_clamps(alpha):
    assert S.figure1_alpha(np.array([-5.0])) == 0.9
    assert S.figure1_alpha(np.array([7.0])) == 1.9
    assert S.figure1_alpha(np.array([alpha - 0.9])) == pytest.approx(alpha)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_pass_all_checks(name):
    sym = BUILTINS[name]
    assert S.check_condition_A3(sym).passed
    a2 = S.check_condition_A2(sym)
    assert a2.passed and math.isfinite(a2.constant)
    assert all(r.passed for r in S.check_structural(sym))


def test_stable_like_a2_constant_at_most_one():
    assert S.check_condition_A2(S.figure1_symbol()).constant <= 1.0


def test_brownian_a2_constant_half():
    assert S.check_condition_A2(S.brownian()).constant == pytest.approx(0.5, rel=1e-4)


def test_killing_fixture_fails_a3_with_witness():
    r = S.check_condition_A3(S.killing_fixture(1.0))
    assert not r.passed
    assert r.witness[2] == pytest.approx(1.0)


def test_cubic_fixture_fails_a2():
    r = S.check_condition_A2(S.cubic_fixture())
    assert not r.passed
    assert abs(r.witness[1][0]) == pytest.approx(1e3)


def test_negative_real_part_fixture_fails():
    sym = S.custom(1, lambda x: None, lambda x, xi: complex(-xi[0] ** 2), name="neg")
    reports = {r.condition: r for r in S.check_structural(sym, [[0.0]], [[-1.0], [1.0]])}
    bad = reports["RealPartNonneg"]
    assert not bad.passed
    assert bad.witness[2] == pytest.approx(-1.0)


def test_failed_report_needs_witness():
    with pytest.raises(ValueError):
        S.ConditionReport("A3", False)


def test_stable_like_conjugate_pair_real():
    sym = S.figure1_symbol()
    a, b = S.eval_symbol(sym, [0.5], [2.0]), S.eval_symbol(sym, [0.5], [-2.0])
    assert a.imag == 0 and a == b


def test_dimension_mismatch():
    with pytest.raises(S.DimensionError):
        S.eval_symbol(S.brownian(2), [0.0], [1.0, 2.0])


def test_sde_examples():
    brown = S.symbol_from_sde(lambda x: np.eye(2), S.brownian(2))
    assert S.eval_symbol(brown, [3.0, -1.0], [1.0, 2.0]) == pytest.approx(2.5)
    cauchy2 = S.symbol_from_sde(lambda x: np.array([[2.0]]), S.cauchy())
    assert S.eval_symbol(cauchy2, [7.0], [-1.5]) == pytest.approx(3.0)
    lin = S.symbol_from_sde(lambda x: np.array([[x[0]]]), S.brownian())
    for x in (-2.0, 1.0, 3.0):
        assert lin.triplet_at(np.array([x])).diffusion[0, 0] == pytest.approx(x * x)
        for xi in (-1.0, 0.5, 4.0):
            want = 0.5 * x * x * xi * xi
            assert S.eval_symbol(lin, [x], [xi]) == pytest.approx(want)
            assert S.eval_symbol(lin, [x], [xi], method="quadrature") == pytest.approx(want)


def test_sde_shape_mismatch():
    sym = S.symbol_from_sde(lambda x: np.ones((2, 3)), S.brownian(1))
    with pytest.raises(S.DimensionError):
        S.eval_symbol(sym, [0.0], [1.0])


@pytest.mark.parametrize("alpha", [0.9, 1.5, 1.9])
def test_stable_quadrature_matches_closed_form_on_standard_grid(alpha):
    sym = S.symmetric_stable(alpha)
    for xi in S.default_xi_grid(1):
        closed = S.eval_symbol(sym, [0.0], xi, method="closed")
        quad = S.eval_symbol(sym, [0.0], xi, method="quadrature")
        assert abs(closed - quad) <= 1e-6 * (1 + abs(closed))


def test_triplet_validation():
    with pytest.raises(ValueError):
        S.LevyTriplet([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]], NoJumps(2))
    with pytest.raises(ValueError):
        S.LevyTriplet([0.0], [[-1.0]], NoJumps(1))
    with pytest.raises(ValueError):
        S.LevyTriplet([0.0], [[1.0]], NoJumps(1), killing=-1.0)
    with pytest.raises(ValueError):
        SymmetricStable(2.0, 1.0, 1)
    with pytest.raises(ValueError):
        CompoundPoisson(1.0, Discrete([[1.0], [2.0]], [0.5, 0.6]))


def test_generic_rejects_non_levy_density():
    with pytest.raises(ValueError):
        Generic(lambda y: abs(y) ** -3.5)  # int y^2 n(y) diverges at 0
    with pytest.raises(ValueError):
        Generic(lambda y: abs(y) ** -0.5)  # infinite mass at infinity


@given(st.sampled_from(sorted(BUILTINS)), reals, freqs)
def test_real_part_nonnegative(name, x, xi):
    assert S.eval_symbol(BUILTINS[name], [x], [xi]).real >= -1e-10


@given(st.sampled_from(sorted(BUILTINS)), reals, freqs)
def test_conjugate_symmetry(name, x, xi):
    sym = BUILTINS[name]
    a, b = S.eval_symbol(sym, [x], [xi]), S.eval_symbol(sym, [x], [-xi])
    assert abs(b - a.conjugate()) <= 1e-10 * (1 + abs(a))


@given(st.sampled_from(sorted(BUILTINS)), reals)
def test_no_killing(name, x):
    assert abs(S.eval_symbol(BUILTINS[name], [x], [0.0])) <= 1e-10


@given(st.floats(-3, 3), st.floats(-100, 100))
def test_sde_constant_coefficient_is_exact(f, xi):
    drv = S.symmetric_stable(1.3)
    sym = S.symbol_from_sde(lambda x: np.array([[f]]), drv)
    assert S.eval_symbol(sym, [0.0], [xi]) == S.eval_symbol(drv, [0.0], [f * xi])


@given(st.floats(1.0, 1e3), st.floats(1.5, 10.0))
def test_a2_constant_monotone_in_grid(hi, factor):
    sym = S.figure1_symbol()
    small = S.default_xi_grid(1, 21, 1e-2, hi)
    big = np.vstack([small, S.default_xi_grid(1, 21, 1e-2, hi * factor)])
    xg = [[-1.0], [0.0], [2.0]]
    assert (S.check_condition_A2(sym, xg, big).constant
            >= S.check_condition_A2(sym, xg, small).constant)


@given(st.floats(0.05, 1.95), st.floats(0.2, 5.0), st.floats(-30, 30))
def test_stable_scale_closed_form(alpha, scale, xi):
    got = S.eval_symbol(S.symmetric_stable(alpha, scale), [0.0], [xi])
    assert got == pytest.approx(scale ** alpha * abs(xi) ** alpha, rel=1e-12, abs=1e-300)
