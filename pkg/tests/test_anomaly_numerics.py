import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from mwi_forge import anomaly_numerics as an
from mwi_forge.errors import OnLightCone
from mwi_forge.functionals import LocalFunctional
from mwi_forge.renormalization_group import FunctionalSpace, apply, compose, equal_on
from mwi_forge.rings import pi_poly, to_float


def test_propagator_values():
    assert an.feynman_propagator(np.array([0.0, 1, 0, 0])) == pytest.approx(1 / (4 * math.pi ** 2), rel=1e-15)
    assert an.feynman_propagator(np.array([2.0, 0, 0, 0])) == pytest.approx(-1 / (16 * math.pi ** 2), rel=1e-15)
    z = np.array([0.3, -1.2, 0.7, 2.0])
    assert an.feynman_propagator(z) == an.feynman_propagator(-z)


def test_propagator_rejects_light_cone():
    with pytest.raises(OnLightCone):
        an.feynman_propagator(np.array([1.0, 1.0, 0, 0]))


def test_fish_sides_by_hand():
    lhs, rhs = an.fish_sides(np.array([[0.0, 1, 0, 0]]))
    assert lhs[0, 1] == pytest.approx(1 / (16 * math.pi ** 4), rel=1e-15)
    assert rhs[0, 1] == pytest.approx(1 / (16 * math.pi ** 4), rel=1e-15)
    assert an.fish_identity_residual(np.array([[0.0, 1, 0, 0]]))[0] <= 1e-15
    assert an.fish_identity_residual(np.array([[3.0, 1, 0, 0]]))[0] < 1e-12


def test_gradient_routes_agree():
    z = an.random_off_cone_points(np.random.default_rng(1), 200)
    a, b = an.propagator_gradient_up(z), an.propagator_gradient_complex_step(z)
    assert np.max(np.abs(a - b) / np.abs(a).max(axis=1, keepdims=True)) < 1e-12


def test_random_points_cover_both_cones():
    z = an.random_off_cone_points(np.random.default_rng(2), 100)
    z2 = an.minkowski_square(z)
    assert np.sum(z2 > 0) == 50 and np.sum(z2 < 0) == 50
    assert np.all((np.abs(z2) >= 1e-2 * (1 - 1e-12)) & (np.abs(z2) <= 1e2 * (1 + 1e-12)))


def test_named_coefficients():
    assert to_float(an.SCALING_COEFFICIENT) == pytest.approx(1 / (32 * math.pi ** 2), rel=1e-15)
    assert to_float(an.FISH_COEFFICIENT) == pytest.approx(1 / (8 * math.pi ** 2), rel=1e-15)
    assert to_float(an.AXIAL_COEFFICIENT) == pytest.approx(1 / (16 * math.pi ** 2), rel=1e-15)
    assert to_float(an.TRIANGLE_COEFFICIENT) == pytest.approx(1 / (2 * math.pi ** 2), rel=1e-15)


def test_scaling_degenerate_inputs():
    assert an.scaling_delta_X(an.BumpFunction4(amplitude=0.0), 1.3) == 0.0
    assert an.scaling_delta_X(an.BumpFunction4(), 0.0) == 0.0


@pytest.mark.parametrize("kind", ["exp", "poly"])
def test_scaling_coefficient_against_adaptive_quadrature(kind):
    f = an.BumpFunction4(center=(0.1, -0.2, 0.0, 0.3), radius=(0.8, 1.1, 1.0, 0.7), amplitude=1.7, kind=kind)
    oracle = f.amplitude ** 2
    for i, (lo, hi) in enumerate(f.box()):
        g = f.factor(i)
        oracle *= quad(lambda x: float(g(np.array([x]))[0]) ** 2, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
    b = 0.75
    ratio = an.scaling_delta_X(f, b) / (b * oracle)
    assert abs(ratio * 32 * math.pi ** 2 - 1) < 1e-8


def test_scaling_cocycle_properties():
    f = an.BumpFunction4(kind="poly")
    b = 1.25
    assert an.scaling_cocycle(0.0, b, f)(2.5) == 2.5
    deriv = an.scaling_derivative_at_zero(b, f)
    assert abs(deriv - an.scaling_delta_X(f, b)) <= 1e-10 * abs(deriv)
    a, c = an.scaling_cocycle(0.3, b, f), an.scaling_cocycle(0.4, b, f)
    assert a.compose(c).shift == pytest.approx(a.shift + c.shift, rel=1e-14)
    assert a.compose(an.scaling_cocycle(-0.3, b, f)).shift == 0.0
    with pytest.raises(ValueError):
        an.scaling_cocycle(1.5, b, f)


def test_theta_for_scaling():
    f = an.BumpFunction4()
    assert an.theta_scaling(0.0, 1.0, f)(4.0) == 4.0
    assert an.theta_scaling(0.5, 1.0, f).shift == an.scaling_cocycle(0.5, 1.0, f).shift
    rng = np.random.default_rng(3)
    for _ in range(5):
        assert an.scaling_delta_L(rng.normal(size=8), rng.normal(size=8)) == 0.0


def test_lattice_scaling_element_is_exact():
    sites = [(0, 0), (0, 1), (1, 0)]
    weights = [Fraction(1, 2), Fraction(3), Fraction(-2, 3)]
    F = sum((w / 2 * LocalFunctional.var(s) ** 2 for s, w in zip(sites, weights)), LocalFunctional())
    lam, b = Fraction(1, 4), Fraction(2)
    got = apply(an.lattice_scaling_element(lam, b), F + 5) - F - 5
    assert got == LocalFunctional.constant(pi_poly(0, lam * b * sum(w * w for w in weights) / 32))


def test_lattice_scaling_is_additive_in_lambda():
    space = FunctionalSpace([(0, 0), (0, 1)], 1, 2)
    a = an.lattice_scaling_element(Fraction(1, 3), 2)
    c = an.lattice_scaling_element(Fraction(-1, 5), 2)
    assert equal_on(compose(a, c), an.lattice_scaling_element(Fraction(1, 3) - Fraction(1, 5), 2), space)[0]
    zero = compose(a, an.lattice_scaling_element(Fraction(-1, 3), 2))
    assert equal_on(zero, an.lattice_scaling_element(0, 2), space)[0]


def test_axial_pure_gauge_vanishes():
    value, scale, _ = an.axial_density_integral(an.pure_gauge_potential())
    assert abs(value) < 1e-6 * scale


def test_axial_matches_exact_integral():
    fx = an.default_axial_fixture()
    exact = float(fx.exact_integral())
    assert exact != 0
    lam = 0.5
    shift = an.axial_cocycle(lam, fx.potential())
    assert abs(shift / (-lam / (16 * math.pi ** 2) * exact) - 1) < 1e-6
    assert an.axial_cocycle(0.0, fx.potential()) == 0.0


def test_levi_civita_convention():
    eps = an.LEVI_CIVITA
    assert eps[0, 1, 2, 3] == 1 and eps[1, 0, 2, 3] == -1 and eps[0, 0, 1, 2] == 0
    assert np.allclose(eps, -np.swapaxes(eps, 0, 3))


def test_dilation_current_of_zero_and_linear_fields():
    x = np.random.default_rng(4).normal(size=(6, 4))
    zero = an.dilation_current(lambda y: np.zeros(len(y)), lambda y: np.zeros_like(y), x)
    assert np.all(zero == 0)
    c = np.array([0.5, -1.0, 0.25, 2.0])
    j = an.dilation_current(lambda y: y @ c, lambda y: np.tile(c, (len(y), 1)), x)
    c_up = c * np.array([1, -1, -1, -1])
    cc = c @ c_up
    expected = 2 * (x @ c)[:, None] * c_up - 0.5 * x * cc
    assert np.allclose(j, expected, rtol=1e-14, atol=1e-14)


def test_integration_by_parts_identity():
    phi = lambda x: np.sin(x[:, 0]) + 0.5 * x[:, 1] * x[:, 2]
    grad = lambda x: np.stack([np.cos(x[:, 0]), 0.5 * x[:, 2], 0.5 * x[:, 1], 0 * x[:, 3]], axis=1)
    beta = an.BumpFunction4(kind="poly", power=4)

    def grad_beta(x):
        out = np.empty_like(x)
        for mu in range(4):
            others = np.prod([(1 - x[:, i] ** 2) ** 4 for i in range(4) if i != mu], axis=0)
            out[:, mu] = -8 * x[:, mu] * (1 - x[:, mu] ** 2) ** 3 * others
        return out

    rel, _, _ = an.integration_by_parts_residual(beta, grad_beta, phi, grad, beta.box(), nodes=12)
    assert rel < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_fish_identity_on_random_batches(seed):
    z = an.random_off_cone_points(np.random.default_rng(seed), 50)
    assert np.max(an.fish_identity_residual(z)) <= 1e-12
