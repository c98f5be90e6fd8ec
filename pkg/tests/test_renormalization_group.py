import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mwi_forge import renormalization_group as rg
from mwi_forge.errors import CutoffTooSmall
from mwi_forge.functionals import LocalFunctional, TestFunction, free_lagrangian
from mwi_forge.lattice_spacetime import Lattice
from mwi_forge.renormalization_group import (
    FunctionalSpace, NormalOrderingKernel, RGElement, alpha_K, apply, compose, conjugate_by_symmetry,
    constant_shift, equal_on, exp_parameter, group_commutator, identity, invert, lie_bracket, lie_scale,
    multi, mu_w, normal_ordering_element, prop_Z_suite, random_element, series_coefficient,
    shift_element, support_preservation, with_interaction,
)
from mwi_forge.symmetry_group import affine_at, identity as group_identity, transposition

from conftest import phi

LAT = Lattice(6, 6)
L = free_lagrangian(LAT)
SITES = [(2, 2), (2, 3)]
SPACE = FunctionalSpace(SITES, 1, 2)
ZERO = LocalFunctional()
ID = identity()
LIE_ZERO = RGElement(4, ZERO, {}, kind="lie")


def kernel(*entries):
    return NormalOrderingKernel({(a, b): c for a, b, c in entries})


K1 = kernel(((2, 2), (2, 2), 1))
K2 = kernel(((2, 3), (2, 3), Fraction(1, 2)), ((2, 2), (2, 3), Fraction(1, 3)))


def same(a, b, space=SPACE, max_n=None):
    good, witness = equal_on(a, b, space, max_n)
    assert good, witness


def test_identity_and_constant_shift_apply():
    F = phi(2, 2) ** 3 + 4 * phi(2, 3)
    assert apply(ID, F) == F
    assert apply(constant_shift(7), F) == F + 7


def test_alpha_on_quadratic_adds_half_contraction():
    assert apply(alpha_K(K1), phi(2, 2) ** 2) == phi(2, 2) ** 2 + 1
    assert apply(alpha_K(K2), phi(2, 2) * phi(2, 3)) == phi(2, 2) * phi(2, 3) + Fraction(1, 3)


def test_alpha_on_quartic_is_the_contraction_exponential():
    x = phi(2, 2)
    # exp(1/2 d^2) x^4 = x^4 + 6 x^2 + 3
    assert apply(alpha_K(K1), x ** 4) == x ** 4 + 6 * x ** 2 + 3


def test_identity_is_neutral():
    rng = random.Random(2)
    Z = random_element(rng, SPACE)
    same(compose(ID, Z), Z)
    same(compose(Z, ID), Z)


def test_shifts_add():
    same(compose(constant_shift(2), constant_shift(Fraction(1, 3))), constant_shift(Fraction(7, 3)))
    C, D = phi(2, 2), 2 * phi(2, 3)
    F = phi(2, 2) ** 2
    assert apply(compose(shift_element(C), shift_element(D)), F) == F + C + D


def test_kernels_add_under_composition():
    space = FunctionalSpace(SITES, 1, 4)
    same(compose(alpha_K(K1), alpha_K(K2)), alpha_K(K1 + K2), space)


def test_inverse_of_identity_and_alpha():
    same(invert(ID), ID)
    space = FunctionalSpace(SITES, 1, 4)
    same(invert(alpha_K(K2)), alpha_K(-K2), space)


def test_inverse_expansion_to_second_order():
    rng = random.Random(11)
    full = random_element(rng, SPACE, order=3, kind="lie", name="z")
    # without z_3 every term of <z'(F), z(F)> has arity at most 3, so truncation loses nothing
    z = RGElement(3, full.z0, {n: full.coeffs[n] for n in (1, 2)}, kind="lie", name="z")
    Zinv = invert(exp_parameter(z, order_lambda=3))
    for _ in range(4):
        F = SPACE.random_functional(rng)
        zF = apply(z, F)
        derivative = ZERO
        for n, co in z.coeffs.items():
            derivative = derivative + multi(co, [F] * (n - 1) + [zF]) / math.factorial(n - 1)
        assert apply(series_coefficient(Zinv, 0, "group"), F) == F
        assert apply(series_coefficient(Zinv, 1), F) == -zF
        assert apply(series_coefficient(Zinv, 2), F) == derivative


def test_bracket_of_element_with_itself_vanishes():
    rng = random.Random(4)
    z = random_element(rng, SPACE, kind="lie")
    same(lie_bracket(z, z), LIE_ZERO)


def test_bracket_of_linear_elements_is_the_commutator():
    a = RGElement(4, ZERO, {1: rg.Coefficient(1, lambda ms: LocalFunctional({ms[0]: 1}).derivative(((2, 2), 0)) * phi(2, 3), unit=0)}, kind="lie")
    b = RGElement(4, ZERO, {1: rg.Coefficient(1, lambda ms: LocalFunctional({ms[0]: 1}).derivative(((2, 3), 0)) * phi(2, 2), unit=0)}, kind="lie")
    F = phi(2, 2) ** 2 + phi(2, 3)
    assert apply(lie_bracket(a, b), F) == apply(a, apply(b, F)) - apply(b, apply(a, F))


def test_group_commutator_expansion():
    rng = random.Random(9)
    za = random_element(rng, SPACE, kind="lie", name="a")
    zb = random_element(rng, SPACE, kind="lie", name="b")
    comm = group_commutator(exp_parameter(za), exp_parameter(zb))
    same(series_coefficient(comm, 1), LIE_ZERO)
    same(series_coefficient(comm, 2), lie_bracket(za, zb))


def test_jacobi_identity_below_truncation():
    rng = random.Random(13)
    a, b, c = (random_element(rng, SPACE, order=3, kind="lie", name=n) for n in "abc")
    total = lie_bracket(a, lie_bracket(b, c))
    for x, y, z in ((b, c, a), (c, a, b)):
        other = lie_bracket(x, lie_bracket(y, z))
        total = RGElement(3, total.z0 + other.z0,
                          {n: rg.Coefficient(n, (lambda p, q: lambda ms: p.on(ms) + q.on(ms))(total.coeffs[n], other.coeffs[n]), unit=0)
                           for n in total.coeffs}, kind="lie")
    same(total, RGElement(3, ZERO, {}, kind="lie"), max_n=2)


def test_identity_has_all_properties():
    rep = rg.check_properties(ID, L, trials=4, rng=random.Random(0), space=SPACE)
    assert all(good for good, _ in rep.values())


def test_alpha_has_all_properties():
    rep = rg.check_properties(alpha_K(K2), L, trials=4, rng=random.Random(0), space=SPACE)
    assert all(good for good, _ in rep.values())
    prop = prop_Z_suite(alpha_K(K2), L, trials=4, rng=random.Random(1), space=SPACE)
    assert all(good for good, _ in prop.values())


def test_gradient_square_breaks_only_dynamics():
    rep = rg.check_properties(mu_w({(2, 2): Fraction(1, 2)}), L, trials=4, rng=random.Random(0), space=SPACE)
    failed = sorted(k for k, (good, _) in rep.items() if not good)
    assert failed == ["iii"]
    assert rep["iii"][1]["difference"]


def test_interaction_transport():
    W = phi(2, 2) ** 4 / 24
    f = TestFunction.ones(LAT)
    same(with_interaction(ID, W, f), ID)
    Z = alpha_K(K1)
    same(with_interaction(Z, ZERO, f), Z)
    near = TestFunction.ones(LAT, LAT.hull(Z.support, 1))
    space = FunctionalSpace(SITES, 1, 3)
    same(with_interaction(Z, W, f), with_interaction(Z, W, near), space)
    with pytest.raises(CutoffTooSmall):
        with_interaction(Z, W, TestFunction(LAT))


def test_interaction_transport_is_a_homomorphism():
    W = phi(2, 2) ** 3 / 6 + phi(2, 3) ** 2
    f = TestFunction.ones(LAT)
    A, B = alpha_K(K1), alpha_K(K2)
    space = FunctionalSpace(SITES, 1, 3)
    same(with_interaction(compose(A, B), W, f),
         compose(with_interaction(A, W, f), with_interaction(B, W, f)), space)
    same(invert(with_interaction(A, W, f)), with_interaction(invert(A), W, f), space)


def test_symmetry_conjugation():
    Z = alpha_K(K2)
    same(conjugate_by_symmetry(Z, group_identity(LAT), L), Z)
    g = affine_at(LAT, (2, 2), 2, 1)
    c = constant_shift(3)
    same(conjugate_by_symmetry(c, g, L), c)


def test_conjugation_composes():
    Z = alpha_K(K2)
    g = affine_at(LAT, (2, 2), 2, 1)
    h = transposition(LAT, (2, 2), (2, 3))
    same(conjugate_by_symmetry(conjugate_by_symmetry(Z, g, L), h, L), conjugate_by_symmetry(Z, g * h, L))


def test_normal_ordering_element():
    same(normal_ordering_element(NormalOrderingKernel({})), ID)
    Z = normal_ordering_element(K2)
    assert apply(Z, 3 * phi(2, 2) + 1) == 3 * phi(2, 2) + 1
    assert (apply(Z, phi(2, 3) ** 2) - phi(2, 3) ** 2).is_constant()


def test_support_preservation():
    Z = alpha_K(K2)
    F, G = phi(2, 2) ** 2 * phi(2, 3), phi(2, 3) ** 2
    assert support_preservation(Z, F, G)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10_000))
def test_group_laws_on_random_elements(seed):
    rng = random.Random(seed)
    space = FunctionalSpace([(2, 2)], 1, 2)
    A, B, C = (random_element(rng, space, order=3, name=n) for n in "ABC")
    same(compose(compose(A, B), C), compose(A, compose(B, C)), space)
    same(compose(A, invert(A)), identity(3), space)
    same(compose(invert(A), A), identity(3), space)
    same(invert(compose(A, B)), compose(invert(B), invert(A)), space)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10_000))
def test_bracket_is_antisymmetric(seed):
    rng = random.Random(seed)
    a = random_element(rng, SPACE, order=3, kind="lie")
    b = random_element(rng, SPACE, order=3, kind="lie")
    same(lie_bracket(a, b), lie_scale(lie_bracket(b, a), -1))
