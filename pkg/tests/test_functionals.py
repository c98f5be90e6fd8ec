import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mwi_forge.errors import CutoffTooSmall
from mwi_forge.functionals import (
    FieldConfiguration, LocalFunctional, TestFunction, check_hammerstein, delta_L, forward_difference,
    free_lagrangian, generalized_field_of, generalized_support, parse_functional, random_field,
    relative_action, relative_action_support, slope_from_couplings,
)
from mwi_forge.lattice_spacetime import Lattice

from conftest import phi

LAT = Lattice(5, 5)


def naive_value(F, field):
    """Direct summation over monomials, independent of LocalFunctional.evaluate."""
    total = Fraction(0)
    for mono, coef in F.terms.items():
        term = Fraction(coef)
        for (site, comp), power in mono:
            term *= Fraction(field.value(site, comp)) ** power
        total += term
    return total


def random_functional(rng, lat, terms=4):
    """Sum of monomials on one site or on a site and its spatial neighbour, degree at most 4."""
    F = LocalFunctional.constant(rng.randint(-3, 3))
    sites = list(lat.sites)
    for _ in range(terms):
        s = rng.choice(sites)
        mono = Fraction(rng.randint(-5, 5), rng.randint(1, 4)) * phi(*s) ** rng.randint(1, 2)
        nb = lat.neighbour(s, 1, 1)
        if nb is not None and rng.random() < 0.5:
            mono = mono * phi(*nb) ** rng.randint(1, 2)
        F = F + mono
    return F


def test_linear_pairing_on_constant_field():
    F = phi(0, 0)
    assert F.evaluate(FieldConfiguration.constant(LAT, 3)) == 3


def test_quadratic_indicator():
    F = Fraction(1, 2) * phi(2, 2) ** 2
    assert F.evaluate(FieldConfiguration.delta(LAT, (2, 2), 2)) == 2


def test_evaluate_matches_direct_summation(rng):
    for _ in range(30):
        F = random_functional(rng, LAT)
        field = random_field(LAT, rng)
        assert F.evaluate(field) == naive_value(F, field)


def test_support_of_constant_is_empty():
    assert LocalFunctional.constant(7).support() == frozenset()


def test_support_of_square():
    assert (phi(1, 3) ** 2).support() == {(1, 3)}


def test_support_of_difference_includes_neighbour():
    F = forward_difference(LAT, (1, 1), 1) ** 2
    assert F.support() == {(1, 1), (1, 2)}
    # probe: shifting any other site leaves the value unchanged
    base = FieldConfiguration.constant(LAT, 1)
    for s in LAT.sites:
        moved = F.evaluate(base + FieldConfiguration.delta(LAT, s, 5)) != F.evaluate(base)
        assert moved == (s in F.support())


def test_shift_by_zero():
    F = phi(1, 1) ** 3 + 2
    assert F.shift(FieldConfiguration(LAT)) == F


def test_shift_of_linear_adds_constant():
    F = 4 * phi(1, 1)
    psi = FieldConfiguration.delta(LAT, (1, 1), Fraction(3, 2))
    assert F.shift(psi) == F + 6


def test_shift_of_quadratic_is_binomial():
    F = phi(2, 2) ** 2
    psi = FieldConfiguration.delta(LAT, (2, 2), 3)
    assert F.shift(psi) == F + 6 * phi(2, 2) + 9


def test_shift_composes():
    rng = random.Random(5)
    F = random_functional(rng, LAT)
    a, b = random_field(LAT, rng, density=0.3), random_field(LAT, rng, density=0.3)
    assert F.shift(a).shift(b) == F.shift(a + b)


def test_delta_L_of_zero_shift(free6):
    assert not delta_L(free6, FieldConfiguration(free6.lattice))


def test_delta_L_matches_hessian(free6):
    lat = free6.lattice
    psi = FieldConfiguration.delta(lat, (2, 2), 1)
    K = free6.hessian()
    v = ((2, 2), 0)
    expected = LocalFunctional.constant(Fraction(1, 2) * K.get((v, v), 0))
    for (a, b), c in K.items():
        if b == v:
            expected = expected + c * LocalFunctional.var(*a)
    assert delta_L(free6, psi) == expected


def test_delta_L_independent_of_cutoff(free6):
    lat = free6.lattice
    psi = FieldConfiguration.delta(lat, (2, 3), 2)
    small = TestFunction.ones(lat, lat.hull([(2, 3)], free6.radius()))
    assert delta_L(free6, psi, small) == delta_L(free6, psi, TestFunction.ones(lat))


def test_delta_L_rejects_small_cutoff(free6):
    lat = free6.lattice
    psi = FieldConfiguration.delta(lat, (2, 3), 2)
    with pytest.raises(CutoffTooSmall):
        delta_L(free6, psi, TestFunction.ones(lat, {(2, 3)}))


def test_generalized_field_of_functional():
    F = phi(1, 1) ** 2 + phi(1, 2) + 5
    A = generalized_field_of(F, LAT)
    assert A.at(TestFunction.ones(LAT, F.support())) == F
    assert A.at(TestFunction(LAT)) == LocalFunctional.constant(5)
    assert generalized_support(A) == F.support() == relative_action_support(A)


def test_relative_action_of_functional_field():
    F = phi(1, 1) ** 3 + phi(3, 2)
    A = generalized_field_of(F, LAT)
    psi = FieldConfiguration.delta(LAT, (1, 1), 2)
    assert relative_action(A, psi) == F.shift(psi) - F
    assert not relative_action(A, FieldConfiguration(LAT))


def test_equivalent_fields_share_relative_action():
    F = phi(2, 2) ** 2
    A = generalized_field_of(F, LAT)
    # B adds a term weighted by 1 - f(0,0), which vanishes wherever f is 1
    B = type(A)(lambda f: A.at(f) + (1 - f.value((0, 0))) * phi(0, 0), LAT, "B", 1)
    psi = FieldConfiguration.delta(LAT, (2, 2), 1)
    f = TestFunction.ones(LAT)
    assert relative_action(B, psi, f) == relative_action(A, psi, f)
    assert B.at(TestFunction(LAT)) != A.at(TestFunction(LAT))


def test_hammerstein_holds_for_local_functionals(rng):
    F = random_functional(rng, LAT)
    ok, witness = check_hammerstein(F, LAT, trials=10, rng=rng)
    assert ok and witness is None
    assert check_hammerstein(LocalFunctional.constant(3), LAT, trials=3)[0]


def test_bilocal_product_fails_hammerstein():
    s1, s2 = (0, 0), (4, 4)

    def bilocal(field):
        return field.value(s1) * field.value(s2)

    ok, (p, chi, psi) = check_hammerstein(bilocal, LAT, trials=1, separation=2)
    assert not ok
    assert not chi.support()
    assert p.support() | psi.support() <= set(LAT.sites)
    assert bilocal(p + chi + psi) == 1 and bilocal(p + chi) - bilocal(chi) + bilocal(chi + psi) == 0


def test_parse_functional_grammar():
    F = parse_functional("1/2*d_1 phi(2,2)^2 - 3*phi(4,0)*phi(4,1)", LAT)
    expected = Fraction(1, 2) * (phi(2, 3) - phi(2, 2)) ** 2 - 3 * phi(4, 0) * phi(4, 1)
    assert F == expected


def test_couplings_give_slopes():
    lat = Lattice(4, 4)
    L = free_lagrangian(lat, slope=2)
    a_t, a_x = L.couplings()[((1, 1), 0)]
    assert slope_from_couplings(a_t, a_x) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_shift_difference_stays_in_hull(seed):
    rng = random.Random(seed)
    L = free_lagrangian(LAT, potential={4: Fraction(1, 24)})
    psi = random_field(LAT, rng, density=0.15)
    d = L.total.shift(psi) - L.total
    assert d.support() <= LAT.hull(psi.support(), L.radius())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_delta_L_cutoff_independence(seed):
    rng = random.Random(seed)
    L = free_lagrangian(LAT, potential={3: Fraction(1, 6)})
    site = rng.choice(list(LAT.sites))
    psi = FieldConfiguration.delta(LAT, site, Fraction(rng.randint(1, 5), 2))
    need = LAT.hull([site], L.radius())
    bigger = TestFunction.ones(LAT, LAT.hull(need, rng.randint(0, 2)))
    assert delta_L(L, psi, TestFunction.ones(LAT, need)) == delta_L(L, psi, bigger)
