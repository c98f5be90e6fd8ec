import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mwi_forge.errors import CutoffTooSmall, NotGloballyHyperbolic, OutOfLattice
from mwi_forge.functionals import FieldConfiguration, LocalFunctional, TestFunction, random_field
from mwi_forge.lattice_spacetime import CausalOrder, Lattice
from mwi_forge.symmetry_group import (
    SymmetryTransformation, affine_at, block_translation, compose, cyclic_shift, field_sign_flip,
    identity, random_generator, spatial_reflection, transposition, word_product,
)

from conftest import phi

LAT = Lattice(6, 6)


def random_local(rng, sites=None):
    sites = sorted(sites or LAT.sites)
    F = LocalFunctional.constant(rng.randint(-2, 2))
    for _ in range(3):
        s = rng.choice(sites)
        F = F + Fraction(rng.randint(-4, 4), rng.randint(1, 3)) * phi(*s) ** rng.randint(1, 3)
    return F


def test_identity_is_neutral():
    g = affine_at(LAT, (2, 2), 3, 1)
    assert compose(identity(LAT), g) == g == compose(g, identity(LAT))


def test_pure_permutations_compose():
    a = transposition(LAT, (1, 1), (1, 2))
    b = transposition(LAT, (1, 2), (1, 3))
    ab = compose(a, b)
    assert ab.chi == {(1, 1): (1, 2), (1, 2): (1, 3), (1, 3): (1, 1)}
    assert ab == cyclic_shift(LAT, [(1, 1), (1, 2), (1, 3)])


def test_field_map_and_bijection_commute():
    rng = random.Random(3)
    chi = transposition(LAT, (2, 1), (2, 4))
    Phi = SymmetryTransformation(LAT, 1, {(2, 1): 2, (3, 3): -1}, {(2, 1): Fraction(1, 2)})
    # (Phi, e)(e, chi) = (e, chi)(chi^-1 Phi, e), with chi^-1 Phi read off chi
    moved = SymmetryTransformation(
        LAT, 1, {chi.chi_inverse(s): m for s, m in Phi.A.items()},
        {chi.chi_inverse(s): v for s, v in Phi.phi0.items()})
    lhs, rhs = compose(Phi, chi), compose(chi, moved)
    for _ in range(5):
        field = random_field(LAT, rng)
        assert lhs.field_map(field) == rhs.field_map(field)
    assert lhs == rhs


def test_push_of_identity():
    F = phi(1, 1) ** 2 + phi(3, 4)
    assert identity(LAT).push(F) == F


def test_transposition_moves_variables():
    g = transposition(LAT, (2, 1), (2, 3))
    assert g.push(phi(2, 1) ** 2) == phi(2, 3) ** 2


def test_affine_push_matches_evaluation():
    rng = random.Random(8)
    g = SymmetryTransformation(LAT, 1, {s: 2 for s in [(1, 1), (1, 2)]})
    F = 3 * phi(1, 1) - phi(1, 2) + phi(4, 4)
    assert g.push(F) == 6 * phi(1, 1) - 2 * phi(1, 2) + phi(4, 4)
    for _ in range(5):
        field = random_field(LAT, rng)
        assert g.push(F).evaluate(field) == F.evaluate(g.field_map(field))


def test_push_outside_lattice_is_rejected():
    with pytest.raises(OutOfLattice):
        identity(LAT).push(LocalFunctional.var((9, 0)))


def test_action_of_identity_on_lagrangian(free6):
    F = phi(2, 2) ** 2
    assert identity(LAT).act_L(free6, F) == F
    assert not identity(LAT).delta_L(free6)


def test_reflection_is_a_symmetry(quartic6):
    refl = spatial_reflection(LAT)
    assert refl.is_symmetry_of(quartic6)
    F = phi(1, 0) ** 2
    assert refl.act_L(quartic6, F, TestFunction.ones(LAT)) == phi(1, 5) ** 2


def test_translation_distorts_only_near_its_support(free6):
    g = block_translation(LAT, [2], range(1, 5))
    d = g.delta_L(free6)
    assert d
    assert d.support() <= LAT.hull(g.support(), free6.radius())


def test_delta_L_needs_cutoff(free6):
    g = affine_at(LAT, (3, 3), 2)
    with pytest.raises(CutoffTooSmall):
        g.delta_L(free6, TestFunction.ones(LAT, {(3, 3)}))


def test_delta_L_cutoff_independence(free6):
    g = affine_at(LAT, (3, 3), 2, 1)
    near = TestFunction.ones(LAT, LAT.hull(g.support(), free6.radius()))
    assert g.delta_L(free6, near) == g.delta_L(free6, TestFunction.ones(LAT))


def test_time_reversing_bijection_is_rejected():
    g = transposition(LAT, (1, 1), (3, 1))
    with pytest.raises(NotGloballyHyperbolic):
        g.check_orientation(CausalOrder(LAT))
    transposition(LAT, (1, 1), (1, 4)).check_orientation(CausalOrder(LAT))


def test_word_product_matches_compose():
    gens = {"a": affine_at(LAT, (1, 1), 2, 1), "b": transposition(LAT, (1, 1), (1, 2))}
    w = word_product(gens, [("a", 1), ("b", -1), ("a", 1)], LAT)
    assert w == compose(compose(gens["a"], gens["b"].inverse()), gens["a"])


def test_sign_flip_is_an_involution():
    g = field_sign_flip(LAT, {(2, 2), (2, 3)})
    assert compose(g, g).is_identity()


seeds = st.integers(0, 100_000)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_group_axioms(seed):
    rng = random.Random(seed)
    g, h, k = (random_generator(rng, LAT) for _ in range(3))
    assert compose(compose(g, h), k) == compose(g, compose(h, k))
    assert compose(g.inverse(), g).is_identity()
    assert compose(g, g.inverse()).is_identity()
    assert compose(g, h).support() <= g.support() | h.support()


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_push_is_an_action(seed):
    rng = random.Random(seed)
    g, h = random_generator(rng, LAT), random_generator(rng, LAT)
    F = random_local(rng)
    assert compose(g, h).push(F) == g.push(h.push(F))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_lagrangian_action_laws(seed):
    rng = random.Random(seed)
    from mwi_forge.functionals import free_lagrangian
    L = free_lagrangian(LAT, potential={4: Fraction(1, 24)})
    g, h = random_generator(rng, LAT), random_generator(rng, LAT)
    F = random_local(rng)
    gh = compose(g, h)
    assert gh.act_L(L, F) == g.act_L(L, h.act_L(L, F))
    assert gh.delta_L(L) == g.push(h.delta_L(L)) + g.delta_L(L)
