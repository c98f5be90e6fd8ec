from fractions import Fraction

import pytest

from mwi_forge.cocycles import (
    Cocycle, NoetherData, check_cocycle_relation, coboundary, constant_cocycle, conjugated,
    delta_zeta_h_L, equivalent, h_action, modified_action, mutate, offset_charge, rg_flow_map, theta_h,
    transport_interaction, trivial_cocycle, validate_split,
)
from mwi_forge.dynamical_algebra import mul, s
from mwi_forge.errors import InvalidSplit
from mwi_forge.functionals import FieldConfiguration, LocalFunctional, TestFunction, free_lagrangian
from mwi_forge.lattice_spacetime import Lattice
from mwi_forge.renormalization_group import (
    FunctionalSpace, NormalOrderingKernel, alpha_K, apply, constant_shift, equal_on, identity,
)
from mwi_forge.symmetry_group import affine_at, identity as group_identity, spatial_reflection, transposition

from conftest import phi

LAT = Lattice(6, 6)
FREE = free_lagrangian(LAT)
QUARTIC = free_lagrangian(LAT, potential={4: Fraction(1, 24)})
SHIFTS = {"s": affine_at(LAT, (2, 2), 1, 1, name="s"),
          "d": affine_at(LAT, (2, 4), 1, 1, name="d"),
          "e": affine_at(LAT, (3, 3), 1, 2, name="e")}
WEIGHTS = {(2, 2): 1, (2, 4): 2, (3, 3): 1}
MIXED = {"a": affine_at(LAT, (2, 1), 2, 1, name="a"),
         "b": transposition(LAT, (3, 1), (3, 2), name="b")}
K = NormalOrderingKernel({((2, 1), (2, 1)): 1, ((3, 1), (3, 2)): Fraction(1, 2)})
PAIRS = [(g, h) for g in ("s", "d", "e") for h in ("s", "d", "e")]


def charges():
    return constant_cocycle(FREE, SHIFTS, offset_charge(WEIGHTS), relations=["s d s^-1 d^-1"])


def cob():
    return coboundary(alpha_K(K), QUARTIC, MIXED, relations=["b b"])


def is_identity(Z, space):
    return equal_on(Z, identity(Z.order), space)[0]


def test_trivial_cocycle_is_identity_on_words():
    zeta = trivial_cocycle(QUARTIC, MIXED)
    space = zeta.default_space()
    for word in ("a", "b^-1", "a b a^-1", "a a^-1"):
        assert is_identity(zeta.evaluate(word), space)
    assert check_cocycle_relation(zeta, "a", "b")[0]


def test_constant_homomorphism_is_a_cocycle():
    zeta = charges()
    zeta.check_relations()
    for g, h in PAIRS:
        assert check_cocycle_relation(zeta, g, h)[0]
    assert zeta.evaluate("s d^-1 e").z0 == LocalFunctional.constant(1 - 2 + 2)


def test_non_homomorphic_charge_is_caught():
    squares = constant_cocycle(FREE, SHIFTS, lambda g: sum(v[0] ** 2 for v in g.phi0.values()))
    ok, witness = check_cocycle_relation(squares, "e", "e")
    assert not ok
    assert witness["coefficient"][0] == "Z_0"


def test_coboundary_satisfies_the_relation():
    zeta = cob()
    zeta.check_relations()
    for g in MIXED:
        for h in MIXED:
            assert check_cocycle_relation(zeta, g, h)[0]


def test_corrupted_image_is_detected():
    zeta = mutate(charges(), "d", Fraction(1, 7))
    failures = [(g, h) for g, h in PAIRS if not check_cocycle_relation(zeta, g, h)[0]]
    assert failures
    zeta = mutate(cob(), "a", alpha_K(NormalOrderingKernel({((2, 1), (2, 1)): 1})))
    ok, witness = check_cocycle_relation(zeta, "a", "b")
    assert not ok and witness["coefficient"]


def test_modified_action():
    F = phi(2, 1) ** 2 + phi(3, 2)
    g = MIXED["a"]
    trivial = trivial_cocycle(QUARTIC, MIXED)
    assert modified_action(trivial, g, F) == g.act_L(QUARTIC, F)
    assert modified_action(cob(), group_identity(LAT), F) == F


def test_modified_action_composes():
    zeta = cob()
    F = phi(2, 1) ** 2 + phi(3, 1) * phi(3, 2)
    g, h = MIXED["a"], MIXED["b"]
    assert modified_action(zeta, g * h, F) == modified_action(zeta, g, modified_action(zeta, h, F))


def test_equivalence():
    zeta = cob()
    assert equivalent(zeta, zeta, identity())[0]
    Z = alpha_K(NormalOrderingKernel({((3, 1), (3, 1)): 2}))
    other = conjugated(zeta, Z)
    assert equivalent(zeta, other, Z)[0]
    for g in MIXED:
        for h in MIXED:
            assert check_cocycle_relation(other, g, h)[0]
    unrelated = mutate(zeta, "a", Fraction(1, 2))
    ok, witness = equivalent(zeta, unrelated, identity())
    assert not ok and witness["generator"] == "a"


def test_interaction_transport():
    zeta = cob()
    assert transport_interaction(zeta, LocalFunctional()) is zeta
    W = phi(2, 1) ** 4 / 24
    moved = transport_interaction(zeta, W)
    assert moved.lagrangian == QUARTIC.plus(W)
    for g in MIXED:
        for h in MIXED:
            assert check_cocycle_relation(moved, g, h)[0]
    back = transport_interaction(moved, -W)
    space = FunctionalSpace([(2, 1), (3, 1), (3, 2)], 1, 2)
    for n in MIXED:
        assert equal_on(back.images[n], zeta.images[n], space)[0]
    trivial = transport_interaction(trivial_cocycle(QUARTIC, MIXED), W)
    assert all(is_identity(Z, space) for Z in trivial.images.values())


def test_symmetry_action_on_cocycles():
    zeta = cob()
    assert h_action(zeta, group_identity(LAT)) is zeta
    refl = spatial_reflection(LAT)
    moved = h_action(trivial_cocycle(QUARTIC, MIXED), refl)
    assert all(is_identity(Z, moved.default_space()) for Z in moved.images.values())
    hz = h_action(zeta, refl)
    assert hz.generators["b"].chi == {(3, 4): (3, 3), (3, 3): (3, 4)}
    for g in MIXED:
        for h in MIXED:
            assert check_cocycle_relation(hz, g, h)[0]


def test_theta_and_lagrangian_change_for_simple_cocycles():
    F = phi(2, 2) ** 2
    f = TestFunction.ones(LAT)
    field = FieldConfiguration.constant(LAT, 3)
    trivial = trivial_cocycle(FREE, SHIFTS)
    approximants = [SHIFTS["s"], SHIFTS["s"] * SHIFTS["d"] * SHIFTS["d"].inverse()]
    assert theta_h(trivial, approximants, F) == F
    assert theta_h(charges(), approximants, F) == F
    assert delta_zeta_h_L(trivial, approximants, f, field) == 0
    assert delta_zeta_h_L(charges(), approximants, f, field) == 0


def test_flow_map_of_trivial_cocycle_relabels():
    zeta = trivial_cocycle(FREE, SHIFTS)
    ctx = zeta.context()
    target = zeta.context(name="B")
    w = mul(s(phi(1, 1), ctx), s(phi(2, 2) ** 2, ctx))
    out = rg_flow_map(lambda F: theta_h(zeta, [SHIFTS["s"]], F), target, w)
    assert out.context is target and out.letters == w.letters


def test_zero_charge_elements_form_a_subgroup():
    zeta = charges()
    space = zeta.default_space()
    words = ["s s d^-1", "e s^-1", "d e^-1 e^-1 s s"]
    trivial = [w for w in words if is_identity(zeta.evaluate(w), space)]
    assert trivial == ["s s d^-1", "d e^-1 e^-1 s s"]
    a, b = trivial
    assert is_identity(zeta.evaluate(f"{a} {b}"), space)
    inverse = " ".join(f"{x[:-3]}" if x.endswith("^-1") else f"{x}^-1" for x in reversed(a.split()))
    assert is_identity(zeta.evaluate(inverse), space)


def test_exact_symmetry_gives_unit_noether_unitary():
    zeta = trivial_cocycle(QUARTIC, MIXED)
    refl = spatial_reflection(LAT)
    region = LAT.cauchy_slab(2, 2)
    nd = NoetherData(zeta, refl, refl, region, [])
    assert nd.unitary().is_identity()
    F = phi(2, 1) ** 2
    assert nd.rhs(F) == nd.s_prime(F)


def test_split_must_sum_to_the_lagrangian_change():
    with pytest.raises(InvalidSplit):
        validate_split(FREE, phi(0, 0), {(3, 3)}, [(phi(0, 1), LocalFunctional())])
    with pytest.raises(InvalidSplit):
        # a plus block in the causal past of the region is rejected
        validate_split(FREE, phi(0, 3), {(3, 3)}, [(phi(0, 3), LocalFunctional())])
