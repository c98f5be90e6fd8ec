import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mwi_forge import metric_interpolation as mi
from mwi_forge.errors import InequalityViolated, NotTimelike, UncertifiedChain

POINTS = mi.sample_grid(4, 1.0)
N = len(POINTS)
ETA = mi.minkowski(POINTS)
DT = mi.time_differential(POINTS)


def test_riemannianize_minkowski():
    gamma, a = mi.riemannianize(ETA, DT)
    assert np.allclose(a, 1.0)
    assert np.allclose(gamma, np.eye(4))


def test_riemannianize_scaled_metric():
    gamma, a = mi.riemannianize(4 * ETA, DT)
    assert np.allclose(a, 4.0)
    assert np.allclose(gamma, 4 * np.eye(4))
    assert np.all(np.linalg.eigvalsh(gamma)[:, 0] > 0)


def test_spacelike_differential_is_rejected():
    dx = np.zeros((N, 4))
    dx[:, 1] = 1.0
    with pytest.raises(NotTimelike):
        mi.riemannianize(ETA, dx)


def test_widen_minkowski():
    gamma, _ = mi.riemannianize(ETA, DT)
    X = mi.transversal_field(DT, DT)
    Gp = mi.widen(ETA, DT, gamma, 6, X)
    assert np.allclose(Gp, np.diag([5.0, -1, -1, -1]))
    assert np.allclose(mi.quad_form(Gp, X), 5.0)
    with pytest.raises(InequalityViolated):
        mi.widen(ETA, DT, gamma, 1)


def test_bridge_minkowski():
    gamma, _ = mi.riemannianize(ETA, DT)
    G01 = mi.bridge(DT, DT, gamma, gamma, 5, 1)
    assert np.allclose(G01, np.diag([1.0, -2, -2, -2]))
    d = np.ones(N)
    with pytest.raises(InequalityViolated):
        mi.bridge(DT, DT, gamma, gamma, 4, 1, d, d)


def test_trivial_constants():
    chain = mi.build_chain(ETA, ETA, DT, DT)
    assert (chain.k, chain.b, chain.c) == (6, 5, 1)
    report = mi.certify_chain(chain)
    assert all(v == 1.0 for v in report["pass_fraction"].values()) and not report["failures"]


def test_non_lorentzian_input_is_rejected():
    bad = ETA.copy()
    bad[:, 1, 1] = 1.0
    with pytest.raises(InequalityViolated):
        mi.build_chain(ETA, bad, DT, DT)


def test_perturbed_chain_is_certified():
    rng = np.random.default_rng(7)
    points = mi.sample_grid(10, 1.0)
    chain = mi.perturbed_chain(mi.random_perturbation(rng, 0.1), points, tilt=0.05)
    report = mi.certify_chain(chain, np.linspace(0, 1, 11))
    assert not report["failures"]
    assert min(report["min_margin"].values()) > 0
    assert mi.widening_holds(chain.metrics[0], chain.metrics[1], rng)
    assert mi.widening_holds(chain.metrics[4], chain.metrics[3], rng)
    assert mi.cone_containment(chain, rng)


def test_chain_inequalities_hold_by_construction():
    rng = np.random.default_rng(8)
    chain = mi.perturbed_chain(mi.random_perturbation(rng, 0.1), POINTS, tilt=0.1)
    mi.check_inequalities(chain.k, chain.b, chain.c, chain.d0, chain.d1, chain.a0, chain.a1)
    assert np.allclose(np.einsum("ni,ni->n", chain.dt0, chain.X), 1.0)
    assert np.allclose(np.einsum("ni,ni->n", chain.dt1, chain.X), 1.0)


def test_partition_telescopes():
    rng = np.random.default_rng(9)
    chain = mi.perturbed_chain(mi.random_perturbation(rng, 0.1), POINTS)
    F = mi.free_action_density(rng.normal(size=(N, 4)))
    with pytest.raises(UncertifiedChain):
        mi.partition_functional(F, chain)
    mi.certify_chain(chain)
    parts = mi.partition_functional(F, chain)
    assert len(parts) == 5
    assert abs(sum(parts) - F(chain.metrics[4])) <= 1e-10 * abs(F(chain.metrics[4]))
    constant = mi.partition_functional(lambda G: 2.5, chain)
    assert constant == [2.5, 0.0, 0.0, 0.0, 0.0]


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_small_perturbations_certify(seed):
    rng = np.random.default_rng(seed)
    chain = mi.perturbed_chain(mi.random_perturbation(rng, float(rng.uniform(0.01, 0.1))), POINTS)
    assert not mi.certify_chain(chain)["failures"]
