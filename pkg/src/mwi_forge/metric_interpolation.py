"""Five-metric interpolation between two Lorentz metrics, certified on sample grids.

Metrics are covariant ``4x4`` matrices per sample with signature ``(+,-,-,-)``;
time function differentials are covectors per sample.  Everything is vectorized
over the sample axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InequalityViolated, NotTimelike, UncertifiedChain

ETA = np.diag([1.0, -1.0, -1.0, -1.0])


def _outer(u, v):
    return np.einsum("ni,nj->nij", u, v)


def _sym_outer(u, v):
    return 0.5 * (_outer(u, v) + _outer(v, u))


def quad_form(G, Y):
    return np.einsum("ni,nij,nj->n", Y, G, Y)


def signature_margin(G):
    """``(ok, margin)`` per sample: one positive and three negative eigenvalues, margin = min |eig|."""
    ev = np.linalg.eigvalsh(G)
    ok = (ev[:, 3] > 0) & (ev[:, 2] < 0)
    return ok, np.abs(ev).min(axis=1)


def is_lorentzian(G, tol: float = 1e-12):
    ok, margin = signature_margin(G)
    return ok & (margin > tol)


def riemannianize(G, dt):
    """``gamma = 2 a dt^2 - g`` with ``a = 1 / g^-1(dt, dt)``; returns ``(gamma, a)``."""
    inv = np.linalg.inv(G)
    norm = np.einsum("ni,nij,nj->n", dt, inv, dt)
    bad = np.flatnonzero(norm <= 0)
    if bad.size:
        raise NotTimelike("dt is not timelike", int(bad[0]))
    a = 1.0 / norm
    gamma = 2 * a[:, None, None] * _outer(dt, dt) - G
    ev = np.linalg.eigvalsh(gamma)
    bad = np.flatnonzero(ev[:, 0] <= 0)
    if bad.size:
        raise NotTimelike("gamma is not positive definite", int(bad[0]))
    return gamma, a


def transversal_field(dt0, dt1):
    """Least-norm ``X`` with ``<dt0, X> = <dt1, X> = 1`` at every sample."""
    M = np.stack([dt0, dt1], axis=1)                 # (N, 2, 4)
    rhs = np.ones((len(dt0), 2))
    X = np.einsum("nij,nj->ni", np.linalg.pinv(M), rhs)
    bad = np.flatnonzero(np.abs(np.einsum("nki,ni->nk", M, X) - 1).max(axis=1) > 1e-9)
    if bad.size:
        raise InequalityViolated("no X with <dt_i, X> = 1", ("transversal", int(bad[0])))
    return X


def widen(G, dt, gamma, k, X=None):
    """``g' = k dt^2 - gamma``; checks Lorentz signature and ``X`` timelike."""
    Gp = k * _outer(dt, dt) - gamma
    bad = np.flatnonzero(~is_lorentzian(Gp))
    if bad.size:
        raise InequalityViolated("widened metric is not Lorentzian", ("widen", int(bad[0])))
    if X is not None:
        bad = np.flatnonzero(quad_form(Gp, X) <= 0)
        if bad.size:
            raise InequalityViolated("X is not timelike for the widened metric", ("widen-X", int(bad[0])))
    return Gp


def bridge(dt0, dt1, gamma0, gamma1, b, c, d0=None, d1=None, X=None):
    """``g_01 = b dt0 dt1 - c (dt0^2 + dt1^2) - gamma0 - gamma1``."""
    if d0 is not None and d1 is not None:
        bad = np.flatnonzero(~(b > 2 * c + d0 + d1))
        if bad.size:
            raise InequalityViolated("b > 2c + d0 + d1 fails", ("bridge", int(bad[0])))
    G = b * _sym_outer(dt0, dt1) - c * (_outer(dt0, dt0) + _outer(dt1, dt1)) - gamma0 - gamma1
    bad = np.flatnonzero(~is_lorentzian(G))
    if bad.size:
        raise InequalityViolated("bridge metric is not Lorentzian", ("bridge", int(bad[0])))
    if X is not None:
        bad = np.flatnonzero(quad_form(G, X) <= 0)
        if bad.size:
            raise InequalityViolated("X is not timelike for the bridge metric", ("bridge-X", int(bad[0])))
    return G


def choose_constants(d0, d1, a0, a1):
    """Integer constants: ``c = 1``, ``b`` and ``k`` the least integers meeting every inequality.

    Strict bounds ``s`` become ``floor(s) + 1`` and the non-strict bound
    ``b^2/4c - c`` becomes its ceiling.
    """
    c = 1
    b = math.floor(_snap(2 * c + float(np.max(d0 + d1)))) + 1
    strict = max(1 + float(np.max(d0)), 1 + float(np.max(d1)), 2 * float(np.max(a0)), 2 * float(np.max(a1)))
    k = max(math.floor(_snap(strict)) + 1, math.ceil(_snap(b * b / (4 * c) - c)))
    return k, b, c


def _snap(x: float, tol: float = 1e-9) -> float:
    """Round values within ``tol`` of an integer so float noise cannot move a bound across it."""
    r = round(x)
    return float(r) if abs(x - r) < tol else x


def check_inequalities(k, b, c, d0, d1, a0, a1):
    """Raise on the first violated chain inequality."""
    checks = [
        ("k > 1 + d0", k > 1 + d0), ("k > 1 + d1", k > 1 + d1),
        ("k > 2 a0", k > 2 * a0), ("k > 2 a1", k > 2 * a1),
        ("b > 2c + d0 + d1", b > 2 * c + d0 + d1),
        ("b^2/4c - c <= k", np.full(np.shape(d0), b * b / (4 * c) - c <= k)),
    ]
    for name, ok in checks:
        bad = np.flatnonzero(~np.asarray(ok))
        if bad.size:
            raise InequalityViolated(f"{name} fails", (name, int(bad[0])))


@dataclass
class InterpolationChain:
    metrics: list
    k: float
    b: float
    c: float
    d0: np.ndarray
    d1: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    X: np.ndarray
    dt0: np.ndarray
    dt1: np.ndarray
    certified: bool = False
    report: dict = field(default_factory=dict)


def build_chain(G0, G1, dt0, dt1, constants=None) -> InterpolationChain:
    """``[g0, g0', g01, g1', g1]`` with constants from :func:`choose_constants` unless given."""
    for name, G in (("g0", G0), ("g1", G1)):
        bad = np.flatnonzero(~is_lorentzian(G))
        if bad.size:
            raise InequalityViolated(f"{name} is not Lorentzian", (name, int(bad[0])))
    gamma0, a0 = riemannianize(G0, dt0)
    gamma1, a1 = riemannianize(G1, dt1)
    X = transversal_field(dt0, dt1)
    d0, d1 = quad_form(gamma0, X), quad_form(gamma1, X)
    k, b, c = constants if constants is not None else choose_constants(d0, d1, a0, a1)
    check_inequalities(k, b, c, d0, d1, a0, a1)
    G0p = widen(G0, dt0, gamma0, k, X)
    G1p = widen(G1, dt1, gamma1, k, X)
    G01 = bridge(dt0, dt1, gamma0, gamma1, b, c, d0, d1, X)
    return InterpolationChain([G0, G0p, G01, G1p, G1], k, b, c, d0, d1, a0, a1, X, dt0, dt1)


def null_vectors(G, rng: np.random.Generator, per_sample: int = 4):
    """Random ``g``-null vectors: ``Y = (s, v)`` solved for ``s`` in ``g(Y, Y) = 0``."""
    N = len(G)
    out = []
    for _ in range(per_sample):
        v = rng.normal(size=(N, 3))
        A = G[:, 0, 0]
        B = 2 * np.einsum("ni,ni->n", G[:, 0, 1:], v)
        C = np.einsum("ni,nij,nj->n", v, G[:, 1:, 1:], v)
        disc = np.sqrt(np.maximum(B * B - 4 * A * C, 0.0))
        s = (-B + disc) / (2 * A)
        out.append(np.concatenate([s[:, None], v], axis=1))
    return out


def widening_holds(G, Gp, rng, per_sample: int = 4, tol: float = 1e-9) -> bool:
    """``g'(Y, Y) >= 0`` on sampled ``g``-null vectors."""
    return all(np.all(quad_form(Gp, Y) >= -tol * np.einsum("ni,ni->n", Y, Y))
               for Y in null_vectors(G, rng, per_sample))


def timelike_fan(G, dt_sum, rng, per_sample: int = 4):
    """Random ``g``-timelike vectors, future directed with respect to ``dt_sum``."""
    N = len(G)
    fans = []
    for _ in range(per_sample):
        Y = rng.normal(size=(N, 4))
        # push towards the cone interior along the g-dual of dt_sum
        up = np.einsum("nij,nj->ni", np.linalg.inv(G), dt_sum)
        for _ in range(60):
            neg = quad_form(G, Y) <= 0
            if not neg.any():
                break
            Y[neg] = Y[neg] + up[neg]
        keep = quad_form(G, Y) > 0
        sign = np.sign(np.einsum("ni,ni->n", dt_sum, Y))
        fans.append((Y * sign[:, None], keep))
    return fans


def cone_containment(chain: InterpolationChain, rng, per_sample: int = 4) -> bool:
    """Every sampled ``g01``-timelike future vector is timelike for both widened metrics."""
    G01 = chain.metrics[2]
    for Y, keep in timelike_fan(G01, chain.dt0 + chain.dt1, rng, per_sample):
        for Gp in (chain.metrics[1], chain.metrics[3]):
            if np.any(quad_form(Gp, Y)[keep] <= 0):
                return False
    return True


PAIR_NAMES = ("g0-g0'", "g0'-g01", "g01-g1'", "g1'-g1")


def certify_chain(chain: InterpolationChain, lambdas=None, tol: float = 1e-12) -> dict:
    """Signature of every convex combination of neighbours, per sample and ``lambda``."""
    lambdas = np.linspace(0.0, 1.0, 11) if lambdas is None else np.asarray(lambdas)
    failures, margins, counts = [], {}, {}
    for name, Gp, Gn in zip(PAIR_NAMES, chain.metrics[:-1], chain.metrics[1:]):
        worst, passed = np.inf, 0
        for lam in lambdas:
            ok, margin = signature_margin(lam * Gp + (1 - lam) * Gn)
            ok &= margin > tol
            passed += int(ok.sum())
            worst = min(worst, float(margin.min()))
            for idx in np.flatnonzero(~ok)[:3]:
                failures.append((name, float(lam), int(idx)))
        margins[name] = worst
        counts[name] = passed / (len(lambdas) * len(Gp))
    chain.certified = not failures
    chain.report = {"pass_fraction": counts, "min_margin": margins, "failures": failures,
                    "constants": (chain.k, chain.b, chain.c)}
    return chain.report


def partition_functional(F, chain: InterpolationChain) -> list:
    """``F_0 = F(g0)`` and ``F_i = F(g_i) - F(g_{i-1})``; the sum telescopes to ``F(g1)``."""
    if not chain.certified:
        raise UncertifiedChain("certify the chain before partitioning")
    values = [F(G) for G in chain.metrics]
    return [values[0]] + [values[i] - values[i - 1] for i in range(1, 5)]


# fixtures

def sample_grid(per_axis: int = 10, half_width: float = 1.0):
    axis = np.linspace(-half_width, half_width, per_axis)
    return np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 4)


def _smooth_bump(points, center, radius):
    r2 = np.sum(((points - center) / radius) ** 2, axis=1)
    out = np.zeros(len(points))
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def _smooth_bump_gradient(points, center, radius):
    rel = (points - center) / radius
    r2 = np.sum(rel ** 2, axis=1)
    out = np.zeros_like(points)
    inside = r2 < 1
    bump = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    out[inside] = (-bump / (1.0 - r2[inside]) ** 2)[:, None] * 2 * rel[inside] / radius
    return out


def minkowski(points):
    return np.broadcast_to(ETA, (len(points), 4, 4)).copy()


def time_differential(points):
    dt = np.zeros((len(points), 4))
    dt[:, 0] = 1.0
    return dt


@dataclass(frozen=True)
class Perturbation:
    """``eta + amplitude * bump(x) * S`` with a unit-norm symmetric ``S``; bump peak 1."""
    matrix: tuple
    center: tuple
    radius: float
    amplitude: float

    def metric(self, points):
        S = np.asarray(self.matrix)
        bump = _smooth_bump(points, np.asarray(self.center), self.radius)
        return minkowski(points) + self.amplitude * bump[:, None, None] * S


def random_perturbation(rng: np.random.Generator, amplitude: float = 0.1) -> Perturbation:
    S = rng.normal(size=(4, 4))
    S = (S + S.T) / 2
    S /= np.linalg.norm(S, 2)
    center = tuple(rng.uniform(-0.5, 0.5, size=4))
    radius = float(rng.uniform(0.4, 0.9))
    return Perturbation(tuple(map(tuple, S)), center, radius, amplitude)


def perturbed_chain(perturbation: Perturbation, points, tilt: float = 0.0) -> InterpolationChain:
    """Chain from Minkowski to a perturbed metric.

    ``t0`` is coordinate time; ``t1 = t0 + tilt * bump`` differs from it on the
    perturbation's support only.
    """
    G0 = minkowski(points)
    G1 = perturbation.metric(points)
    dt0 = time_differential(points)
    dt1 = dt0 + tilt * _smooth_bump_gradient(points, np.asarray(perturbation.center), perturbation.radius)
    return build_chain(G0, G1, dt0, dt1)


def free_action_density(phi_grad):
    """``F(g) = sum_n sqrt|det g| g^{mu nu} d_mu phi d_nu phi / 2`` on the samples."""
    def F(G):
        inv = np.linalg.inv(G)
        vol = np.sqrt(np.abs(np.linalg.det(G)))
        return float(np.sum(vol * np.einsum("ni,nij,nj->n", phi_grad, inv, phi_grad)) / 2)
    return F
