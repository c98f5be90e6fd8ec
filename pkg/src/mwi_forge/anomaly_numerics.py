"""Floating point checks for the massless scalar and axial anomalies in four dimensions.

Minkowski signature is ``(+,-,-,-)`` and ``eps^{0123} = +1``.  The anomaly
coefficients are stored as exact ``u``-polynomials (``u = 1/pi^2``) next to
their float values.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import OnLightCone, QuadratureNotConverged
from .functionals import LocalFunctional
from .renormalization_group import Coefficient, RGElement
from .rings import pi_poly, to_float

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

# named coefficients, exact in u = 1/pi^2
FISH_COEFFICIENT = pi_poly(0, Fraction(1, 8))        # z^mu D^2 = (1/8 pi^2) d^mu D_F
SCALING_COEFFICIENT = pi_poly(0, Fraction(1, 32))    # Delta X(F) = (b/32 pi^2) int f^2
AXIAL_COEFFICIENT = pi_poly(0, Fraction(1, 16))      # zeta = F - (lam/16 pi^2) int alpha dA^dA
TRIANGLE_COEFFICIENT = pi_poly(0, Fraction(1, 2))    # c = 1/(2 pi^2)
PROPAGATOR_COEFFICIENT = pi_poly(0, Fraction(-1, 4))  # D_F = -1/(4 pi^2 z^2)


def minkowski_square(z):
    z = np.asarray(z)
    return z[..., 0] ** 2 - np.sum(z[..., 1:] ** 2, axis=-1)


def _check_off_cone(z2, tol=0.0):
    bad = np.abs(z2) <= tol
    if np.any(bad):
        raise OnLightCone("argument lies on the light cone", np.argwhere(bad).ravel()[:5])


# fish diagram

def feynman_propagator(z):
    """``D_F(z) = -1/(4 pi^2 z^2)`` off the light cone; works elementwise and for complex input."""
    z = np.asarray(z)
    z2 = z[..., 0] ** 2 - (z[..., 1:] ** 2).sum(axis=-1)
    if not np.iscomplexobj(z):
        _check_off_cone(z2)
    return -1.0 / (4.0 * math.pi ** 2 * z2)


def propagator_gradient_up(z):
    """``d^mu D_F(z) = z^mu / (2 pi^2 (z^2)^2)``, index raised with ``eta``."""
    z = np.asarray(z, dtype=float)
    z2 = minkowski_square(z)
    _check_off_cone(z2)
    return z / (2.0 * math.pi ** 2 * z2[..., None] ** 2)


def propagator_gradient_complex_step(z, h: float = 1e-30):
    """Independent route: ``d_nu D_F`` by complex-step differentiation, then raised."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    for nu in range(4):
        zc = z.astype(complex)
        zc[..., nu] += 1j * h
        out[..., nu] = feynman_propagator(zc).imag / h
    return out @ ETA


def fish_sides(z):
    """``(z^mu D_F^2, (1/8 pi^2) d^mu D_F)`` for an array of points."""
    z = np.asarray(z, dtype=float)
    d = feynman_propagator(z)
    lhs = z * (d ** 2)[..., None]
    rhs = to_float(FISH_COEFFICIENT) * propagator_gradient_up(z)
    return lhs, rhs


def fish_identity_residual(z):
    """Max over ``mu`` of the relative residual, per point."""
    lhs, rhs = fish_sides(z)
    scale = np.maximum(np.abs(lhs).max(axis=-1), np.abs(rhs).max(axis=-1))
    return np.abs(lhs - rhs).max(axis=-1) / scale


def random_off_cone_points(rng: np.random.Generator, n: int, low: float = 1e-2, high: float = 1e2):
    """Points with ``|z^2|`` log-uniform in ``[low, high]``, alternating time- and spacelike."""
    out = np.empty((n, 4))
    targets = np.exp(rng.uniform(math.log(low), math.log(high), size=n))
    for i in range(n):
        timelike = i % 2 == 0
        while True:
            z = rng.normal(size=4)
            z2 = z[0] ** 2 - z[1:] @ z[1:]
            if (z2 > 0) == timelike and abs(z2) > 1e-3 * (z @ z):
                break
        out[i] = z * math.sqrt(targets[i] / abs(z2))
    return out


# quadrature

def gauss_legendre_1d(fn, a: float, b: float, nodes: int = 16, panels: int = 1):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = (hi - lo) / 2
        total += half * np.dot(w, fn(lo + half * (x + 1)))
    return float(total)


def adaptive_gauss_legendre_1d(fn, a: float, b: float, rtol: float = 1e-13, nodes: int = 16,
                               max_panels: int = 4096):
    """Double the panel count until two successive sums agree."""
    panels = 1
    prev = gauss_legendre_1d(fn, a, b, nodes, panels)
    while panels < max_panels:
        panels *= 2
        cur = gauss_legendre_1d(fn, a, b, nodes, panels)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise QuadratureNotConverged(f"no convergence on [{a}, {b}] with {panels} panels")


def tensor_gauss_legendre(fn, box, nodes: int, chunk: int = 1 << 18) -> float:
    """``int_box fn`` with an ``nodes^4`` tensor Gauss-Legendre rule; ``fn`` takes shape ``(N, 4)``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    axes, weights = [], []
    for lo, hi in box:
        half = (hi - lo) / 2
        axes.append(lo + half * (x + 1))
        weights.append(half * w)
    grids = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
    wts = np.einsum("i,j,k,l->ijkl", *weights).ravel()
    total = 0.0
    for start in range(0, len(wts), chunk):
        total += float(np.dot(wts[start:start + chunk], fn(grids[start:start + chunk])))
    return total


def refined_integral(fn, box, start: int = 8, rtol: float = 1e-10, atol: float = 0.0,
                     max_nodes: int = 64):
    """Tensor rule with doubling node counts; accepted when the change is below tolerance."""
    n = start
    prev = tensor_gauss_legendre(fn, box, n)
    while n < max_nodes:
        n *= 2
        cur = tensor_gauss_legendre(fn, box, n)
        if abs(cur - prev) <= max(rtol * abs(cur), atol):
            return cur, n
        prev = cur
    raise QuadratureNotConverged(f"tensor rule did not stabilize up to {max_nodes} nodes per axis")


# bump functions

def _bump_exp(s):
    out = np.zeros_like(s, dtype=float)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def _bump_poly(power):
    def fn(s):
        return np.where(np.abs(s) < 1, (1.0 - s ** 2) ** power, 0.0)
    return fn


@dataclass(frozen=True)
class BumpFunction4:
    """``amplitude * prod_i bump((x_i - center_i) / radius_i)``."""
    center: tuple = (0.0, 0.0, 0.0, 0.0)
    radius: tuple = (1.0, 1.0, 1.0, 1.0)
    amplitude: float = 1.0
    kind: str = "exp"
    power: int = 4

    def profile(self):
        return _bump_exp if self.kind == "exp" else _bump_poly(self.power)

    def factor(self, i: int):
        prof, c, r = self.profile(), self.center[i], self.radius[i]
        return lambda x: prof((np.asarray(x) - c) / r)

    def box(self):
        return tuple((c - r, c + r) for c, r in zip(self.center, self.radius))

    def __call__(self, x):
        x = np.atleast_2d(x)
        out = np.full(len(x), float(self.amplitude))
        for i in range(4):
            out = out * self.factor(i)(x[:, i])
        return out

    def square_integral(self, rtol: float = 1e-13) -> float:
        """``int f^2`` by the tensor Gauss-Legendre rule, which factorizes for a product profile."""
        total = self.amplitude ** 2
        for i, (lo, hi) in enumerate(self.box()):
            g = self.factor(i)
            total *= adaptive_gauss_legendre_1d(lambda x: g(x) ** 2, lo, hi, rtol)
        return total


# scaling anomaly

def scaling_delta_X(f: BumpFunction4, b: float) -> float:
    """``(b / 32 pi^2) int f^2``."""
    if b == 0 or f.amplitude == 0:
        return 0.0
    return b * to_float(SCALING_COEFFICIENT) * f.square_integral()


@dataclass(frozen=True)
class ScalingShift:
    """``F -> F + shift`` with ``shift = (lam b / 32 pi^2) int f^2``; the removable constant is zero."""
    lam: float
    b: float
    square_integral: float

    @property
    def shift(self) -> float:
        return self.lam * self.b * to_float(SCALING_COEFFICIENT) * self.square_integral

    def __call__(self, value: float) -> float:
        return value + self.shift

    def compose(self, other: "ScalingShift") -> "ScalingShift":
        if (self.b, self.square_integral) != (other.b, other.square_integral):
            raise ValueError("shifts for different functionals")
        return ScalingShift(self.lam + other.lam, self.b, self.square_integral)


def scaling_cocycle(lam: float, b: float, f: BumpFunction4) -> ScalingShift:
    if not -1 <= lam <= 1:
        raise ValueError("lambda must lie in [-1, 1]")
    return ScalingShift(lam, b, f.square_integral())


def theta_scaling(lam: float, b: float, f: BumpFunction4) -> ScalingShift:
    """``zeta(F) - zeta(0)``; identical to the cocycle since its value at ``F = 0`` vanishes."""
    return scaling_cocycle(lam, b, f)


def scaling_delta_L(g_values, phi_values) -> float:
    """Induced change of the Lagrangian: ``zeta(0)[g phi] - zeta(0)[0]``, zero because ``zeta(0) = 0``."""
    zeta_zero = 0.0
    return zeta_zero - zeta_zero


def scaling_derivative_at_zero(b: float, f: BumpFunction4, step: float = 1e-4) -> float:
    """Central difference in ``lam`` of the cocycle constant."""
    I = f.square_integral()
    up = ScalingShift(step, b, I).shift
    down = ScalingShift(-step, b, I).shift
    return (up - down) / (2 * step)


def lattice_scaling_element(lam, b, order: int = 4) -> RGElement:
    """Exact lattice analogue: ``F -> F + (lam b / 32 pi^2) sum_x f(x)^2`` for ``F = sum f(x) phi_x^2 / 2``.

    The second coefficient pairs a monomial ``phi_x^2`` with itself; the value
    only depends on the quadratic coefficients of ``F``, so constants pass through.
    """
    kappa = SCALING_COEFFICIENT * (Fraction(lam) * Fraction(b) * 4)

    def rule(ms):
        a, c = ms
        if a == c and len(a) == 1 and a[0][1] == 2:
            return LocalFunctional.constant(2 * kappa)
        return LocalFunctional()

    ident = Coefficient(1, lambda ms: LocalFunctional({ms[0]: 1}), name="id")
    return RGElement(order, LocalFunctional(), {1: ident, 2: Coefficient(2, rule, name="scaling")},
                     arity=2, support=frozenset(), name=f"scale({lam})", linear_inverse=ident)


# axial anomaly

def _levi_civita():
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        inversions = sum(perm[i] > perm[j] for i in range(4) for j in range(i + 1, 4))
        eps[perm] = -1 if inversions % 2 else 1
    return eps


LEVI_CIVITA = _levi_civita()

@dataclass(frozen=True)
class GaugePotential:
    """Covector potential ``A_nu(x)`` and axial profile ``alpha(x)``, both closed form on a box."""
    potential: object  # (N, 4) -> (N, 4)
    alpha: object      # (N, 4) -> (N,)
    box: tuple

    def field_derivatives(self, x, h: float = 1e-3):
        """``d_mu A_nu`` by fourth order central differences; shape ``(N, 4, 4)``."""
        x = np.asarray(x, dtype=float)
        out = np.empty((len(x), 4, 4))
        for mu in range(4):
            e = np.zeros(4)
            e[mu] = h
            out[:, mu, :] = (-self.potential(x + 2 * e) + 8 * self.potential(x + e)
                             - 8 * self.potential(x - e) + self.potential(x - 2 * e)) / (12 * h)
        return out

    def density(self, x):
        """``alpha eps^{mu nu rho sigma} d_mu A_nu d_rho A_sigma``."""
        d = self.field_derivatives(x)
        return self.alpha(x) * np.einsum("abcd,nab,ncd->n", LEVI_CIVITA, d, d)

    def magnitude(self, x):
        d = self.field_derivatives(x)
        return np.abs(self.alpha(x)) * np.sum(d ** 2, axis=(1, 2))


def axial_density_integral(A: GaugePotential, rtol: float = 1e-9, start: int = 8):
    """``(int alpha dA^dA, scale)`` with the scale used for near-zero results."""
    scale = tensor_gauss_legendre(A.magnitude, A.box, 2 * start)
    value, nodes = refined_integral(A.density, A.box, start=start, rtol=rtol, atol=1e-12 * max(scale, 1e-300))
    return value, scale, nodes


def axial_cocycle(lam: float, A: GaugePotential) -> float:
    """The shift ``zeta(F) - F = -(lam / 16 pi^2) int alpha dA^dA``."""
    if lam == 0:
        return 0.0
    value, _, _ = axial_density_integral(A)
    return -lam * to_float(AXIAL_COEFFICIENT) * value


# dilation current

def dilation_current(phi, grad_phi, x):
    """``j^mu = (phi + x^nu d_nu phi) d^mu phi - 1/2 x^mu d_nu phi d^nu phi``; ``x`` of shape ``(N, 4)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p = phi(x)
    dl = grad_phi(x)                  # lower index
    du = dl @ ETA                     # raised
    xd = np.einsum("ni,ni->n", x, dl)
    sq = np.einsum("ni,ni->n", dl, du)
    return (p + xd)[:, None] * du - 0.5 * x * sq[:, None]


def current_divergence(phi, grad_phi, x, h: float = 1e-3):
    """``d_mu j^mu`` by fourth order central differences."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros(len(x))
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        j = lambda y: dilation_current(phi, grad_phi, y)[:, mu]
        out += (-j(x + 2 * e) + 8 * j(x + e) - 8 * j(x - e) + j(x - 2 * e)) / (12 * h)
    return out


def integration_by_parts_residual(beta, grad_beta, phi, grad_phi, box, nodes: int = 16):
    """``int beta d_mu j^mu + int d_mu beta j^mu`` for compactly supported ``beta``."""
    lhs = tensor_gauss_legendre(lambda x: beta(x) * current_divergence(phi, grad_phi, x), box, nodes)
    rhs = tensor_gauss_legendre(
        lambda x: np.einsum("ni,ni->n", grad_beta(x), dilation_current(phi, grad_phi, x)), box, nodes)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return abs(lhs + rhs) / scale, lhs, rhs


# separable polynomial fixtures on [-1, 1]^4

def _pmul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _pderiv(p):
    return [i * c for i, c in enumerate(p)][1:] or [Fraction(0)]


def _pint(p) -> Fraction:
    """``int_{-1}^{1} p``."""
    return sum((Fraction(2, k + 1) * c for k, c in enumerate(p) if k % 2 == 0), Fraction(0))


def _bump_poly_coeffs(power: int, times=(1,)):
    base = [Fraction(1)]
    for _ in range(power):
        base = _pmul(base, [Fraction(1), Fraction(0), Fraction(-1)])
    return _pmul(base, [Fraction(c) for c in times])


def _peval(p, x):
    out = np.zeros_like(x, dtype=float)
    for c in reversed(p):
        out = out * x + float(c)
    return out


@dataclass(frozen=True)
class SeparableAxialFixture:
    """``A_1 = prod a_i(x_i)``, ``A_3 = prod e_i(x_i)``, ``alpha = prod w_i(x_i)``, other components zero.

    Only ``eps`` terms pairing ``d_0, d_2`` with ``A_1, A_3`` survive, giving
    ``2 (d_0 A_1 d_2 A_3 - d_2 A_1 d_0 A_3)``, so the exact integral is a sum of
    products of one dimensional rational integrals.
    """
    a: tuple
    e: tuple
    w: tuple

    def _dens_factors(self):
        def d(fs, mu):
            return [(_pderiv(f) if i == mu else f) for i, f in enumerate(fs)]
        return [(2, d(self.a, 0), d(self.e, 2)), (-2, d(self.a, 2), d(self.e, 0))]

    def exact_integral(self) -> Fraction:
        total = Fraction(0)
        for sign, fa, fe in self._dens_factors():
            term = Fraction(sign)
            for i in range(4):
                term *= _pint(_pmul(_pmul(fa[i], fe[i]), list(self.w[i])))
            total += term
        return total

    def potential(self):
        def pot(x):
            out = np.zeros_like(x, dtype=float)
            out[:, 1] = np.prod([_peval(self.a[i], x[:, i]) for i in range(4)], axis=0)
            out[:, 3] = np.prod([_peval(self.e[i], x[:, i]) for i in range(4)], axis=0)
            return out
        alpha = lambda x: np.prod([_peval(self.w[i], x[:, i]) for i in range(4)], axis=0)
        return GaugePotential(pot, alpha, ((-1.0, 1.0),) * 4)


def default_axial_fixture() -> SeparableAxialFixture:
    """Polynomial bumps of degree at most 15 per axis, with a non-constant ``alpha``."""
    b2 = lambda *t: tuple(_bump_poly_coeffs(2, t))
    a = (b2(1, 1), b2(2, 1), b2(1, -1), b2(3, 1))
    e = (b2(1, 2), b2(1, -1), b2(2, -1), b2(1, 1))
    w = (b2(1, Fraction(1, 2)), b2(2, 1), b2(1, Fraction(-1, 3)), b2(3, -1))
    return SeparableAxialFixture(a, e, w)


def pure_gauge_potential(alpha_fixture: SeparableAxialFixture | None = None) -> GaugePotential:
    """``A = d chi`` for a separable polynomial bump ``chi``."""
    fx = alpha_fixture or default_axial_fixture()
    chi = [tuple(_bump_poly_coeffs(3, t)) for t in ((1, 1), (1,), (0, 1), (1, 0, 1))]

    def pot(x):
        out = np.empty_like(x, dtype=float)
        for mu in range(4):
            out[:, mu] = np.prod([_peval(_pderiv(chi[i]) if i == mu else chi[i], x[:, i])
                                  for i in range(4)], axis=0)
        return out
    return GaugePotential(pot, fx.potential().alpha, ((-1.0, 1.0),) * 4)
