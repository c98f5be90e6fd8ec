"""Renormalization group elements as truncated series of symmetric multilinear maps.

An element ``Z`` of truncation order ``N`` is stored as ``Z_0`` (a functional,
``Z(0)``) and coefficient objects ``Z_n`` for ``1 <= n <= N``.  ``Z_n`` acts on a
multiset of monomials and is extended multilinearly, so

    Z(F) = Z_0 + sum_n Z_n(F, ..., F) / n!

Constants pass through: ``Z_1(c) = c`` and ``Z_n(..., c, ...) = 0`` for ``n >= 2``
(Lie algebra elements have ``z_1(c) = 0``).  Composition uses the multivariate
Faa di Bruno formula over set partitions; inversion is order by order.

Exactness bookkeeping: ``arity`` bounds the index of the true nonzero
coefficients (``None`` when the series is infinite).  A result is flagged
``exact`` when its stored coefficients equal the true ones up to order ``N``.
"""
from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from .errors import CutoffTooSmall, SingularLinearPart
from .functionals import (ONE, FieldConfiguration, Interaction, Lagrangian, LocalFunctional,
                          TestFunction, _mono_degree, as_sequence, delta_L)
from .rings import FormalPoly, lam_series

ZERO = LocalFunctional()


@lru_cache(maxsize=None)
def set_partitions(n: int) -> tuple:
    """All set partitions of ``range(n)`` as tuples of blocks."""
    if n == 0:
        return ((),)
    out = []
    for part in set_partitions(n - 1):
        for i in range(len(part)):
            out.append(part[:i] + (part[i] + (n - 1,),) + part[i + 1:])
        out.append(part + ((n - 1,),))
    return tuple(out)


class Coefficient:
    """Symmetric ``n``-linear map given on monomial multisets by a rule."""

    def __init__(self, n: int, rule: Callable, unit=1, name: str = ""):
        self.n = n
        self.rule = rule
        self.unit = unit
        self.name = name
        self._cache = {}

    def on(self, monos) -> LocalFunctional:
        key = tuple(sorted(monos))
        if ONE in key:
            if self.n == 1:
                return LocalFunctional({ONE: self.unit}) if self.unit else ZERO
            return ZERO
        hit = self._cache.get(key)
        if hit is None:
            hit = self.rule(key)
            self._cache[key] = hit
        return hit

    def __repr__(self):
        return f"Coefficient(n={self.n}, {self.name})"


def multi(coef: Coefficient, funcs) -> LocalFunctional:
    """Multilinear extension ``coef(F_1, ..., F_n)``."""
    acc = {}
    for combo in itertools.product(*(F.terms.items() for F in funcs)):
        c = 1
        for _, x in combo:
            c = c * x
        img = coef.on(tuple(m for m, _ in combo))
        for k, v in img.terms.items():
            acc[k] = acc.get(k, 0) + c * v
    return LocalFunctional(acc)


def power_apply(coef: Coefficient, F: LocalFunctional, n: int) -> LocalFunctional:
    """``coef(F, ..., F) / n!`` summed over monomial multisets."""
    items = F.sorted_items()
    if n >= 2:
        items = [(m, c) for m, c in items if m]
    acc = {}
    for combo in itertools.combinations_with_replacement(items, n):
        c = 1
        for _, x in combo:
            c = c * x
        mult = 1
        for _, grp in itertools.groupby(combo, key=lambda mc: mc[0]):
            mult *= math.factorial(len(list(grp)))
        if mult != 1:
            c = c / mult
        img = coef.on(tuple(m for m, _ in combo))
        for k, v in img.terms.items():
            acc[k] = acc.get(k, 0) + c * v
    return LocalFunctional(acc)


def _identity_rule(monos):
    return LocalFunctional({monos[0]: 1})


class RGElement:
    """Truncated renormalization group (``kind='group'``) or Lie algebra (``kind='lie'``) element."""

    def __init__(self, order: int, z0: LocalFunctional, coeffs: dict, kind: str = "group",
                 arity: int | None = None, exact: bool = True, support=None, name: str = "Z",
                 linear_inverse: Coefficient | None = None):
        self.order = order
        self.z0 = z0 if isinstance(z0, LocalFunctional) else LocalFunctional.constant(z0)
        self.coeffs = {n: c for n, c in coeffs.items() if 1 <= n <= order}
        self.kind = kind
        if kind == "group" and 1 not in self.coeffs:
            raise ValueError("group elements need a linear coefficient")
        self.arity = arity
        self.exact = exact
        self.support = frozenset(support) if support is not None else None
        self.name = name
        self.linear_inverse = linear_inverse

    def coefficient(self, n: int):
        return self.coeffs.get(n)

    def __call__(self, F: LocalFunctional) -> LocalFunctional:
        return apply(self, F)

    def polynomial(self) -> bool:
        """True when all nonzero coefficients are stored (finite series)."""
        return self.arity is not None and self.arity <= self.order

    def __repr__(self):
        return f"RGElement({self.name}, order={self.order}, kind={self.kind}, exact={self.exact})"


def apply(Z: RGElement, F: LocalFunctional) -> LocalFunctional:
    out = Z.z0
    for n in sorted(Z.coeffs):
        out = out + power_apply(Z.coeffs[n], F, n)
    return out


# families

def identity(order: int = 4) -> RGElement:
    lin = Coefficient(1, _identity_rule, name="id")
    return RGElement(order, ZERO, {1: lin}, arity=1, support=frozenset(), name="id",
                     linear_inverse=lin)


def shift_element(C: LocalFunctional, order: int = 4, name: str = "shift") -> RGElement:
    """``F -> F + C``."""
    if not isinstance(C, LocalFunctional):
        C = LocalFunctional.constant(C)
    lin = Coefficient(1, _identity_rule, name="id")
    return RGElement(order, C, {1: lin}, arity=1, support=C.support(), name=name,
                     linear_inverse=lin)


def constant_shift(c, order: int = 4) -> RGElement:
    return shift_element(LocalFunctional.constant(c), order, name=f"const({c})")


class NormalOrderingKernel:
    """Symmetric kernel on field variables ``((site, comp), (site, comp)) -> coefficient``."""

    def __init__(self, entries: dict):
        K = {}
        for (a, b), c in entries.items():
            a = a if (len(a) == 2 and isinstance(a[0], tuple)) else (tuple(a), 0)
            b = b if (len(b) == 2 and isinstance(b[0], tuple)) else (tuple(b), 0)
            c = Fraction(c) if isinstance(c, (int, str)) else c
            if a == b:
                K[(a, a)] = K.get((a, a), 0) + c
            else:
                K[(a, b)] = K.get((a, b), 0) + c
                K[(b, a)] = K.get((b, a), 0) + c
        self.entries = {k: v for k, v in K.items() if v}

    def support(self) -> frozenset:
        return frozenset(v[0] for pair in self.entries for v in pair)

    def __add__(self, other):
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0) + v
        res = NormalOrderingKernel({})
        res.entries = {k: v for k, v in out.items() if v}
        return res

    def __neg__(self):
        res = NormalOrderingKernel({})
        res.entries = {k: -v for k, v in self.entries.items()}
        return res

    def laplacian(self, F: LocalFunctional) -> LocalFunctional:
        """``1/2 sum K(v, w) d_v d_w F``."""
        vars_ = F.variables()
        out = ZERO
        for (v, w), c in self.entries.items():
            if v in vars_ and w in vars_:
                out = out + (c / 2) * F.derivative(v).derivative(w)
        return out


def contraction_exponential(K: NormalOrderingKernel, F: LocalFunctional) -> LocalFunctional:
    """``exp(1/2 <K, d^2>) F``; terminates on polynomials."""
    out = F
    term = F
    k = 0
    while True:
        k += 1
        term = K.laplacian(term) / k
        if not term:
            return out
        out = out + term


def alpha_K(K: NormalOrderingKernel, order: int = 4, name: str = "alpha_K") -> RGElement:
    lin = Coefficient(1, lambda ms: contraction_exponential(K, LocalFunctional({ms[0]: 1})), name=name)
    inv = Coefficient(1, lambda ms: contraction_exponential(-K, LocalFunctional({ms[0]: 1})),
                      name=f"{name}^-1")
    return RGElement(order, ZERO, {1: lin}, arity=1, support=K.support(), name=name,
                     linear_inverse=inv)


def normal_ordering_element(K: NormalOrderingKernel, order: int = 4) -> RGElement:
    return alpha_K(K, order, name="normal_ordering")


def mu_w(w: dict, order: int = 4) -> RGElement:
    """``F -> F + sum_v w(v) (dF/dphi_v)^2``: local and shift covariant, but breaks dynamics."""
    weights = {}
    for k, c in w.items():
        v = k if (len(k) == 2 and isinstance(k[0], tuple)) else (tuple(k), 0)
        weights[v] = Fraction(c) if isinstance(c, (int, str)) else c

    def rule(ms):
        a, b = LocalFunctional({ms[0]: 1}), LocalFunctional({ms[1]: 1})
        out = ZERO
        for v, c in weights.items():
            da, db = a.derivative(v), b.derivative(v)
            if da and db:
                out = out + 2 * c * da * db
        return out

    lin = Coefficient(1, _identity_rule, name="id")
    return RGElement(order, ZERO, {1: lin, 2: Coefficient(2, rule, name="mu_w")}, arity=2,
                     support=frozenset(v[0] for v in weights), name="mu_w")


# composition and inversion

def _taylor_args(Z1: RGElement, C: LocalFunctional, args: list) -> LocalFunctional:
    """``T_k(args) = sum_j Z1_{k+j}(args, C, ..., C) / j!`` with ``C`` nonconstant."""
    k = len(args)
    total = ZERO
    for j in range(0, Z1.order - k + 1):
        coef = Z1.coeffs.get(k + j)
        if coef is None:
            continue
        if j and not C:
            break
        term = multi(coef, args + [C] * j)
        if j > 1:
            term = term / math.factorial(j)
        total = total + term
    return total


def compose(Z1: RGElement, Z2: RGElement, name: str | None = None) -> RGElement:
    """``Z1 o Z2`` truncated at the common order."""
    if Z1.order != Z2.order:
        raise ValueError("orders differ")
    N = Z1.order
    C = Z2.z0
    Cnc = C.without_constant()

    def make_rule(n):
        def rule(monos):
            total = ZERO
            for part in set_partitions(n):
                args = []
                for block in part:
                    coef = Z2.coeffs.get(len(block))
                    if coef is None:
                        break
                    val = coef.on(tuple(monos[i] for i in block))
                    if not val:
                        break
                    args.append(val)
                else:
                    total = total + _taylor_args(Z1, Cnc, args)
            return total
        return rule

    unit = 1 if Z1.kind == "group" else 0
    arity = Z1.arity * Z2.arity if Z1.arity is not None and Z2.arity is not None else None
    top = N if arity is None else min(N, arity)
    coeffs = {n: Coefficient(n, make_rule(n), unit=unit if n == 1 else 1) for n in range(1, top + 1)}
    exact = Z1.exact and Z2.exact and (not Cnc or Z1.polynomial())
    support = None
    if Z1.support is not None and Z2.support is not None:
        support = Z1.support | Z2.support
    lin_inv = None
    # the linear part is Z1_1 o Z2_1 only when no C-insertions feed into it
    if (Z1.linear_inverse is not None and Z2.linear_inverse is not None
            and (not Cnc or Z1.arity == 1)):
        i1, i2 = Z1.linear_inverse, Z2.linear_inverse
        lin_inv = Coefficient(1, lambda ms: multi(i2, [multi(i1, [LocalFunctional({ms[0]: 1})])]))
    return RGElement(N, apply(Z1, C), coeffs, kind=Z1.kind, arity=arity, exact=exact,
                     support=support, name=name or f"({Z1.name}*{Z2.name})", linear_inverse=lin_inv)


def _solve_linear(lin: Coefficient, m) -> LocalFunctional:
    """Preimage of the monomial ``m`` under the linear coefficient."""
    target = LocalFunctional({m: 1})
    # Neumann series for id + T with T nilpotent (degree lowering or formal-parameter valued)
    acc = target
    term = target
    for _ in range(64):
        term = -(multi(lin, [term]) - term)
        if not term:
            return acc
        acc = acc + term
    return _gauss_preimage(lin, m)


def _gauss_preimage(lin: Coefficient, m, cap: int = 600) -> LocalFunctional:
    basis = [m]
    seen = {m}
    images = {}
    i = 0
    while i < len(basis):
        b = basis[i]
        img = lin.on((b,)) if b else LocalFunctional({ONE: lin.unit})
        images[b] = img
        for k in img.terms:
            if k not in seen:
                seen.add(k)
                basis.append(k)
                if len(basis) > cap:
                    raise SingularLinearPart("closure of the linear part is too large to invert")
        i += 1
    n = len(basis)
    pos = {b: j for j, b in enumerate(basis)}
    # augmented matrix rows = basis monomials, columns = unknown coefficients
    M = [[Fraction(0)] * (n + 1) for _ in range(n)]
    for j, b in enumerate(basis):
        for k, c in images[b].terms.items():
            M[pos[k]][j] += c
    M[pos[m]][n] = Fraction(1)
    row = 0
    pivots = []
    for col in range(n):
        piv = next((r for r in range(row, n) if M[r][col] != 0), None)
        if piv is None:
            raise SingularLinearPart(f"linear part is singular on the span of {m}")
        M[row], M[piv] = M[piv], M[row]
        inv = 1 / M[row][col]
        M[row] = [x * inv for x in M[row]]
        for r in range(n):
            if r != row and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[row])]
        pivots.append(col)
        row += 1
    return LocalFunctional({basis[j]: M[j][n] for j in range(n)})


def linear_inverse(Z: RGElement) -> Coefficient:
    if Z.linear_inverse is not None:
        return Z.linear_inverse
    lin = Z.coeffs[1]
    return Coefficient(1, lambda ms: _solve_linear(lin, ms[0]), name=f"{Z.name}_1^-1")


def invert(Z: RGElement, name: str | None = None) -> RGElement:
    """Two-sided inverse up to the truncation order."""
    if Z.kind != "group":
        raise ValueError("only group elements are invertible")
    N = Z.order
    W1 = linear_inverse(Z)
    coeffs = {1: W1}

    def make_rule(n):
        def rule(monos):
            s = ZERO
            for part in set_partitions(n):
                if len(part) < 2:
                    continue
                zc = Z.coeffs.get(len(part))
                if zc is None:
                    continue
                args = []
                for block in part:
                    val = coeffs[len(block)].on(tuple(monos[i] for i in block))
                    if not val:
                        break
                    args.append(val)
                else:
                    s = s + multi(zc, args)
            return -multi(W1, [s]) if s else ZERO
        return rule

    arity = 1 if Z.arity == 1 else None
    for n in range(2, N + 1 if arity is None else 2):
        coeffs[n] = Coefficient(n, make_rule(n))
    lin_inv = Z.coeffs[1]
    C = Z.z0
    tilde = RGElement(N, ZERO, coeffs, arity=arity, exact=Z.exact, support=Z.support,
                      name=name or f"{Z.name}^-1", linear_inverse=lin_inv)
    if C.is_constant():
        tilde.z0 = -C
        return tilde
    out = compose(tilde, shift_element(-C, N), name=name or f"{Z.name}^-1")
    out.support = Z.support
    return out


# comparison

class FunctionalSpace:
    """Finite monomial basis used for coefficientwise comparisons."""

    def __init__(self, sites, n_comp: int = 1, max_degree: int = 2):
        self.sites = tuple(sorted(sites))
        self.n_comp = n_comp
        self.max_degree = max_degree
        vars_ = [(s, i) for s in self.sites for i in range(n_comp)]
        basis = []
        for d in range(1, max_degree + 1):
            for combo in itertools.combinations_with_replacement(vars_, d):
                powers = {}
                for v in combo:
                    powers[v] = powers.get(v, 0) + 1
                basis.append(tuple(sorted(powers.items())))
        self.basis = tuple(basis)
        self.vars = tuple(vars_)

    def multisets(self, n: int):
        return itertools.combinations_with_replacement(self.basis, n)

    def random_functional(self, rng: random.Random, terms: int = 3, constant: bool = True,
                          max_degree: int | None = None) -> LocalFunctional:
        pool = [m for m in self.basis if max_degree is None or _mono_degree(m) <= max_degree]
        out = {m: Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for m in rng.sample(pool, min(terms, len(pool)))}
        if constant:
            out[ONE] = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        return LocalFunctional(out)


def equal_on(Za: RGElement, Zb: RGElement, space: FunctionalSpace, max_n: int | None = None):
    """Coefficientwise comparison; returns ``(equal, witness)``."""
    if Za.z0 != Zb.z0:
        return False, ("Z_0", Za.z0, Zb.z0)
    N = min(Za.order, Zb.order) if max_n is None else max_n
    for n in range(1, N + 1):
        ca, cb = Za.coeffs.get(n), Zb.coeffs.get(n)
        if ca is None and cb is None:
            continue
        for ms in space.multisets(n):
            va = ca.on(ms) if ca is not None else ZERO
            vb = cb.on(ms) if cb is not None else ZERO
            if va != vb:
                return False, (n, ms, va, vb)
        # the constant monomial is handled by transparency, compare it too
        if n == 1:
            ua = ca.unit if ca is not None else 0
            ub = cb.unit if cb is not None else 0
            if ua != ub:
                return False, (1, (ONE,), ua, ub)
    return True, None


# random fixtures

def _random_lower(rng, space, m, max_terms=2):
    d = _mono_degree(m)
    pool = [b for b in space.basis if _mono_degree(b) < d] + [ONE]
    out = {}
    for b in rng.sample(pool, min(len(pool), rng.randint(1, max_terms))):
        out[b] = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    return LocalFunctional(out)


def random_element(rng: random.Random, space: FunctionalSpace, order: int = 4, density: float = 0.3,
                   kind: str = "group", name: str = "R") -> RGElement:
    """Sparse random element: ``Z_1 = id + T`` with degree lowering ``T``, sparse ``Z_n``."""
    table1 = {m: _random_lower(rng, space, m) for m in space.basis if rng.random() < density}
    if kind == "group":
        def rule1(ms, t=table1):
            return LocalFunctional({ms[0]: 1}) + t.get(ms[0], ZERO)
    else:
        def rule1(ms, t=table1):
            return t.get(ms[0], ZERO)
    coeffs = {1: Coefficient(1, rule1, unit=1 if kind == "group" else 0, name=f"{name}_1")}
    for n in range(2, order + 1):
        table = {}
        for ms in space.multisets(n):
            if rng.random() < density / n:
                table[ms] = space.random_functional(rng, terms=rng.randint(1, 2), constant=rng.random() < 0.3)

        def rule(ms, t=table):
            return t.get(ms, ZERO)
        if table:
            coeffs[n] = Coefficient(n, rule, name=f"{name}_{n}")
    z0 = LocalFunctional.constant(Fraction(rng.randint(-5, 5), rng.randint(1, 4)))
    return RGElement(order, z0, coeffs, kind=kind, arity=order, support=space.sites, name=name)


# Lie algebra

def lie_bracket(za: RGElement, zb: RGElement, name: str | None = None) -> RGElement:
    """``[za, zb](F) = <za'(F), zb(F)> - <zb'(F), za(F)>`` coefficientwise."""
    N = min(za.order, zb.order)

    def half(x, y, monos):
        k = len(monos)
        out = ZERO
        idx = range(k)
        for r in range(k + 1):
            xc = x.coeffs.get(r + 1)
            if xc is None:
                continue
            for S in itertools.combinations(idx, r):
                rest = tuple(i for i in idx if i not in S)
                if rest:
                    yc = y.coeffs.get(len(rest))
                    if yc is None:
                        continue
                    inner = yc.on(tuple(monos[i] for i in rest))
                else:
                    inner = y.z0
                if not inner:
                    continue
                out = out + multi(xc, [LocalFunctional({monos[i]: 1}) for i in S] + [inner])
        return out

    def make_rule(k):
        return lambda monos: half(za, zb, monos) - half(zb, za, monos)

    coeffs = {k: Coefficient(k, make_rule(k), unit=0) for k in range(1, N + 1)}
    z0 = half(za, zb, ()) - half(zb, za, ())
    return RGElement(N, z0, coeffs, kind="lie", arity=None, name=name or f"[{za.name},{zb.name}]")


def lie_scale(z: RGElement, c) -> RGElement:
    coeffs = {n: Coefficient(n, (lambda co: lambda ms: co.on(ms) * c)(co), unit=0)
              for n, co in z.coeffs.items()}
    return RGElement(z.order, z.z0 * c, coeffs, kind="lie", arity=z.arity, name=f"{c}*{z.name}")


def exp_parameter(z: RGElement, order_lambda: int = 3) -> RGElement:
    """Group element ``id + lam z`` over the ring ``Q[lam]/(lam^order_lambda)``."""
    lam = lam_series((0, 1), order_lambda)
    coeffs = {}
    for n in range(1, z.order + 1):
        co = z.coeffs.get(n)
        if n == 1:
            def rule(ms, co=co):
                base = LocalFunctional({ms[0]: lam_series((1,), order_lambda)})
                return base + (co.on(ms) * lam if co is not None else ZERO)
            coeffs[1] = Coefficient(1, rule, unit=lam_series((1,), order_lambda))
        elif co is not None:
            coeffs[n] = Coefficient(n, (lambda co: lambda ms: co.on(ms) * lam)(co))
    return RGElement(z.order, z.z0 * lam, coeffs, arity=z.arity, name=f"exp(lam {z.name})")


def series_coefficient(Z: RGElement, k: int, kind: str = "lie") -> RGElement:
    """Coefficient of ``lam^k`` of a parameter-valued element."""
    def pick(F):
        return F.map_coeffs(lambda c: c.coefficient(k) if isinstance(c, FormalPoly) else (c if k == 0 else 0))

    def pick_scalar(c):
        return c.coefficient(k) if isinstance(c, FormalPoly) else (c if k == 0 else 0)

    coeffs = {}
    for n, co in Z.coeffs.items():
        coeffs[n] = Coefficient(n, (lambda co: lambda ms: pick(co.on(ms)))(co), unit=pick_scalar(co.unit))
    return RGElement(Z.order, pick(Z.z0), coeffs, kind=kind, name=f"[lam^{k}]{Z.name}")


def group_commutator(Za: RGElement, Zb: RGElement) -> RGElement:
    return compose(compose(Za, Zb), compose(invert(Za), invert(Zb)))


# transports

def with_interaction(Z: RGElement, W, f, name: str | None = None) -> RGElement:
    """``Z^W(F) = Z(F + W(f)) - W(f)``; ``f`` must be 1 around ``supp Z``."""
    if isinstance(W, LocalFunctional):
        lattice = f.lattice if hasattr(f, "lattice") else as_sequence(f)[0].lattice
        W = Interaction.of(W, lattice)
    lattice = as_sequence(f)[0].lattice
    radius = max((A.radius for A in W.fields), default=1)
    if Z.support is None:
        raise ValueError("Z needs a declared support to check the cutoff")
    need = lattice.hull(Z.support, radius)
    seq = as_sequence(f)
    if not seq.is_one_on(need):
        raise CutoffTooSmall("cutoff is not 1 around supp Z",
                             {s for s in need if seq[0].value(s) != 1})
    Wf = W.at(seq)
    out = compose(compose(shift_element(-Wf, Z.order), Z), shift_element(Wf, Z.order),
                  name=name or f"{Z.name}^W")
    out.support = Z.support
    return out


def conjugate_by_symmetry(Z: RGElement, g, L: Lagrangian, name: str | None = None) -> RGElement:
    """``Z^g = g_L^-1 Z g_L`` with ``g_L F = delta_g L + g_* F``."""
    gL = g.action_element(L, Z.order)
    ginvL = g.inverse().action_element(L, Z.order)
    out = compose(compose(ginvL, Z), gL, name=name or f"{Z.name}^g")
    if Z.support is not None:
        inv = g.inverse()
        out.support = frozenset(inv.chi_map(s) for s in Z.support)
    return out


# property checks

def _as_interaction(V, lattice):
    if V is None:
        return None
    if isinstance(V, LocalFunctional):
        return Interaction.of(V, lattice) if V else None
    return V


def _site_probes(space: FunctionalSpace, site):
    out = []
    for i in range(space.n_comp):
        for k in range(1, space.max_degree + 1):
            out.append(LocalFunctional.monomial((((site, i), k),)))
    return out


def check_properties(Z: RGElement, L: Lagrangian, V=None, trials: int = 10,
                     rng: random.Random | None = None, space: FunctionalSpace | None = None,
                     psi_scale: int = 2) -> dict:
    """Sample the five defining properties.  Returns ``{name: (passed, witness)}``."""
    rng = rng or random.Random(0)
    lat = L.lattice
    space = space or FunctionalSpace(lat.sites, L.n_comp, 2)
    V = _as_interaction(V, lat)
    report = {}

    samples_G = [ZERO] + [space.random_functional(rng) for _ in range(trials)]

    # (i) compact support: outside the declared support Z(F + G) = F + Z(G)
    wit = None
    declared = Z.support if Z.support is not None else frozenset(lat.sites)
    outside = [s for s in space.sites if s not in declared]
    for x in outside:
        for F in _site_probes(space, x):
            for G in samples_G[:4]:
                if apply(Z, F + G) != F + apply(Z, G):
                    wit = {"site": x, "F": F, "G": G}
                    break
            if wit:
                break
        if wit:
            break
    report["i"] = (wit is None, wit)

    # (ii) locality on disjoint supports
    wit = None
    sites = list(space.sites)
    for _ in range(trials):
        rng.shuffle(sites)
        cut = rng.randint(1, max(1, len(sites) - 1))
        FS, HS = FunctionalSpace(sites[:cut], space.n_comp, space.max_degree), \
            FunctionalSpace(sites[cut:], space.n_comp, space.max_degree)
        if not HS.basis:
            continue
        F = FS.random_functional(rng, constant=False)
        H = HS.random_functional(rng, constant=False)
        G = space.random_functional(rng)
        if apply(Z, F + G + H) != apply(Z, F + G) - apply(Z, G) + apply(Z, G + H):
            wit = {"F": F, "G": G, "H": H}
            break
    report["ii"] = (wit is None, wit)

    def random_psi():
        vals = {}
        for s in rng.sample(list(space.sites), rng.randint(1, len(space.sites))):
            vals[s] = tuple(Fraction(rng.randint(-psi_scale, psi_scale), rng.randint(1, 2))
                            for _ in range(L.n_comp))
        return FieldConfiguration(lat, vals, L.n_comp)

    # (iii) dynamics
    wit = None
    for _ in range(trials):
        F = space.random_functional(rng)
        psi = random_psi()
        dL = delta_L(L, psi)
        lhs = apply(Z, F.shift(psi) + dL)
        rhs = apply(Z, F).shift(psi) + dL
        if lhs != rhs:
            wit = {"F": F, "psi": psi, "difference": lhs - rhs}
            break
    report["iii"] = (wit is None, wit)

    # (iv) field shift
    wit = None
    for _ in range(trials):
        F = space.random_functional(rng)
        psi = random_psi()
        if V is None:
            lhs, rhs = apply(Z, F.shift(psi)), apply(Z, F).shift(psi)
        else:
            f = TestFunction.ones(lat)
            Vf = V.at(f)
            dV = Vf.shift(psi) - Vf
            lhs = apply(Z, F.shift(psi) - Vf)
            rhs = apply(Z, F - Vf).shift(psi) + dV
        if lhs != rhs:
            wit = {"F": F, "psi": psi, "difference": lhs - rhs}
            break
    report["iv"] = (wit is None, wit)

    # (v) causal stability on small admissible perturbations
    wit = None
    for _ in range(trials):
        F = _small_kinetic_sample(rng, space, lat)
        if not L.is_admissible(F):
            continue
        ZF = apply(Z, F)
        if not L.induced_order(ZF).same_relation(L.induced_order(F)):
            wit = {"F": F, "Z(F)": ZF}
            break
    report["v"] = (wit is None, wit)
    return report


def _small_kinetic_sample(rng, space, lat):
    out = ZERO
    sites = list(space.sites)
    for _ in range(3):
        s = rng.choice(sites)
        mu = rng.randint(0, lat.dims)
        nxt = lat.neighbour(s, mu, 1)
        i = rng.randrange(space.n_comp)
        if nxt is None:
            continue
        eps = Fraction(rng.randint(-2, 2), 20)
        out = out + eps * LocalFunctional.var(s, i) * LocalFunctional.var(nxt, i)
    out = out + Fraction(rng.randint(-2, 2), 20) * LocalFunctional.var(rng.choice(sites), 0) ** 2
    out = out + Fraction(rng.randint(-3, 3), 7) * LocalFunctional.var(rng.choice(sites), 0)
    return out


def prop_Z_suite(Z: RGElement, L: Lagrangian, V=None, trials: int = 6,
                 rng: random.Random | None = None, space: FunctionalSpace | None = None) -> dict:
    """Affine invariance, support bounds of ``Z(0)`` and ``Z(F)``, quadratic behaviour."""
    rng = rng or random.Random(1)
    lat = L.lattice
    space = space or FunctionalSpace(lat.sites, L.n_comp, 2)
    Vint = _as_interaction(V, lat)
    Vf = Vint.at(TestFunction.ones(lat)) if Vint is not None else ZERO
    suppZ = Z.support if Z.support is not None else frozenset(lat.sites)
    report = {}

    wit = None
    for _ in range(trials):
        F = space.random_functional(rng, max_degree=1)
        G = space.random_functional(rng)
        if apply(Z, F + G) != F + apply(Z, G):
            wit = {"F": F, "G": G}
            break
    report["affine"] = (wit is None, wit)

    z0 = apply(Z, ZERO)
    ok = z0.support() <= (suppZ & Vf.support())
    report["supp_Z0"] = (ok, None if ok else {"Z(0)": z0})

    wit = None
    for _ in range(trials):
        F = space.random_functional(rng)
        ZF = apply(Z, F)
        if not ZF.support() <= F.support() | (suppZ & Vf.support()):
            wit = {"F": F, "Z(F)": ZF}
            break
        if not (ZF - F).support() <= suppZ:
            wit = {"F": F, "Z(F)-F": ZF - F}
            break
    report["supp_ZF"] = (wit is None, wit)

    wit = None
    if Vf.degree() <= 2:
        for _ in range(trials):
            F = space.random_functional(rng, max_degree=2)
            d = apply(Z, F) - F
            if not d.is_constant():
                wit = {"F": F, "Z(F)-F": d}
                break
    report["quadratic"] = (wit is None, wit)
    return report


def support_preservation(Z: RGElement, F: LocalFunctional, G: LocalFunctional) -> bool:
    """``supp(Z(F + G) - Z(G)) == supp F``."""
    return (apply(Z, F + G) - apply(Z, G)).support() == F.support()
