"""Local functionals, test functions, Lagrangians and generalized fields.

A variable is ``(site, component)``.  A monomial is a sorted tuple of
``(variable, power)`` pairs and a functional is a sparse map monomial -> exact
coefficient.  Densities are built from field values and forward differences
``phi(x + e_mu) - phi(x)``, so every monomial of a density at ``x`` lives in the
unit cell spanned by ``x`` and its forward neighbours.
"""
from __future__ import annotations

import itertools
import math
import random
import re
from fractions import Fraction
from typing import Callable, Iterable

from .errors import CutoffTooSmall, DegreeOverflow, ScenarioError
from .lattice_spacetime import CausalOrder, Lattice
from .rings import exact, scalar_key

DEFAULT_MAX_DEGREE = 4

ONE = ()


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    powers = dict(a)
    for v, p in b:
        powers[v] = powers.get(v, 0) + p
    return tuple(sorted(powers.items()))


def _mono_degree(m: tuple) -> int:
    return sum(p for _, p in m)


def _binom(n, k):
    return math.comb(n, k)


class LocalFunctional:
    """Immutable sparse polynomial in the field variables."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None):
        clean = {}
        for m, c in (terms or {}).items():
            if c:
                clean[m] = c
        self.terms = clean
        self._hash = None

    # construction

    @classmethod
    def zero(cls) -> "LocalFunctional":
        return cls()

    @classmethod
    def constant(cls, c) -> "LocalFunctional":
        return cls({ONE: exact(c)})

    @classmethod
    def var(cls, site, comp: int = 0, coef=1) -> "LocalFunctional":
        return cls({(((tuple(site), comp), 1),): exact(coef)})

    @classmethod
    def monomial(cls, mono: tuple, coef=1) -> "LocalFunctional":
        return cls({tuple(sorted(mono)): exact(coef)})

    @classmethod
    def linear(cls, h: dict) -> "LocalFunctional":
        """Pairing <phi, h> with ``h`` mapping (site, comp) or site -> coefficient."""
        out = {}
        for k, c in h.items():
            v = k if (len(k) == 2 and isinstance(k[0], tuple)) else (tuple(k), 0)
            out[((v, 1),)] = exact(c)
        return cls(out)

    # algebra

    def __add__(self, other):
        if not isinstance(other, LocalFunctional):
            other = LocalFunctional.constant(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return LocalFunctional(out)

    __radd__ = __add__

    def __neg__(self):
        return LocalFunctional({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, LocalFunctional):
            other = LocalFunctional.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LocalFunctional):
            out = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    m = _mono_mul(m1, m2)
                    out[m] = out.get(m, 0) + c1 * c2
            return LocalFunctional(out)
        return LocalFunctional({m: c * other for m, c in self.terms.items()})

    def __rmul__(self, other):
        return LocalFunctional({m: other * c for m, c in self.terms.items()})

    def __truediv__(self, other):
        return LocalFunctional({m: c / other for m, c in self.terms.items()})

    def __pow__(self, k: int):
        out = LocalFunctional.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, LocalFunctional):
            if isinstance(other, (int, Fraction)):
                return self == LocalFunctional.constant(other)
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def map_coeffs(self, fn: Callable) -> "LocalFunctional":
        return LocalFunctional({m: fn(c) for m, c in self.terms.items()})

    # inspection

    @property
    def constant_term(self):
        return self.terms.get(ONE, 0)

    def without_constant(self) -> "LocalFunctional":
        return LocalFunctional({m: c for m, c in self.terms.items() if m})

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self.terms), default=0)

    def min_degree(self) -> int:
        """Lowest degree of a nonconstant monomial (0 if constant)."""
        return min((_mono_degree(m) for m in self.terms if m), default=0)

    def variables(self) -> frozenset:
        return frozenset(v for m in self.terms for v, _ in m)

    def support(self) -> frozenset:
        """Sites whose field values the functional depends on."""
        return frozenset(v[0] for m in self.terms for v, _ in m)

    def homogeneous(self, k: int) -> "LocalFunctional":
        return LocalFunctional({m: c for m, c in self.terms.items() if _mono_degree(m) == k})

    def monomials(self):
        return sorted(self.terms, key=_mono_key)

    def sorted_items(self):
        return [(m, self.terms[m]) for m in self.monomials()]

    def cell_radius(self, lattice: Lattice) -> int:
        """Largest Chebyshev diameter of a monomial's site set."""
        r = 0
        for m in self.terms:
            sites = [v[0] for v, _ in m]
            for a, b in itertools.combinations(sites, 2):
                r = max(r, lattice.distance(a, b))
        return r

    # evaluation

    def evaluate(self, phi, max_degree: int | None = DEFAULT_MAX_DEGREE):
        if max_degree is not None and self.degree() > max_degree:
            raise DegreeOverflow(f"degree {self.degree()} exceeds cap {max_degree}")
        total = 0
        for m, c in self.terms.items():
            term = c
            for (site, comp), p in m:
                term = term * phi.value(site, comp) ** p
            total = total + term
        return total

    # calculus

    def derivative(self, var) -> "LocalFunctional":
        out = {}
        for m, c in self.terms.items():
            d = dict(m)
            p = d.get(var, 0)
            if not p:
                continue
            if p == 1:
                del d[var]
            else:
                d[var] = p - 1
            key = tuple(sorted(d.items()))
            out[key] = out.get(key, 0) + c * p
        return LocalFunctional(out)

    def gradient(self) -> dict:
        return {v: self.derivative(v) for v in sorted(self.variables())}

    # substitutions

    def shift(self, psi) -> "LocalFunctional":
        """``F^psi[phi] = F[phi + psi]``."""
        vals = psi.as_var_dict() if hasattr(psi, "as_var_dict") else dict(psi)
        if not vals:
            return self
        out = {}
        for m, c in self.terms.items():
            # expand prod (v + a)^p binomially
            parts = []
            for v, p in m:
                a = vals.get(v, 0)
                if not a:
                    parts.append([(((v, p),), 1)])
                    continue
                opts = []
                for j in range(p + 1):
                    coef = _binom(p, j) * a ** (p - j)
                    opts.append((((v, j),) if j else (), coef))
                parts.append(opts)
            for combo in itertools.product(*parts):
                mono = tuple(x for piece, _ in combo for x in piece)
                coef = c
                for _, k in combo:
                    coef = coef * k
                out[mono] = out.get(mono, 0) + coef
        return LocalFunctional(out)

    def scale_vars(self, weights) -> "LocalFunctional":
        """``F[f phi]`` for site weights ``f`` (missing sites weigh 0)."""
        out = {}
        for m, c in self.terms.items():
            coef = c
            for (site, _), p in m:
                w = weights.value(site) if hasattr(weights, "value") else weights.get(site, 0)
                coef = coef * w ** p
                if not coef:
                    break
            if coef:
                out[m] = out.get(m, 0) + coef
        return LocalFunctional(out)

    def relabel(self, var_map: Callable) -> "LocalFunctional":
        """Rename variables through ``var_map(var) -> var``."""
        out = {}
        for m, c in self.terms.items():
            powers = {}
            for v, p in m:
                w = var_map(v)
                powers[w] = powers.get(w, 0) + p
            key = tuple(sorted(powers.items()))
            out[key] = out.get(key, 0) + c
        return LocalFunctional(out)

    def substitute(self, mapping: dict) -> "LocalFunctional":
        """Replace each variable ``v`` by the functional ``mapping[v]`` (default ``v``)."""
        cache = {}

        def power(v, p):
            key = (v, p)
            if key not in cache:
                base = mapping.get(v)
                if base is None:
                    cache[key] = LocalFunctional({((v, p),): 1})
                else:
                    cache[key] = base ** p
            return cache[key]

        acc = {}
        for m, c in self.terms.items():
            term = LocalFunctional({ONE: c})
            for v, p in m:
                term = term * power(v, p)
            for k, x in term.terms.items():
                acc[k] = acc.get(k, 0) + x
        return LocalFunctional(acc)

    def restrict_touching(self, region) -> "LocalFunctional":
        """Monomials involving at least one site of ``region``."""
        region = frozenset(region)
        return LocalFunctional({m: c for m, c in self.terms.items()
                                if any(v[0] in region for v, _ in m)})

    def restrict(self, region) -> "LocalFunctional":
        """Monomials whose sites all lie in ``region`` (constants kept)."""
        region = frozenset(region)
        return LocalFunctional({m: c for m, c in self.terms.items()
                                if all(v[0] in region for v, _ in m)})

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(_fmt_term(m, c) for m, c in self.sorted_items())


def _mono_key(m):
    return (_mono_degree(m), m)


def _fmt_term(m, c):
    if not m:
        return str(c)
    factors = []
    for (site, comp), p in m:
        s = f"phi{comp}{site}".replace(" ", "")
        factors.append(s if p == 1 else f"{s}^{p}")
    return f"{c}*" + "*".join(factors)


def functional_sort_key(F: LocalFunctional):
    return tuple((m, scalar_key(c)) for m, c in F.sorted_items())


# field configurations and test functions

class FieldConfiguration:
    """Field values on a lattice; sites not listed carry the zero vector."""

    def __init__(self, lattice: Lattice, values: dict | None = None, n_comp: int = 1):
        self.lattice = lattice
        self.n_comp = n_comp
        vals = {}
        for s, v in (values or {}).items():
            s = tuple(s)
            if s not in lattice:
                from .errors import OutOfLattice
                raise OutOfLattice(f"site {s} outside {lattice!r}")
            vec = tuple(exact(x) for x in (v if isinstance(v, (tuple, list)) else (v,)))
            if len(vec) != n_comp:
                raise ValueError(f"expected {n_comp} components at {s}")
            if any(vec):
                vals[s] = vec
        self.values = vals

    @classmethod
    def delta(cls, lattice, site, amplitude=1, n_comp=1, comp=0):
        vec = [0] * n_comp
        vec[comp] = amplitude
        return cls(lattice, {tuple(site): tuple(vec)}, n_comp)

    @classmethod
    def constant(cls, lattice, value, n_comp=1):
        return cls(lattice, {s: (value,) * n_comp for s in lattice.sites}, n_comp)

    def value(self, site, comp: int = 0):
        v = self.values.get(site)
        return v[comp] if v else Fraction(0)

    def support(self) -> frozenset:
        return frozenset(self.values)

    def as_var_dict(self) -> dict:
        return {(s, i): x for s, vec in self.values.items() for i, x in enumerate(vec) if x}

    def __add__(self, other):
        vals = dict(self.values)
        for s, v in other.values.items():
            old = vals.get(s, (0,) * self.n_comp)
            vals[s] = tuple(a + b for a, b in zip(old, v))
        return FieldConfiguration(self.lattice, vals, self.n_comp)

    def __neg__(self):
        return FieldConfiguration(self.lattice, {s: tuple(-x for x in v) for s, v in self.values.items()},
                                  self.n_comp)

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, c):
        return FieldConfiguration(self.lattice, {s: tuple(c * x for x in v) for s, v in self.values.items()},
                                  self.n_comp)

    def __eq__(self, other):
        return isinstance(other, FieldConfiguration) and self.values == other.values

    def __hash__(self):
        return hash(frozenset(self.values.items()))

    def __repr__(self):
        return f"FieldConfiguration({dict(sorted(self.values.items()))})"


class TestFunction:
    """Site weights in [0, 1], zero off the listed sites."""

    __test__ = False

    def __init__(self, lattice: Lattice, values: dict | None = None):
        self.lattice = lattice
        vals = {}
        for s, w in (values or {}).items():
            w = exact(w)
            if not 0 <= w <= 1:
                raise ValueError(f"test function weight {w} at {s} outside [0, 1]")
            if w:
                vals[tuple(s)] = w
        lattice.check(vals)
        self.values = vals

    @classmethod
    def ones(cls, lattice: Lattice, region=None) -> "TestFunction":
        sites = lattice.sites if region is None else region
        return cls(lattice, {s: 1 for s in sites})

    def value(self, site):
        return self.values.get(site, Fraction(0))

    def support(self) -> frozenset:
        return frozenset(self.values)

    def ones_set(self) -> frozenset:
        return frozenset(s for s, w in self.values.items() if w == 1)

    def is_one_on(self, region) -> bool:
        return all(self.values.get(s) == 1 for s in region)

    def __repr__(self):
        return f"TestFunction({len(self.values)} sites)"


class TestFunctionSequence:
    """Finite nested sequence: each entry is supported where the previous one is 1."""

    __test__ = False

    def __init__(self, functions: Iterable[TestFunction]):
        self.functions = tuple(functions)
        if not self.functions:
            raise ValueError("empty test function sequence")
        for prev, nxt in zip(self.functions, self.functions[1:]):
            if not nxt.support() <= prev.ones_set():
                raise ValueError("nesting violated: supp f_k not inside f_{k-1}^{-1}(1)")

    def __getitem__(self, i):
        return self.functions[i]

    def __len__(self):
        return len(self.functions)

    def is_one_on(self, region) -> bool:
        return all(f.is_one_on(region) for f in self.functions)


def as_sequence(f) -> TestFunctionSequence:
    return f if isinstance(f, TestFunctionSequence) else TestFunctionSequence([f])


# Lagrangians

class Lagrangian:
    """Lagrangian given by its total density sum over the lattice.

    ``L(f)[phi] = sum_x L(x)[f phi]`` equals the total functional evaluated on
    ``f phi`` because substitution acts variable by variable.
    """

    def __init__(self, lattice: Lattice, total: LocalFunctional, n_comp: int = 1,
                 base_slope=Fraction(1)):
        self.lattice = lattice
        self.total = total
        self.n_comp = n_comp
        self.base_slope = Fraction(base_slope)
        self._order = None

    def at(self, f) -> LocalFunctional:
        f0 = as_sequence(f)[0]
        return self.total.scale_vars(f0)

    def plus(self, G: LocalFunctional) -> "Lagrangian":
        return Lagrangian(self.lattice, self.total + G, self.n_comp, self.base_slope)

    def radius(self) -> int:
        return max(1, self.total.cell_radius(self.lattice))

    def hessian(self) -> dict:
        """Symmetric operator ``K`` from the quadratic part: ``L2 = 1/2 <phi, K phi>``."""
        K = {}
        for m, c in self.total.homogeneous(2).terms.items():
            if len(m) == 1:
                (v, _), = m
                K[(v, v)] = K.get((v, v), 0) + 2 * c
            else:
                (v, _), (w, _) = m
                K[(v, w)] = K.get((v, w), 0) + c
                K[(w, v)] = K.get((w, v), 0) + c
        return {k: c for k, c in K.items() if c}

    def couplings(self, extra: LocalFunctional | None = None) -> dict:
        """Nearest-neighbour kinetic couplings ``(a_t, a_mu...)`` per site and component."""
        quad = self.total.homogeneous(2)
        if extra is not None:
            quad = quad + extra.homogeneous(2)
        return _couplings(self.lattice, quad, self.n_comp, self.base_slope)

    def induced_order(self, extra: LocalFunctional | None = None) -> CausalOrder:
        """Causal order of ``L + extra``; slopes come from the kinetic couplings."""
        if extra is None and self._order is not None:
            return self._order
        slopes = derived_slopes(self.lattice, self.couplings(extra), self.n_comp, self.base_slope)
        order = CausalOrder(self.lattice, self.base_slope, slopes)
        if extra is None:
            self._order = order
        return order

    def is_admissible(self, F: LocalFunctional) -> bool:
        """A functional is admissible when all slopes of ``L + F`` stay positive."""
        slopes = derived_slopes(self.lattice, self.couplings(F), self.n_comp, self.base_slope)
        return all(v > 0 for v in slopes.values())

    def __eq__(self, other):
        return (isinstance(other, Lagrangian) and self.lattice == other.lattice
                and self.total == other.total and self.n_comp == other.n_comp
                and self.base_slope == other.base_slope)

    def __hash__(self):
        return hash((self.lattice, self.total))

    def __repr__(self):
        return f"Lagrangian({self.lattice!r}, {len(self.total.terms)} terms)"


def _pair_coef(quad: LocalFunctional, a, b, comp):
    va, vb = (a, comp), (b, comp)
    key = tuple(sorted(((va, 1), (vb, 1))))
    return quad.terms.get(key, 0)


def _couplings(lattice, quad, n_comp, base_slope):
    out = {}
    base = (Fraction(1), Fraction(base_slope) ** 2)
    for s in lattice.sites:
        for comp in range(n_comp):
            coeffs = []
            for mu in range(lattice.dims + 1):
                sign = -1 if mu == 0 else 1
                nxt = lattice.neighbour(s, mu, 1)
                if nxt is not None:
                    coeffs.append(sign * _pair_coef(quad, s, nxt, comp))
                    continue
                prv = lattice.neighbour(s, mu, -1)
                if prv is not None:
                    coeffs.append(sign * _pair_coef(quad, prv, s, comp))
                else:
                    coeffs.append(base[0] if mu == 0 else base[1])
            out[(s, comp)] = tuple(coeffs)
    return out


def slope_from_couplings(a_t, a_x) -> Fraction:
    """Integer cone reach nearest to ``sqrt(a_x / a_t)``; ties round down.

    Degenerate couplings give 0 (no steps).  A nearest value of 0 becomes 1/2,
    a positive slope that only allows vertical steps.
    """
    if a_t <= 0 or a_x <= 0:
        return Fraction(0)
    ratio = Fraction(a_x) / Fraction(a_t)
    r = 0
    # largest r with (r - 1/2)^2 < ratio
    while (Fraction(2 * (r + 1) - 1, 2)) ** 2 < ratio:
        r += 1
    return Fraction(r) if r > 0 else Fraction(1, 2)


def derived_slopes(lattice, couplings, n_comp, base_slope) -> dict:
    slopes = {}
    for s in lattice.sites:
        vals = []
        for comp in range(n_comp):
            a = couplings[(s, comp)]
            vals.append(slope_from_couplings(a[0], min(a[1:])))
        slopes[s] = min(vals)
    return slopes


def forward_difference(lattice: Lattice, site, mu: int, comp: int = 0) -> LocalFunctional:
    nxt = lattice.neighbour(site, mu, 1)
    if nxt is None:
        raise ValueError(f"forward difference leaves the lattice at {site} along {mu}")
    return LocalFunctional.var(nxt, comp) - LocalFunctional.var(site, comp)


def free_lagrangian(lattice: Lattice, n_comp: int = 1, slope=1, slope_field: dict | None = None,
                    mass2=0, potential: dict | None = None) -> Lagrangian:
    """Lattice wave Lagrangian ``1/2 (D_t phi)^2 - 1/2 sum_mu s(x)^2 (D_mu phi)^2 - m^2 phi^2 / 2``.

    ``potential`` maps a power ``k`` to a coefficient ``c`` and adds ``-c phi^k`` per site.
    Densities whose stencil leaves the lattice are dropped.
    """
    slope = exact(slope)
    mass2 = exact(mass2)
    acc = LocalFunctional()
    for s in lattice.sites:
        sl = exact(slope_field.get(s, slope)) if slope_field else slope
        for comp in range(n_comp):
            if lattice.neighbour(s, 0, 1) is not None:
                acc = acc + Fraction(1, 2) * forward_difference(lattice, s, 0, comp) ** 2
            for mu in range(1, lattice.dims + 1):
                if lattice.neighbour(s, mu, 1) is not None:
                    acc = acc - Fraction(1, 2) * sl ** 2 * forward_difference(lattice, s, mu, comp) ** 2
            phi = LocalFunctional.var(s, comp)
            if mass2:
                acc = acc - Fraction(1, 2) * mass2 * phi ** 2
            for k, c in (potential or {}).items():
                acc = acc - exact(c) * phi ** int(k)
    return Lagrangian(lattice, acc, n_comp, slope)


def delta_L(L: Lagrangian, psi: FieldConfiguration, f=None) -> LocalFunctional:
    """``dL(psi) = L(f)^psi - L(f)`` for a cutoff equal to 1 around ``supp psi``."""
    need = L.lattice.hull(psi.support(), L.radius())
    if f is None:
        f = TestFunction.ones(L.lattice, need)
    seq = as_sequence(f)
    if not seq.is_one_on(need):
        missing = {s for s in need if seq[0].value(s) != 1}
        raise CutoffTooSmall("cutoff is not 1 on the stencil hull of supp psi", missing)
    Lf = L.at(seq)
    return Lf.shift(psi) - Lf


# generalized fields

class GeneralizedField:
    """Map from test functions to local functionals."""

    def __init__(self, fn: Callable, lattice: Lattice, name: str = "A", radius: int = 1):
        self.fn = fn
        self.lattice = lattice
        self.name = name
        self.radius = radius

    def at(self, f) -> LocalFunctional:
        if isinstance(f, TestFunctionSequence):
            f = f[0]
        return self.fn(f)

    __call__ = at

    def __add__(self, other):
        return GeneralizedField(lambda f: self.at(f) + other.at(f), self.lattice,
                                f"{self.name}+{other.name}", max(self.radius, other.radius))

    def __neg__(self):
        return GeneralizedField(lambda f: -self.at(f), self.lattice, f"-{self.name}", self.radius)

    def __repr__(self):
        return f"GeneralizedField({self.name})"


def generalized_field_of(F: LocalFunctional, lattice: Lattice, name: str = "A_F") -> GeneralizedField:
    """``A_F(f)[phi] = F[f phi]``."""
    return GeneralizedField(lambda f: F.scale_vars(f), lattice, name, max(1, F.cell_radius(lattice)))


def density_field(densities: dict, lattice: Lattice, name: str = "V") -> GeneralizedField:
    """``V(f) = sum_x f(x) v_x`` for a finite family of densities ``v_x``."""
    items = sorted(densities.items())
    radius = max([1] + [v.cell_radius(lattice) for _, v in items])

    def fn(f):
        out = LocalFunctional()
        for x, v in items:
            c = f.value(x)
            if c:
                out = out + c * v
        return out

    return GeneralizedField(fn, lattice, name, radius)


class Interaction:
    """Finite sequence of generalized fields, evaluated componentwise on a test function sequence."""

    def __init__(self, fields: Iterable[GeneralizedField]):
        self.fields = tuple(fields)

    @classmethod
    def of(cls, F: LocalFunctional, lattice: Lattice) -> "Interaction":
        return cls([generalized_field_of(F, lattice)])

    def at(self, f) -> LocalFunctional:
        seq = as_sequence(f)
        out = LocalFunctional()
        for i, A in enumerate(self.fields):
            out = out + A.at(seq[min(i, len(seq) - 1)])
        return out

    def __neg__(self):
        return Interaction([-A for A in self.fields])

    def is_zero(self, lattice) -> bool:
        return not self.at(TestFunction.ones(lattice))


def relative_action(A: GeneralizedField, psi: FieldConfiguration, f=None) -> LocalFunctional:
    """``dA(psi) = A(f)^psi - A(f)`` with ``f`` equal to 1 around ``supp psi``."""
    need = A.lattice.hull(psi.support(), A.radius)
    if f is None:
        f = TestFunction.ones(A.lattice)
    if isinstance(f, TestFunctionSequence):
        f = f[0]
    if not f.is_one_on(need):
        raise CutoffTooSmall("cutoff is not 1 around supp psi",
                             {s for s in need if f.value(s) != 1})
    Af = A.at(f)
    return Af.shift(psi) - Af


def generalized_support(A: GeneralizedField) -> frozenset:
    """Sites ``x`` lying in ``supp A(f)`` for the probes ``f`` equal to 1 near ``x``."""
    lat = A.lattice
    everywhere = A.at(TestFunction.ones(lat)).support()
    out = set()
    for x in lat.sites:
        if x not in everywhere:
            continue
        near = TestFunction.ones(lat, lat.hull([x], A.radius))
        if x in A.at(near).support():
            out.add(x)
    return frozenset(out)


def relative_action_support(A: GeneralizedField, amplitudes=(Fraction(1), Fraction(7, 3))) -> frozenset:
    """Sites ``x`` for which some field shift localized at ``x`` changes ``A``."""
    lat = A.lattice
    f = TestFunction.ones(lat)
    out = set()
    for x in lat.sites:
        for amp in amplitudes:
            if relative_action(A, FieldConfiguration.delta(lat, x, amp), f):
                out.add(x)
                break
    return frozenset(out)


def check_generalized_field(A: GeneralizedField, trials: int = 20, rng: random.Random | None = None):
    """Sample the support and additivity laws; returns ``(ok, witness)``."""
    rng = rng or random.Random(0)
    lat = A.lattice
    sites = list(lat.sites)
    for _ in range(trials):
        f = _random_test_function(lat, rng)
        if not A.at(f).support() <= f.support():
            return False, ("support", f)
        # disjoint f and h with a g in between; h kept at distance > radius + 1
        g = _random_test_function(lat, rng)
        a = rng.choice(sites)
        far = [s for s in sites if lat.distance(s, a) > 2 * A.radius + 1]
        if not far:
            continue
        b = rng.choice(far)
        ff = TestFunction(lat, {a: Fraction(rng.randint(1, 4), 4)})
        hh = TestFunction(lat, {b: Fraction(rng.randint(1, 4), 4)})
        g = TestFunction(lat, {s: w for s, w in g.values.items() if s not in (a, b)})
        lhs = A.at(_tf_sum(lat, ff, g, hh))
        rhs = A.at(_tf_sum(lat, ff, g)) - A.at(g) + A.at(_tf_sum(lat, g, hh))
        if lhs != rhs:
            return False, ("additivity", ff, g, hh)
    return True, None


def _tf_sum(lat, *fs):
    vals = {}
    for f in fs:
        for s, w in f.values.items():
            vals[s] = vals.get(s, 0) + w
    return TestFunction(lat, vals)


def _random_test_function(lat, rng):
    vals = {}
    for s in lat.sites:
        if rng.random() < 0.3:
            vals[s] = Fraction(rng.randint(1, 4), 4)
    return TestFunction(lat, vals)


# Hammerstein additivity

def check_hammerstein(F, lattice: Lattice, trials: int = 20, rng: random.Random | None = None,
                      separation: int = 2, n_comp: int = 1, exhaustive_pairs: int = 2000):
    """Check ``F(phi+chi+psi) = F(phi+chi) - F(chi) + F(chi+psi)`` for separated ``phi``, ``psi``.

    ``F`` is a LocalFunctional or any callable on FieldConfiguration.  Single-site
    probes over all separated site pairs run first, then random triples.  Returns
    ``(ok, witness)`` where the witness is the failing ``(phi, chi, psi)``.
    """
    rng = rng or random.Random(0)
    ev = (lambda c: F.evaluate(c, None)) if isinstance(F, LocalFunctional) else F

    def holds(phi, chi, psi):
        return ev(phi + chi + psi) == ev(phi + chi) - ev(chi) + ev(chi + psi)

    zero = FieldConfiguration(lattice, {}, n_comp)
    sites = list(lattice.sites)
    pairs = [(a, b) for a, b in itertools.combinations(sites, 2) if lattice.distance(a, b) >= separation]
    for a, b in pairs[:exhaustive_pairs]:
        for comp_a in range(n_comp):
            for comp_b in range(n_comp):
                phi = FieldConfiguration.delta(lattice, a, 1, n_comp, comp_a)
                psi = FieldConfiguration.delta(lattice, b, 1, n_comp, comp_b)
                if not holds(phi, zero, psi):
                    return False, (phi, zero, psi)
    for _ in range(trials):
        k = rng.randint(1, max(1, len(sites) // 4))
        phi_sites = rng.sample(sites, k)
        banned = lattice.hull(phi_sites, separation - 1) if separation > 0 else frozenset(phi_sites)
        rest = [s for s in sites if s not in banned]
        if not rest:
            continue
        psi_sites = rng.sample(rest, rng.randint(1, len(rest)))
        phi = _random_field(lattice, phi_sites, n_comp, rng)
        psi = _random_field(lattice, psi_sites, n_comp, rng)
        chi = _random_field(lattice, rng.sample(sites, rng.randint(0, len(sites))), n_comp, rng)
        if not holds(phi, chi, psi):
            return False, (phi, chi, psi)
    return True, None


def _random_field(lattice, sites, n_comp, rng):
    return FieldConfiguration(
        lattice, {s: tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(n_comp))
                  for s in sites}, n_comp)


def random_field(lattice, rng, n_comp=1, density=1.0):
    sites = [s for s in lattice.sites if rng.random() < density]
    return _random_field(lattice, sites, n_comp, rng)


# expression grammar:  c * phi_i(t,x)^k * d_mu phi_j(t,x)^m  (+ more terms)

_FACTOR = re.compile(r"""\s*(?:
    (?P<diff>d_(?P<mu>\d+)\s*phi_?(?P<dcomp>\d*)\s*\((?P<dsite>[^)]*)\)) |
    (?P<phi>phi_?(?P<comp>\d*)\s*\((?P<site>[^)]*)\)) |
    (?P<num>[-+]?\s*\d+(?:/\d+)?) |
    (?P<paren>\((?P<pnum>[-+]?\s*\d+(?:/\d+)?)\))
    )\s*(?:\^\s*(?P<pow>\d+))?\s*""", re.X)


def parse_functional(text: str, lattice: Lattice) -> LocalFunctional:
    """Parse a sum of products like ``1/2 * phi(1,2)^2 - 3 * d_0 phi_1(0,0) * phi(0,1)``."""
    text = text.strip()
    if not text:
        return LocalFunctional()
    out = LocalFunctional()
    for sign, term in _split_terms(text):
        acc = LocalFunctional.constant(sign)
        for raw in _split_factors(term):
            m = _FACTOR.fullmatch(raw)
            if not m:
                raise ScenarioError(f"cannot parse factor {raw!r} in {text!r}")
            power = int(m.group("pow") or 1)
            if m.group("diff"):
                site = _parse_site(m.group("dsite"), lattice)
                base = forward_difference(lattice, site, int(m.group("mu")), int(m.group("dcomp") or 0))
            elif m.group("phi"):
                site = _parse_site(m.group("site"), lattice)
                base = LocalFunctional.var(site, int(m.group("comp") or 0))
            else:
                num = (m.group("num") or m.group("pnum")).replace(" ", "")
                base = LocalFunctional.constant(Fraction(num))
            acc = acc * base ** power
        out = out + acc
    return out


def _parse_site(text, lattice):
    try:
        site = tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise ScenarioError(f"bad site {text!r}") from exc
    if site not in lattice:
        raise ScenarioError(f"site {site} outside {lattice!r}")
    return site


def _split_terms(text):
    terms, depth, cur, sign = [], 0, "", 1
    i = 0
    text = text.strip()
    if text[0] in "+-":
        sign = -1 if text[0] == "-" else 1
        i = 1
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and cur.strip() and not cur.rstrip().endswith(("*", "^")):
            terms.append((sign, cur))
            sign = -1 if ch == "-" else 1
            cur = ""
        else:
            cur += ch
        i += 1
    if cur.strip():
        terms.append((sign, cur))
    return terms


def _split_factors(term):
    parts, depth, cur = [], 0, ""
    for ch in term:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "*" and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [p for p in parts if p.strip()]
