"""Compactly supported symmetry transformations on a lattice.

An element is ``(Phi, chi)``: a pointwise affine field redefinition
``(Phi phi)(x) = phi(x) A(x) + phi0(x)`` (row-vector convention) together with a
finitely supported site bijection ``chi``.  It acts on functionals by

    g_* F [phi] = F[(Phi phi) o chi]

and the product is chosen so that ``(g h)_* = g_* h_*``.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .errors import CutoffTooSmall, NotGloballyHyperbolic, OutOfLattice
from .functionals import (Lagrangian, LocalFunctional, TestFunction, as_sequence)
from .lattice_spacetime import CausalOrder, Lattice
from .rings import exact


def _identity_matrix(n):
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def _matmul(a, b):
    n = len(a)
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n))


def _vecmat(v, a):
    n = len(a)
    return tuple(sum(v[i] * a[i][j] for i in range(n)) for j in range(n))


def _matinv(a):
    n = len(a)
    M = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ValueError("matrix is not invertible")
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return tuple(tuple(row[n:]) for row in M)


class SymmetryTransformation:
    """Element ``(Phi, chi)`` of the compactly supported symmetry group."""

    def __init__(self, lattice: Lattice, n_comp: int = 1, A: dict | None = None,
                 phi0: dict | None = None, chi: dict | None = None, name: str = "g"):
        self.lattice = lattice
        self.n_comp = n_comp
        self.name = name
        ident = _identity_matrix(n_comp)
        zero = (Fraction(0),) * n_comp
        self.A = {}
        for s, m in (A or {}).items():
            if not isinstance(m, (tuple, list)) or not isinstance(m[0], (tuple, list)):
                m = ((m,),) if n_comp == 1 else m
            m = tuple(tuple(exact(x) for x in row) for row in m)
            _matinv(m)
            if m != ident:
                self.A[tuple(s)] = m
        self.phi0 = {}
        for s, v in (phi0 or {}).items():
            v = tuple(exact(x) for x in (v if isinstance(v, (tuple, list)) else (v,)))
            if v != zero:
                self.phi0[tuple(s)] = v
        self.chi = {tuple(a): tuple(b) for a, b in (chi or {}).items() if tuple(a) != tuple(b)}
        lattice.check(self.A)
        lattice.check(self.phi0)
        lattice.check(self.chi)
        lattice.check(self.chi.values())
        if set(self.chi) != set(self.chi.values()):
            raise ValueError("chi is not a bijection of its support")
        self._inv_chi = {b: a for a, b in self.chi.items()}

    # basic data

    def matrix(self, s):
        return self.A.get(s) or _identity_matrix(self.n_comp)

    def offset(self, s):
        return self.phi0.get(s) or (Fraction(0),) * self.n_comp

    def chi_map(self, s):
        return self.chi.get(s, s)

    def chi_inverse(self, s):
        return self._inv_chi.get(s, s)

    def support(self) -> frozenset:
        return frozenset(self.A) | frozenset(self.phi0) | frozenset(self.chi)

    def is_identity(self) -> bool:
        return not (self.A or self.phi0 or self.chi)

    def key(self):
        return (tuple(sorted(self.A.items())), tuple(sorted(self.phi0.items())),
                tuple(sorted(self.chi.items())))

    def __eq__(self, other):
        return isinstance(other, SymmetryTransformation) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Sym({self.name}: |A|={len(self.A)}, |phi0|={len(self.phi0)}, |chi|={len(self.chi)})"

    # group structure

    def __mul__(self, other: "SymmetryTransformation") -> "SymmetryTransformation":
        return compose(self, other)

    def inverse(self) -> "SymmetryTransformation":
        A, phi0, chi = {}, {}, {}
        for z in self.support() | frozenset(self.chi.values()):
            y = self.chi_map(z)
            Ainv = _matinv(self.matrix(y))
            A[z] = Ainv
            phi0[z] = tuple(-x for x in _vecmat(self.offset(y), Ainv))
        for a, b in self.chi.items():
            chi[b] = a
        return SymmetryTransformation(self.lattice, self.n_comp, A, phi0, chi, name=f"{self.name}^-1")

    def check_orientation(self, order: CausalOrder) -> None:
        """Reject bijections that reverse a causal relation."""
        lat = self.lattice
        moved = sorted(self.chi)
        for a in moved:
            ia = lat.index[a]
            for mask in (order.future_mask(ia), order.past_mask(ia)):
                j = 0
                while mask:
                    if mask & 1:
                        b = lat.sites[j]
                        if b != a:
                            lo, hi = (a, b) if order.leq(a, b) else (b, a)
                            if order.leq(self.chi_map(hi), self.chi_map(lo)):
                                raise NotGloballyHyperbolic(
                                    f"{self.name} reverses the causal pair {lo} < {hi}")
                    mask >>= 1
                    j += 1

    # actions

    def field_map(self, phi):
        """``(Phi phi) o chi`` as a FieldConfiguration."""
        from .functionals import FieldConfiguration
        vals = {}
        for s in self.lattice.sites:
            y = self.chi_map(s)
            v = tuple(phi.value(y, i) for i in range(self.n_comp))
            w = tuple(a + b for a, b in zip(_vecmat(v, self.matrix(y)), self.offset(y)))
            vals[s] = w
        return FieldConfiguration(self.lattice, vals, self.n_comp)

    def substitution(self, variables) -> dict:
        mapping = {}
        for (s, j) in variables:
            y = self.chi_map(s)
            if y == s and s not in self.A and s not in self.phi0:
                continue
            A = self.matrix(y)
            expr = LocalFunctional.constant(self.offset(y)[j])
            for i in range(self.n_comp):
                if A[i][j]:
                    expr = expr + LocalFunctional.var(y, i, A[i][j])
            mapping[(s, j)] = expr
        return mapping

    def push(self, F: LocalFunctional) -> LocalFunctional:
        """``g_* F``."""
        for s in F.support():
            if s not in self.lattice:
                raise OutOfLattice(f"functional site {s} outside the lattice")
        mapping = self.substitution(F.variables())
        if not mapping:
            return F
        return F.substitute(mapping)

    def delta_L(self, L: Lagrangian, f=None) -> LocalFunctional:
        """``delta_g L = g_* L(f) - L(f)`` with ``f`` equal to 1 around ``supp g``."""
        need = self.lattice.hull(self.support(), L.radius())
        if f is None:
            f = TestFunction.ones(self.lattice, need)
        seq = as_sequence(f)
        if not seq.is_one_on(need):
            raise CutoffTooSmall("cutoff is not 1 on the stencil hull of supp g",
                                 {s for s in need if seq[0].value(s) != 1})
        Lf = L.at(seq)
        near = Lf.restrict_touching(self.support())
        return self.push(near) - near

    def act_L(self, L: Lagrangian, F: LocalFunctional, f=None) -> LocalFunctional:
        """``g_L F = delta_g L + g_* F``."""
        return self.delta_L(L, f) + self.push(F)

    def action_element(self, L: Lagrangian, order: int = 4):
        """``g_L`` as an affine renormalization-group-shaped element."""
        from .renormalization_group import Coefficient, RGElement
        inv = self.inverse()
        lin = Coefficient(1, lambda ms: self.push(LocalFunctional({ms[0]: 1})), name=f"{self.name}_*")
        lin_inv = Coefficient(1, lambda ms: inv.push(LocalFunctional({ms[0]: 1})), name=f"{inv.name}_*")
        return RGElement(order, self.delta_L(L), {1: lin}, arity=1, support=None,
                         name=f"{self.name}_L", linear_inverse=lin_inv)

    def is_symmetry_of(self, L: Lagrangian) -> bool:
        return not self.delta_L(L)


def compose(g1: SymmetryTransformation, g2: SymmetryTransformation) -> SymmetryTransformation:
    """Product with ``(g1 g2)_* = g1_* g2_*``.

    The bijection is ``chi1 o chi2``; the field map at ``y`` is
    ``A1(y) A2(chi1^-1 y)`` with offset ``phi01(y) A2(chi1^-1 y) + phi02(chi1^-1 y)``.
    """
    if g1.lattice != g2.lattice or g1.n_comp != g2.n_comp:
        raise ValueError("incompatible symmetry transformations")
    touched = set(g1.support()) | {g1.chi_map(s) for s in g2.support()} | set(g1.chi.values())
    A, phi0 = {}, {}
    for y in touched:
        z = g1.chi_inverse(y)
        A2 = g2.matrix(z)
        A[y] = _matmul(g1.matrix(y), A2)
        phi0[y] = tuple(a + b for a, b in zip(_vecmat(g1.offset(y), A2), g2.offset(z)))
    chi = {}
    for s in set(g1.chi) | set(g2.chi):
        chi[s] = g1.chi_map(g2.chi_map(s))
    return SymmetryTransformation(g1.lattice, g1.n_comp, A, phi0, chi, name=f"{g1.name}{g2.name}")


def identity(lattice: Lattice, n_comp: int = 1) -> SymmetryTransformation:
    return SymmetryTransformation(lattice, n_comp, name="e")


# generators

def affine_at(lattice, site, matrix, offset=0, n_comp: int = 1, name: str | None = None):
    return SymmetryTransformation(lattice, n_comp, {site: matrix}, {site: offset},
                                  name=name or f"aff{site}")


def transposition(lattice, a, b, n_comp: int = 1, name: str | None = None):
    return SymmetryTransformation(lattice, n_comp, chi={a: b, b: a}, name=name or f"tau{a}{b}")


def cyclic_shift(lattice, sites, n_comp: int = 1, name: str = "shift"):
    """Cycle ``sites[0] -> sites[1] -> ... -> sites[0]``."""
    sites = [tuple(s) for s in sites]
    chi = {sites[i]: sites[(i + 1) % len(sites)] for i in range(len(sites))}
    return SymmetryTransformation(lattice, n_comp, chi=chi, name=name)


def block_translation(lattice, t_range, x_range, n_comp: int = 1, name: str = "transl"):
    """On each slice in ``t_range`` cycle the sites ``x_range`` by one step (1+1 lattices)."""
    chi = {}
    for t in t_range:
        xs = list(x_range)
        for i, x in enumerate(xs):
            chi[(t, x)] = (t, xs[(i + 1) % len(xs)])
    return SymmetryTransformation(lattice, n_comp, chi=chi, name=name)


def spatial_reflection(lattice, n_comp: int = 1, name: str = "refl"):
    """``x -> X - 1 - x`` in every spatial direction."""
    chi = {}
    for s in lattice.sites:
        chi[s] = (s[0],) + tuple(lattice.X - 1 - x for x in s[1:])
    return SymmetryTransformation(lattice, n_comp, chi=chi, name=name)


def field_sign_flip(lattice, region=None, n_comp: int = 1, name: str = "flip"):
    region = lattice.sites if region is None else region
    m = tuple(tuple(Fraction(-1) if i == j else Fraction(0) for j in range(n_comp)) for i in range(n_comp))
    return SymmetryTransformation(lattice, n_comp, {s: m for s in region}, name=name)


def random_generator(rng: random.Random, lattice: Lattice, n_comp: int = 1, region=None):
    sites = sorted(region or lattice.sites)
    kind = rng.choice(["affine", "swap"])
    if kind == "swap":
        a = rng.choice(sites)
        same = [b for b in sites if b[0] == a[0] and b != a]
        if same:
            return transposition(lattice, a, rng.choice(same), n_comp)
    s = rng.choice(sites)
    m = tuple(tuple(Fraction(rng.choice([1, 2, -1, 3]), rng.choice([1, 2])) if i == j else
                    Fraction(rng.randint(-1, 1)) if j > i else Fraction(0)
                    for j in range(n_comp)) for i in range(n_comp))
    off = tuple(Fraction(rng.randint(-2, 2), rng.randint(1, 3)) for _ in range(n_comp))
    return affine_at(lattice, s, m, off, n_comp)


def word_product(generators: dict, word, lattice: Lattice, n_comp: int = 1) -> SymmetryTransformation:
    """Reduce a word of ``(name, +-1)`` letters to one transformation."""
    out = identity(lattice, n_comp)
    for name, e in word:
        g = generators[name]
        out = compose(out, g if e > 0 else g.inverse())
    return out
