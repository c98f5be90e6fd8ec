"""Anomaly cocycles on finitely generated groups of compactly supported symmetries.

A cocycle assigns a renormalization group element to every generator and is
extended to words by ``zeta_{gh} = zeta_h (zeta_g)^h`` with ``Z^h = h_L^-1 Z h_L``.
Fixtures built from a formula valid on every group element (coboundaries,
constant homomorphisms) carry it as ``closed_form``; relation checks compare the
word extension against it or against the identity on relation words.
"""
from __future__ import annotations

from fractions import Fraction

from .dynamical_algebra import (DynamicalSpacetime, Hints, ZetaRewrite, inv, mul, prove_chain, s,
                                unit)
from .errors import (DisagreementAcrossApproximants, InconsistentPresentation, InvalidSplit,
                     NotALagrangianSymmetry, SupportOutsideRegion)
from .functionals import Lagrangian, LocalFunctional, TestFunction
from .renormalization_group import (Coefficient, FunctionalSpace, RGElement, apply, compose,
                                    conjugate_by_symmetry, constant_shift, equal_on, identity,
                                    invert, with_interaction)
from .symmetry_group import SymmetryTransformation, word_product

ZERO = LocalFunctional()


def parse_group_word(word) -> tuple:
    """``"a b^-1"`` or an iterable of names / ``(name, +-1)`` pairs."""
    if isinstance(word, str):
        word = word.split()
    out = []
    for item in word:
        if isinstance(item, str):
            if item.endswith("^-1"):
                out.append((item[:-3], -1))
            else:
                out.append((item, 1))
        else:
            out.append((item[0], int(item[1])))
    return tuple(out)


def push_element(h: SymmetryTransformation, order: int = 4) -> RGElement:
    """``h_*`` as a linear element."""
    inv_h = h.inverse()
    lin = Coefficient(1, lambda ms: h.push(LocalFunctional({ms[0]: 1})), name=f"{h.name}_*")
    lin_inv = Coefficient(1, lambda ms: inv_h.push(LocalFunctional({ms[0]: 1})), name=f"{inv_h.name}_*")
    return RGElement(order, ZERO, {1: lin}, arity=1, name=f"{h.name}_*", linear_inverse=lin_inv)


class Cocycle:
    def __init__(self, lagrangian: Lagrangian, generators: dict, images: dict, order: int = 4,
                 relations=(), closed_form=None, name: str = "zeta"):
        self.lagrangian = lagrangian
        self.lattice = lagrangian.lattice
        self.n_comp = lagrangian.n_comp
        self.generators = dict(generators)
        self.images = dict(images)
        if set(self.images) != set(self.generators):
            raise ValueError("images must be given for exactly the generators")
        self.order = order
        self.relations = tuple(parse_group_word(r) for r in relations)
        self.closed_form = closed_form
        self.name = name
        self._words = {}
        self._conj = {}

    # group side

    def element(self, word) -> SymmetryTransformation:
        return word_product(self.generators, parse_group_word(word), self.lattice, self.n_comp)

    def transport(self, Z: RGElement, g: SymmetryTransformation) -> RGElement:
        """``Z^g = g_L^-1 Z g_L``."""
        key = (id(Z), g)
        if key not in self._conj:
            self._conj[key] = (Z, conjugate_by_symmetry(Z, g, self.lagrangian))
        return self._conj[key][1]

    def letter_image(self, name: str, e: int) -> RGElement:
        if e > 0:
            return self.images[name]
        key = ((name, -1),)
        if key not in self._words:
            g_inv = self.generators[name].inverse()
            self._words[key] = invert(self.transport(self.images[name], g_inv),
                                      name=f"{self.name}_{name}^-1")
        return self._words[key]

    def evaluate(self, word) -> RGElement:
        """Fold a word with the cocycle relation."""
        word = parse_group_word(word)
        if not word:
            return identity(self.order)
        if word in self._words:
            return self._words[word]
        if len(word) == 1:
            return self.letter_image(*word[0])
        head, (name, e) = word[:-1], word[-1]
        g = self.generators[name] if e > 0 else self.generators[name].inverse()
        out = compose(self.letter_image(name, e), self.transport(self.evaluate(head), g),
                      name=f"{self.name}_{' '.join(n + ('' if k > 0 else '^-1') for n, k in word)}")
        self._words[word] = out
        return out

    def value(self, x) -> RGElement:
        """``zeta`` on a group element (closed form needed) or on a word."""
        if isinstance(x, SymmetryTransformation):
            if self.closed_form is not None:
                return self.closed_form(x)
            for name, g in self.generators.items():
                if g == x:
                    return self.images[name]
            raise InconsistentPresentation(f"{self.name} has no closed form for {x.name}", x)
        return self.evaluate(x)

    # checks

    def default_space(self) -> FunctionalSpace:
        sites = set()
        for g in self.generators.values():
            sites |= g.support()
        for Z in self.images.values():
            if Z.support is not None:
                sites |= Z.support
        if not sites:
            sites = {self.lattice.sites[0]}
        return FunctionalSpace(sorted(sites)[:6], self.n_comp, 2)

    def check_relations(self, space: FunctionalSpace | None = None, max_n: int = 2) -> None:
        space = space or self.default_space()
        for rel in self.relations:
            if not self.element(rel).is_identity():
                raise InconsistentPresentation(f"relation {rel} is not trivial in the group", rel)
            ok, wit = equal_on(self.evaluate(rel), identity(self.order), space, max_n)
            if not ok:
                raise InconsistentPresentation(f"{self.name} is not the identity on relation {rel}",
                                               (rel, wit))

    # algebra side

    def rewrite_for(self, label: str, g: SymmetryTransformation, Z: RGElement | None = None) -> ZetaRewrite:
        Z = Z if Z is not None else self.value(g)
        Zinv = invert(Z)
        g_inv = g.inverse()
        L = self.lagrangian
        dl, dl_inv = g.delta_L(L), g_inv.delta_L(L)
        return ZetaRewrite(label,
                           g_action=lambda F: g.push(F) + dl,
                           g_inverse_action=lambda F: g_inv.push(F) + dl_inv,
                           zeta=lambda F: apply(Z, F),
                           zeta_inverse=lambda F: apply(Zinv, F))

    def context(self, extra: dict | None = None, name: str | None = None) -> DynamicalSpacetime:
        """Algebra of ``(L, zeta)``: generator rewrites plus ``extra`` labelled elements."""
        rws = [self.rewrite_for(f"{self.name}:{n}", g, self.images[n])
               for n, g in sorted(self.generators.items())]
        for label, g in sorted((extra or {}).items()):
            rws.append(self.rewrite_for(f"{self.name}:{label}", g))
        return DynamicalSpacetime(self.lagrangian, rws, name or f"A({self.name})")

    def __repr__(self):
        return f"Cocycle({self.name}, generators={sorted(self.generators)})"


# fixtures

def _support_of(g: SymmetryTransformation) -> frozenset:
    return g.support() | frozenset(g.chi.values())


def trivial_cocycle(L: Lagrangian, generators: dict, order: int = 4, relations=()) -> Cocycle:
    ident = identity(order)
    return Cocycle(L, generators, {n: ident for n in generators}, order, relations,
                   closed_form=lambda g: ident, name="trivial")


def coboundary(Z: RGElement, L: Lagrangian, generators: dict, relations=(), name: str = "cob") -> Cocycle:
    """``zeta_g = Z^-1 Z^g``, a cocycle for every group element."""
    Zinv = invert(Z)
    cache = {}

    def closed(g):
        if g not in cache:
            out = compose(Zinv, conjugate_by_symmetry(Z, g, L), name=f"{name}_{g.name}")
            out.support = _support_of(g)
            cache[g] = out
        return cache[g]

    return Cocycle(L, generators, {n: closed(g) for n, g in generators.items()}, Z.order,
                   relations, closed_form=closed, name=name)


def constant_cocycle(L: Lagrangian, generators: dict, charge, order: int = 4, relations=(),
                     name: str = "const") -> Cocycle:
    """``zeta_g = id + charge(g)``; a cocycle when ``charge`` is a homomorphism."""
    cache = {}

    def closed(g):
        if g not in cache:
            out = constant_shift(charge(g), order)
            out.support = _support_of(g)
            cache[g] = out
        return cache[g]

    return Cocycle(L, generators, {n: closed(g) for n, g in generators.items()}, order,
                   relations, closed_form=closed, name=name)


def offset_charge(weights: dict, n_comp: int = 1):
    """Homomorphism on pure field translations: ``sum_x w(x) . phi0(x)``."""
    def charge(g):
        total = Fraction(0)
        for site, vec in g.phi0.items():
            w = weights.get(site, 0)
            total += sum(Fraction(w) * v for v in vec[:n_comp])
        return total
    return charge


def mutate(zeta: Cocycle, name: str, delta) -> Cocycle:
    """Copy of ``zeta`` with one corrupted image (``delta`` a constant or an element composed on the right)."""
    extra = delta if isinstance(delta, RGElement) else constant_shift(delta, zeta.order)
    images = dict(zeta.images)
    images[name] = compose(images[name], extra, name=f"{zeta.name}_{name}~")
    images[name].support = zeta.images[name].support
    return Cocycle(zeta.lagrangian, zeta.generators, images, zeta.order, zeta.relations,
                   zeta.closed_form, name=f"{zeta.name}~{name}")


# operations

def evaluate(zeta: Cocycle, word) -> RGElement:
    return zeta.evaluate(word)


def check_cocycle_relation(zeta: Cocycle, g, h, space: FunctionalSpace | None = None,
                           max_n: int = 2):
    """Compare ``zeta_{gh}`` with ``zeta_h (zeta_g)^h``; returns ``(ok, witness)``.

    ``g`` and ``h`` are words.  The left side comes from the closed form when the
    cocycle has one, so corrupted generator images are caught.
    """
    space = space or zeta.default_space()
    gw, hw = parse_group_word(g), parse_group_word(h)
    if zeta.closed_form is not None:
        lhs = zeta.closed_form(zeta.element(gw + hw))
    else:
        lhs = zeta.evaluate(gw + hw)
    rhs = compose(zeta.evaluate(hw), zeta.transport(zeta.evaluate(gw), zeta.element(hw)))
    ok, wit = equal_on(lhs, rhs, space, max_n)
    return ok, (None if ok else {"g": gw, "h": hw, "coefficient": wit})


def modified_action(zeta: Cocycle, g, F: LocalFunctional) -> LocalFunctional:
    """``g_zeta F = g_L zeta_g^-1 (F)``."""
    elem = g if isinstance(g, SymmetryTransformation) else zeta.element(g)
    Z = zeta.value(elem if isinstance(g, SymmetryTransformation) else g)
    return elem.act_L(zeta.lagrangian, apply(invert(Z), F))


def equivalent(zeta: Cocycle, zeta2: Cocycle, Z: RGElement, space: FunctionalSpace | None = None,
               max_n: int = 2):
    """Check ``Z zeta2_g = zeta_g Z^g`` on every generator; returns ``(ok, witness)``."""
    space = space or zeta.default_space()
    for name in sorted(zeta.generators):
        g = zeta.generators[name]
        lhs = compose(Z, zeta2.images[name])
        rhs = compose(zeta.images[name], zeta.transport(Z, g))
        ok, wit = equal_on(lhs, rhs, space, max_n)
        if not ok:
            return False, {"generator": name, "coefficient": wit}
    return True, None


def conjugated(zeta: Cocycle, Z: RGElement, name: str | None = None) -> Cocycle:
    """``zeta'_g = Z^-1 zeta_g Z^g``, equivalent to ``zeta`` via ``Z``."""
    Zinv = invert(Z)

    def make(g, Zg):
        out = compose(compose(Zinv, Zg), conjugate_by_symmetry(Z, g, zeta.lagrangian))
        out.support = Zg.support
        return out

    images = {n: make(g, zeta.images[n]) for n, g in zeta.generators.items()}
    closed = None
    if zeta.closed_form is not None:
        closed = lambda g: make(g, zeta.closed_form(g))
    return Cocycle(zeta.lagrangian, zeta.generators, images, zeta.order, zeta.relations,
                   closed, name=name or f"{zeta.name}'")


def transport_interaction(zeta: Cocycle, W: LocalFunctional, f=None) -> Cocycle:
    """``(zeta^W)_g = (zeta_g)^W`` in the algebra of ``L + W``."""
    lat = zeta.lattice
    f = f if f is not None else TestFunction.ones(lat)
    if not W:
        return zeta

    def move(Z):
        out = with_interaction(Z, W, f)
        out.support = Z.support
        return out

    images = {n: move(Z) for n, Z in zeta.images.items()}
    closed = None
    if zeta.closed_form is not None:
        closed = lambda g: move(zeta.closed_form(g))
    return Cocycle(zeta.lagrangian.plus(W), zeta.generators, images, zeta.order,
                   zeta.relations, closed, name=f"{zeta.name}^W")


def h_action(zeta: Cocycle, h: SymmetryTransformation, check_symmetry: bool = True) -> Cocycle:
    """``(h zeta)_g = h_* zeta_{h^-1 g h} h_*^-1`` on the conjugated generators ``h g h^-1``."""
    L = zeta.lagrangian
    if check_symmetry and h.delta_L(L):
        raise NotALagrangianSymmetry(f"{h.name} is not a symmetry of the Lagrangian")
    if h.is_identity():
        return zeta
    push = push_element(h, zeta.order)
    push_inv = push_element(h.inverse(), zeta.order)
    h_inv = h.inverse()

    def move(Z):
        out = compose(compose(push, Z), push_inv)
        out.support = (frozenset(h.chi_map(x) for x in Z.support)
                       if Z.support is not None else None)
        return out

    gens = {n: h * g * h_inv for n, g in zeta.generators.items()}
    images = {n: move(zeta.images[n]) for n in zeta.generators}
    closed = None
    if zeta.closed_form is not None:
        closed = lambda g: move(zeta.closed_form(h_inv * g * h))
    return Cocycle(L, gens, images, zeta.order, zeta.relations, closed,
                   name=f"{h.name}.{zeta.name}")


def is_local_approximation(h_prime: SymmetryTransformation, h: SymmetryTransformation, region) -> bool:
    """``h'`` acts like ``h`` on every functional supported in ``region``."""
    for x in region:
        for c in range(h.n_comp):
            v = LocalFunctional.var(x, c)
            if h_prime.push(v) != h.push(v):
                return False
    return True


def approximant_action(zeta: Cocycle, h_prime: SymmetryTransformation, g: SymmetryTransformation) -> RGElement:
    """``(h' zeta)_g = h'_* zeta_{h'^-1 g h'} h'^-1_*`` for a compactly supported ``h'``."""
    push = push_element(h_prime, zeta.order)
    push_inv = push_element(h_prime.inverse(), zeta.order)
    inner = zeta.value(h_prime.inverse() * g * h_prime)
    return compose(compose(push, inner), push_inv)


def check_local_flow(zeta: Cocycle, h: SymmetryTransformation, h_prime: SymmetryTransformation,
                     region, max_n: int = 2) -> dict:
    """Both local identities relating ``h zeta``, ``h' zeta`` and ``Z = zeta_{h'^-1}``.

    Returns per generator: ``(first_ok, second_ok)``.  Generators must live in ``h(region)``.
    """
    region = frozenset(region)
    if not is_local_approximation(h_prime, h, region):
        raise SupportOutsideRegion(f"{h_prime.name} does not agree with {h.name} on the region")
    image_region = frozenset(h.chi_map(x) for x in region)
    hz = h_action(zeta, h)
    Z = zeta.value(h_prime.inverse())
    out = {}
    for name, g in sorted(zeta.generators.items()):
        g_moved = hz.generators[name]
        if not _support_of(g_moved) <= image_region:
            raise SupportOutsideRegion(f"generator {name} leaves the region", sorted(_support_of(g_moved)))
        local = FunctionalSpace(sorted(image_region)[:6], zeta.n_comp, 2)
        a = hz.value(g_moved) if hz.closed_form is not None else hz.images[name]
        b = approximant_action(zeta, h_prime, g_moved)
        first, _ = equal_on(a, b, local, max_n)
        c = compose(compose(invert(Z), zeta.value(g_moved)), zeta.transport(Z, g_moved))
        second, _ = equal_on(b, c, local, max_n)
        out[name] = (first, second)
    return out


def theta_h(zeta: Cocycle, approximants, F: LocalFunctional, region=None) -> LocalFunctional:
    """``zeta_{h'}(F) - zeta_{h'}(0)``, required to agree across all approximants."""
    if region is not None and not F.support() <= frozenset(region):
        raise SupportOutsideRegion("supp F is not inside the region", sorted(F.support()))
    values = []
    for hp in approximants:
        Z = zeta.value(hp)
        values.append(apply(Z, F) - Z.z0)
    for v in values[1:]:
        if v != values[0]:
            raise DisagreementAcrossApproximants("theta depends on the approximant", (values[0], v))
    return values[0]


def delta_zeta_h_L(zeta: Cocycle, approximants, f: TestFunction, phi) -> Fraction:
    """``zeta_{h'}(0)[f phi] - zeta_{h'}(0)[0]``, required to agree across approximants."""
    values = []
    for hp in approximants:
        z0 = zeta.value(hp).z0
        values.append(z0.scale_vars(f).evaluate(phi) - z0.constant_term)
    for v in values[1:]:
        if v != values[0]:
            raise DisagreementAcrossApproximants("delta_{zeta,h} L depends on the approximant",
                                                 (values[0], v))
    return values[0]


def delta_zeta_h_L_functional(zeta: Cocycle, h_prime) -> LocalFunctional:
    """The same generalized field at ``f = 1``."""
    return zeta.value(h_prime).z0.without_constant()


def rg_flow_map(theta, target: DynamicalSpacetime, word):
    """``S(F) -> S~(theta F)`` letterwise into ``target``."""
    from .dynamical_algebra import map_letters
    return map_letters(word, lambda F: s(theta(F), target), target)


# anomalous Noether theorem

def validate_split(L: Lagrangian, total: LocalFunctional, region, split) -> list:
    """Check a user decomposition ``[(Q1+, Q1-), ...]`` of ``total``; returns five padded blocks."""
    region = frozenset(region)
    blocks = [tuple(p) for p in split] + [(ZERO, ZERO)] * (5 - len(split))
    if len(blocks) > 5:
        raise InvalidSplit("at most five blocks", len(split))
    acc = ZERO
    for plus, minus in blocks:
        acc = acc + plus + minus
    if acc != total:
        raise InvalidSplit("blocks do not sum to delta_{h'^-1} L", (acc - total))
    below = ZERO
    for i, (plus, minus) in enumerate(blocks, start=1):
        order = L.induced_order(below.homogeneous(2) or None)
        bad = order.violating_pair(plus.support(), region)
        if bad is not None:
            raise InvalidSplit(f"Q{i}+ meets the causal past of the region", bad)
        order = L.induced_order((below + plus).homogeneous(2) or None)
        bad = order.violating_pair(region, minus.support())
        if bad is not None:
            raise InvalidSplit(f"Q{i}- meets the causal future of the region", bad)
        below = below + plus + minus
    return blocks


class NoetherData:
    """Words of the anomalous Noether identity ``gamma_h S(F) = Ad(U) beta_Z S(F)``."""

    def __init__(self, zeta: Cocycle, h, h_prime, region, split, name: str = "noether"):
        L = zeta.lagrangian
        self.zeta, self.h, self.h_prime = zeta, h, h_prime
        self.region = frozenset(region)
        if not is_local_approximation(h_prime, h, self.region):
            raise SupportOutsideRegion(f"{h_prime.name} does not agree with {h.name} on the region")
        self.hzeta = h_action(zeta, h)
        self.Q = h_prime.inverse().delta_L(L)
        if self.Q.support() & self.region:
            raise InvalidSplit("delta_{h'^-1} L meets the region", sorted(self.Q.support() & self.region))
        self.blocks = validate_split(L, self.Q, self.region, split)
        self.Z = self.hzeta.value(h_prime)
        self.context = self.hzeta.context({"h'": h_prime}, name=name)

    def s_prime(self, X: LocalFunctional):
        ctx = self.context
        return mul(inv(s(self.Z.z0, ctx)), s(apply(self.Z, X), ctx))

    def partial(self, i: int) -> LocalFunctional:
        """``Q_{<i}``."""
        acc = ZERO
        for plus, minus in self.blocks[:i - 1]:
            acc = acc + plus + minus
        return acc

    def unitary(self):
        out = unit(self.context)
        for i in range(5):
            a, b = 6 - i, 5 - i
            out = mul(out, inv(self.s_prime(self.partial(a))),
                      self.s_prime(self.partial(b) + self.blocks[b - 1][0]))
        return out

    def lhs(self, F: LocalFunctional):
        if not F.support() <= self.region:
            raise SupportOutsideRegion("supp F is not inside the region", sorted(F.support()))
        return s(self.h.push(F), self.context)

    def rhs(self, F: LocalFunctional):
        U = self.unitary()
        return mul(U, self.s_prime(F), inv(U))

    def anchors(self, F: LocalFunctional) -> list:
        """Intermediate words of the stepwise factorization, block 5 down to block 1."""
        ctx = self.context
        words = [self.lhs(F), s(apply(self.Z, F + self.Q), ctx)]
        left, right = unit(ctx), unit(ctx)
        for i in range(5, 0, -1):
            plus, minus = self.blocks[i - 1]
            if not plus and not minus:
                continue
            lower = self.partial(i)
            left = mul(left, self.s_prime(lower + plus), inv(self.s_prime(lower)))
            right = mul(inv(self.s_prime(lower + plus)), self.s_prime(lower + plus + minus), right)
            words.append(mul(s(self.Z.z0, ctx), left, self.s_prime(F + lower), right))
        words.append(self.rhs(F))
        return words

    def hints(self, F: LocalFunctional) -> Hints:
        funcs = []
        for i in range(1, 6):
            lower = self.partial(i)
            plus = self.blocks[i - 1][0]
            for X in (lower, lower + plus, F + lower, F + lower + plus, F + self.partial(i + 1)):
                funcs.append(apply(self.Z, X))
        funcs.append(self.Z.z0)
        return Hints(functionals=tuple(funcs))

    def certificate(self, F: LocalFunctional, depth: int = 4):
        words = _dedupe(self.anchors(F))
        return prove_chain(words, depth, self.hints(F))


def _dedupe(words):
    out = []
    for w in words:
        if not out or out[-1].key != w.key:
            out.append(w)
    return out


def anomalous_noether_unitary(zeta: Cocycle, h, h_prime, region, split):
    return NoetherData(zeta, h, h_prime, region, split).unitary()
