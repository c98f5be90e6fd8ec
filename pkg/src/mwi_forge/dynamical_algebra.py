"""Words in the generators ``S(F)`` modulo the causality and dynamical relations.

A word is a phase times a free-group word in letters ``S(F)^{+-1}``.  Constant
parts of arguments are moved into the phase since ``S(F + c) = S(F) e^{ic}``, so
letters never carry constants and the phase is an exact scalar (rational or a
polynomial in ``1/pi^2``).

Equality in the quotient is searched for, not decided: ``provably_equal`` runs a
bounded bidirectional breadth-first search over single rule applications and
returns a certificate that can be replayed step by step.

Rule families, in the fixed order used by the search:

1. ``contract``  S(P) S(G)^-1 S(C) -> S(P - G + C) (and the inverse pattern, and
   the pair form with G = 0), when supp(P - G) misses the causal past of
   supp(C - G) for the order induced by ``L + G``.
2. ``dynamical``  S(F) -> S(F^psi + dL(psi)) for psi from the hint pool.
3. ``zeta``  S(g_L F) <-> S(zeta_g F) for the context's cocycle generators.
4. ``expand``  the reverse of ``contract`` with P, G drawn from the hint pool.

Within a family candidates are ordered by letter position, then by pool index.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .errors import (ContextMismatch, CutoffTooSmall, NotALagrangianSymmetry,
                     NotGloballyHyperbolic, ScenarioError, SideConditionFailed)
from .functionals import (FieldConfiguration, Interaction, Lagrangian, LocalFunctional,
                          TestFunction, as_sequence, delta_L, functional_sort_key, parse_functional)
from .rings import exact, scalar_key

ZERO = LocalFunctional()
MAX_STATES = 20000  # search cap; overridable from the environment by the CLI


# context

@dataclass(frozen=True)
class ZetaRewrite:
    """One generator of the ideal: ``S(g_L F) = S(zeta_g F)``.

    ``g_action`` and ``g_inverse_action`` are ``g_L`` and ``(g^-1)_L``; ``zeta`` and
    ``zeta_inverse`` are the renormalization group element and its inverse.  A
    rewrite is only emitted after the round trip has been checked exactly.
    """
    label: str
    g_action: Callable
    g_inverse_action: Callable
    zeta: Callable
    zeta_inverse: Callable
    cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def forward(self, X: LocalFunctional):
        """Read ``X`` as ``g_L F`` and return ``zeta_g F``."""
        key = ("f", X)
        if key not in self.cache:
            F = self.g_inverse_action(X)
            self.cache[key] = self.zeta(F) if self.g_action(F) == X else None
        return self.cache[key]

    def backward(self, X: LocalFunctional):
        """Read ``X`` as ``zeta_g F`` and return ``g_L F``."""
        key = ("b", X)
        if key not in self.cache:
            F = self.zeta_inverse(X)
            self.cache[key] = self.g_action(F) if self.zeta(F) == X else None
        return self.cache[key]


class DynamicalSpacetime:
    """Lattice with a Lagrangian, the causal order it induces, and optional zeta rewrites."""

    def __init__(self, lagrangian: Lagrangian, rewrites: Iterable[ZetaRewrite] = (),
                 name: str = "A"):
        self.lagrangian = lagrangian
        self.lattice = lagrangian.lattice
        self.rewrites = tuple(rewrites)
        self.name = name
        self._orders = {}

    @property
    def order(self):
        return self.order_for(ZERO)

    def order_for(self, G: LocalFunctional):
        """Causal order of ``L + A_G``; ``None`` when some slope degenerates."""
        key = G.homogeneous(2)
        if key not in self._orders:
            L = self.lagrangian
            try:
                order = L.induced_order(key) if key else L.induced_order()
            except NotGloballyHyperbolic:
                order = None
            if order is not None and any(v <= 0 for v in order.slope_field().values()):
                order = None
            self._orders[key] = order
        return self._orders[key]

    def with_rewrites(self, rewrites, name: str | None = None) -> "DynamicalSpacetime":
        ctx = DynamicalSpacetime(self.lagrangian, rewrites, name or self.name)
        ctx._orders = self._orders
        return ctx

    def shifted(self, V: LocalFunctional, name: str | None = None) -> "DynamicalSpacetime":
        """Context with Lagrangian ``L + V``."""
        return DynamicalSpacetime(self.lagrangian.plus(V), (), name or f"{self.name}+V")

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, DynamicalSpacetime) and self.lagrangian == other.lagrangian
                and tuple(r.label for r in self.rewrites) == tuple(r.label for r in other.rewrites))

    def __hash__(self):
        return hash(self.lagrangian)

    def __repr__(self):
        return f"DynamicalSpacetime({self.name}, {len(self.rewrites)} rewrites)"


# words

def _reduce(letters) -> tuple:
    out = []
    for F, e in letters:
        if not F:
            continue
        if out and out[-1][0] == F and out[-1][1] == -e:
            out.pop()
        else:
            out.append((F, e))
    return tuple(out)


class SWord:
    """Immutable phase-carrying word; letters are stored freely reduced."""

    __slots__ = ("phase", "letters", "context", "_key")

    def __init__(self, context: DynamicalSpacetime, letters=(), phase=0):
        self.context = context
        self.phase = exact(phase)
        self.letters = _reduce((F, int(e)) for F, e in letters)
        self._key = None

    @property
    def key(self):
        if self._key is None:
            self._key = (self.phase, self.letters)
        return self._key

    def _check(self, other: "SWord"):
        if not (self.context == other.context):
            raise ContextMismatch(f"words live in {self.context!r} and {other.context!r}")

    def __mul__(self, other: "SWord") -> "SWord":
        return mul(self, other)

    def __eq__(self, other):
        return isinstance(other, SWord) and self.context == other.context and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __len__(self):
        return len(self.letters)

    def is_identity(self) -> bool:
        return not self.letters and not self.phase

    def __repr__(self):
        return format_word(self)


def s(F: LocalFunctional, context: DynamicalSpacetime) -> SWord:
    """Generator ``S(F)``; the constant part of ``F`` becomes the phase."""
    return SWord(context, ((F.without_constant(), 1),), F.constant_term)


def unit(context: DynamicalSpacetime, phase=0) -> SWord:
    return SWord(context, (), phase)


def mul(*words: SWord) -> SWord:
    first = words[0]
    letters, phase = [], 0
    for w in words:
        first._check(w)
        letters.extend(w.letters)
        phase = phase + w.phase
    return SWord(first.context, letters, phase)


def inv(w: SWord) -> SWord:
    return SWord(w.context, tuple((F, -e) for F, e in reversed(w.letters)), -w.phase)


def _with_letters(w: SWord, pos: int, width: int, new, extra_phase=0) -> SWord:
    letters = w.letters[:pos] + tuple(new) + w.letters[pos + width:]
    return SWord(w.context, letters, w.phase + extra_phase)


def _letter(F: LocalFunctional, e: int):
    """Split a functional into a letter and a phase contribution."""
    return (F.without_constant(), e), e * F.constant_term


def format_word(w: SWord) -> str:
    parts = []
    if w.phase:
        parts.append(f"e^(i*{w.phase})")
    for F, e in w.letters:
        parts.append(f"S[{F!r}]" + ("^-1" if e < 0 else ""))
    return " ".join(parts) if parts else "1"


def map_letters(w: SWord, image: Callable, context: DynamicalSpacetime | None = None) -> SWord:
    """Homomorphic extension of ``S(F) -> image(F)``; the phase is kept."""
    out = unit(context or w.context, w.phase)
    for F, e in w.letters:
        img = image(F)
        out = mul(out, img if e > 0 else inv(img))
    return out


# causal factorization

def _causal_witness(ctx: DynamicalSpacetime, P, G, C):
    """``None`` when the factorization side condition holds, else a violating pair."""
    order = ctx.order_for(G)
    A, H = P - G, C - G
    if order is None:
        return ("degenerate order", None)
    sa, sh = A.support(), H.support()
    if not sa or not sh or not order.past_of_mask(sh) & order._mask(sa):
        return None
    return order.violating_pair(sa, sh)


def _triple(P, G, C, e):
    if not G:
        return ((P, 1), (C, 1)) if e > 0 else ((C, -1), (P, -1))
    return ((P, 1), (G, -1), (C, 1)) if e > 0 else ((C, -1), (G, 1), (P, -1))


def causal_factorize(w: SWord, G: LocalFunctional, split) -> SWord:
    """Rewrite ``S(F+G+H)`` <-> ``S(F+G) S(G)^-1 S(G+H)`` at its first occurrence.

    The contracted form is looked for first; otherwise the first letter equal to
    ``F + G + H`` (either exponent) is expanded.
    """
    F, H = split
    P, C = (F + G).without_constant(), (G + H).without_constant()
    G = G.without_constant()
    bad = _causal_witness(w.context, P, G, C)
    if bad is not None:
        raise SideConditionFailed("supp F meets the causal past of supp H", bad)
    for e in (1, -1):
        pattern = _triple(P, G, C, e)
        n = len(pattern)
        for i in range(len(w.letters) - n + 1):
            if w.letters[i:i + n] == pattern:
                return _with_letters(w, i, n, ((P - G + C, e),))
    D = (F + G + H).without_constant()
    for i, (X, e) in enumerate(w.letters):
        if X == D:
            return _with_letters(w, i, 1, _triple(P, G, C, e))
    raise SideConditionFailed("neither side of the factorization occurs in the word", None)


# dynamical relation

def dynamical_image(ctx: DynamicalSpacetime, F: LocalFunctional, psi: FieldConfiguration,
                    f=None) -> LocalFunctional:
    return F.shift(psi) + delta_L(ctx.lagrangian, psi, f)


def dynamical_rewrite(w: SWord, psi: FieldConfiguration, position: int | None = None, f=None) -> SWord:
    """Replace letters ``S(F)`` by ``S(F^psi + dL(psi))`` (all letters unless ``position``)."""
    if not psi.support():
        return w
    dl = delta_L(w.context.lagrangian, psi, f)
    letters, phase = [], w.phase
    for i, (F, e) in enumerate(w.letters):
        if position is None or i == position:
            (X, e2), ph = _letter(F.shift(psi) + dl, e)
            letters.append((X, e2))
            phase = phase + ph
        else:
            letters.append((F, e))
    return SWord(w.context, letters, phase)


# certificates

@dataclass(frozen=True)
class Step:
    """One rule application.  ``reverse`` means it maps the next word to the previous one."""
    rule: str
    position: int
    data: tuple
    reverse: bool = False

    def describe(self) -> str:
        arrow = "<-" if self.reverse else "->"
        if self.rule in ("contract", "expand"):
            P, G, C, e = self.data[:4]
            witness = self.data[4] if len(self.data) > 4 else ()
            return (f"{self.rule} {arrow} at {self.position}: P=[{P!r}] G=[{G!r}] C=[{C!r}] "
                    f"exp={e:+d} disjoint={sorted(witness[0])} past={sorted(witness[1])}")
        if self.rule == "dynamical":
            return f"dynamical {arrow} at {self.position}: psi={self.data[0]!r}"
        return f"zeta {arrow} at {self.position}: {self.data[0]} {self.data[1]}"


@dataclass
class RewriteCertificate:
    steps: list
    words: list

    def __len__(self):
        return len(self.steps)

    def lines(self) -> list:
        return [f"{i + 1}. {st.describe()}" for i, st in enumerate(self.steps)]


@dataclass
class ProofResult:
    status: str
    certificate: RewriteCertificate | None = None
    explored: int = 0

    @property
    def equal(self) -> bool:
        return self.status == "Equal"

    def __bool__(self):
        return self.equal


def apply_step(w: SWord, step: Step) -> SWord:
    """Apply a rule in its forward sense, re-checking its side condition."""
    ctx, i = w.context, step.position
    if step.rule == "contract":
        P, G, C, e = step.data[:4]
        pattern = _triple(P, G, C, e)
        if w.letters[i:i + len(pattern)] != pattern:
            raise SideConditionFailed("contract: letters do not match", (i, step))
        bad = _causal_witness(ctx, P, G, C)
        if bad is not None:
            raise SideConditionFailed("contract: causal side condition fails", bad)
        letter, ph = _letter(P - G + C, e)
        return _with_letters(w, i, len(pattern), (letter,), ph)
    if step.rule == "expand":
        P, G, C, e = step.data[:4]
        D = (P - G + C)
        if i >= len(w.letters) or w.letters[i] != (D, e):
            raise SideConditionFailed("expand: letter does not match", (i, step))
        bad = _causal_witness(ctx, P, G, C)
        if bad is not None:
            raise SideConditionFailed("expand: causal side condition fails", bad)
        return _with_letters(w, i, 1, _triple(P, G, C, e))
    if step.rule == "dynamical":
        return dynamical_rewrite(w, step.data[0], position=i)
    if step.rule == "zeta":
        label, direction = step.data
        rw = next((r for r in ctx.rewrites if r.label == label), None)
        if rw is None:
            raise SideConditionFailed(f"zeta: no generator {label} in context", label)
        F, e = w.letters[i]
        out = rw.forward(F) if direction == "forward" else rw.backward(F)
        if out is None:
            raise SideConditionFailed("zeta: round trip is not exact", (label, direction))
        letter, ph = _letter(out, e)
        return _with_letters(w, i, 1, (letter,), ph)
    raise ValueError(f"unknown rule {step.rule}")


def replay(cert: RewriteCertificate, source: SWord, target: SWord) -> bool:
    """Check every link of a certificate; True when it joins ``source`` to ``target``."""
    words = cert.words
    if not words or words[0] != source or words[-1] != target:
        return False
    if len(words) != len(cert.steps) + 1:
        return False
    for st, a, b in zip(cert.steps, words, words[1:]):
        try:
            ok = apply_step(b, st) == a if st.reverse else apply_step(a, st) == b
        except SideConditionFailed:
            return False
        if not ok:
            return False
    return True


# search

@dataclass
class Hints:
    functionals: tuple = ()
    psis: tuple = ()


def _pool(w1: SWord, w2: SWord, hints: Hints) -> list:
    seen = {}
    for w in (w1, w2):
        for F, _ in w.letters:
            seen.setdefault(F, None)
    for F in hints.functionals:
        F = F.without_constant()
        if F:
            seen.setdefault(F, None)
    return sorted(seen, key=functional_sort_key)


def _witness(ctx, P, G, C):
    order = ctx.order_for(G)
    return (tuple(sorted((P - G).support())), tuple(sorted(order.causal_past((C - G).support()))))


def neighbours(w: SWord, pool: list, psis: tuple = (), max_len: int | None = None):
    """All single rule applications in the documented order."""
    ctx, L = w.context, w.letters
    n = len(L)
    out = []

    def emit(step, nw):
        if max_len is None or len(nw.letters) <= max_len:
            out.append((step, nw))

    # contractions
    for i in range(n):
        for width in (3, 2):
            if i + width > n:
                continue
            seg = L[i:i + width]
            exps = tuple(e for _, e in seg)
            if width == 3 and exps == (1, -1, 1):
                P, G, C, e = seg[0][0], seg[1][0], seg[2][0], 1
            elif width == 3 and exps == (-1, 1, -1):
                C, G, P, e = seg[0][0], seg[1][0], seg[2][0], -1
            elif width == 2 and exps == (1, 1):
                P, G, C, e = seg[0][0], ZERO, seg[1][0], 1
            elif width == 2 and exps == (-1, -1):
                C, G, P, e = seg[0][0], ZERO, seg[1][0], -1
            else:
                continue
            if _causal_witness(ctx, P, G, C) is None:
                step = Step("contract", i, (P, G, C, e, _witness(ctx, P, G, C)))
                emit(step, apply_step(w, step))
    # dynamical
    for i in range(n):
        for psi in psis:
            step = Step("dynamical", i, (psi,))
            emit(step, apply_step(w, step))
    # zeta rewrites
    for i in range(n):
        for rw in ctx.rewrites:
            for direction in ("forward", "backward"):
                F, _ = L[i]
                res = rw.forward(F) if direction == "forward" else rw.backward(F)
                if res is None or res == F:
                    continue
                step = Step("zeta", i, (rw.label, direction))
                emit(step, apply_step(w, step))
    # expansions
    for i in range(n):
        D, e = L[i]
        seen = set()
        for P in pool:
            for G in [ZERO] + pool:
                if P == G or P == D:
                    continue
                for first in (True, False):
                    if first:
                        PP, CC = P, D - P + G
                    else:
                        PP, CC = D - P + G, P
                    if not CC or CC == G or not PP or PP == G:
                        continue
                    key = (PP, G, CC)
                    if key in seen:
                        continue
                    seen.add(key)
                    if _causal_witness(ctx, PP, G, CC) is not None:
                        continue
                    step = Step("expand", i, (PP, G, CC, e, _witness(ctx, PP, G, CC)))
                    emit(step, apply_step(w, step))
    return out


def provably_equal(w1: SWord, w2: SWord, depth: int = 4, hints: Hints | None = None,
                   max_states: int | None = None, slack: int = 1) -> ProofResult:
    """Bounded bidirectional search for a rewrite chain joining two words.

    ``Equal`` results carry a replayable certificate; ``Unknown`` is not a disproof.
    """
    w1._check(w2)
    hints = hints or Hints()
    max_states = MAX_STATES if max_states is None else max_states
    if w1.key == w2.key:
        return ProofResult("Equal", RewriteCertificate([], [w1]), 1)
    pool = _pool(w1, w2, hints)
    max_len = max(len(w1), len(w2)) + slack
    # parents: key -> (parent_key, step, word)
    fwd = {w1.key: (None, None, w1)}
    bwd = {w2.key: (None, None, w2)}
    front_f, front_b = [w1], [w2]
    df = db = 0
    explored = 2
    while df + db < depth and (front_f or front_b):
        grow_forward = (len(front_f) <= len(front_b) and front_f) or not front_b
        mine, other = (fwd, bwd) if grow_forward else (bwd, fwd)
        frontier = front_f if grow_forward else front_b
        nxt = []
        for w in frontier:
            for step, nw in neighbours(w, pool, hints.psis, max_len):
                if nw.key in mine:
                    continue
                mine[nw.key] = (w.key, step, nw)
                explored += 1
                if nw.key in other:
                    return ProofResult("Equal", _join(fwd, bwd, nw.key), explored)
                nxt.append(nw)
                if explored >= max_states:
                    return ProofResult("Unknown", None, explored)
        if grow_forward:
            front_f, df = nxt, df + 1
        else:
            front_b, db = nxt, db + 1
    return ProofResult("Unknown", None, explored)


def _path(tree, key):
    steps, words = [], []
    while key is not None:
        parent, step, word = tree[key]
        words.append(word)
        if step is not None:
            steps.append(step)
        key = parent
    return steps, words


def _join(fwd, bwd, meet) -> RewriteCertificate:
    fs, fw = _path(fwd, meet)
    fs.reverse()
    fw.reverse()
    bs, bw = _path(bwd, meet)
    bs = [Step(st.rule, st.position, st.data, True) for st in bs]
    return RewriteCertificate(fs + bs, fw + bw[1:])


def prove_chain(words: list, depth: int = 4, hints: Hints | None = None,
                max_states: int | None = None) -> ProofResult:
    """Prove consecutive links of an explicit chain and concatenate the certificates."""
    steps, trail, explored = [], [words[0]], 0
    for a, b in zip(words, words[1:]):
        res = provably_equal(a, b, depth, hints, max_states)
        explored += res.explored
        if not res.equal:
            return ProofResult("Unknown", None, explored)
        steps.extend(res.certificate.steps)
        trail.extend(res.certificate.words[1:])
    return ProofResult("Equal", RewriteCertificate(steps, trail), explored)


# maps between algebras

def _interaction_value(V, f) -> LocalFunctional:
    if isinstance(V, LocalFunctional):
        return V
    return V.at(f)


def _full_support(V, lattice) -> frozenset:
    if isinstance(V, LocalFunctional):
        return V.support()
    return V.at(TestFunction.ones(lattice)).support()


def _need_one(f, region, lattice, what):
    need = lattice.hull(region, 1) if region else frozenset()
    seq = as_sequence(f)
    missing = {x for x in need if seq[0].value(x) != 1}
    if missing:
        raise CutoffTooSmall(f"cutoff is not 1 on {what}", missing)


def bogoliubov_ret(V, f, w: SWord, target: DynamicalSpacetime | None = None) -> SWord:
    """``S(F) -> S(V(f))^-1 S(F + V(f))`` into the algebra of ``L - V``."""
    return _bogoliubov(V, f, w, target, retarded=True)


def bogoliubov_adv(V, f, w: SWord, target: DynamicalSpacetime | None = None) -> SWord:
    """``S(F) -> S(F + V(f)) S(V(f))^-1`` into the algebra of ``L - V``."""
    return _bogoliubov(V, f, w, target, retarded=False)


def _bogoliubov(V, f, w, target, retarded):
    src = w.context
    lat = src.lattice
    supp_v = _full_support(V, lat)
    if not supp_v:
        return SWord(target or src, w.letters, w.phase)
    order = src.order
    for F, _ in w.letters:
        cone = order.causal_past(F.support()) if retarded else order.causal_future(F.support())
        _need_one(f, cone & supp_v, lat, "the cone of a letter inside supp V")
    Vf = _interaction_value(V, f)
    if target is None:
        target = src.shifted(-_interaction_value(V, TestFunction.ones(lat)), name=f"{src.name}-V")
    sv = s(Vf, target)

    def image(F):
        x = s(F + Vf, target)
        return mul(inv(sv), x) if retarded else mul(x, inv(sv))

    return map_letters(w, image, target)


def alpha_pair(V_plus, V_minus, f, g, w: SWord, target: DynamicalSpacetime | None = None) -> SWord:
    """``S(F) -> S(V+(f))^-1 S(F + V+(f) + V-(g)) S(V-(g) + V+(f))^-1 S(V+(f))``."""
    src = w.context
    lat = src.lattice
    vp, vm = _interaction_value(V_plus, f), _interaction_value(V_minus, g)
    if target is None:
        total = (_interaction_value(V_plus, TestFunction.ones(lat))
                 + _interaction_value(V_minus, TestFunction.ones(lat)))
        target = src.shifted(-total, name=f"{src.name}-V")
    sup_p, sup_m = _full_support(V_plus, lat), _full_support(V_minus, lat)
    mid = target.order_for(vp.homogeneous(2))
    for F, _ in w.letters:
        _need_one(g, src.order.causal_future(F.support()) & sup_m, lat,
                  "J+(supp F) inside supp V-")
        if mid is not None:
            _need_one(f, mid.causal_past(F.support() | vm.support()) & sup_p, lat,
                      "J-(supp F u supp V-(g)) inside supp V+")
    svp = s(vp, target)
    svb = s(vm + vp, target)

    def image(F):
        return mul(inv(svp), s(F + vp + vm, target), inv(svb), svp)

    return map_letters(w, image, target)


def beta_Z(Z, w: SWord, direction: str = "ret") -> SWord:
    """``S(F) -> S(Z(0))^-1 S(Z(F))`` (ret) or ``S(Z(F)) S(Z(0))^-1`` (adv)."""
    ctx = w.context
    z0 = s(Z.z0, ctx)

    def image(F):
        zf = s(Z(F), ctx)
        return mul(inv(z0), zf) if direction == "ret" else mul(zf, inv(z0))

    if direction not in ("ret", "adv"):
        raise ValueError("direction is 'ret' or 'adv'")
    return map_letters(w, image)


def gamma_h(h, w: SWord, assume_symmetry: bool = False,
            target: DynamicalSpacetime | None = None) -> SWord:
    """``S(F) -> S(h_* F)`` for a symmetry of the Lagrangian."""
    L = w.context.lagrangian
    if not assume_symmetry:
        dl = h.delta_L(L)
        if dl:
            raise NotALagrangianSymmetry(f"{h.name} changes the Lagrangian on {sorted(dl.support())}")
    ctx = target or w.context
    return map_letters(w, lambda F: s(h.push(F), ctx), ctx)


def relative_cauchy_evolution(V, f, w: SWord) -> SWord:
    """``Ad(S(V(f))^-1)``."""
    lat = w.context.lattice
    supp_v = _full_support(V, lat)
    _need_one(f, supp_v, lat, "supp V")
    if not supp_v:
        return w
    sv = s(_interaction_value(V, f), w.context)
    return mul(inv(sv), w, sv)


def cauchy_evolution_by_bogoliubov(V, f, w: SWord) -> SWord:
    """Retarded map of ``V`` after the advanced map of ``-V`` (target of the latter is ``L + V``)."""
    lat = w.context.lattice
    Vfull = _interaction_value(V, TestFunction.ones(lat))
    up = w.context.shifted(Vfull, name=f"{w.context.name}+V")
    minus_v = (-V) if not isinstance(V, LocalFunctional) else -V
    mid = bogoliubov_adv(minus_v, f, w, target=up)
    return bogoliubov_ret(V, f, mid, target=w.context)


# parsing

_FACTOR = re.compile(r"\s*(S\[(?P<body>[^\]]*)\](?P<inv>\^-1)?|e\^\(i\*(?P<phase>[^)]*)\))\s*")


def parse_word(text: str, context: DynamicalSpacetime) -> SWord:
    """Parse ``S[<functional>]`` factors (optionally ``^-1``) and ``e^(i*c)`` phases."""
    text = text.strip()
    out = unit(context)
    if text in ("", "1"):
        return out
    pos = 0
    while pos < len(text):
        m = _FACTOR.match(text, pos)
        if not m or m.end() == pos:
            raise ScenarioError(f"cannot parse word near {text[pos:pos + 20]!r}")
        if m.group("phase") is not None:
            out = mul(out, unit(context, exact(m.group("phase").strip())))
        else:
            F = parse_functional(m.group("body"), context.lattice)
            w = s(F, context)
            out = mul(out, inv(w) if m.group("inv") else w)
        pos = m.end()
    return out
