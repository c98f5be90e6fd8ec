"""Finite causal lattices.

A site is a tuple ``(t, x1, ..., xd)``.  The causal order is generated by unit
time steps: ``(t, x) -> (t + 1, y)`` is allowed when ``|y - x|_inf <= slope(t, x)``,
plus optional explicit extra edges.  Reachability is cached as integer bitsets.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable

from .errors import EmptySlab, NotGloballyHyperbolic, OutOfLattice

Site = tuple

DEFAULT_MAX_SITES = 10_000


class Lattice:
    """Box of sites ``0 <= t < T`` and ``0 <= x_i < X``."""

    def __init__(self, T: int, X: int, dims: int = 1, periodic: bool = False,
                 max_sites: int | None = None):
        if T < 1 or X < 1 or dims < 1:
            raise ValueError("lattice extents must be positive")
        max_sites = DEFAULT_MAX_SITES if max_sites is None else max_sites
        if T * X ** dims > max_sites:
            raise ValueError(f"lattice has {T * X ** dims} sites, cap is {max_sites}")
        self.T, self.X, self.dims, self.periodic = T, X, dims, periodic
        self.sites: tuple = tuple(
            (t,) + xs for t in range(T) for xs in itertools.product(range(X), repeat=dims))
        self.index = {s: i for i, s in enumerate(self.sites)}

    def __len__(self):
        return len(self.sites)

    def __contains__(self, s):
        return s in self.index

    def __eq__(self, other):
        return isinstance(other, Lattice) and (self.T, self.X, self.dims, self.periodic) == (
            other.T, other.X, other.dims, other.periodic)

    def __hash__(self):
        return hash((self.T, self.X, self.dims, self.periodic))

    def __repr__(self):
        return f"Lattice(T={self.T}, X={self.X}, dims={self.dims}, periodic={self.periodic})"

    def check(self, sites: Iterable) -> None:
        for s in sites:
            if s not in self.index:
                raise OutOfLattice(f"site {s} outside {self!r}")

    def wrap(self, s: Site):
        """Canonical form of a site, or None if it leaves the lattice."""
        t = s[0]
        if not 0 <= t < self.T:
            return None
        xs = s[1:]
        if self.periodic:
            return (t,) + tuple(x % self.X for x in xs)
        if all(0 <= x < self.X for x in xs):
            return tuple(s)
        return None

    def neighbour(self, s: Site, direction: int, step: int = 1):
        """Site displaced by ``step`` along axis ``direction`` (0 is time)."""
        moved = list(s)
        moved[direction] += step
        return self.wrap(tuple(moved))

    def distance(self, a: Site, b: Site) -> int:
        """Chebyshev distance, periodic in space if configured."""
        d = abs(a[0] - b[0])
        for xa, xb in zip(a[1:], b[1:]):
            dx = abs(xa - xb)
            if self.periodic:
                dx = min(dx, self.X - dx)
            d = max(d, dx)
        return d

    def ball(self, s: Site, radius: int = 1) -> frozenset:
        out = []
        for off in itertools.product(range(-radius, radius + 1), repeat=self.dims + 1):
            w = self.wrap(tuple(a + b for a, b in zip(s, off)))
            if w is not None:
                out.append(w)
        return frozenset(out)

    def hull(self, region: Iterable, radius: int = 1) -> frozenset:
        """Stencil hull: all sites within Chebyshev distance ``radius`` of ``region``."""
        out = set()
        for s in region:
            out |= self.ball(s, radius)
        return frozenset(out)

    def slice(self, t: int) -> frozenset:
        return frozenset(s for s in self.sites if s[0] == t)

    def cauchy_slab(self, t0: int, width: int) -> frozenset:
        if width <= 0:
            raise EmptySlab("slab width must be positive")
        if t0 < 0 or t0 + width > self.T:
            raise OutOfLattice(f"slab [{t0}, {t0 + width}) outside 0..{self.T}")
        return frozenset(s for s in self.sites if t0 <= s[0] < t0 + width)


def _reach(slope: Fraction) -> int:
    return math.floor(slope) if slope > 0 else -1


class CausalOrder:
    """Partial order generated by per-site cone slopes and explicit extra edges."""

    def __init__(self, lattice: Lattice, slope=Fraction(1), overrides: dict | None = None,
                 extra: Iterable = (), validate: bool = True):
        self.lattice = lattice
        self.base_slope = Fraction(slope)
        self.overrides = {s: Fraction(v) for s, v in (overrides or {}).items()
                          if Fraction(v) != self.base_slope}
        lattice.check(self.overrides)
        self.extra = frozenset((tuple(a), tuple(b)) for a, b in extra)
        for a, b in self.extra:
            lattice.check((a, b))
            if b[0] <= a[0]:
                raise NotGloballyHyperbolic(f"extra edge {a}->{b} does not increase time")
        self._succ = None
        self._pred = None
        self._past = None
        self._future = None
        if validate:
            self.validate()

    def slope(self, s: Site) -> Fraction:
        return self.overrides.get(s, self.base_slope)

    def slope_field(self) -> dict:
        return {s: self.slope(s) for s in self.lattice.sites}

    def _build_edges(self):
        lat = self.lattice
        idx = lat.index
        succ = [[] for _ in lat.sites]
        pred = [[] for _ in lat.sites]
        for i, s in enumerate(lat.sites):
            r = _reach(self.slope(s))
            if s[0] + 1 >= lat.T or r < 0:
                continue
            for off in itertools.product(range(-r, r + 1), repeat=lat.dims):
                w = lat.wrap((s[0] + 1,) + tuple(a + b for a, b in zip(s[1:], off)))
                if w is not None:
                    j = idx[w]
                    if j not in succ[i]:
                        succ[i].append(j)
                        pred[j].append(i)
        for a, b in self.extra:
            i, j = idx[a], idx[b]
            if j not in succ[i]:
                succ[i].append(j)
                pred[j].append(i)
        self._succ, self._pred = succ, pred

    def _ensure(self):
        if self._succ is None:
            self._build_edges()

    def _closure(self, forward: bool):
        self._ensure()
        lat = self.lattice
        n = len(lat.sites)
        order = sorted(range(n), key=lambda i: lat.sites[i][0], reverse=not forward)
        # past: a site's past is itself plus the past of its predecessors
        links = self._pred if forward else self._succ
        masks = [0] * n
        for i in order:
            m = 1 << i
            for j in links[i]:
                m |= masks[j]
            masks[i] = m
        return masks

    def past_mask(self, i: int) -> int:
        if self._past is None:
            self._past = self._closure(True)
        return self._past[i]

    def future_mask(self, i: int) -> int:
        if self._future is None:
            self._future = self._closure(False)
        return self._future[i]

    def _mask(self, region) -> int:
        idx = self.lattice.index
        m = 0
        for s in region:
            if s not in idx:
                raise OutOfLattice(f"site {s} outside {self.lattice!r}")
            m |= 1 << idx[s]
        return m

    def _sites(self, mask: int) -> frozenset:
        sites = self.lattice.sites
        out = []
        i = 0
        while mask:
            if mask & 1:
                out.append(sites[i])
            mask >>= 1
            i += 1
        return frozenset(out)

    def past_of_mask(self, region) -> int:
        idx = self.lattice.index
        m = 0
        for s in region:
            if s not in idx:
                raise OutOfLattice(f"site {s} outside {self.lattice!r}")
            m |= self.past_mask(idx[s])
        return m

    def future_of_mask(self, region) -> int:
        idx = self.lattice.index
        m = 0
        for s in region:
            if s not in idx:
                raise OutOfLattice(f"site {s} outside {self.lattice!r}")
            m |= self.future_mask(idx[s])
        return m

    def causal_past(self, region) -> frozenset:
        return self._sites(self.past_of_mask(region))

    def causal_future(self, region) -> frozenset:
        return self._sites(self.future_of_mask(region))

    def leq(self, a: Site, b: Site) -> bool:
        idx = self.lattice.index
        return bool(self.past_mask(idx[b]) >> idx[a] & 1)

    def causally_disjoint_later(self, A, B) -> bool:
        """True iff no site of ``A`` lies in the causal past of ``B``."""
        return not (self._mask(A) & self.past_of_mask(B))

    def violating_pair(self, A, B):
        """A pair ``(a, b)`` with ``a <= b``, or None."""
        for b in sorted(B):
            past = self.past_mask(self.lattice.index[b])
            for a in sorted(A):
                if past >> self.lattice.index[a] & 1:
                    return (a, b)
        return None

    def is_causally_convex(self, region) -> bool:
        if self.lattice.periodic:
            raise ValueError("causal convexity is not tested on periodic lattices")
        inside = self._mask(region)
        between = self.future_of_mask(region) & self.past_of_mask(region)
        return between & ~inside == 0

    def validate(self) -> None:
        """Discrete global hyperbolicity: every maximal chain meets every time slice.

        All steps raise ``t`` so the relation is acyclic.  A maximal chain of covers
        meets every slice iff its ends sit on the first and last slice and no cover
        skips a slice.
        """
        self._ensure()
        lat = self.lattice
        for i, s in enumerate(lat.sites):
            if s[0] < lat.T - 1 and not self._succ[i]:
                raise NotGloballyHyperbolic(f"chain stalls at {s}")
            if s[0] > 0 and not self._pred[i]:
                raise NotGloballyHyperbolic(f"chain starts late at {s}")
        for a, b in self.extra:
            if b[0] - a[0] < 2:
                continue
            ia, ib = lat.index[a], lat.index[b]
            # a cover skipping slices is fine only if some intermediate element exists
            mid = self.future_mask(ia) & self.past_mask(ib) & ~(1 << ia) & ~(1 << ib)
            if not mid:
                raise NotGloballyHyperbolic(f"edge {a}->{b} skips a time slice")

    def relation_key(self):
        """Hashable fingerprint of the generated relation."""
        self._ensure()
        return tuple(tuple(sorted(s)) for s in self._succ)

    def same_relation(self, other: "CausalOrder") -> bool:
        if self.lattice != other.lattice:
            return False
        return all(self.past_mask(i) == other.past_mask(i) for i in range(len(self.lattice)))

    def __repr__(self):
        return (f"CausalOrder({self.lattice!r}, slope={self.base_slope}, "
                f"overrides={len(self.overrides)}, extra={len(self.extra)})")


def perturbed_order(base: CausalOrder, mod: dict) -> CausalOrder:
    """Order with per-site slope overrides on top of ``base``; re-validated."""
    merged = dict(base.overrides)
    for s, v in mod.items():
        v = Fraction(v)
        if v < 0:
            raise ValueError(f"negative slope at {s}")
        merged[tuple(s)] = v
    return CausalOrder(base.lattice, base.base_slope, merged, base.extra)


def check_partial_order(order: CausalOrder) -> bool:
    """Exhaustive check of reflexivity, antisymmetry and transitivity."""
    lat = order.lattice
    n = len(lat)
    for i in range(n):
        if not order.past_mask(i) >> i & 1:
            return False
    for i in range(n):
        pi = order.past_mask(i)
        for j in range(n):
            if i != j and pi >> j & 1 and order.past_mask(j) >> i & 1:
                return False
            if pi >> j & 1 and order.past_mask(j) & ~pi:
                return False
    return True
