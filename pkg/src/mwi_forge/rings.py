"""Small exact coefficient rings.

Functionals and RG coefficients are generic over the coefficient type as long as
it supports ``+``, ``-``, ``*`` with Fractions and compares equal to ``0`` when
zero.  Besides :class:`fractions.Fraction` we need one univariate polynomial
ring, used in two guises:

* ``u``-polynomials with ``u = 1/pi**2`` hold the exact anomaly constants and
  phases such as ``1/(32 pi^2)``.
* ``lam``-polynomials truncated at a fixed power give the formal parameter used
  to expand group commutators ``Z(lam) = id + lam z``.
"""
from __future__ import annotations

import math
from fractions import Fraction


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"not an exact scalar: {x!r}")


class FormalPoly:
    """Polynomial in one named formal variable with Fraction coefficients."""

    __slots__ = ("coeffs", "var", "trunc")

    def __init__(self, coeffs, var: str = "u", trunc: int | None = None):
        cs = [_frac(c) for c in coeffs]
        if trunc is not None:
            cs = cs[:trunc]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)
        self.var = var
        self.trunc = trunc

    def _lift(self, other):
        if isinstance(other, FormalPoly):
            if other.var != self.var:
                raise TypeError(f"mixing formal variables {self.var} and {other.var}")
            return other
        if isinstance(other, (int, Fraction)):
            return FormalPoly((other,), self.var, self.trunc)
        return None

    def _trunc(self, other):
        ts = [t for t in (self.trunc, other.trunc) if t is not None]
        return min(ts) if ts else None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = o.coeffs + (Fraction(0),) * (n - len(o.coeffs))
        return FormalPoly([x + y for x, y in zip(a, b)], self.var, self._trunc(o))

    __radd__ = __add__

    def __neg__(self):
        return FormalPoly([-c for c in self.coeffs], self.var, self.trunc)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        trunc = self._trunc(o)
        n = len(self.coeffs) + len(o.coeffs) - 1
        if trunc is not None:
            n = min(n, trunc)
        out = [Fraction(0)] * max(n, 0)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(o.coeffs):
                if i + j < n:
                    out[i + j] += a * b
        return FormalPoly(out, self.var, trunc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return FormalPoly([c / other for c in self.coeffs], self.var, self.trunc)
        return NotImplemented

    def __pow__(self, k: int):
        out = FormalPoly((1,), self.var, self.trunc)
        for _ in range(k):
            out = out * self
        return out

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        o = self._lift(other) if isinstance(other, (int, Fraction, FormalPoly)) else None
        if o is None:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        if len(self.coeffs) <= 1:
            return hash(self.coeffs[0] if self.coeffs else Fraction(0))
        return hash((self.var, self.coeffs))

    def coefficient(self, k: int) -> Fraction:
        return self.coeffs[k] if k < len(self.coeffs) else Fraction(0)

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            if k == 0:
                parts.append(str(c))
            elif k == 1:
                parts.append(f"{c}*{self.var}")
            else:
                parts.append(f"{c}*{self.var}^{k}")
        return " + ".join(parts)

    def sort_key(self):
        return (self.var, self.coeffs)


def lam_series(coeffs, order: int = 3) -> FormalPoly:
    """Element of Q[lam]/(lam^order)."""
    return FormalPoly(coeffs, "lam", order)


LAM = lam_series((0, 1))

# u stands for 1/pi^2
INV_PI2 = FormalPoly((0, 1), "u")


def pi_poly(rational=0, per_pi2=0) -> FormalPoly:
    return FormalPoly((rational, per_pi2), "u")


def to_float(x) -> float:
    """Numerical value; ``u``-polynomials are evaluated at 1/pi^2."""
    if isinstance(x, FormalPoly):
        if x.var == "u":
            u = 1.0 / math.pi ** 2
            return float(sum(float(c) * u ** k for k, c in enumerate(x.coeffs)))
        if len(x.coeffs) > 1:
            raise ValueError(f"cannot evaluate formal {x.var}-series numerically")
        return float(x.coefficient(0))
    return float(x)


def exact(x):
    """Coerce a literal (int, Fraction, ``"a/b"`` string, FormalPoly) to an exact scalar."""
    if isinstance(x, FormalPoly):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not allowed in the exact core; use a string like '1/3'")
    return _frac(x)


def is_zero(c) -> bool:
    return not c


def scalar_key(c):
    """Total-order key for exact scalars, used for canonical printing."""
    if isinstance(c, FormalPoly):
        return (1, c.var, c.coeffs)
    return (0, "", (c,))
