"""Exact truncated power series in one variable, over the rationals.

A ``TruncSeries`` knows its coefficients up to and including ``b^order``
and nothing beyond.  Binary operations return the minimum of the two
orders; nothing ever silently re-extends a series.  All coefficient
arithmetic is exact.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import NotAUnit, Obstruction

try:  # gmpy2.mpq is substantially faster; fall back to stdlib rationals
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q

QLike = object  # int, str "p/q", or an existing rational


def scalar(value: QLike = 0, den: int | None = None) -> Q:
    """Coerce to an exact rational.  Accepts ints, "p/q" strings, rationals."""
    if den is not None:
        return Q(value, den)
    if isinstance(value, str):
        if "/" in value:
            num, d = value.split("/", 1)
            return Q(int(num), int(d))
        return Q(int(value))
    return Q(value)


def scalar_str(x) -> str:
    """Render as "p" or "p/q" with positive denominator."""
    num, den = x.numerator, x.denominator
    return f"{num}" if den == 1 else f"{num}/{den}"


def is_integral(x) -> bool:
    return x.denominator == 1


def floor_q(x) -> int:
    return x.numerator // x.denominator


def ceil_q(x) -> int:
    return -((-x.numerator) // x.denominator)


def class_rep(x) -> Q:
    """Representative of x mod 1 in the interval (0, 1]."""
    r = x - floor_q(x)
    return r if r != 0 else Q(1)


def same_class(x, y) -> bool:
    return is_integral(x - y)


class TruncSeries:
    """Power series truncated at a fixed order, exact rational coefficients."""

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: Iterable[QLike], order: int | None = None):
        cs = [scalar(c) for c in coeffs]
        if order is None:
            order = len(cs) - 1
        if order < 0:
            raise ValueError("order must be non-negative")
        if len(cs) < order + 1:
            cs += [Q(0)] * (order + 1 - len(cs))
        self.order = order
        self.coeffs = tuple(cs[: order + 1])

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls, order: int) -> "TruncSeries":
        return cls([], order)

    @classmethod
    def one(cls, order: int) -> "TruncSeries":
        return cls([1], order)

    @classmethod
    def constant(cls, c: QLike, order: int) -> "TruncSeries":
        return cls([scalar(c)], order)

    @classmethod
    def monomial(cls, exponent: int, coeff: QLike, order: int) -> "TruncSeries":
        cs = [Q(0)] * (order + 1)
        if 0 <= exponent <= order:
            cs[exponent] = scalar(coeff)
        return cls(cs, order)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, QLike]], order: int) -> "TruncSeries":
        cs = [Q(0)] * (order + 1)
        for e, c in pairs:
            if 0 <= e <= order:
                cs[e] = cs[e] + scalar(c)
        return cls(cs, order)

    # -- basic queries -----------------------------------------------

    def coeff(self, i: int):
        if i < 0 or i > self.order:
            raise IndexError(f"coefficient b^{i} beyond truncation order {self.order}")
        return self.coeffs[i]

    def is_unit(self) -> bool:
        return self.coeffs[0] != 0

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def valuation(self) -> int | None:
        """Index of the first nonzero coefficient, or None if zero throughout."""
        for i, c in enumerate(self.coeffs):
            if c != 0:
                return i
        return None

    def support(self) -> list[int]:
        return [i for i, c in enumerate(self.coeffs) if c != 0]

    # -- arithmetic ---------------------------------------------------

    def _binary_order(self, other: "TruncSeries") -> int:
        return min(self.order, other.order)

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        n = self._binary_order(other)
        return TruncSeries([self.coeffs[i] + other.coeffs[i] for i in range(n + 1)], n)

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        n = self._binary_order(other)
        return TruncSeries([self.coeffs[i] - other.coeffs[i] for i in range(n + 1)], n)

    def __neg__(self) -> "TruncSeries":
        return TruncSeries([-c for c in self.coeffs], self.order)

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        n = self._binary_order(other)
        a, b = self.coeffs, other.coeffs
        out = [Q(0)] * (n + 1)
        for i in range(min(len(a) - 1, n) + 1):
            ai = a[i]
            if ai == 0:
                continue
            for j in range(n - i + 1):
                bj = b[j]
                if bj != 0:
                    out[i + j] += ai * bj
        return TruncSeries(out, n)

    def scale(self, c: QLike) -> "TruncSeries":
        c = scalar(c)
        return TruncSeries([c * x for x in self.coeffs], self.order)

    def invert(self) -> "TruncSeries":
        """Multiplicative inverse; requires a unit (nonzero constant term)."""
        if not self.is_unit():
            raise NotAUnit("cannot invert a series with zero constant term")
        n = self.order
        c0 = self.coeffs[0]
        inv0 = 1 / c0
        out = [Q(0)] * (n + 1)
        out[0] = inv0
        for i in range(1, n + 1):
            acc = Q(0)
            for j in range(1, i + 1):
                if self.coeffs[j] != 0:
                    acc += self.coeffs[j] * out[i - j]
            out[i] = -inv0 * acc
        return TruncSeries(out, n)

    def __truediv__(self, other: "TruncSeries") -> "TruncSeries":
        return self * other.invert()

    def derive(self) -> "TruncSeries":
        """Formal derivative; drops one order (order-0 input stays order 0)."""
        if self.order == 0:
            return TruncSeries.zero(0)
        return TruncSeries(
            [scalar(i + 1) * self.coeffs[i + 1] for i in range(self.order)],
            self.order - 1,
        )

    def shift_up(self, m: int) -> "TruncSeries":
        """Multiply by b^m; the order grows with the valuation gain."""
        return TruncSeries([Q(0)] * m + list(self.coeffs), self.order + m)

    def shift_down(self, m: int) -> "TruncSeries":
        """Exact division by b^m; the m low coefficients must vanish."""
        if m == 0:
            return self
        if any(c != 0 for c in self.coeffs[:m]):
            raise ValueError(f"series not divisible by b^{m}")
        return TruncSeries(list(self.coeffs[m:]), self.order - m)

    def truncate(self, order: int) -> "TruncSeries":
        if order >= self.order:
            return self
        return TruncSeries(list(self.coeffs[: order + 1]), order)

    def rescale_variable(self, xi: QLike) -> "TruncSeries":
        """Substitute b -> xi * b  (coefficient of b^m scales by xi^m)."""
        xi = scalar(xi)
        return TruncSeries(
            [self.coeffs[i] * xi**i for i in range(self.order + 1)], self.order
        )

    def compose(self, inner: "TruncSeries") -> "TruncSeries":
        """self(inner(b)); inner must have zero constant term."""
        if inner.coeffs[0] != 0:
            raise ValueError("composition requires inner constant term 0")
        n = min(self.order, inner.order)
        acc = TruncSeries.zero(n)
        power = TruncSeries.one(n)
        inner_t = inner.truncate(n)
        for i in range(n + 1):
            if self.coeffs[i] != 0:
                acc = acc + power.scale(self.coeffs[i])
            power = power * inner_t
            if power.is_zero():
                break
        return acc

    def reversion(self) -> "TruncSeries":
        """Compositional inverse g with self(g) = b, for val-1 series."""
        if self.coeffs[0] != 0 or self.order < 1 or self.coeffs[1] == 0:
            raise ValueError("reversion requires valuation exactly 1")
        n = self.order
        g = TruncSeries.monomial(1, 1 / self.coeffs[1], n)
        # Newton-free order raising: fix coefficients one at a time.
        for m in range(2, n + 1):
            err = self.compose(g).coeffs[m]
            g = g - TruncSeries.monomial(m, err / self.coeffs[1], n)
        return g

    # -- comparison & rendering ---------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.order, self.coeffs))

    def agrees_with(self, other: "TruncSeries", upto: int | None = None) -> bool:
        """Coefficient-wise equality through min(order, other.order, upto)."""
        n = min(self.order, other.order)
        if upto is not None:
            n = min(n, upto)
        return all(self.coeffs[i] == other.coeffs[i] for i in range(n + 1))

    def __repr__(self) -> str:
        return f"TruncSeries({self})"

    def __str__(self) -> str:
        parts = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if i == 0:
                parts.append(scalar_str(c))
            elif i == 1:
                parts.append(f"{scalar_str(c)}*b")
            else:
                parts.append(f"{scalar_str(c)}*b^{i}")
        body = " + ".join(parts) if parts else "0"
        return f"{body} + O(b^{self.order + 1})"


def solve_euler(m, rhs: TruncSeries) -> TruncSeries:
    """Solve b*Y' - m*Y = rhs coefficient-wise:  (i - m) y_i = r_i.

    When m is a non-negative integer the b^m slot is resonant: the
    corresponding coefficient of rhs must vanish (else ``Obstruction``)
    and the free coefficient y_m is fixed to 0.
    """
    m = scalar(m)
    n = rhs.order
    out = [Q(0)] * (n + 1)
    for i in range(n + 1):
        factor = scalar(i) - m
        if factor == 0:
            if rhs.coeffs[i] != 0:
                raise Obstruction(i, rhs.coeffs[i], "the Euler-type gauge equation")
            out[i] = Q(0)
        else:
            out[i] = rhs.coeffs[i] / factor
    return TruncSeries(out, n)
