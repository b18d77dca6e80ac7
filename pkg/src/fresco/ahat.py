"""The noncommutative algebra of operators in a and b with a*b - b*a = b^2.

Elements are kept in canonical form: every monomial is written with all
a's to the left of all b's, so an element is a finite sum of c * a^i * b^nu.
Truncation is by total (a,b)-degree i + nu, which is compatible with the
rewriting rule (it preserves total degree).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import BadAnnihilatorShape
from .series import Q, QLike, TruncSeries, scalar, scalar_str


@lru_cache(maxsize=None)
def _b_pow_times_a(nu: int, m: int) -> tuple[tuple[int, int, int], ...]:
    """Canonical expansion of b^nu * a^m as ((i, nu', integer coeff), ...).

    Uses b^nu * a = a * b^nu - nu * b^(nu+1) recursively.  Coefficients are
    integers, so they are returned as plain ints and scaled by the caller.
    """
    if m == 0:
        return ((0, nu, 1),)
    prev = _b_pow_times_a(nu, m - 1)
    acc: dict[tuple[int, int], int] = {}
    for i, v, c in prev:
        # right-multiply the canonical term a^i b^v by a, using b^v a = a b^v - v b^(v+1)
        key = (i + 1, v)
        acc[key] = acc.get(key, 0) + c
        if v:
            key = (i, v + 1)
            acc[key] = acc.get(key, 0) - c * v
    return tuple((i, v, c) for (i, v), c in acc.items() if c != 0)


class AhatElement:
    """Operator polynomial in canonical a-left form, truncated by total degree."""

    __slots__ = ("order", "terms")

    def __init__(self, terms: dict[tuple[int, int], QLike], order: int):
        clean: dict[tuple[int, int], Q] = {}
        for (i, nu), c in terms.items():
            if i + nu > order:
                continue
            c = scalar(c)
            if c != 0:
                clean[(i, nu)] = c
        self.order = order
        self.terms = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, order: int) -> "AhatElement":
        return cls({}, order)

    @classmethod
    def one(cls, order: int) -> "AhatElement":
        return cls({(0, 0): Q(1)}, order)

    @classmethod
    def gen_a(cls, order: int) -> "AhatElement":
        return cls({(1, 0): Q(1)}, order)

    @classmethod
    def gen_b(cls, order: int) -> "AhatElement":
        return cls({(0, 1): Q(1)}, order)

    @classmethod
    def monomial(cls, i: int, nu: int, coeff: QLike, order: int) -> "AhatElement":
        return cls({(i, nu): scalar(coeff)}, order)

    @classmethod
    def from_b_series(cls, s: TruncSeries, order: int) -> "AhatElement":
        return cls({(0, n): c for n, c in enumerate(s.coeffs)}, order)

    @classmethod
    def from_a_series(cls, s: TruncSeries, order: int) -> "AhatElement":
        return cls({(n, 0): c for n, c in enumerate(s.coeffs)}, order)

    # -- ring operations --------------------------------------------------

    def _common(self, other: "AhatElement") -> int:
        return min(self.order, other.order)

    def __add__(self, other: "AhatElement") -> "AhatElement":
        n = self._common(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Q(0)) + c
        return AhatElement(out, n)

    def __sub__(self, other: "AhatElement") -> "AhatElement":
        return self + (-other)

    def __neg__(self) -> "AhatElement":
        return AhatElement({k: -c for k, c in self.terms.items()}, self.order)

    def scale(self, c: QLike) -> "AhatElement":
        c = scalar(c)
        return AhatElement({k: c * v for k, v in self.terms.items()}, self.order)

    def __mul__(self, other: "AhatElement") -> "AhatElement":
        n = self._common(other)
        out: dict[tuple[int, int], Q] = {}
        for (i1, v1), c1 in self.terms.items():
            for (i2, v2), c2 in other.terms.items():
                if i1 + v1 + i2 + v2 > n:
                    continue
                c = c1 * c2
                # a^i1 b^v1 * a^i2 b^v2: rewrite b^v1 a^i2 into canonical form
                for j, v, icoef in _b_pow_times_a(v1, i2):
                    key = (i1 + j, v + v2)
                    if key[0] + key[1] > n:
                        continue
                    out[key] = out.get(key, Q(0)) + c * icoef
        return AhatElement(out, n)

    def __pow__(self, n: int) -> "AhatElement":
        acc = AhatElement.one(self.order)
        for _ in range(n):
            acc = acc * self
        return acc

    def truncate(self, order: int) -> "AhatElement":
        return AhatElement(self.terms, min(order, self.order))

    # -- queries ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def a_degree(self) -> int:
        return max((i for (i, _) in self.terms), default=0)

    def min_b_exponent(self) -> int | None:
        return min((v for (_, v) in self.terms), default=None)

    def b_series_at_a_degree(self, i: int) -> TruncSeries:
        """The series c(b) with a^i * c(b) summing this element's degree-i part."""
        n = self.order - i
        return TruncSeries.from_pairs(
            [(v, c) for (j, v), c in self.terms.items() if j == i], max(n, 0)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, AhatElement):
            return NotImplemented
        return self.order == other.order and self.terms == other.terms

    def __hash__(self):
        return hash((self.order, frozenset(self.terms.items())))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        keys = sorted(self.terms, key=lambda k: (k[0] + k[1], k[0]))
        parts = []
        for i, v in keys:
            c = self.terms[(i, v)]
            factors = []
            if c != 1 or (i == 0 and v == 0):
                factors.append(scalar_str(c))
            if i:
                factors.append("a" if i == 1 else f"a^{i}")
            if v:
                factors.append("b" if v == 1 else f"b^{v}")
            parts.append("*".join(factors))
        return " + ".join(parts)

    __repr__ = __str__


@dataclass(frozen=True)
class ChangeOfVariable:
    """A coordinate change theta(a) = c1*a + c2*a^2 + ..., with c1 != 0.

    Stored as the exact polynomial coefficient tuple (c1, c2, ...); the
    series expansions at any working order come from ``theta_series``.
    """

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(scalar(c) for c in self.coeffs)
        while len(cs) > 1 and cs[-1] == 0:
            cs = cs[:-1]
        if not cs or cs[0] == 0:
            raise ValueError("change of variable needs a nonzero linear term")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def identity(cls) -> "ChangeOfVariable":
        return cls((Q(1),))

    @classmethod
    def from_pairs(cls, pairs: dict[int, QLike]) -> "ChangeOfVariable":
        deg = max(pairs)
        cs = [Q(0)] * deg
        for e, c in pairs.items():
            if e < 1:
                raise ValueError("theta has no constant term")
            cs[e - 1] = scalar(c)
        return cls(tuple(cs))

    @property
    def chi(self):
        """theta'(0), the linear coefficient."""
        return self.coeffs[0]

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def is_unimodular(self) -> bool:
        return self.chi == 1

    def is_identity(self) -> bool:
        return self.coeffs == (Q(1),)

    def theta_series(self, order: int) -> TruncSeries:
        return TruncSeries.from_pairs(
            [(e + 1, c) for e, c in enumerate(self.coeffs)], order
        )

    def dtheta_series(self, order: int) -> TruncSeries:
        return TruncSeries.from_pairs(
            [(e, scalar(e + 1) * c) for e, c in enumerate(self.coeffs)], order
        )

    def compose(self, inner: "ChangeOfVariable") -> "ChangeOfVariable":
        """(self o inner)(a) = self(inner(a)); exact for polynomials."""
        deg = self.degree * inner.degree
        outer = self.theta_series(deg)
        result = outer.compose(inner.theta_series(deg))
        return ChangeOfVariable(tuple(result.coeffs[1 : deg + 1]))

    def inverse(self, order: int) -> "ChangeOfVariable":
        """Compositional inverse, truncated at the given order."""
        rev = self.theta_series(order).reversion()
        return ChangeOfVariable(tuple(rev.coeffs[1 : order + 1]))

    def unimodular_part(self) -> "ChangeOfVariable":
        """theta = (chi * a) o u with u unimodular; returns u = theta / chi."""
        inv = 1 / self.chi
        return ChangeOfVariable(tuple(inv * c for c in self.coeffs))


def theta_morphism(cv: ChangeOfVariable, x: AhatElement) -> AhatElement:
    """The algebra endomorphism a -> theta(a), b -> b * theta'(a)."""
    order = x.order
    alpha = AhatElement.from_a_series(cv.theta_series(order), order)
    dtheta = AhatElement.from_a_series(cv.dtheta_series(order), order)
    beta = AhatElement.gen_b(order) * dtheta
    # precompute powers lazily per exponent
    out = AhatElement.zero(order)
    alpha_pows: dict[int, AhatElement] = {0: AhatElement.one(order)}
    beta_pows: dict[int, AhatElement] = {0: AhatElement.one(order)}

    def apow(n: int) -> AhatElement:
        if n not in alpha_pows:
            alpha_pows[n] = apow(n - 1) * alpha
        return alpha_pows[n]

    def bpow(n: int) -> AhatElement:
        if n not in beta_pows:
            beta_pows[n] = bpow(n - 1) * beta
        return beta_pows[n]

    for (i, v), c in x.terms.items():
        out = out + (apow(i) * bpow(v)).scale(c)
    return out


def eta_morphism(x: AhatElement) -> AhatElement:
    """The anti-automorphism fixing a, negating b, reversing products."""
    order = x.order
    out = AhatElement.zero(order)
    a = AhatElement.gen_a(order)
    b_neg = AhatElement.gen_b(order).scale(-1)
    a_pows: dict[int, AhatElement] = {0: AhatElement.one(order)}
    b_pows: dict[int, AhatElement] = {0: AhatElement.one(order)}

    def apow(n):
        if n not in a_pows:
            a_pows[n] = apow(n - 1) * a
        return a_pows[n]

    def bpow(n):
        if n not in b_pows:
            b_pows[n] = bpow(n - 1) * b_neg
        return b_pows[n]

    for (i, v), c in x.terms.items():
        # eta(a^i b^v) = eta(b)^v eta(a)^i = (-b)^v a^i
        out = out + (bpow(v) * apow(i)).scale(c)
    return out


def monic_in_a(coeffs: list[TruncSeries], order: int) -> AhatElement:
    """Build a^k - sum_j a^j * T_j(b) from the annihilator coefficients."""
    k = len(coeffs)
    p = AhatElement.monomial(k, 0, 1, order)
    for j, t in enumerate(coeffs):
        p = p - (AhatElement.monomial(j, 0, 1, order) * AhatElement.from_b_series(t, order))
    return p


def reduce_mod_annihilator(u: AhatElement, p: AhatElement) -> AhatElement:
    """Reduce u modulo the left ideal generated by p.

    p must be monic of some a-degree k with lower coefficients T_j of
    b-valuation >= k - j (the shape an annihilator of a module generator
    has); the result has a-degree < k and acts identically to u on that
    generator.
    """
    k = p.a_degree()
    lead = p.b_series_at_a_degree(k)
    if lead.coeff(0) != 1 or any(c != 0 for c in lead.coeffs[1:]):
        raise BadAnnihilatorShape("leading a-coefficient must be exactly 1")
    for j in range(k):
        tj = p.b_series_at_a_degree(j)
        val = tj.valuation()
        if val is not None and val < k - j:
            raise BadAnnihilatorShape(
                f"coefficient of a^{j} has b-valuation {val} < {k - j}"
            )
    x = u
    while x.a_degree() >= k and not x.is_zero():
        i = x.a_degree()
        c = x.b_series_at_a_degree(i)
        if c.is_zero():
            x = AhatElement(
                {key: v for key, v in x.terms.items() if key[0] < i}, x.order
            )
            continue
        w = AhatElement.monomial(i - k, 0, 1, x.order) * AhatElement.from_b_series(
            c, x.order
        )
        x = x - w * p
    return x
