"""Monogenic regular modules over the (a,b)-operator algebra, truncated.

A module of rank k is carried on coordinates in Q[[b]]^k (truncated at a
working order) by a pair of k x k series matrices (A, B), column
convention op(e_j) = sum_i M[i][j] e_i.  The b-operator is the linear map
x -> B x; the a-operator is the twisted map

    x -> A x + b^2 x'         (componentwise derivative)

which is the relation a.S(b) = S(b).a + b^2.S'(b) read through
coordinates.  Every constructor in this file emits B = b * Id; the pair
then satisfies the operator identity A B - B A + b^2 B' = B^2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import _linalg
from .ahat import AhatElement
from .errors import (
    ClassNotSmallest,
    FrescoError,
    NotAGenerator,
    NotNormal,
    NotPrimitive,
    OrderTooSmall,
    ResonanceAtTruncation,
)
from .series import (
    Q,
    TruncSeries,
    ceil_q,
    class_rep,
    floor_q,
    is_integral,
    same_class,
    scalar,
    scalar_str,
)

Vec = tuple  # tuple[TruncSeries, ...]
Mat = tuple  # tuple[tuple[TruncSeries, ...], ...]


# ---------------------------------------------------------------------------
# vector helpers
# ---------------------------------------------------------------------------


def vec_add(x: Vec, y: Vec) -> Vec:
    return tuple(a + b for a, b in zip(x, y))


def vec_sub(x: Vec, y: Vec) -> Vec:
    return tuple(a - b for a, b in zip(x, y))


def vec_scale(x: Vec, c) -> Vec:
    return tuple(a.scale(c) for a in x)


def vec_series_mul(x: Vec, s: TruncSeries) -> Vec:
    return tuple(a * s for a in x)


def vec_is_zero(x: Vec) -> bool:
    return all(a.is_zero() for a in x)


def vec_valuation(x: Vec) -> int | None:
    vals = [a.valuation() for a in x if a.valuation() is not None]
    return min(vals) if vals else None


def vec_truncate(x: Vec, order: int) -> Vec:
    return tuple(a.truncate(order) for a in x)


def vec_order(x: Vec) -> int:
    return min(a.order for a in x)


def mat_vec(m: Mat, x: Vec) -> Vec:
    n = len(x)
    out = []
    for i in range(len(m)):
        acc = TruncSeries.zero(min(x[0].order, m[i][0].order))
        for j in range(n):
            if m[i][j].is_zero() or x[j].is_zero():
                continue
            acc = acc + m[i][j] * x[j]
        out.append(acc)
    return tuple(out)


def unit_vec(i: int, k: int, order: int) -> Vec:
    return tuple(
        TruncSeries.one(order) if j == i else TruncSeries.zero(order) for j in range(k)
    )


# ---------------------------------------------------------------------------
# presentations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Presentation:
    """Ordered roots plus the unit series of a standard presentation.

    Encodes the left ideal generator
    (a - l1 b) S1^-1 (a - l2 b) S2^-1 ... (a - lk b) Sk^-1 annihilating a
    module generator.  Every S_j has constant term 1 and the roots are in
    principal order: classes mod 1 in increasing contiguous blocks, and
    l_j + j non-decreasing within a class.
    """

    lambdas: tuple
    series: tuple

    def __post_init__(self):
        lams = tuple(scalar(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "series", tuple(self.series))
        if len(self.series) != len(lams):
            raise ValueError("need exactly one unit series per root")
        for s in self.series:
            if s.coeff(0) != 1:
                raise ValueError("presentation series must have constant term 1")
        _check_principal_order(lams)

    @property
    def rank(self) -> int:
        return len(self.lambdas)

    @property
    def order(self) -> int:
        return min(s.order for s in self.series)

    def p_values(self) -> tuple:
        """p_j = l_{j+1} - l_j + 1 for consecutive roots."""
        return tuple(
            self.lambdas[j + 1] - self.lambdas[j] + 1 for j in range(self.rank - 1)
        )

    def default_order(self) -> int:
        return default_order(self.lambdas)

    def at_order(self, order: int) -> "Presentation":
        return Presentation(
            self.lambdas, tuple(s.truncate(order) for s in self.series)
        )

    def agrees_with(self, other: "Presentation", upto: int | None = None) -> bool:
        if self.lambdas != other.lambdas:
            return False
        return all(s.agrees_with(t, upto) for s, t in zip(self.series, other.series))

    def classes(self) -> list:
        """Distinct classes mod 1 in order of appearance."""
        out = []
        for lam in self.lambdas:
            r = class_rep(lam)
            if r not in out:
                out.append(r)
        return out

    def is_primitive(self) -> bool:
        return len(self.classes()) == 1

    def __str__(self) -> str:
        lams = " ".join(scalar_str(x) for x in self.lambdas)
        lines = [f"rank {self.rank} order {self.order}", f"lambdas {lams}"]
        for j, s in enumerate(self.series, start=1):
            pairs = " ".join(
                f"{e}:{scalar_str(c)}" for e, c in enumerate(s.coeffs) if c != 0
            )
            lines.append(f"S {j} {pairs}")
        return "\n".join(lines)


def default_order(lambdas) -> int:
    """ceil(lk - l1) + 3k + 4: covers the kernel-order bounds with slack."""
    k = len(lambdas)
    spread = ceil_q(scalar(lambdas[-1]) - scalar(lambdas[0])) if k > 1 else 0
    return max(spread, 0) + 3 * k + 4


def _check_principal_order(lams: tuple) -> None:
    k = len(lams)
    block_reps: list = []
    for j, lam in enumerate(lams, start=1):
        if lam + j - k <= 0:
            raise ValueError(
                f"root {scalar_str(lam)} at position {j} too small for rank {k}"
            )
        r = class_rep(lam)
        if block_reps and r == block_reps[-1]:
            if lams[j - 2] + (j - 1) > lam + j:
                raise ValueError("l_j + j must be non-decreasing within a class")
        elif r in block_reps:
            raise ValueError("classes mod 1 must form contiguous blocks")
        else:
            if block_reps and r < block_reps[-1]:
                raise ValueError("classes mod 1 must appear in increasing order")
            block_reps.append(r)


def presentation(lambdas, series_pairs, order: int | None = None) -> Presentation:
    """Builder from roots and sparse {exponent: coefficient} dicts."""
    lams = tuple(scalar(x) for x in lambdas)
    n = order if order is not None else default_order(lams)
    out = [TruncSeries.from_pairs(list(p.items()), n) for p in series_pairs]
    while len(out) < len(lams):
        out.append(TruncSeries.one(n))
    return Presentation(lams, tuple(out))


# ---------------------------------------------------------------------------
# modules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbModule:
    """Truncated free module with its two operator matrices."""

    a: Mat
    b: Mat
    order: int

    @property
    def rank(self) -> int:
        return len(self.a)

    def apply_b(self, x: Vec) -> Vec:
        return mat_vec(self.b, x)

    def apply_a(self, x: Vec) -> Vec:
        lin = mat_vec(self.a, x)
        twist = tuple(c.derive().shift_up(2) for c in x)
        return vec_add(lin, twist)

    def apply_op(self, x: Vec, mu) -> Vec:
        """(a - mu b) x."""
        return vec_sub(self.apply_a(x), vec_scale(self.apply_b(x), mu))

    def b_is_scalar(self) -> bool:
        bmono = TruncSeries.monomial(1, 1, self.order)
        zero = TruncSeries.zero(self.order)
        return all(
            self.b[i][j] == (bmono if i == j else zero)
            for i in range(self.rank)
            for j in range(self.rank)
        )

    def apply_b_series(self, s: TruncSeries, x: Vec) -> Vec:
        """s(b-operator) applied to x; plain series multiplication for B = b*Id."""
        if self.b_is_scalar():
            return vec_series_mul(x, s)
        acc = vec_scale(x, s.coeff(0))
        cur = x
        for i in range(1, s.order + 1):
            cur = self.apply_b(cur)
            if s.coeff(i) != 0:
                acc = vec_add(acc, vec_scale(cur, s.coeff(i)))
        return acc

    def commutator_defect(self) -> Mat:
        """A B - B A + b^2 B' - B^2; the zero matrix for a valid module."""
        k = self.rank

        def mm(x, y):
            return [
                [
                    sum(
                        (x[i][l] * y[l][j] for l in range(k)),
                        TruncSeries.zero(self.order),
                    )
                    for j in range(k)
                ]
                for i in range(k)
            ]

        ab, ba, bb = mm(self.a, self.b), mm(self.b, self.a), mm(self.b, self.b)
        return tuple(
            tuple(
                ab[i][j] - ba[i][j] + self.b[i][j].derive().shift_up(2) - bb[i][j]
                for j in range(k)
            )
            for i in range(k)
        )


def _b_identity(k: int, order: int) -> Mat:
    bmono = TruncSeries.monomial(1, 1, order)
    zero = TruncSeries.zero(order)
    return tuple(tuple(bmono if i == j else zero for j in range(k)) for i in range(k))


def realize(pres: Presentation, order: int | None = None) -> AbModule:
    """Standard-basis module: b acts as b * Id and a is bidiagonal.

    Column j carries a.e_j = l_j b e_j + S_{j-1} e_{j-1}; the canonical
    generator is S_k(b) e_k (see ``standard_generator``).
    """
    n = min(order, pres.order) if order is not None else pres.order
    k = pres.rank
    zero = TruncSeries.zero(n)
    cols = []
    for j in range(k):
        col = [zero] * k
        col[j] = TruncSeries.monomial(1, pres.lambdas[j], n)
        if j > 0:
            col[j - 1] = pres.series[j - 1].truncate(n)
        cols.append(col)
    a = tuple(tuple(cols[j][i] for j in range(k)) for i in range(k))
    return AbModule(a, _b_identity(k, n), n)


def standard_generator(pres: Presentation, mod: AbModule | None = None) -> Vec:
    n = mod.order if mod is not None else pres.order
    k = pres.rank
    g = list(unit_vec(k - 1, k, n))
    g[k - 1] = pres.series[k - 1].truncate(n)
    return tuple(g)


def is_generator(mod: AbModule, gen: Vec) -> bool:
    """gen, a.gen, ..., a^{k-1}.gen must base the module mod b."""
    k = mod.rank
    cols = [gen]
    for _ in range(k - 1):
        cols.append(mod.apply_a(cols[-1]))
    m0 = [[cols[j][i].coeff(0) for j in range(k)] for i in range(k)]
    return _linalg.mat_rank(m0) == k


def find_generator(mod: AbModule) -> Vec:
    k, n = mod.rank, mod.order
    for i in reversed(range(k)):
        g = unit_vec(i, k, n)
        if is_generator(mod, g):
            return g
    g = tuple(TruncSeries.one(n) for _ in range(k))
    if is_generator(mod, g):
        return g
    raise NotAGenerator("no generator found among coordinate vectors")


# ---------------------------------------------------------------------------
# annihilator and invariants
# ---------------------------------------------------------------------------


def _solve_series_system(cols: list[Vec], target: Vec) -> list[TruncSeries]:
    """Solve sum_j t_j(b) cols[j] = target over the truncated series ring.

    The column matrix must be invertible over the ring; pivots are chosen
    among unit entries, so no precision is lost.
    """
    k = len(cols)
    order = min(min(c.order for c in col) for col in cols)
    rows = [[cols[j][i].truncate(order) for j in range(k)] for i in range(k)]
    rhs = [target[i].truncate(order) for i in range(k)]
    for col in range(k):
        pr = next((r for r in range(col, k) if rows[r][col].is_unit()), None)
        if pr is None:
            raise NotAGenerator("series system is singular at the working order")
        rows[col], rows[pr] = rows[pr], rows[col]
        rhs[col], rhs[pr] = rhs[pr], rhs[col]
        inv = rows[col][col].invert()
        rows[col] = [x * inv for x in rows[col]]
        rhs[col] = rhs[col] * inv
        for r in range(k):
            if r != col and not rows[r][col].is_zero():
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
                rhs[r] = rhs[r] - f * rhs[col]
    return rhs


def annihilator_coefficients(mod: AbModule, gen: Vec) -> list[TruncSeries]:
    """T_0..T_{k-1} with a^k gen = sum_j T_j(b) a^j gen."""
    k = mod.rank
    if not is_generator(mod, gen):
        raise NotAGenerator("vector does not generate the module")
    cols = [gen]
    for _ in range(k):
        cols.append(mod.apply_a(cols[-1]))
    return _solve_series_system(cols[:k], cols[k])


def _char_poly(m: list[list]) -> list:
    """det(x I - M) by Faddeev-LeVerrier; ascending coefficients."""
    k = len(m)
    coeffs = [Q(0)] * (k + 1)
    coeffs[k] = Q(1)
    aux = [[Q(1) if i == j else Q(0) for j in range(k)] for i in range(k)]
    for n in range(1, k + 1):
        prod = [
            [sum(m[i][l] * aux[l][j] for l in range(k)) for j in range(k)]
            for i in range(k)
        ]
        c = -sum(prod[i][i] for i in range(k)) / n
        coeffs[k - n] = c
        aux = [
            [prod[i][j] + (c if i == j else Q(0)) for j in range(k)] for i in range(k)
        ]
    return coeffs


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _lcm(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return max(abs(a), abs(b))
    return abs(a * b) // _gcd(a, b)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.add(d)
            out.add(n // d)
        d += 1
    return sorted(out)


def _eval_poly(coeffs_asc: list, x) -> Q:
    acc = Q(0)
    for c in reversed(coeffs_asc):
        acc = acc * x + c
    return acc


def _deflate(coeffs_asc: list, root) -> list:
    """Exact division of a polynomial by (x - root), ascending coefficients."""
    desc = list(reversed(coeffs_asc))
    out = [desc[0]]
    for c in desc[1:-1]:
        out.append(c + root * out[-1])
    return list(reversed(out))


def _rational_roots_monic(coeffs_asc: list) -> list:
    """All k roots of a monic degree-k rational polynomial splitting over Q."""
    cur = [scalar(c) for c in coeffs_asc]
    roots = []
    while len(cur) > 1:
        if cur[0] == 0:
            roots.append(Q(0))
            cur = _deflate(cur, Q(0))
            continue
        den = 1
        for c in cur:
            den = _lcm(den, c.denominator)
        ints = [int(c * den) for c in cur]
        found = None
        for p in _divisors(ints[0]):
            if found:
                break
            for qd in _divisors(ints[-1]):
                for cand in (Q(p, qd), Q(-p, qd)):
                    if _eval_poly(cur, cand) == 0:
                        found = cand
                        break
                if found:
                    break
        if found is None:
            raise FrescoError("spectral polynomial does not split over the rationals")
        roots.append(found)
        cur = _deflate(cur, found)
    return roots


def _saturation_residue_matrix(tcoeffs: list[TruncSeries], k: int) -> list[list]:
    """Matrix of b^-1 a on the saturation fiber, basis b^-j a^j gen."""
    m = [[Q(0)] * k for _ in range(k)]
    for j in range(k - 1):
        m[j + 1][j] = Q(1)
        m[j][j] -= Q(j)
    for j in range(k):
        t = tcoeffs[j]
        need = k - j
        val = t.valuation()
        if val is not None and val < need:
            raise FrescoError(
                f"annihilator coefficient of a^{j} has b-valuation {val} < {need}; "
                "not a fresco at this order"
            )
        m[j][k - 1] += t.coeff(need) if need <= t.order else Q(0)
    m[k - 1][k - 1] -= Q(k - 1)
    return m


def bernstein_polynomial(mod: AbModule, gen: Vec, minimal: bool = False) -> tuple:
    """Coefficients (ascending in z) of the Bernstein polynomial.

    The characteristic polynomial of -b^-1 a on the saturation's special
    fiber; pass ``minimal`` for the minimal polynomial of that action.
    """
    k = mod.rank
    m = _saturation_residue_matrix(annihilator_coefficients(mod, gen), k)
    neg = [[-x for x in row] for row in m]
    if not minimal:
        return tuple(_char_poly(neg))
    powers = [[[Q(1) if i == j else Q(0) for j in range(k)] for i in range(k)]]
    for _ in range(k):
        prev = powers[-1]
        powers.append(
            [
                [sum(neg[i][l] * prev[l][j] for l in range(k)) for j in range(k)]
                for i in range(k)
            ]
        )
    for deg in range(1, k + 1):
        rows = [
            [powers[d][i][j] for d in range(deg)] for i in range(k) for j in range(k)
        ]
        rhs = [-powers[deg][i][j] for i in range(k) for j in range(k)]
        sol = _linalg.solve_affine(rows, rhs)
        if sol is not None:
            return tuple(sol[0] + [Q(1)])
    raise FrescoError("minimal polynomial computation failed")


def bernstein_roots_shifted(mod: AbModule, gen: Vec) -> list:
    """The multiset {l_j + j}: negated Bernstein roots shifted by the rank."""
    k = mod.rank
    m = _saturation_residue_matrix(annihilator_coefficients(mod, gen), k)
    return [r + k for r in _rational_roots_monic(_char_poly(m))]


def principal_sort(shifts: list) -> tuple:
    """Arrange the multiset {l_j + j} into fundamental invariants l_1..l_k."""
    groups: dict = {}
    for s in shifts:
        groups.setdefault(class_rep(s), []).append(s)
    lams = []
    pos = 1
    for rep in sorted(groups):
        for s in sorted(groups[rep]):
            lams.append(s - pos)
            pos += 1
    return tuple(lams)


def fundamental_invariants(mod: AbModule, gen: Vec) -> tuple:
    return principal_sort(bernstein_roots_shifted(mod, gen))


# ---------------------------------------------------------------------------
# truncated kernels of (a - mu b)
# ---------------------------------------------------------------------------


def _matrix_coeff(mat: Mat, m: int) -> list[list]:
    return [
        [entry.coeff(m) if m <= entry.order else Q(0) for entry in row] for row in mat
    ]


def _identity_rows(k: int) -> list[list]:
    return [[Q(1) if i == j else Q(0) for j in range(k)] for i in range(k)]


def _echelon(rows: list[list]) -> list[list]:
    """Full reduction sorted by leading index; rows with smaller lead first."""
    pending = [list(r) for r in rows]
    done: list[list] = []
    while pending:
        best = min(
            range(len(pending)),
            key=lambda i: next(
                (j for j, x in enumerate(pending[i]) if x != 0), len(pending[i])
            ),
        )
        row = pending.pop(best)
        lead = next((j for j, x in enumerate(row) if x != 0), None)
        if lead is None:
            continue
        inv = 1 / row[lead]
        row = [x * inv for x in row]
        pending = [
            [a - r[lead] * b for a, b in zip(r, row)] if r[lead] != 0 else r
            for r in pending
        ]
        done = [
            [a - d[lead] * b for a, b in zip(d, row)] if d[lead] != 0 else d
            for d in done
        ]
        done.append(row)
    return done


def trunc_kernel(mod: AbModule, mu, max_val: int | None = None) -> list[Vec]:
    """Solutions of (a - mu b) x = 0 on the order-M truncation.

    The space is echelonized by leading valuation and filtered to leading
    valuation <= max_val.  Coefficients within rank of the truncation
    boundary are not pinned down by order-M data, so the returned vectors
    carry the reduced order M - rank.
    """
    mu = scalar(mu)
    k, m_ord = mod.rank, mod.order
    a_coeffs = [_matrix_coeff(mod.a, m) for m in range(m_ord + 1)]
    b_coeffs = [_matrix_coeff(mod.b, m) for m in range(m_ord + 1)]
    # sparse list of orders with a nonzero combined coefficient matrix
    live = [
        m
        for m in range(1, m_ord + 1)
        if any(
            a_coeffs[m][i][j] - mu * b_coeffs[m][i][j] != 0
            for i in range(k)
            for j in range(k)
        )
    ]

    aug, piv = _linalg.rref(
        [row + ident for row, ident in zip(a_coeffs[0], _identity_rows(k))]
    )
    r_part = [row[:k] for row in aug]
    l_part = [row[k:] for row in aug]
    pivot_cols = [c for c in piv if c < k]
    zero_rows = [r for r in range(k) if all(x == 0 for x in r_part[r])]
    free_cols = [c for c in range(k) if c not in pivot_cols]

    params = 0
    xs: list[list[dict]] = []
    constraints: list[dict] = []

    for r in range(m_ord + 1):
        rhs: list[dict] = [dict() for _ in range(k)]
        for m in live:
            if m > r:
                break
            am, bm = a_coeffs[m], b_coeffs[m]
            xprev = xs[r - m]
            for i in range(k):
                row_rhs = rhs[i]
                for j in range(k):
                    c = am[i][j] - mu * bm[i][j]
                    if c != 0:
                        for p, v in xprev[j].items():
                            row_rhs[p] = row_rhs.get(p, Q(0)) - c * v
        if r >= 1:
            f = scalar(r - 1)
            if f != 0:
                for i in range(k):
                    row_rhs = rhs[i]
                    for p, v in xs[r - 1][i].items():
                        row_rhs[p] = row_rhs.get(p, Q(0)) - f * v
        w = []
        for i in range(k):
            form: dict = {}
            for j in range(k):
                c = l_part[i][j]
                if c != 0:
                    for p, v in rhs[j].items():
                        form[p] = form.get(p, Q(0)) + c * v
            w.append({p: v for p, v in form.items() if v != 0})
        for zr in zero_rows:
            if w[zr]:
                constraints.append(w[zr])
        xr: list[dict] = [dict() for _ in range(k)]
        fresh = {}
        for fc in free_cols:
            xr[fc][params] = Q(1)
            fresh[fc] = params
            params += 1
        for row_idx, col in enumerate(pivot_cols):
            form = dict(w[row_idx])
            for fc in free_cols:
                coef = r_part[row_idx][fc]
                if coef != 0:
                    p = fresh[fc]
                    form[p] = form.get(p, Q(0)) - coef
            xr[col] = {p: v for p, v in form.items() if v != 0}
        xs.append(xr)

    if params == 0:
        return []
    cons_matrix = [[c.get(p, Q(0)) for p in range(params)] for c in constraints]
    sols = (
        _linalg.kernel_basis(cons_matrix)
        if cons_matrix
        else _linalg.kernel_basis([[Q(0)] * params])
    )
    if not sols:
        return []

    out_order = max(m_ord - k, 0)
    flat_rows = []
    for t in sols:
        row = []
        for r in range(m_ord + 1):
            for i in range(k):
                row.append(sum((v * t[p] for p, v in xs[r][i].items()), Q(0)))
        flat_rows.append(row)

    vecs = []
    for row in _echelon(flat_rows):
        lead = next((i for i, x in enumerate(row) if x != 0), None)
        if lead is None:
            continue
        if max_val is not None and lead // k > max_val:
            continue
        comps = tuple(
            TruncSeries([row[r * k + i] for r in range(out_order + 1)], out_order)
            for i in range(k)
        )
        vecs.append(comps)
    return vecs


# ---------------------------------------------------------------------------
# submodules and quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Submodule:
    """Submodule given by generator vectors in the ambient coordinates."""

    generators: tuple
    normal: bool
    pivots: tuple = field(default=())

    @property
    def rank(self) -> int:
        return len(self.generators)


def _normalize_generators(vectors: list[Vec]) -> tuple[list[Vec], list[int]]:
    """Reduce generators to unit pivots in distinct coordinates."""
    pivots: list[int] = []
    out: list[Vec] = []
    for g in vectors:
        g = tuple(g)
        for p, prev in zip(pivots, out):
            c = g[p]
            if not c.is_zero():
                g = vec_sub(g, vec_series_mul(prev, c))
        pivot = next((i for i, comp in enumerate(g) if comp.is_unit()), None)
        if pivot is None:
            raise NotNormal("generator has no unit coordinate after reduction")
        inv = g[pivot].invert()
        g = tuple(x * inv for x in g)
        for idx, prev in enumerate(out):
            c = prev[pivot]
            if not c.is_zero():
                out[idx] = vec_sub(prev, vec_series_mul(g, c))
        pivots.append(pivot)
        out.append(g)
    return out, pivots


def submodule(vectors: list[Vec], normal: bool = True) -> Submodule:
    gens, pivots = _normalize_generators(list(vectors))
    return Submodule(tuple(gens), normal, tuple(pivots))


def quotient_with_maps(mod: AbModule, sub: Submodule):
    """Quotient module plus the (project, embed) coordinate maps."""
    if not sub.normal:
        raise NotNormal("quotient requires a normal submodule")
    gens = list(sub.generators)
    pivots = list(sub.pivots)
    if len(pivots) != len(gens):
        gens, pivots = _normalize_generators(gens)
    k = mod.rank
    complement = [i for i in range(k) if i not in pivots]

    def project(x: Vec) -> Vec:
        y = list(x)
        for g, p in zip(gens, pivots):
            c = y[p]
            if not c.is_zero():
                for i in range(k):
                    y[i] = y[i] - c * g[i]
        return tuple(y[i] for i in complement)

    def embed(xq: Vec, order: int | None = None) -> Vec:
        n = order if order is not None else vec_order(xq)
        full = [TruncSeries.zero(n)] * k
        for idx, i in enumerate(complement):
            full[i] = xq[idx].truncate(n)
        return tuple(full)

    acols = [project(tuple(mod.a[i][j] for i in range(k))) for j in complement]
    bcols = [project(tuple(mod.b[i][j] for i in range(k))) for j in complement]
    kq = len(complement)
    order = min(
        [mod.order]
        + [c.order for col in acols for c in col]
        + [c.order for col in bcols for c in col]
    )
    aq = tuple(tuple(acols[j][i].truncate(order) for j in range(kq)) for i in range(kq))
    bq = tuple(tuple(bcols[j][i].truncate(order) for j in range(kq)) for i in range(kq))
    return AbModule(aq, bq, order), project, embed


def quotient(mod: AbModule, sub: Submodule) -> AbModule:
    return quotient_with_maps(mod, sub)[0]


# ---------------------------------------------------------------------------
# principal factorization
# ---------------------------------------------------------------------------


def _rank1_kernel(alpha: TruncSeries, lam) -> TruncSeries:
    """Unit sigma with (alpha(b) - lam b) sigma + b^2 sigma' = 0, sigma(0)=1."""
    n = alpha.order
    shifted = alpha - TruncSeries.monomial(1, lam, n)
    val = shifted.valuation()
    if val is not None and val < 2:
        raise ResonanceAtTruncation(
            "rank-1 action does not realize the expected root"
        )
    if val is None:
        return TruncSeries.one(max(n - 1, 0))
    r = shifted.shift_down(2)
    out = [Q(0)] * (r.order + 2)
    out[0] = Q(1)
    for m in range(len(out) - 1):
        acc = Q(0)
        for j in range(min(m, r.order) + 1):
            if r.coeffs[j] != 0:
                acc += r.coeffs[j] * out[m - j]
        out[m + 1] = -acc / (m + 1)
    return TruncSeries(out, len(out) - 1)


def _kernel_line(mod: AbModule, lam) -> Vec:
    vecs = trunc_kernel(mod, lam, max_val=0)
    if not vecs:
        raise ResonanceAtTruncation(
            f"no kernel line for root {scalar_str(scalar(lam))} at the working order"
        )
    if len(vecs) > 1:
        raise ResonanceAtTruncation(
            f"kernel for root {scalar_str(scalar(lam))} is not a line"
        )
    return vecs[0]


def _is_one(s: TruncSeries) -> bool:
    return s.coeffs[0] == 1 and all(c == 0 for c in s.coeffs[1:])


def _apply_chain(mod: AbModule, x: Vec, lams: tuple, units: tuple) -> Vec:
    """((a - l_1 b) U_1^-1 ... (a - l_m b) U_m^-1) x, rightmost factor first."""
    v = x
    for lam, unit in zip(reversed(lams), reversed(units)):
        if not _is_one(unit):
            v = mod.apply_b_series(unit.invert(), v)
        v = mod.apply_op(v, lam)
    return v


def _series_quotient(x: Vec, y: Vec) -> TruncSeries:
    """T with x = T y, read off a unit coordinate of y."""
    pivot = next((i for i, c in enumerate(y) if c.is_unit()), None)
    if pivot is None:
        raise ResonanceAtTruncation("reference vector has no unit coordinate")
    return x[pivot] * y[pivot].invert()


def jh_factorize(mod: AbModule, gen: Vec) -> Presentation:
    """Principal factorization of the annihilator of gen.

    Returns the roots in principal order together with the unit series
    S_1..S_k, S_j(0) = 1, such that the interleaved product annihilates
    gen at the working order.
    """
    lams = fundamental_invariants(mod, gen)
    lams_out, series_out = _jh_recurse(mod, gen, lams)
    order = min(s.order for s in series_out)
    return Presentation(lams_out, tuple(s.truncate(order) for s in series_out))


def _jh_recurse(mod: AbModule, gen: Vec, lams: tuple):
    k = mod.rank
    if k == 1:
        lam = lams[0]
        sigma = _rank1_kernel(mod.a[0][0], lam)
        x = gen[0]
        if x.coeff(0) == 0:
            raise NotAGenerator("rank-1 generator has zero constant term")
        s = (x * sigma.invert()).scale(1 / x.coeff(0))
        return (lam,), (s,)
    psi = _kernel_line(mod, lams[0])
    qmod, project, _ = quotient_with_maps(mod, submodule([psi]))
    sub_lams, sub_series = _jh_recurse(
        qmod, vec_truncate(project(gen), qmod.order), lams[1:]
    )
    chi = _apply_chain(mod, gen, sub_lams, sub_series)
    t = _series_quotient(chi, psi)
    if t.coeff(0) == 0:
        raise NotAGenerator("chain image does not generate the bottom line")
    s1 = t.scale(1 / t.coeff(0))
    return (lams[0],) + sub_lams, (s1,) + sub_series


# ---------------------------------------------------------------------------
# saturation
# ---------------------------------------------------------------------------


def saturation(mod: AbModule, gen: Vec) -> AbModule:
    """The smallest simple-pole overmodule, on the basis b^-j a^j gen."""
    k, n = mod.rank, mod.order
    tcoeffs = annihilator_coefficients(mod, gen)
    zero = TruncSeries.zero(n)
    cols = []
    for j in range(k - 1):
        col = [zero] * k
        col[j] = TruncSeries.constant(-j, n)
        col[j + 1] = TruncSeries.one(n)
        cols.append(col)
    last = []
    for j in range(k):
        t = tcoeffs[j]
        if t.is_zero():
            last.append(TruncSeries.zero(t.order - (k - j)))
            continue
        val = t.valuation()
        if val is None or val < k - j:
            raise FrescoError("annihilator valuations violate the simple-pole bound")
        last.append(t.shift_down(k - j))
    last[k - 1] = last[k - 1] - TruncSeries.constant(k - 1, last[k - 1].order)
    cols.append(last)
    order = min([n] + [c.order for c in last])
    bmono = TruncSeries.monomial(1, 1, order)
    a = tuple(
        tuple((cols[j][i].truncate(order) * bmono) for j in range(k)) for i in range(k)
    )
    return AbModule(a, _b_identity(k, order), order)


# ---------------------------------------------------------------------------
# kernels, semi-simple part, depth
# ---------------------------------------------------------------------------


def kernel_K(mod: AbModule, mu, gen: Vec | None = None) -> Submodule:
    """The kernel of (a - mu b) acting on the truncated module."""
    mu = scalar(mu)
    gen = gen if gen is not None else find_generator(mod)
    lams = fundamental_invariants(mod, gen)
    k = mod.rank
    bound = mu - lams[0] + k
    if scalar(mod.order) <= bound:
        raise OrderTooSmall(
            f"kernel at {scalar_str(mu)} needs working order > {scalar_str(bound)}"
        )
    if mu < lams[0]:
        return Submodule((), normal=False)
    vecs = trunc_kernel(mod, mu, max_val=floor_q(mu - lams[0]))
    return Submodule(tuple(vecs), normal=False)


def _dvr_reduce(cols: list[Vec]) -> list[tuple[Vec, int, int]]:
    """Column reduction over the series ring with lowest-valuation pivoting.

    Returns (column, pivot row, pivot valuation) triples; the columns span
    the same module as the input, each has all entries of valuation at
    least its pivot valuation, and pivot rows are zeroed in the others.
    """
    work = [list(c) for c in cols]
    used_rows: set[int] = set()
    remaining = list(range(len(work)))
    result = []
    while remaining:
        best = None
        for ci in remaining:
            for ri in range(len(work[ci])):
                if ri in used_rows:
                    continue
                v = work[ci][ri].valuation()
                if v is not None and (best is None or v < best[0]):
                    best = (v, ci, ri)
        if best is None:
            break  # remaining columns vanish at the working order
        v, ci, ri = best
        pivot_col = work[ci]
        inv = pivot_col[ri].shift_down(v).invert()
        # one-sided: clear the pivot row only in the still-unprocessed columns
        # (their entries have valuation >= v by pivot minimality)
        for cj in remaining:
            if cj == ci:
                continue
            entry = work[cj][ri]
            if entry.valuation() is None:
                continue
            ratio = entry.shift_down(v) * inv
            work[cj] = [x - ratio * y for x, y in zip(work[cj], pivot_col)]
        used_rows.add(ri)
        remaining.remove(ci)
        result.append((ci, ri, v))
    return [(tuple(work[ci]), ri, v) for ci, ri, v in result]


def semisimple_part(mod: AbModule, gen: Vec | None = None) -> Submodule:
    """The maximal semi-simple normal submodule S1.

    Computed as (b^-q . span of K_mu) meet E for mu = l_k + k - 1 and a
    large enough shift q: the kernel columns are reduced with
    lowest-valuation pivoting and each is divided by b to the pivot
    valuation, which realizes the intersection exactly.
    """
    gen = gen if gen is not None else find_generator(mod)
    lams = fundamental_invariants(mod, gen)
    k = mod.rank
    if any(not same_class(l, lams[0]) for l in lams):
        raise NotPrimitive("semi-simple part needs a single class mod 1")
    mu = lams[-1] + (k - 1)
    gap = mu - lams[0]  # integral in the primitive case
    if scalar(mod.order) <= gap + k:
        raise OrderTooSmall(
            f"semi-simple part needs working order > {scalar_str(gap + k)}"
        )
    q = floor_q(gap) + k - 1
    kern = trunc_kernel(mod, mu, max_val=floor_q(gap))
    gens = []
    for col, _row, val in _dvr_reduce(list(kern)):
        shift = min(q, val)
        gens.append(tuple(c.shift_down(shift) for c in col) if shift else col)
    return submodule(gens, normal=True)


def delta_invariant(mod: AbModule, gen: Vec | None = None) -> int:
    """delta = rank of the semi-simple part."""
    return semisimple_part(mod, gen).rank


def ss_depth(mod: AbModule, gen: Vec | None = None) -> int:
    """d = length of the semi-simple filtration."""
    gen = gen if gen is not None else find_generator(mod)
    depth = 0
    cur, g = mod, gen
    while True:
        s1 = semisimple_part(cur, g)
        depth += 1
        if s1.rank == cur.rank:
            return depth
        cur, project, _ = quotient_with_maps(cur, s1)
        g = vec_truncate(project(g), cur.order)


# ---------------------------------------------------------------------------
# twisted duality
# ---------------------------------------------------------------------------


def dual_twisted(mod: AbModule, delta) -> AbModule:
    """Twisted dual: a acts on maps by (a.l)(x) = a.l(x) - l(a.x).

    On the dual basis A* = delta B^t - A^t and B* = B^t; for B = b * Id
    the result is again in canonical B-form.
    """
    delta = scalar(delta)
    k, n = mod.rank, mod.order
    a = tuple(
        tuple(mod.b[j][i].scale(delta) - mod.a[j][i] for j in range(k))
        for i in range(k)
    )
    b = tuple(tuple(mod.b[j][i] for j in range(k)) for i in range(k))
    return AbModule(a, b, n)


def dual_generator(mod: AbModule) -> Vec:
    """Canonical generator of the dual of a standard-basis module."""
    return unit_vec(0, mod.rank, mod.order)


# ---------------------------------------------------------------------------
# sharp filtration
# ---------------------------------------------------------------------------


def sharp_filtration_index(mod: AbModule, v: Vec) -> int | None:
    """Largest nu with v in b^n F_{k-h} + b^{n+1} E, where nu = n k + h.

    Requires the standard Jordan-Holder basis: the coordinate at position
    j (1-based) sits at level (valuation) * k + (k - j).  Zero input gives
    None (the +infinity sentinel).
    """
    k = mod.rank
    best = None
    for j, comp in enumerate(v, start=1):
        val = comp.valuation()
        if val is None:
            continue
        level = val * k + (k - j)
        if best is None or level < best:
            best = level
    return best


# ---------------------------------------------------------------------------
# Y-supports and versal reduction
# ---------------------------------------------------------------------------


def y_support(lambdas, j: int) -> set[int]:
    """Admissible b-exponents for the j-th unit series (1-indexed).

    {0..k-j-1} plus the partial sums p_j + .. + p_{j+l} that are >= k-j,
    for l below the length of the run of roots sharing the class of l_j.
    The last index has support {0}.
    """
    lams = [scalar(x) for x in lambdas]
    k = len(lams)
    if not 1 <= j <= k:
        raise IndexError("index out of range")
    if j == k:
        return {0}
    out = set(range(0, k - j))
    run = 0
    while j + run < k and same_class(lams[j + run], lams[j - 1]):
        run += 1
    total = Q(0)
    for l in range(run):
        total += lams[j + l] - lams[j + l - 1] + 1  # p_{j+l}
        if is_integral(total) and total >= k - j:
            out.add(int(total))
    return out


def reduce_to_versal(pres: Presentation) -> Presentation:
    """Isomorphic presentation with each S_j supported on its Y-set."""
    return versal_witness(pres)[0]


def versal_witness(pres: Presentation) -> tuple[Presentation, Vec]:
    """Versal reduction together with a generator of realize(pres) realizing it."""
    mod = realize(pres)
    gen = standard_generator(pres, mod)
    return _reduce_versal(mod, gen, pres.lambdas)


def _reduce_versal(mod: AbModule, gen: Vec, lams: tuple):
    k = mod.rank
    if k == 1:
        sigma = _rank1_kernel(mod.a[0][0], lams[0])
        return Presentation((lams[0],), (TruncSeries.one(sigma.order),)), (sigma,)
    psi = _kernel_line(mod, lams[0])
    qmod, project, embed = quotient_with_maps(mod, submodule([psi]))
    qpres, qwit = _reduce_versal(qmod, vec_truncate(project(gen), qmod.order), lams[1:])
    lifted = embed(qwit)
    chi = _apply_chain(mod, lifted, qpres.lambdas, qpres.series)
    w = _series_quotient(chi, psi)
    if w.coeff(0) == 0:
        raise ResonanceAtTruncation("lifted generator degenerates on the bottom line")

    support = y_support(lams, 1)
    phi_cache: dict[int, TruncSeries] = {}

    def phi(m: int) -> TruncSeries:
        if m not in phi_cache:
            shifted = vec_series_mul(psi, TruncSeries.monomial(m, 1, mod.order))
            img = _apply_chain(mod, shifted, qpres.lambdas, qpres.series)
            phi_cache[m] = _series_quotient(img, psi)
        return phi_cache[m]

    u = TruncSeries.zero(mod.order)
    wcur = w
    for q_exp in range(k - 1, wcur.order + 1):
        if q_exp in support:
            continue
        c = wcur.coeffs[q_exp]
        if c == 0:
            continue
        base = phi(q_exp - (k - 1))
        lead = base.coeff(q_exp)
        if lead == 0:
            raise ResonanceAtTruncation(
                f"cannot clear the coefficient of b^{q_exp} at the working order"
            )
        t = c / lead
        u = u + TruncSeries.monomial(q_exp - (k - 1), t, mod.order)
        wcur = wcur - base.scale(t)
    witness = vec_sub(lifted, vec_series_mul(psi, u))
    s1 = wcur.scale(1 / wcur.coeff(0))
    out_order = min(s1.order, qpres.order)
    series = (s1.truncate(out_order),) + tuple(
        s.truncate(out_order) for s in qpres.series
    )
    return Presentation(lams, series), witness


def primitive_part(pres: Presentation, classes) -> Presentation:
    """Prefix presentation for the smallest class(es) mod 1."""
    if not isinstance(classes, (list, tuple, set, frozenset)):
        classes = [classes]
    want = {class_rep(scalar(c)) for c in classes}
    present = pres.classes()
    if set(present[: len(want)]) != want:
        raise ClassNotSmallest("requested classes are not a prefix of the ordering")
    m = sum(1 for lam in pres.lambdas if class_rep(lam) in want)
    return subquotient_presentation(pres, 1, m)


def subquotient_presentation(pres: Presentation, i: int, j: int) -> Presentation:
    """Presentation of F_j / F_{i-1} (1-indexed, inclusive): a plain slice."""
    if not 1 <= i <= j <= pres.rank:
        raise IndexError("index out of range")
    lams = pres.lambdas[i - 1 : j]
    series = list(pres.series[i - 1 : j - 1]) + [TruncSeries.one(pres.order)]
    return Presentation(lams, tuple(series))


# ---------------------------------------------------------------------------
# operator elements and the isomorphism test
# ---------------------------------------------------------------------------


def bernstein_element(pres: Presentation, order: int | None = None) -> AhatElement:
    """The ordered product (a - l1 b)(a - l2 b)...(a - lk b)."""
    n = order if order is not None else pres.order
    acc = AhatElement.one(n)
    for lam in pres.lambdas:
        acc = acc * (AhatElement.gen_a(n) - AhatElement.gen_b(n).scale(lam))
    return acc


def annihilator_element(pres: Presentation, order: int | None = None) -> AhatElement:
    """The interleaved product (a - l1 b) S1^-1 ... (a - lk b) Sk^-1."""
    n = order if order is not None else pres.order
    acc = AhatElement.one(n)
    for lam, s in zip(pres.lambdas, pres.series):
        acc = acc * (AhatElement.gen_a(n) - AhatElement.gen_b(n).scale(lam))
        if not _is_one(s):
            acc = acc * AhatElement.from_b_series(s.truncate(n).invert(), n)
    return acc


def act(mod: AbModule, element: AhatElement, x: Vec) -> Vec:
    """Apply a canonical-form operator element to a vector."""
    out = tuple(TruncSeries.zero(vec_order(x)) for _ in range(mod.rank))
    by_nu: dict[int, list] = {}
    for (i, nu), c in element.terms.items():
        by_nu.setdefault(nu, []).append((i, c))
    for nu, terms in sorted(by_nu.items()):
        base = x
        for _ in range(nu):
            base = mod.apply_b(base)
        pows: dict[int, Vec] = {0: base}

        def apow(n: int) -> Vec:
            if n not in pows:
                pows[n] = mod.apply_a(apow(n - 1))
            return pows[n]

        for i, c in terms:
            out = vec_add(out, vec_scale(apow(i), c))
    return out


@dataclass(frozen=True)
class IsoResult:
    """Outcome of an isomorphism test: True, False, or None (inconclusive)."""

    isomorphic: bool | None
    witness: Vec | None = None

    def __bool__(self) -> bool:
        return self.isomorphic is True


def is_isomorphic(p1: Presentation, p2: Presentation) -> IsoResult:
    """Decide isomorphism of the presented modules at the working order.

    A witness is a generator of realize(p1) annihilated by p2's
    factorized operator; that condition is linear, so the candidates form
    an exact kernel.  The kernel contains a generator iff the generator
    determinant is not identically zero on the kernel's constant parts, a
    finite check.  "False" is certified; None (inconclusive) only occurs
    when a candidate fails re-factorization at the available order.
    """
    if p1.rank != p2.rank or p1.lambdas != p2.lambdas:
        return IsoResult(False)
    if p1.agrees_with(p2):
        return IsoResult(True, standard_generator(p1))
    k = p1.rank
    n = min(p1.order, p2.order)
    mod = realize(p1.at_order(n))
    units = tuple(s.truncate(n) for s in p2.series)

    dim = k * (n + 1)
    cols = []
    for r in range(n + 1):
        for i in range(k):
            basis_vec = tuple(
                TruncSeries.monomial(r, 1, n) if ii == i else TruncSeries.zero(n)
                for ii in range(k)
            )
            img = _apply_chain(mod, basis_vec, p2.lambdas, units)
            cols.append([img[ii].coeff(rr) for rr in range(n + 1) for ii in range(k)])
    matrix = [[cols[c][r] for c in range(dim)] for r in range(dim)]
    kern = _linalg.kernel_basis(matrix)
    if not kern:
        return IsoResult(False)

    def to_vec(flat) -> Vec:
        return tuple(
            TruncSeries([flat[r * k + i] for r in range(n + 1)], n) for i in range(k)
        )

    # Generating is a condition on constant parts only:
    # det(x0, A0 x0, ..., A0^{k-1} x0) != 0.
    consts = [[f[i] for i in range(k)] for f in kern]
    const_basis, _ = _linalg.rref(consts)
    const_basis = [row for row in const_basis if any(x != 0 for x in row)]
    if not const_basis:
        return IsoResult(False)
    m = len(const_basis)
    # kernel combinations realizing each constant-basis row
    mat_c = [[consts[c][i] for c in range(len(consts))] for i in range(k)]
    reps = []
    for row in const_basis:
        sol = _linalg.solve_affine(mat_c, list(row))
        if sol is None:
            return IsoResult(None)
        reps.append(sol[0])

    a0 = _matrix_coeff(mod.a, 0)

    def gen_det(x0: list) -> Q:
        cols_ = [list(x0)]
        for _ in range(k - 1):
            cols_.append(
                [sum(a0[i][j] * cols_[-1][j] for j in range(k)) for i in range(k)]
            )
        return _det([[cols_[j][i] for j in range(k)] for i in range(k)])

    found = None
    for combo in itertools.product(range(k + 1), repeat=m):
        if all(c == 0 for c in combo):
            continue
        x0 = [
            sum(Q(combo[t]) * const_basis[t][i] for t in range(m)) for i in range(k)
        ]
        if gen_det(x0) != 0:
            found = [Q(c) for c in combo]
            break
    if found is None:
        return IsoResult(False)
    kern_combo = [
        sum(found[t] * reps[t][c] for t in range(m)) for c in range(len(kern))
    ]
    witness_flat = [
        sum(kern_combo[c] * kern[c][pos] for c in range(len(kern)))
        for pos in range(dim)
    ]
    witness = to_vec(witness_flat)
    try:
        back = jh_factorize(mod, witness)
    except FrescoError:
        return IsoResult(None)
    if back.lambdas == p2.lambdas and back.agrees_with(p2):
        return IsoResult(True, witness)
    return IsoResult(None)


def _det(m: list[list]) -> Q:
    k = len(m)
    mat = [row[:] for row in m]
    det = Q(1)
    for c in range(k):
        pr = next((r for r in range(c, k) if mat[r][c] != 0), None)
        if pr is None:
            return Q(0)
        if pr != c:
            mat[c], mat[pr] = mat[pr], mat[c]
            det = -det
        det *= mat[c][c]
        inv = 1 / mat[c][c]
        for r in range(c + 1, k):
            if mat[r][c] != 0:
                f = mat[r][c] * inv
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[c])]
    return det
