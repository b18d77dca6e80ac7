"""Change of variable on realized modules and quasi-invariance probes.

theta sends the a-operator to theta(a) and the b-operator to
b * theta'(a).  The pushed module is re-expressed in coordinates adapted
to the new operators: the same basis vectors are kept but coefficients
are series in the new b-operator, found by a triangular conversion.  In
those coordinates the new b acts again as b * Id, so the result is a
plain AbModule.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _linalg
from .ahat import ChangeOfVariable
from .errors import FrescoError, ResonanceAtTruncation
from .series import Q, TruncSeries, scalar, scalar_str
from .frescos import (
    AbModule,
    Presentation,
    Vec,
    _b_identity,
    jh_factorize,
    realize,
    standard_generator,
    unit_vec,
    vec_add,
    vec_order,
    vec_scale,
)


def _theta_of_op_a(mod: AbModule, cv: ChangeOfVariable, x: Vec) -> Vec:
    """theta(a-operator) applied to x, exact for the polynomial theta."""
    acc = None
    cur = x
    for c in cv.coeffs:
        cur = mod.apply_a(cur)
        if c != 0:
            acc = vec_scale(cur, c) if acc is None else vec_add(acc, vec_scale(cur, c))
    return acc


def _dtheta_of_op_a(mod: AbModule, cv: ChangeOfVariable, x: Vec) -> Vec:
    """theta'(a-operator) applied to x."""
    acc = vec_scale(x, cv.coeffs[0])
    cur = x
    for e, c in enumerate(cv.coeffs[1:], start=2):
        cur = mod.apply_a(cur)
        if c != 0:
            acc = vec_add(acc, vec_scale(cur, scalar(e) * c))
    return acc


def _beta_apply(mod: AbModule, cv: ChangeOfVariable, x: Vec) -> Vec:
    """The new b-operator b * theta'(a) applied to x."""
    return mod.apply_b(_dtheta_of_op_a(mod, cv, x))


def theta_push(mod: AbModule, cv: ChangeOfVariable) -> AbModule:
    """The module with operators theta(a) and b theta'(a), in adapted coordinates.

    The output is expressed on the same basis vectors viewed over series
    in the new b-operator; its b-matrix is b * Id again, and a subsequent
    ``jh_factorize`` with the same generator coordinates gives the pushed
    presentation (a generator stays a generator).
    """
    if cv.is_identity():
        return mod
    k, n = mod.rank, mod.order
    if cv.degree == 1:
        # pure scaling xi * a: coordinates rescale exactly,
        # A*[i][j](b) = xi * A[i][j](b / xi)
        xi = cv.chi
        a = tuple(
            tuple(mod.a[i][j].rescale_variable(1 / xi).scale(xi) for j in range(k))
            for i in range(k)
        )
        return AbModule(a, _b_identity(k, n), n)
    if not cv.is_unimodular():
        # theta = (xi a) o u with u unimodular; push in two stages
        pushed = theta_push(mod, cv.unimodular_part())
        return theta_push(pushed, ChangeOfVariable((cv.chi,)))
    basis = [unit_vec(j, k, n) for j in range(k)]
    # beta-power images w[j][m] = beta^m e_j, computed incrementally
    w = []
    for j in range(k):
        row = [basis[j]]
        for _ in range(n):
            row.append(_beta_apply(mod, cv, row[-1]))
        w.append(row)
    # leading-coefficient matrices: w[j][m] has valuation m
    lead = []
    for m in range(n + 1):
        lead.append([[w[j][m][i].coeff(m) for j in range(k)] for i in range(k)])

    def to_beta_coords(target: Vec) -> list[TruncSeries]:
        resid = [list(c.coeffs) + [Q(0)] * (n - c.order) for c in target]
        sigma = [[Q(0)] * (n + 1) for _ in range(k)]
        for m in range(n + 1):
            rhs = [resid[i][m] for i in range(k)]
            sol = _linalg.solve_affine(lead[m], rhs)
            if sol is None:
                raise ResonanceAtTruncation("coordinate conversion failed")
            coeffs = sol[0]
            for j in range(k):
                sigma[j][m] = coeffs[j]
                if coeffs[j] != 0:
                    wjm = w[j][m]
                    for i in range(k):
                        comp = wjm[i]
                        for r in range(m, n + 1):
                            if r <= comp.order:
                                resid[i][r] -= coeffs[j] * comp.coeff(r)
        return [TruncSeries(sigma[j], n) for j in range(k)]

    new_cols = []
    for j in range(k):
        alpha_ej = _theta_of_op_a(mod, cv, basis[j])
        new_cols.append(to_beta_coords(alpha_ej))
    a = tuple(tuple(new_cols[j][i] for j in range(k)) for i in range(k))
    return AbModule(a, _b_identity(k, n), n)


def push_presentation(pres: Presentation, cv: ChangeOfVariable) -> Presentation:
    """Presentation of the pushed module, same generator coordinates."""
    mod = realize(pres)
    gen = standard_generator(pres, mod)
    return jh_factorize(theta_push(mod, cv), gen)


# ---------------------------------------------------------------------------
# the rank-1 adaptation series
# ---------------------------------------------------------------------------


def rank1_adapt(mu, cv: ChangeOfVariable, order: int) -> TruncSeries:
    """The unit S with (theta(a) - mu b theta'(a)) S(beta) e = 0 in the
    rank-1 module with a e = mu b e.

    For a non-unimodular theta = xi * u the unimodular series is computed
    first and its variable is rescaled by 1/xi.
    """
    mu = scalar(mu)
    if not cv.is_unimodular():
        xi = cv.chi
        base = rank1_adapt(mu, cv.unimodular_part(), order)
        return base.rescale_variable(1 / xi)
    line = AbModule(
        ((TruncSeries.monomial(1, mu, order),),), _b_identity(1, order), order
    )
    e = unit_vec(0, 1, order)
    alpha_e = _theta_of_op_a(line, cv, e)[0]
    # express alpha e = mu * b-new * T(b-new) e through the beta-power basis
    powers = [e]
    for _ in range(order):
        powers.append(_beta_apply(line, cv, powers[-1]))
    coeffs = [Q(0)] * (order + 1)
    resid = list(alpha_e.coeffs)
    for m in range(order + 1):
        lead = powers[m][0].coeff(m)
        coeffs[m] = resid[m] / lead
        if coeffs[m] != 0:
            comp = powers[m][0]
            for r in range(m, order + 1):
                if r <= comp.order:
                    resid[r] -= coeffs[m] * comp.coeff(r)
    if coeffs[0] != 0:
        raise FrescoError("adapted action has a constant term")
    t = [c / mu for c in coeffs[1:]]  # alpha e = mu sum t_j beta^{j+1} e
    if t[0] != 1:
        raise FrescoError("adapted action does not lead with mu * b")
    # (n+1) s_{n+1} = -mu sum_{j>=1} s_{n+1-j} t_j
    s = [Q(0)] * len(t)
    s[0] = Q(1)
    for n in range(len(t) - 1):
        acc = Q(0)
        for j in range(1, n + 2):
            if j < len(t) and t[j] != 0:
                acc += s[n + 1 - j] * t[j]
        s[n + 1] = -mu * acc / (n + 1)
    return TruncSeries(s, len(s) - 1)


def rank1_base_change(mu, cv: ChangeOfVariable, order: int) -> TruncSeries:
    """The unit T with theta(a) e = mu (b theta'(a)) T(b theta'(a)) e."""
    mu = scalar(mu)
    line = AbModule(
        ((TruncSeries.monomial(1, mu, order),),), _b_identity(1, order), order
    )
    e = unit_vec(0, 1, order)
    alpha_e = _theta_of_op_a(line, cv, e)[0]
    powers = [e]
    for _ in range(order):
        powers.append(_beta_apply(line, cv, powers[-1]))
    coeffs = [Q(0)] * (order + 1)
    resid = list(alpha_e.coeffs)
    for m in range(order + 1):
        lead = powers[m][0].coeff(m)
        coeffs[m] = resid[m] / lead
        if coeffs[m] != 0:
            comp = powers[m][0]
            for r in range(m, order + 1):
                if r <= comp.order:
                    resid[r] -= coeffs[m] * comp.coeff(r)
    return TruncSeries([c / mu for c in coeffs[1:]], order - 1)


# ---------------------------------------------------------------------------
# quasi-invariance probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    """Exact comparison of a parameter before and after a change of variable."""

    param: str
    chi: object
    before: object
    after: object

    @property
    def difference(self):
        return self.after - self.before

    @property
    def ratio(self):
        if self.before == 0:
            return None
        return self.after / self.before

    def rescaling_exponent(self, span: int = 12) -> int | None:
        """Integer e with after = chi^e * before, if one exists in range."""
        r = self.ratio
        if r is None or self.chi == 1:
            return None
        for e in range(-span, span + 1):
            if self.chi**e == r:
                return e
        return None

    def render(self) -> str:
        lines = [
            f"param {self.param}",
            f"chi = {scalar_str(self.chi)}",
            f"before = {scalar_str(self.before)}",
            f"after = {scalar_str(self.after)}",
        ]
        if self.chi == 1:
            lines.append(f"difference = {scalar_str(self.difference)}")
        else:
            r = self.ratio
            lines.append(
                "ratio = " + (scalar_str(r) if r is not None else "undefined")
            )
            e = self.rescaling_exponent()
            if e is not None:
                lines.append(f"empirical exponent = {e}")
        return "\n".join(lines)


def quasi_invariance_probe(param, pres: Presentation, cv: ChangeOfVariable) -> ProbeReport:
    """Evaluate a named parameter before and after the change of variable.

    ``param`` is "gamma", "alpha2", "pi:i,j" or any callable on
    presentations.  The report carries the exact values; unimodular
    changes are judged by the difference, scalings by the ratio.
    """
    func, name = _resolve_param(param)
    before = func(pres)
    after = func(push_presentation(pres, cv))
    return ProbeReport(name, cv.chi, before, after)


def _resolve_param(param):
    if callable(param):
        return param, getattr(param, "__name__", "param")
    from . import classify3

    if param == "gamma":
        return classify3.gamma3, "gamma"
    if param in ("alpha", "alpha2"):
        return classify3.alpha2, "alpha2"
    if isinstance(param, str) and param.startswith("pi:"):
        i, j = (int(x) for x in param[3:].split(","))
        return (lambda p: classify3.pi_ij(p, i, j)), f"pi_{i},{j}"
    raise ValueError(f"unknown parameter {param!r}")
