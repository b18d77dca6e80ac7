"""Text formats for presentations and coordinate changes.

Presentation files (one per file):

    rank 3 order 17
    lambdas 7/2 9/2 13/2
    S 1 0:1 1:1 2:4
    S 2 0:1 3:2
    S 3 0:1

Series lines are sparse exponent:coefficient pairs; omitted exponents are
zero and the constant term must be present and equal to 1.  A coordinate
change is a single line of pairs with a nonzero linear term:

    theta 1:1 2:1/2
"""

from __future__ import annotations

from .ahat import ChangeOfVariable
from .frescos import Presentation
from .series import TruncSeries, scalar, scalar_str


class ParseError(ValueError):
    pass


def parse_pairs(tokens: list[str]) -> dict[int, object]:
    pairs: dict[int, object] = {}
    for tok in tokens:
        if ":" not in tok:
            raise ParseError(f"expected exponent:coefficient, got {tok!r}")
        e, c = tok.split(":", 1)
        try:
            exp = int(e)
        except ValueError as exc:
            raise ParseError(f"bad exponent {e!r}") from exc
        if exp < 0:
            raise ParseError(f"negative exponent {exp}")
        try:
            pairs[exp] = scalar(c)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad coefficient {c!r}") from exc
    return pairs


def parse_presentation(text: str, order_override: int | None = None) -> Presentation:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise ParseError("presentation file needs a header and a lambdas line")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "rank" or head[2] != "order":
        raise ParseError('header must be "rank k order N"')
    try:
        rank, order = int(head[1]), int(head[3])
    except ValueError as exc:
        raise ParseError("rank and order must be integers") from exc
    if rank < 1 or order < 0:
        raise ParseError("rank must be >= 1 and order >= 0")
    lam_line = lines[1].split()
    if lam_line[0] != "lambdas" or len(lam_line) != rank + 1:
        raise ParseError(f'second line must be "lambdas" with {rank} values')
    lambdas = [scalar(tok) for tok in lam_line[1:]]
    if order_override is not None:
        order = max(order, order_override)
    series = [TruncSeries.one(order) for _ in range(rank)]
    for ln in lines[2:]:
        toks = ln.split()
        if toks[0] != "S" or len(toks) < 3:
            raise ParseError(f"bad series line {ln!r}")
        idx = int(toks[1])
        if not 1 <= idx <= rank:
            raise ParseError(f"series index {idx} out of range")
        pairs = parse_pairs(toks[2:])
        if pairs.get(0) != 1:
            raise ParseError("series constant term must be present and equal to 1")
        series[idx - 1] = TruncSeries.from_pairs(list(pairs.items()), order)
    try:
        return Presentation(tuple(lambdas), tuple(series))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def render_presentation(pres: Presentation) -> str:
    return str(pres) + "\n"


def parse_theta(text: str) -> ChangeOfVariable:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) != 1:
        raise ParseError("theta file must contain exactly one line")
    toks = lines[0].split()
    if toks[0] != "theta" or len(toks) < 2:
        raise ParseError('theta line must be "theta e1:c1 e2:c2 ..."')
    pairs = parse_pairs(toks[1:])
    if 0 in pairs:
        raise ParseError("theta has no constant term")
    if pairs.get(1, scalar(0)) == 0:
        raise ParseError("theta needs a nonzero linear coefficient")
    try:
        return ChangeOfVariable.from_pairs(pairs)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def render_theta(cv: ChangeOfVariable) -> str:
    pairs = " ".join(
        f"{e + 1}:{scalar_str(c)}" for e, c in enumerate(cv.coeffs) if c != 0
    )
    return f"theta {pairs}\n"


def poly_str(coeffs_asc, var: str = "z") -> str:
    """Monic-friendly rendering, descending powers."""
    parts = []
    for d in range(len(coeffs_asc) - 1, -1, -1):
        c = coeffs_asc[d]
        if c == 0:
            continue
        if d == 0:
            term = scalar_str(c)
        else:
            base = var if d == 1 else f"{var}^{d}"
            term = base if c == 1 else f"{scalar_str(c)}*{base}"
        parts.append(term)
    if not parts:
        return "0"
    out = parts[0]
    for term in parts[1:]:
        if term.startswith("-"):
            out += " - " + term[1:]
        else:
            out += " + " + term
    return out
