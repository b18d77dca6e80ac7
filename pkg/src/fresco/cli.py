"""Command-line front end.

One command per invocation; deterministic text output.  Exit status 0 on
success, 2 when a computation hits a mathematical obstruction (the
offending coefficient is printed), 1 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import sys

from . import classify3 as c3
from . import chgvar, frescos, textio
from .errors import FrescoError
from .series import scalar, scalar_str


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_presentation(path: str, order: int | None) -> frescos.Presentation:
    return textio.parse_presentation(_read(path), order_override=order)


def _load_theta(path: str) -> "chgvar.ChangeOfVariable":
    return textio.parse_theta(_read(path))


def _submodule_report(sub: frescos.Submodule) -> str:
    lines = [f"rank = {sub.rank}"]
    for n, gen in enumerate(sub.generators, start=1):
        lines.append(f"generator {n}:")
        for j, comp in enumerate(gen, start=1):
            pairs = " ".join(
                f"{e}:{scalar_str(c)}" for e, c in enumerate(comp.coeffs) if c != 0
            )
            if pairs:
                lines.append(f"  e{j} {pairs}")
    return "\n".join(lines) + "\n"


def cmd_bernstein(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    mod = frescos.realize(pres)
    gen = frescos.standard_generator(pres, mod)
    coeffs = frescos.bernstein_polynomial(mod, gen, minimal=args.minimal)
    return textio.poly_str(coeffs) + "\n"


def cmd_jh(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    mod = frescos.realize(pres)
    gen = frescos.standard_generator(pres, mod)
    return textio.render_presentation(frescos.jh_factorize(mod, gen))


def cmd_push(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    cv = _load_theta(args.theta)
    return textio.render_presentation(chgvar.push_presentation(pres, cv))


def cmd_ssp(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    mod = frescos.realize(pres)
    gen = frescos.standard_generator(pres, mod)
    sub = frescos.semisimple_part(mod, gen)
    return f"delta = {sub.rank}\n" + _submodule_report(sub)


def cmd_delta(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    mod = frescos.realize(pres)
    gen = frescos.standard_generator(pres, mod)
    return (
        f"delta = {frescos.delta_invariant(mod, gen)}\n"
        f"d = {frescos.ss_depth(mod, gen)}\n"
    )


def cmd_dual(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    mod = frescos.realize(pres)
    dual = frescos.dual_twisted(mod, scalar(args.twist))
    gen = frescos.dual_generator(dual)
    return textio.render_presentation(frescos.jh_factorize(dual, gen))


def cmd_classify3(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    nf = c3.normal_form_rank3(pres, verify=not args.no_verify)
    return nf.render() + "\n"


def cmd_gamma(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    return f"gamma = {scalar_str(c3.gamma3(pres))}\n"


def cmd_pi(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    try:
        i, j = (int(x) for x in args.pair.split(","))
    except ValueError as exc:
        raise textio.ParseError("--pair expects i,j") from exc
    return f"pi_{i},{j} = {scalar_str(c3.pi_ij(pres, i, j))}\n"


def cmd_alpha2(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    return f"alpha = {scalar_str(c3.alpha2(pres))}\n"


def cmd_versal(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    return textio.render_presentation(frescos.reduce_to_versal(pres))


def cmd_iso(args) -> str:
    p1 = _load_presentation(args.first, args.order)
    p2 = _load_presentation(args.second, args.order)
    res = frescos.is_isomorphic(p1, p2)
    if res.isomorphic is True:
        return "isomorphic\n"
    if res.isomorphic is False:
        return "not isomorphic\n"
    return f"inconclusive at order {min(p1.order, p2.order)}\n"


def cmd_probe(args) -> str:
    pres = _load_presentation(args.presentation, args.order)
    cv = _load_theta(args.theta)
    param = args.param
    if param == "pi":
        if not args.pair:
            raise textio.ParseError("--param pi needs --pair i,j")
        param = f"pi:{args.pair}"
    report = chgvar.quasi_invariance_probe(param, pres, cv)
    out = report.render()
    if args.weight is not None and report.chi != 1:
        r = report.ratio
        match = r is not None and report.chi ** args.weight == r
        inverse = r is not None and report.chi ** (-args.weight) == r
        out += f"\nweight {args.weight} direct: {'yes' if match else 'no'}"
        out += f"\nweight {args.weight} inverse: {'yes' if inverse else 'no'}"
    return out + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fresco",
        description="exact computations with presented (a,b)-modules",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--order",
            type=int,
            default=None,
            help="raise the working order (never lowers the file's order)",
        )

    p = sub.add_parser("bernstein", help="Bernstein polynomial of a presentation")
    p.add_argument("presentation")
    p.add_argument("--minimal", action="store_true", help="minimal instead of characteristic polynomial")
    common(p)
    p.set_defaults(func=cmd_bernstein)

    p = sub.add_parser("jh", help="refactorize the canonical generator")
    p.add_argument("presentation")
    common(p)
    p.set_defaults(func=cmd_jh)

    p = sub.add_parser("push", help="presentation after a change of variable")
    p.add_argument("presentation")
    p.add_argument("--theta", required=True)
    common(p)
    p.set_defaults(func=cmd_push)

    p = sub.add_parser("ssp", help="semi-simple part")
    p.add_argument("presentation")
    common(p)
    p.set_defaults(func=cmd_ssp)

    p = sub.add_parser("delta", help="delta and the ss-depth d")
    p.add_argument("presentation")
    common(p)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("dual", help="twisted dual presentation")
    p.add_argument("presentation")
    p.add_argument("--twist", required=True, help="twist value, e.g. 13/2")
    common(p)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("classify3", help="rank-3 normal form")
    p.add_argument("presentation")
    p.add_argument("--no-verify", action="store_true")
    common(p)
    p.set_defaults(func=cmd_classify3)

    p = sub.add_parser("gamma", help="the rank-3 second parameter")
    p.add_argument("presentation")
    common(p)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("pi", help="the antisymmetrized pair invariant")
    p.add_argument("presentation")
    p.add_argument("--pair", required=True, help="indices i,j")
    common(p)
    p.set_defaults(func=cmd_pi)

    p = sub.add_parser("alpha2", help="the rank-2 parameter")
    p.add_argument("presentation")
    common(p)
    p.set_defaults(func=cmd_alpha2)

    p = sub.add_parser("versal", help="reduce to the versal support")
    p.add_argument("presentation")
    common(p)
    p.set_defaults(func=cmd_versal)

    p = sub.add_parser("iso", help="decide isomorphism of two presentations")
    p.add_argument("first")
    p.add_argument("second")
    common(p)
    p.set_defaults(func=cmd_iso)

    p = sub.add_parser("probe", help="quasi-invariance of a parameter")
    p.add_argument("presentation")
    p.add_argument("--param", required=True, help="gamma, alpha2, or pi")
    p.add_argument("--pair", default=None, help="indices i,j for --param pi")
    p.add_argument("--theta", required=True)
    p.add_argument("--weight", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_probe)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        sys.stdout.write(args.func(args))
        return 0
    except (textio.ParseError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except FrescoError as exc:
        sys.stderr.write(f"obstruction: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
