"""Command-line front end (``qtel``).

Exit codes:
    0  success (for ``gosper``, a proved NOT_SUMMABLE also counts)
    1  input error: bad syntax, unknown identity or symbol, pole at the point
    2  undetermined: dispersion bound exceeded or the run was cancelled
    3  convergence violation at the requested point
    4  a check failed, or no certificate could be produced
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from fractions import Fraction

from . import catalog as cat
from .errors import (
    Cancelled,
    ConvergenceViolation,
    DispersionUndetermined,
    EvalPole,
    NotReconstructible,
    NotSimilar,
    NotSummable,
    PairValidationError,
    QTelescopeError,
    ZeroH,
)
from .exactalg import SYMBOLS, ParamElem, RatX
from .numeval import NumericContext, Residual, verify_identity, verify_pair_numeric
from .pairsynth import (
    AbelPair,
    GosperPair,
    IterationRelation,
    build_iteration,
    check_limit_condition,
    derive_abel_pair,
    synthesize_gosper_pair,
    validate_abel_pair,
    validate_gosper_pair,
)
from .qgosper import CancelToken, q_gosper
from .qterm import BILATERAL, UNILATERAL, QTerm, same_term
from .syntax import (
    TermSyntaxError,
    format_substitution,
    format_term,
    parse_param,
    parse_ratx,
    parse_substitution,
    parse_term,
)

CERT_SCHEMA = "qtelescope.cert.v1"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNDETERMINED = 2
EXIT_CONVERGENCE = 3
EXIT_FAILED = 4

FIXED_PARAMETER_NOTE = (
    "numeric checks are at fixed parameter values; limits taken in the "
    "parameters themselves are not covered"
)


class InputError(QTelescopeError):
    pass


# ---------------------------------------------------------------------------
# helpers


def _parse_assignments(items) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for item in items or ():
        for part in item.split(","):
            part = part.strip()
            if not part:
                continue
            name, sep, value = part.partition("=")
            if not sep:
                raise InputError(f"expected sym=value, got {part!r}")
            try:
                out[name.strip()] = Fraction(value.strip())
            except (ValueError, ZeroDivisionError):
                raise InputError(f"{value.strip()!r} is not a rational number") from None
    return out


def _context(rec, args) -> NumericContext:
    overrides = _parse_assignments(args.set)
    if args.q is not None:
        overrides["q"] = Fraction(args.q)
    try:
        return NumericContext.for_record(rec, args.K, args.N, Fraction(args.tol), **overrides)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _lookup(name: str):
    try:
        return cat.lookup(name)
    except KeyError:
        known = ", ".join(cat.list_identities())
        raise InputError(f"unknown identity {name!r}; known: {known}") from None


def _cancel_after(seconds: float | None) -> CancelToken:
    token = CancelToken()
    if seconds:
        timer = threading.Timer(seconds, token.cancel)
        timer.daemon = True
        timer.start()
    return token


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        print(text)


def _residual_summary(res: list[Residual]) -> dict:
    bad = [r for r in res if not r.exact]
    return {
        "count": len(res),
        "all_zero": not bad,
        "nonzero": [r.to_json() for r in bad[:5]],
    }


def _limit_json(rep) -> dict:
    return {
        "support": rep.support,
        "K": rep.K,
        "h_plus": float(rep.h_plus),
        "h_minus": None if rep.h_minus is None else float(rep.h_minus),
        "h_zero": float(rep.h_zero),
        "gap": float(rep.gap),
        "tail": float(rep.tail),
        "decaying": rep.decaying,
        "advisory": rep.advisory,
    }


# ---------------------------------------------------------------------------
# LaTeX


def _latex_param(v) -> str:
    import sympy

    expr = v.frac.as_expr()
    subs = {}
    for s in expr.free_symbols:
        if s.name == "ra":
            subs[s] = sympy.sqrt(sympy.Symbol("a"))
        elif s.name == "x":
            subs[s] = sympy.Symbol("q") ** sympy.Symbol("k")
    return sympy.latex(sympy.powsimp(expr.subs(subs)))


def latex_term(t: QTerm) -> str:
    if t.zero:
        return "0"
    parts = []
    if not t.coeff.is_one():
        parts.append(r"\left(" + _latex_param(t.coeff) + r"\right)")
    if not t.pre.is_one():
        parts.append(r"\left(" + _latex_param(t.pre) + r"\right)")
    up = [_latex_param(f.arg) for f in t.factors for _ in range(max(f.exp, 0))]
    down = [_latex_param(f.arg) for f in t.factors for _ in range(max(-f.exp, 0))]
    if up or down:
        num = "(" + ",".join(up) + ";q)_k" if up else "1"
        den = "(" + ",".join(down) + ";q)_k" if down else "1"
        parts.append(num if not down else rf"\frac{{{num}}}{{{den}}}")
    if not t.geom.is_one():
        parts.append(r"\left(" + _latex_param(t.geom) + r"\right)^k")
    if t.qquad:
        c = "" if t.qquad == 1 else str(t.qquad)
        parts.append(rf"q^{{{c}\binom{{k}}{{2}}}}")
    return r" \, ".join(parts) or "1"


def certificate_latex(cert: dict, terms: dict[str, QTerm]) -> str:
    lines = [
        "% " + CERT_SCHEMA,
        rf"% identity: {cert['identity']}, iteration: {cert['substitution']}",
        r"\begin{align*}",
    ]
    for key in ("F", "G", "g", "h", "A", "B"):
        if terms.get(key) is not None:
            sub = "k" if key in "FGghAB" else ""
            lines.append(rf"{key}_{sub} &= {latex_term(terms[key])} \\")
    lines.append(r"\end{align*}")
    for c in cert.get("caveats", []):
        lines.append("% caveat: " + c)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# certificates


def build_certificate(rec, it, rel, pair, abel, ctx, *, abel_note="", limit_K: int = 40) -> dict:
    """Assemble the certificate record; all symbolic checks have passed by now."""
    checks = {"gosper_pair": True, "abel_pair": abel is not None}
    numeric: dict = {}
    identity_res = verify_identity(rec, ctx)
    numeric["identity"] = identity_res.to_json()
    numeric["identity_within_tolerance"] = identity_res.within(ctx.tolerance)
    numeric["gosper_pair"] = _residual_summary(verify_pair_numeric(rel, pair, ctx))
    if abel is not None:
        numeric["abel_pair"] = _residual_summary(verify_pair_numeric(rel, abel, ctx))
    limit = check_limit_condition(pair, ctx.with_truncation(min(limit_K, ctx.truncation)))
    caveats = [limit.caveat, FIXED_PARAMETER_NOTE]
    reference = {}
    if it is not None and it.has_oracle:
        ref = cat.oracle_pair(rec, it)
        reference["g"] = same_term(pair.g, ref.g)
        reference["h"] = same_term(pair.h, ref.h)
        ref_abel = cat.oracle_abel(it)
        if ref_abel is not None and abel is not None:
            reference["A"] = same_term(abel.A, ref_abel.A)
            reference["B"] = same_term(abel.B, ref_abel.B)
            if it.abel_scale is not None:
                reference["A_scale"] = str(it.abel_scale)
    cert = {
        "schema": CERT_SCHEMA,
        "identity": rec.name,
        "iteration": it.name if it is not None else None,
        "substitution": format_substitution(rel.substitution),
        "support": rel.support,
        "multiplier": str(rel.multiplier),
        "F": format_term(rel.F),
        "G": format_term(rel.G),
        "g": format_term(pair.g),
        "h": format_term(pair.h),
        "A": format_term(abel.A) if abel is not None else None,
        "B": format_term(abel.B) if abel is not None else None,
        "abel_anchor": abel.anchor if abel is not None else None,
        "abel_note": abel_note,
        "checks": checks,
        "sample": {k: str(v) for k, v in ctx.full_assignment().items()},
        "truncation": {"K": ctx.truncation, "N": ctx.cutoff, "tolerance": str(ctx.tolerance)},
        "numeric": numeric,
        "limit": _limit_json(limit),
        "limit_passed": limit.passed(),
        "caveats": caveats,
    }
    if reference:
        cert["reference_match"] = reference
    return cert


def relation_from_certificate(cert: dict) -> tuple[IterationRelation, GosperPair, AbelPair | None]:
    support = cert.get("support", BILATERAL)
    if support not in (BILATERAL, UNILATERAL):
        raise InputError(f"unknown support {support!r}")

    def term(key):
        return parse_term(cert[key], support=support, declare_new=True)

    F, G = term("F"), term("G")
    sub = parse_substitution(cert["substitution"], declare_new=True)
    rel = IterationRelation(F, G, sub, parse_param(cert["multiplier"]), support)
    pair = GosperPair(term("g"), term("h"))
    abel = None
    if cert.get("A"):
        abel = AbelPair(term("A"), term("B"), int(cert.get("abel_anchor") or 0))
    return rel, pair, abel


# ---------------------------------------------------------------------------
# subcommands


def cmd_gosper(args) -> int:
    declared = None
    if args.declare:
        SYMBOLS.declare(*[s.strip() for s in args.declare.split(",") if s.strip()])
        declared = SYMBOLS.names
    if args.ratio:
        r = parse_ratx(args.expr, declared=declared, declare_new=False)
        target = r
    else:
        support = UNILATERAL if args.unilateral else BILATERAL
        target = parse_term(args.expr, declared=declared, support=support)
        if target.zero:
            raise InputError("the zero term is trivially summable")
    token = _cancel_after(args.timeout)
    try:
        certificate = q_gosper(target, token)
    except NotSummable as exc:
        print("NOT_SUMMABLE")
        if exc.diagnostic:
            print(f"  {exc.diagnostic}")
        return EXIT_OK
    print(f"R(x) = {certificate.R}")
    if args.emit == "json":
        print(json.dumps({"schema": CERT_SCHEMA, "R": str(certificate.R), "input": args.expr}, indent=2))
    return EXIT_OK


def cmd_pair(args) -> int:
    rec = _lookup(args.identity)
    try:
        sub_key = args.iterate
        it = rec.find_iteration(sub_key)
        if it is None:
            sub_key = parse_substitution(args.iterate)
        rel = build_iteration(rec, sub_key)
    except TermSyntaxError:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from None
    ctx = _context(rec, args)
    token = _cancel_after(args.timeout)
    try:
        pair = synthesize_gosper_pair(rel, token)
    except NotSummable as exc:
        print(f"NOT_SUMMABLE: {exc}", file=sys.stderr)
        if exc.diagnostic:
            print(f"  {exc.diagnostic}", file=sys.stderr)
        others = [i.name for i in rec.iterations if i.summable and not i.reduction and i is not it]
        if others:
            print("  registered alternatives: " + ", ".join(others), file=sys.stderr)
        return EXIT_FAILED
    abel, note = None, ""
    if it is None or it.abel:
        try:
            abel = derive_abel_pair(pair, rel)
        except ZeroH as exc:
            note = f"no Abel pair: {exc}"
        except NotReconstructible as exc:
            note = f"no Abel pair in product form: {exc}"
    else:
        note = "no Abel pair registered for this iteration"
    cert = build_certificate(rec, it, rel, pair, abel, ctx, abel_note=note, limit_K=args.limit_K)
    terms = {"F": rel.F, "G": rel.G, "g": pair.g, "h": pair.h}
    if abel is not None:
        terms.update(A=abel.A, B=abel.B)
    if args.emit == "latex":
        _emit(certificate_latex(cert, terms), args.out)
    else:
        _emit(json.dumps(cert, indent=2), args.out)
    ok = cert["numeric"]["identity_within_tolerance"] and cert["numeric"]["gosper_pair"]["all_zero"]
    if abel is not None:
        ok = ok and cert["numeric"]["abel_pair"]["all_zero"]
    return EXIT_OK if ok else EXIT_FAILED


def _verify_certificate(path: str, args) -> int:
    try:
        with open(path, encoding="utf-8") as fh:
            cert = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read certificate: {exc}") from None
    if cert.get("schema") != CERT_SCHEMA:
        raise InputError(f"not a {CERT_SCHEMA} certificate")
    rel, pair, abel = relation_from_certificate(cert)
    try:
        validate_gosper_pair(rel, pair)
        if abel is not None:
            validate_abel_pair(rel, abel, pair)
    except PairValidationError as exc:
        print(f"FAIL symbolic: {exc}")
        return EXIT_FAILED
    print("symbolic checks: ok")
    rec = _lookup(cert["identity"])
    ctx = _context(rec, args)
    identity = verify_identity(rec, ctx)
    res = verify_pair_numeric(rel, pair, ctx)
    if abel is not None:
        res += verify_pair_numeric(rel, abel, ctx)
    exact = all(r.exact for r in res)
    within = identity.within(ctx.tolerance)
    print(f"identity {rec.name}: relative gap {float(identity.rel_gap):.3e} ({'ok' if within else 'FAIL'})")
    print(f"pair residuals: {len(res)} checked, {'all zero' if exact else 'NONZERO'}")
    return EXIT_OK if within and exact else EXIT_FAILED


def cmd_verify(args) -> int:
    target = args.target
    if target.endswith(".json"):
        return _verify_certificate(target, args)
    rec = _lookup(target)
    ctx = _context(rec, args)
    identity = verify_identity(rec, ctx)
    within = identity.within(ctx.tolerance)
    print(
        f"{rec.name}: lhs={float(identity.lhs):.15g} rhs={float(identity.rhs):.15g} "
        f"relative gap {float(identity.rel_gap):.3e} ({'ok' if within else 'FAIL'})"
    )
    exact = True
    for it in rec.iterations:
        if it.reduction or not it.has_oracle:
            continue
        rel = build_iteration(rec, it.name)
        res = verify_pair_numeric(rel, cat.oracle_pair(rec, it), ctx)
        abel = cat.oracle_abel(it)
        if abel is not None:
            res += verify_pair_numeric(rel, abel, ctx)
        ok = all(r.exact for r in res)
        exact = exact and ok
        print(f"  {it.name}: {len(res)} pair residuals {'all zero' if ok else 'NONZERO'}")
    return EXIT_OK if within and exact else EXIT_FAILED


def cmd_catalog(args) -> int:
    if args.action == "list":
        for rec in cat.default_catalog().records():
            print(f"{rec.name:10s} {rec.support:10s} {rec.title}")
        return EXIT_OK
    if args.action == "show":
        if not args.name:
            raise InputError("catalog show needs an identity name")
        rec = _lookup(args.name)
        print(f"{rec.name}: {rec.title} ({rec.support})")
        print(f"  summand:     {format_term(rec.summand)}")
        print(f"  closed form: {rec.closed_form}")
        if rec.convergence:
            print("  converges for: " + ", ".join(f"|{c}| < 1" for c in rec.convergence))
        print("  sample: " + ", ".join(f"{k}={v}" for k, v in rec.sample.items()))
        for it in rec.iterations:
            flags = []
            if it.reduction:
                flags.append("reduction")
            if it.symmetrize:
                flags.append("symmetrized")
            if not it.summable:
                flags.append("not summable")
            if it.composed_of:
                flags.append("composed of " + " then ".join(it.composed_of))
            if it.has_oracle:
                flags.append("reference pair")
            print(f"  - {it.name}: {format_substitution(it.substitution)}" + (f" [{'; '.join(flags)}]" if flags else ""))
            if it.multiplier is not None:
                print(f"      multiplier ({it.provenance}): {it.multiplier}")
            if it.notes:
                print(f"      {it.notes}")
        return EXIT_OK
    if args.action == "export":
        _emit(json.dumps(cat.export_catalog(), indent=2), args.out)
        return EXIT_OK
    raise InputError(f"unknown catalog action {args.action!r}")


# ---------------------------------------------------------------------------
# entry point


def _add_numeric(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", help="value of q (default: the identity's sample point)")
    p.add_argument("--set", action="append", metavar="SYM=VAL[,SYM=VAL]", help="override sample parameters")
    p.add_argument("--K", type=int, default=60, help="sum truncation |k| <= K (default 60)")
    p.add_argument("--N", type=int, default=64, help="factors kept per infinite product (default 64)")
    p.add_argument("--tol", default="1/1000000000", help="relative tolerance for truncation gaps")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtel", description="Gosper and Abel pairs for q-series identities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gosper", help="run q-Gosper on a term or a shift ratio")
    p.add_argument("expr", help="term such as 'poch(a)*poch(b)^-1*geom(z)', or a ratio in x with --ratio")
    p.add_argument("--ratio", action="store_true", help="EXPR is the shift ratio t_(k+1)/t_k in x = q^k")
    p.add_argument("--unilateral", action="store_true")
    p.add_argument("--declare", help="extra symbol names, comma separated")
    p.add_argument("--emit", choices=("text", "json"), default="text")
    p.add_argument("--timeout", type=float, help="cancel after this many seconds")
    p.set_defaults(func=cmd_gosper)

    p = sub.add_parser("pair", help="Gosper and Abel pair for a catalog identity")
    p.add_argument("identity")
    p.add_argument("--iterate", required=True, help="registered iteration name or 'sym->expr, ...'")
    p.add_argument("--emit", choices=("json", "latex"), default="json")
    p.add_argument("--out", help="write the certificate here instead of stdout")
    p.add_argument("--limit-K", dest="limit_K", type=int, default=40, help="index for the limit-condition report")
    p.add_argument("--timeout", type=float, help="cancel after this many seconds")
    _add_numeric(p)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("verify", help="numeric check of an identity or a stored certificate")
    p.add_argument("target", help="identity name or certificate .json file")
    _add_numeric(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("catalog", help="list, show or export the identity catalog")
    p.add_argument("action", choices=("list", "show", "export"))
    p.add_argument("name", nargs="?")
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceViolation as exc:
        print(f"convergence violation: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DispersionUndetermined, Cancelled) as exc:
        print(f"undetermined: {exc}", file=sys.stderr)
        return EXIT_UNDETERMINED
    except EvalPole as exc:
        print(f"the sample point hits a pole: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TermSyntaxError, InputError, NotSimilar) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PairValidationError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except QTelescopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
