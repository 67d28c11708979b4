"""Built-in summation identities and a small registry.

Each record carries the summand, the closed form as a ratio of infinite
q-products, convergence constraints, registered iteration substitutions and
the published certificates used as regression oracles.

Square roots: ``ra`` stands for a**(1/2) and the records that need it use
``ra`` only (a = ra**2).  The very-well-poised factor
(q ra, -q ra; q)_k / (ra, -ra; q)_k equals (1 - a q**(2k)) / (1 - a) and is
stored in that rational form, so that a -> a q stays inside the field.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import DuplicateName, MultiplierNotFinite, PairValidationError, QTelescopeError
from .exactalg import DivisionByZero, Factored, ParamElem, RatX, symbol
from .qterm import (
    BILATERAL,
    UNILATERAL,
    QFactorial,
    QTerm,
    canonical,
    mul_rational,
    substitute_params,
    symmetrize,
)
from .syntax import format_term, parse_param, parse_ratx, parse_substitution, parse_term

SCHEMA = "qtelescope.catalog.v1"


# ---------------------------------------------------------------------------
# infinite products


@dataclass(frozen=True)
class InfProduct:
    """prod (arg; q**m)_oo ** exp over the entries (arg, m, exp)."""

    entries: tuple[tuple[ParamElem, int, int], ...] = ()

    @classmethod
    def of(cls, num: Iterable = (), den: Iterable = (), modulus: int = 1) -> "InfProduct":
        ents = [(_pe(u), modulus, 1) for u in num] + [(_pe(u), modulus, -1) for u in den]
        return cls._merged(ents)

    @classmethod
    def _merged(cls, ents) -> "InfProduct":
        acc: dict[tuple[ParamElem, int], int] = {}
        for u, m, e in ents:
            if m < 1:
                raise ValueError("modulus must be a positive integer")
            if u.is_zero():
                continue  # (0; q)_oo = 1
            acc[(u, m)] = acc.get((u, m), 0) + e
        out = [(u, m, e) for (u, m), e in acc.items() if e]
        out.sort(key=lambda t: (t[1], str(t[0]), t[2]))
        return cls(tuple(out))

    def __mul__(self, other: "InfProduct") -> "InfProduct":
        return InfProduct._merged(self.entries + other.entries)

    def inverse(self) -> "InfProduct":
        return InfProduct(tuple((u, m, -e) for u, m, e in self.entries))

    def __truediv__(self, other: "InfProduct") -> "InfProduct":
        return self * other.inverse()

    def substitute(self, mapping: Mapping[str, ParamElem]) -> "InfProduct":
        return InfProduct._merged((u.substitute(mapping), m, e) for u, m, e in self.entries)

    def to_json(self) -> list:
        return [{"arg": str(u), "modulus": m, "exp": e} for u, m, e in self.entries]

    @classmethod
    def from_json(cls, data) -> "InfProduct":
        return cls._merged((parse_param(d["arg"]), int(d.get("modulus", 1)), int(d["exp"])) for d in data)

    def __str__(self):
        if not self.entries:
            return "1"
        parts = []
        for u, m, e in self.entries:
            base = "q" if m == 1 else f"q^{m}"
            s = f"({u};{base})_oo"
            parts.append(s if e == 1 else f"{s}^{e}")
        return " * ".join(parts)


def _pe(v) -> ParamElem:
    if isinstance(v, ParamElem):
        return v
    if isinstance(v, str):
        return parse_param(v)
    return ParamElem(v)


def infprod_ratio_factored(num: InfProduct, den: InfProduct) -> Factored:
    """num/den as a finite product, using (u q**(m j); q**m)_oo = (u; q**m)_oo / (u; q**m)_j."""
    q = symbol("q")
    merged = num / den
    classes: dict[tuple, list[tuple[int, int]]] = {}
    for u, m, e in merged.entries:
        c = u.q_content()
        base = u / q**c
        key = (base, m, c % m)
        classes.setdefault(key, []).append((c // m, e))
    out = Factored(1)
    for (base, m, r), items in classes.items():
        if sum(e for _, e in items):
            raise MultiplierNotFinite(f"products over ({base}*q^{r}; q^{m}) do not cancel")
        j0 = min(j for j, _ in items)
        u0 = base * q ** (r + m * j0)
        for j, e in items:
            for i in range(j - j0):
                fac = 1 - u0 * q ** (m * i)
                if fac.is_zero():
                    raise MultiplierNotFinite("a telescoped factor vanishes")
                out = out * Factored.of(fac) ** (-e)
    return out


def infprod_ratio(num: InfProduct, den: InfProduct) -> ParamElem:
    return infprod_ratio_factored(num, den).expand()


# ---------------------------------------------------------------------------
# series shapes


@dataclass(frozen=True)
class SeriesSpec:
    upper: tuple[ParamElem, ...]
    lower: tuple[ParamElem, ...]
    z: ParamElem
    kind: str = "psi"

    def __post_init__(self):
        if self.kind not in ("phi", "psi"):
            raise ValueError("kind must be 'phi' or 'psi'")


def build_summand(spec: SeriesSpec) -> QTerm:
    r, s = len(spec.upper), len(spec.lower)
    facs = [QFactorial(_pe(u), 1) for u in spec.upper]
    facs += [QFactorial(_pe(v), -1) for v in spec.lower]
    if spec.kind == "phi":
        facs.append(QFactorial(symbol("q"), -1))
        power = 1 + s - r
        support = UNILATERAL
    else:
        power = s - r
        support = BILATERAL
    geom = _pe(spec.z) * ParamElem(-1) ** power
    return canonical(QTerm(ParamElem(1), geom, power, RatX(1), tuple(facs), support))


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class Iteration:
    name: str
    substitution: Mapping[str, ParamElem]
    multiplier: Factored | None = None
    provenance: str = "derived"
    symmetrize: bool = False
    reduction: bool = False
    summable: bool = True
    abel: bool = True
    composed_of: tuple[str, ...] = ()
    stated_multiplier: Factored | None = None
    g: RatX | None = None  # oracle g_k / F_k
    h: RatX | None = None  # oracle h_k / F_k
    A: QTerm | None = None
    B: QTerm | None = None
    abel_scale: ParamElem | None = None  # the Abel pair of F is (abel_scale * A, B)
    notes: str = ""

    @property
    def has_oracle(self) -> bool:
        return self.g is not None


@dataclass(frozen=True)
class IdentityRecord:
    name: str
    title: str
    summand: QTerm
    closed_form: InfProduct
    convergence: tuple[ParamElem, ...] = ()
    iterations: tuple[Iteration, ...] = ()
    sample: Mapping[str, Fraction] = field(default_factory=dict)
    shape: SeriesSpec | None = None
    builtin: bool = False

    @property
    def support(self) -> str:
        return self.summand.support

    def find_iteration(self, key) -> Iteration | None:
        if isinstance(key, str):
            for it in self.iterations:
                if it.name == key:
                    return it
            try:
                key = parse_substitution(key, declare_new=True)
            except QTelescopeError:
                return None
        key = {k: _pe(v) for k, v in key.items()}
        for it in self.iterations:
            if dict(it.substitution) == key:
                return it
        return None

    def summand_for(self, it: Iteration) -> QTerm:
        return symmetrize(self.summand) if it.symmetrize else self.summand

    def multiplier(self, it: Iteration) -> Factored:
        return it.multiplier if it.multiplier is not None else multiplier_for(self, it.substitution)

    def composed_multiplier(self, it: Iteration) -> Factored:
        """Product of the step multipliers named in ``composed_of``, each taken at the
        parameters reached so far; also checks that the steps compose to ``it``."""
        cur: dict[str, ParamElem] = {}
        total = Factored(1)
        for name in it.composed_of:
            step = self.find_iteration(name)
            if step is None:
                raise KeyError(f"{self.name} has no iteration {name!r}")
            total = total * self.multiplier(step).substitute(cur)
            nxt = dict(cur)
            for sym, img in step.substitution.items():
                nxt[sym] = img.substitute(cur)
            cur = nxt
        target = {k: v for k, v in it.substitution.items()}
        got = {k: v for k, v in cur.items() if v != symbol(k)}
        if got != target:
            raise ValueError(f"steps {it.composed_of} compose to {got}, not {target}")
        return total


def multiplier_for(rec: IdentityRecord, substitution: Mapping[str, object]) -> Factored:
    """Sum F / Sum F(substituted), read off the closed form."""
    sub = {k: _pe(v) for k, v in substitution.items()}
    return infprod_ratio_factored(rec.closed_form, rec.closed_form.substitute(sub))


def _resolve(rec: IdentityRecord) -> IdentityRecord:
    """Fill in derived multipliers; fall back to a paper-asserted one if the products do not telescope."""
    its = []
    for it in rec.iterations:
        if it.multiplier is None and not it.reduction:
            try:
                m = multiplier_for(rec, it.substitution)
                it = _replace(it, multiplier=m, provenance="derived")
            except (MultiplierNotFinite, DivisionByZero):
                if it.stated_multiplier is None:
                    raise
                it = _replace(it, multiplier=it.stated_multiplier, provenance="paper-asserted")
        its.append(it)
    return _replace(rec, iterations=tuple(its))


def _replace(obj, **kw):
    from dataclasses import replace

    return replace(obj, **kw)


# ---------------------------------------------------------------------------
# built-in entries


def _P(s: str) -> ParamElem:
    return parse_param(s, declare_new=True)


def _R(s: str) -> RatX:
    return parse_ratx(s, declare_new=True)


def _T(s: str, support: str = BILATERAL) -> QTerm:
    return parse_term(s, support=support, declare_new=True)


def _M(src: str) -> Factored:
    """Factored value of a product/quotient string, without expanding it."""
    if _has_top_level_sum(src):
        return Factored.of(_P(src))
    acc = Factored(1)
    for sign, tok in _top_level_factors(src):
        if tok.startswith("(") and tok.endswith(")") and _balanced(tok[1:-1]):
            f = _M(tok[1:-1])
        else:
            f = Factored.of(_P(tok))
        acc = acc * f if sign > 0 else acc / f
    return acc


def _balanced(src: str) -> bool:
    depth = 0
    for ch in src:
        depth += {"(": 1, ")": -1}.get(ch, 0)
        if depth < 0:
            return False
    return depth == 0


def _has_top_level_sum(src: str) -> bool:
    depth = 0
    for i, ch in enumerate(src):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "+-" and depth == 0 and src[:i].strip() and src[:i].rstrip()[-1] not in "^*/(":
            return True
    return False


def _top_level_factors(src: str) -> list[tuple[int, str]]:
    out, depth, start, sign = [], 0, 0, 1
    for i, ch in enumerate(src):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "*/" and depth == 0:
            out.append((sign, src[start:i].strip()))
            sign = 1 if ch == "*" else -1
            start = i + 1
    out.append((sign, src[start:].strip()))
    return out


def _sample(**kw) -> dict[str, Fraction]:
    return {k: Fraction(v) for k, v in kw.items()}


def _sub(s: str) -> dict[str, ParamElem]:
    return parse_substitution(s, declare_new=True)


def _1psi1() -> IdentityRecord:
    F = build_summand(SeriesSpec((_P("a"),), (_P("b"),), _P("z")))
    return IdentityRecord(
        "1psi1",
        "Ramanujan's 1psi1 sum",
        F,
        InfProduct.of(["q", "b/a", "a*z", "q/(a*z)"], ["b", "q/a", "z", "b/(a*z)"]),
        (_P("z"), _P("b/(a*z)")),
        (
            Iteration(
                "b->b*q",
                _sub("b->b*q"),
                stated_multiplier=_M("(1-b/a)/((1-b)*(1-b/(a*z)))"),
                g=_R("a*z/(a*z-b)"),
                h=_R("b/(a*z-b)"),
                A=_T("const(a*z/(a*z-b))*poch(a)*poch(b)^-1*geom(b/a)"),
                B=_T("geom(a*z/b)"),
            ),
            Iteration(
                "reduce-b0",
                {},
                reduction=True,
                notes=(
                    "iterating b->b*q indefinitely reduces the sum to b = 0: "
                    "f(a,b,z) = (b/a)_oo/(b, b/(a z))_oo f(a,0,z); at b = q the bilateral "
                    "sum truncates to the q-binomial series"
                ),
            ),
        ),
        _sample(q="1/2", a="7/3", b="1/5", z="2/5"),
        SeriesSpec((_P("a"),), (_P("b"),), _P("z")),
    )


def _2psi2() -> IdentityRecord:
    shape = SeriesSpec((_P("b"), _P("c")), (_P("a*q/b"), _P("a*q/c")), _P("-a*q/(b*c)"))
    F = build_summand(shape)
    cf = InfProduct.of(["a*q/(b*c)"], ["a*q/b", "a*q/c", "q/b", "q/c", "-a*q/(b*c)"]) * InfProduct.of(
        ["a*q^2/b^2", "a*q^2/c^2", "q^2", "a*q", "q/a"], modulus=2
    )
    return IdentityRecord(
        "2psi2",
        "well-poised 2psi2 sum",
        F,
        cf,
        (_P("a*q/(b*c)"),),
        (
            Iteration(
                "b->b/q",
                _sub("b->b/q"),
                stated_multiplier=_M("(1-a*q/(b*c))*(1-a*q^2/b^2)/((1+a*q/(b*c))*(1-q/b)*(1-a*q/b))"),
                g=_R("(b^2*c*x-a*q^2)/((a*q+b*c)*(b*x-q))"),
                h=_R("b*q*(c-a*x)/((a*q+b*c)*(b*x-q))"),
                A=_T(
                    "pre((b^2*c*x-a*q^2)/((a*q+b*c)*(b*x-q)))*poch(b)*poch(c)*poch(a*q/b)^-1*poch(b^2*c/(a*q))^-1"
                ),
                B=_T("poch(b^2*c/(a*q))*poch(a*q/c)^-1*geom(-a*q/(b*c))"),
            ),
            Iteration(
                "b,c->/q",
                _sub("b->b/q, c->c/q"),
                composed_of=("b->b/q", "c->c/q"),
                abel=False,
                stated_multiplier=_M(
                    "(1-a*q/(b*c))*(1-a*q^2/(b*c))*(1-a*q^2/b^2)*(1-a*q^2/c^2)"
                    "/((1+a*q/(b*c))*(1+a*q^2/(b*c))*(1-q/b)*(1-q/c)*(1-a*q/b)*(1-a*q/c))"
                ),
            ),
            Iteration("c->c/q", _sub("c->c/q"), notes="mirror of b->b/q"),
        ),
        _sample(q="1/2", a="2/3", b="7/5", c="9/4"),
        shape,
    )


def _3psi3() -> IdentityRecord:
    shape = SeriesSpec((_P("b"), _P("c"), _P("d")), (_P("q/b"), _P("q/c"), _P("q/d")), _P("q/(b*c*d)"))
    F = build_summand(shape)
    return IdentityRecord(
        "3psi3",
        "Bailey's well-poised 3psi3 sum",
        F,
        InfProduct.of(["q", "q/(b*c)", "q/(b*d)", "q/(c*d)"], ["q/b", "q/c", "q/d", "q/(b*c*d)"]),
        (_P("q/(b*c*d)"),),
        (
            Iteration(
                "d->d/q",
                _sub("d->d/q"),
                summable=False,
                stated_multiplier=_M("(1-q/(b*d))*(1-q/(c*d))/((1-q/d)*(1-q/(b*c*d)))"),
                notes="q-Gosper fails on the raw summand; use the symmetrized variant",
            ),
            Iteration(
                "sym:d->d/q",
                _sub("d->d/q"),
                symmetrize=True,
                abel=False,
                stated_multiplier=_M("(1-q/(b*d))*(1-q/(c*d))/((1-q/d)*(1-q/(b*c*d)))"),
                g=_R(
                    "(b*d*q*x+c*d*q*x-b*c*d^2*x-q^2+d*q*x+b*c*d*q*x-b*c*d^2*x^2-q^2*x)"
                    "/((1+x)*(b*c*d-q)*(q-d*x))"
                ),
                h=_R("d*(b-x)*(c-x)/((1+x)*(q-b*c*d)*(1-d*x/q))"),
                notes="summand replaced by the average of t_k and t_{-k}",
            ),
            Iteration(
                "b,c,d->/q",
                _sub("b->b/q, c->c/q, d->d/q"),
                summable=False,
                composed_of=("d->d/q", "c->c/q", "b->b/q"),
                stated_multiplier=_M(
                    "(1-q/(b*c))*(1-q^2/(b*c))*(1-q/(b*d))*(1-q^2/(b*d))*(1-q/(c*d))*(1-q^2/(c*d))"
                    "/((1-q/b)*(1-q/c)*(1-q/d)*(1-q/(b*c*d))*(1-q^2/(b*c*d))*(1-q^3/(b*c*d)))"
                ),
            ),
            Iteration("c->c/q", _sub("c->c/q"), summable=False, notes="mirror of d->d/q"),
            Iteration("b->b/q", _sub("b->b/q"), summable=False, notes="mirror of d->d/q"),
        ),
        _sample(q="1/2", b="5/3", c="7/4", d="9/5"),
        shape,
    )


def _4psi4() -> IdentityRecord:
    # a = ra^2 throughout
    shape = SeriesSpec(
        (_P("-q*ra"), _P("b"), _P("c"), _P("d")),
        (_P("-ra"), _P("ra^2*q/b"), _P("ra^2*q/c"), _P("ra^2*q/d")),
        _P("q*ra^3/(b*c*d)"),
    )
    F = build_summand(shape)
    a = "ra^2"
    cf = InfProduct.of(
        [f"{a}*q", f"{a}*q/(b*c)", f"{a}*q/(b*d)", f"{a}*q/(c*d)", "q*ra/b", "q*ra/c", "q*ra/d", "q", f"q/{a}"],
        [f"{a}*q/b", f"{a}*q/c", f"{a}*q/d", "q/b", "q/c", "q/d", "q*ra", "q/ra", "q*ra^3/(b*c*d)"],
    )
    return IdentityRecord(
        "4psi4",
        "bilateral q-Dixon 4psi4 sum (ra = a^(1/2))",
        F,
        cf,
        (_P("q*ra^3/(b*c*d)"),),
        (
            Iteration(
                "d->d/q",
                _sub("d->d/q"),
                abel=False,
                stated_multiplier=_M(
                    f"(1-{a}*q/(b*d))*(1-{a}*q/(c*d))*(1-q*ra/d)/((1-{a}*q/d)*(1-q/d)*(1-q*ra^3/(b*c*d)))"
                ),
                g=_R(
                    "(-ra^2*b*d*q*x-ra^2*c*d*q*x+q^2*ra^3+ra^4*q^2*x-b*c*d*ra*q*x-d*ra^3*q*x"
                    "+b*c*d^2*x+b*c*d^2*ra*x^2)/((d*x-q)*(1+ra*x)*(b*c*d-ra^3*q))"
                ),
                h=_R("d*(ra^2*x-c)*(ra^2*x-b)/((d*x/q-1)*(1+ra*x)*(b*c*d-q*ra^3))"),
            ),
            Iteration(
                "b,c,d->/q",
                _sub("b->b/q, c->c/q, d->d/q"),
                composed_of=("d->d/q", "c->c/q", "b->b/q"),
                abel=False,
                stated_multiplier=_M(
                    f"(1-{a}*q/(b*c))*(1-{a}*q^2/(b*c))*(1-{a}*q/(b*d))*(1-{a}*q^2/(b*d))"
                    f"*(1-{a}*q/(c*d))*(1-{a}*q^2/(c*d))*(1-q*ra/b)*(1-q*ra/c)*(1-q*ra/d)"
                    f"/((1-{a}*q/b)*(1-{a}*q/c)*(1-{a}*q/d)*(1-q/b)*(1-q/c)*(1-q/d)"
                    "*(1-q*ra^3/(b*c*d))*(1-q^2*ra^3/(b*c*d))*(1-q^3*ra^3/(b*c*d)))"
                ),
            ),
            Iteration("c->c/q", _sub("c->c/q"), abel=False, notes="mirror of d->d/q"),
            Iteration("b->b/q", _sub("b->b/q"), abel=False, notes="mirror of d->d/q"),
        ),
        _sample(q="1/2", ra="2/3", b="5/3", c="7/4", d="9/5"),
        shape,
    )


_VWP = "(1-a*x^2)/(1-a)"


def _6psi6() -> IdentityRecord:
    shape = SeriesSpec(
        (_P("b"), _P("c"), _P("d"), _P("e")),
        (_P("a*q/b"), _P("a*q/c"), _P("a*q/d"), _P("a*q/e")),
        _P("q*a^2/(b*c*d*e)"),
    )
    F = mul_rational(build_summand(shape), _R(_VWP))
    cf = InfProduct.of(
        ["q", "a*q", "q/a", "a*q/(b*c)", "a*q/(b*d)", "a*q/(b*e)", "a*q/(c*d)", "a*q/(c*e)", "a*q/(d*e)"],
        ["a*q/b", "a*q/c", "a*q/d", "a*q/e", "q/b", "q/c", "q/d", "q/e", "q*a^2/(b*c*d*e)"],
    )
    return IdentityRecord(
        "6psi6",
        "Bailey's very-well-poised 6psi6 sum",
        F,
        cf,
        (_P("q*a^2/(b*c*d*e)"),),
        (
            Iteration(
                "chu",
                _sub("a->a*q, e->e*q"),
                stated_multiplier=_M(
                    "a*(1-e)*(1-a*q)*(1-a*q/(b*c))*(1-a*q/(b*d))*(1-a*q/(c*d))"
                    "/(e*(1-a)*(1-a*q/b)*(1-a*q/c)*(1-a*q/d)*(1-a^2*q/(b*c*d*e)))"
                ),
                g=_R("a*(b*c*d*x-a*q)*(1-e*x)/((b*c*d*e-a^2*q)*(1-a*x^2))"),
                h=_R("(e-a*x)*(b*c*d-a^2*q*x)/((b*c*d*e-a^2*q)*(a*x^2-1))"),
                A=_T("poch(b)*poch(c)*poch(d)*poch(q^2*a^2/(b*c*d))*poch(a*q/b)^-1*poch(a*q/c)^-1"
                     "*poch(a*q/d)^-1*poch(b*c*d/(a*q))^-1"),
                B=_T("poch(q*e)*poch(b*c*d/a)*poch(a*q/e)^-1*poch(q^2*a^2/(b*c*d))^-1*geom(q*a^2/(b*c*d*e))"),
                abel_scale=_P("a*(1-e)*(b*c*d-a*q)/((1-a)*(b*c*d*e-a^2*q))"),
                notes="simultaneous a->aq, e->eq; Chu's Abel pair telescopes F up to a constant factor",
            ),
            Iteration(
                "e->e/q",
                _sub("e->e/q"),
                abel=False,
                stated_multiplier=_M(
                    "(1-a*q/(b*e))*(1-a*q/(c*e))*(1-a*q/(d*e))/((1-a*q/e)*(1-q/e)*(1-a^2*q/(b*c*d*e)))"
                ),
                g=_R(
                    "(a*b*c*e*q*x+a*b*d*e*q*x-a^2*b*e*q*x^2+a*c*d*e*q*x-a^2*c*e*q*x^2-a^2*d*e*q*x^2"
                    "-b*c*d*e^2*x+a*b*c*d*e^2*x^3-a*b*c*d*e*q*x^2-a^2*q^2+a^2*e*q*x+a^3*q^2*x^2)"
                    "/((b*c*d*e-q*a^2)*(e*x-q)*(a*x^2-1))"
                ),
                h=_R("q*e*(b-a*x)*(c-a*x)*(d-a*x)/((b*c*d*e-q*a^2)*(1-a*x^2)*(e*x-q))"),
            ),
            Iteration(
                "b,c,d,e->/q",
                _sub("b->b/q, c->c/q, d->d/q, e->e/q"),
                composed_of=("e->e/q", "d->d/q", "c->c/q", "b->b/q"),
                abel=False,
                stated_multiplier=_M(
                    "(1-a*q/(b*c))*(1-a*q^2/(b*c))*(1-a*q/(b*d))*(1-a*q^2/(b*d))"
                    "*(1-a*q/(b*e))*(1-a*q^2/(b*e))*(1-a*q/(c*d))*(1-a*q^2/(c*d))"
                    "*(1-a*q/(c*e))*(1-a*q^2/(c*e))*(1-a*q/(d*e))*(1-a*q^2/(d*e))"
                    "/((1-a*q/b)*(1-a*q/c)*(1-a*q/d)*(1-a*q/e)*(1-q/b)*(1-q/c)*(1-q/d)*(1-q/e)"
                    "*(1-a^2*q/(b*c*d*e))*(1-a^2*q^2/(b*c*d*e))*(1-a^2*q^3/(b*c*d*e))*(1-a^2*q^4/(b*c*d*e)))"
                ),
            ),
            Iteration(
                "chu4",
                _sub("a->a*q^4, b->b*q, c->c*q, d->d*q, e->e*q"),
                composed_of=("chu", "chu-d", "chu-c", "chu-b"),
                abel=False,
                stated_multiplier=_M(
                    "a^4*q^6/(b*c*d*e)*(1-a*q^4)/(1-a)*(1-b)*(1-c)*(1-d)*(1-e)"
                    "/((1-a^2*q/(b*c*d*e))*(1-a^2*q^2/(b*c*d*e))*(1-a^2*q^3/(b*c*d*e))*(1-a^2*q^4/(b*c*d*e)))"
                    "*(1-a*q/(b*c))*(1-a*q^2/(b*c))*(1-a*q/(b*d))*(1-a*q^2/(b*d))"
                    "*(1-a*q/(b*e))*(1-a*q^2/(b*e))*(1-a*q/(c*d))*(1-a*q^2/(c*d))"
                    "*(1-a*q/(c*e))*(1-a*q^2/(c*e))*(1-a*q/(d*e))*(1-a*q^2/(d*e))"
                    "/((1-a*q/b)*(1-a*q^2/b)*(1-a*q^3/b)*(1-a*q/c)*(1-a*q^2/c)*(1-a*q^3/c)"
                    "*(1-a*q/d)*(1-a*q^2/d)*(1-a*q^3/d)*(1-a*q/e)*(1-a*q^2/e)*(1-a*q^3/e))"
                ),
                notes="Chu's step applied with e, d, c, b in turn",
            ),
            Iteration("chu-d", _sub("a->a*q, d->d*q"), notes="Chu's step with d in place of e"),
            Iteration("chu-c", _sub("a->a*q, c->c*q"), notes="Chu's step with c in place of e"),
            Iteration("chu-b", _sub("a->a*q, b->b*q"), notes="Chu's step with b in place of e"),
            Iteration("d->d/q", _sub("d->d/q"), abel=False, notes="mirror of e->e/q"),
            Iteration("c->c/q", _sub("c->c/q"), abel=False, notes="mirror of e->e/q"),
            Iteration("b->b/q", _sub("b->b/q"), abel=False, notes="mirror of e->e/q"),
        ),
        _sample(q="1/2", a="2/3", b="5/3", c="7/4", d="9/5", e="11/6"),
        shape,
    )


def _binomial() -> IdentityRecord:
    shape = SeriesSpec((_P("a"),), (), _P("z"), "phi")
    return IdentityRecord(
        "binomial",
        "q-binomial theorem",
        build_summand(shape),
        InfProduct.of(["a*z"], ["z"]),
        (_P("z"),),
        (
            Iteration("z->z*q", _sub("z->z*q")),
            Iteration("a->a*q", _sub("a->a*q")),
        ),
        _sample(q="1/2", a="3/7", z="2/5"),
        shape,
    )


def _jacobi() -> IdentityRecord:
    F = _T("qquad(2)*geom(q*z)")
    return IdentityRecord(
        "jacobi",
        "Jacobi triple product",
        F,
        InfProduct.of(["q^2", "-q*z", "-q/z"], modulus=2),
        (),
        (
            Iteration(
                "z->z*q^2",
                _sub("z->z*q^2"),
                abel=False,
                notes="G is F shifted by one index, so g vanishes and no Abel pair exists",
            ),
        ),
        _sample(q="1/2", z="3/5"),
    )


def _2phi1() -> IdentityRecord:
    shape = SeriesSpec((_P("a"), _P("b")), (_P("c"),), _P("c/(a*b)"), "phi")
    return IdentityRecord(
        "2phi1",
        "q-Gauss sum",
        build_summand(shape),
        InfProduct.of(["c/a", "c/b"], ["c", "c/(a*b)"]),
        (_P("c/(a*b)"),),
        (
            Iteration(
                "c->c*q",
                _sub("c->c*q"),
                stated_multiplier=_M("(1-c/a)*(1-c/b)/((1-c)*(1-c/(a*b)))"),
                g=_R("(c-a*b*x)/(c-a*b)"),
                h=_R("a*b*(1-x)/(c-a*b)"),
                A=_T("pre((1-a*b*x/c)/(1-a*b/c))*poch(a)*poch(b)*poch(c)^-1*poch(a*b*q/c)^-1", UNILATERAL),
                B=_T("poch(a*b*q/c)*poch(q)^-1*geom(c/(a*b))", UNILATERAL),
            ),
        ),
        _sample(q="1/2", a="7/3", b="11/4", c="5/3"),
        shape,
    )


def _6phi5() -> IdentityRecord:
    shape = SeriesSpec(
        (_P("a"), _P("b"), _P("c"), _P("d")),
        (_P("a*q/b"), _P("a*q/c"), _P("a*q/d")),
        _P("a*q/(b*c*d)"),
        "phi",
    )
    F = mul_rational(build_summand(shape), _R(_VWP))
    return IdentityRecord(
        "6phi5",
        "Rogers' very-well-poised 6phi5 sum",
        F,
        InfProduct.of(["a*q", "a*q/(b*c)", "a*q/(b*d)", "a*q/(c*d)"], ["a*q/b", "a*q/c", "a*q/d", "a*q/(b*c*d)"]),
        (_P("a*q/(b*c*d)"),),
        (
            Iteration(
                "a->a*q",
                _sub("a->a*q"),
                stated_multiplier=_M(
                    "(1-a*q)*(1-a*q/(c*d))*(1-a*q/(b*c))*(1-a*q/(b*d))"
                    "/((1-a*q/b)*(1-a*q/c)*(1-a*q/d)*(1-a*q/(b*c*d)))"
                ),
                g=_R("(1-a*x)*(x-a*q/(b*c*d))/((1-a*x^2)*(1-a*q/(b*c*d)))"),
                h=_R("-(1-x)*(1-a^2*q*x/(b*c*d))/((1-a*x^2)*(1-a*q/(b*c*d)))"),
                A=_T(
                    "pre((b*c*d*x-a*q)/(b*c*d-a*q))*poch(b)*poch(c)*poch(d)*poch(a^2*q^2/(b*c*d))"
                    "*poch(a*q/b)^-1*poch(a*q/c)^-1*poch(a*q/d)^-1*poch(b*c*d/a)^-1",
                    UNILATERAL,
                ),
                B=_T(
                    "poch(a*q)*poch(b*c*d/a)*poch(q)^-1*poch(a^2*q^2/(b*c*d))^-1*geom(a*q/(b*c*d))",
                    UNILATERAL,
                ),
            ),
        ),
        _sample(q="1/2", a="2/3", b="5/3", c="7/4", d="9/5"),
        shape,
    )


def _H() -> IdentityRecord:
    # (-q ra; q)_k / (-ra; q)_k q^{3 C(k,2)} (-q ra^3)^k
    F = _T("poch(-q*ra)*poch(-ra)^-1*qquad(3)*geom(-q*ra^3)")
    return IdentityRecord(
        "H",
        "auxiliary bilateral series H(a) of the 4psi4 reduction (ra = a^(1/2))",
        F,
        InfProduct.of(["q", "ra^2*q", "q/ra^2"], ["q*ra", "q/ra"]),
        (),
        (),
        _sample(q="1/2", ra="2/3"),
    )


# ---------------------------------------------------------------------------
# registry


class Catalog:
    """Name -> record map; built-ins are fixed, user records may be added."""

    def __init__(self):
        self._records: dict[str, IdentityRecord] = {}
        self._lock = threading.Lock()

    def lookup(self, name: str) -> IdentityRecord:
        try:
            return self._records[name]
        except KeyError:
            raise KeyError(f"unknown identity {name!r}; known: {', '.join(self.names())}") from None

    def names(self) -> list[str]:
        return list(self._records)

    def records(self) -> list[IdentityRecord]:
        return list(self._records.values())

    def register(self, rec: IdentityRecord, validate: bool = True) -> IdentityRecord:
        rec = _resolve(rec)
        if validate:
            validate_record(rec)
        with self._lock:
            if rec.name in self._records:
                raise DuplicateName(f"identity {rec.name!r} is already registered")
            self._records[rec.name] = rec
        return rec


def validate_record(rec: IdentityRecord) -> None:
    """Check every stored oracle pair against its iteration relation."""
    from .pairsynth import AbelPair, GosperPair, make_iteration, validate_abel_pair, validate_gosper_pair

    for it in rec.iterations:
        if it.reduction or not it.has_oracle:
            continue
        F = rec.summand_for(it)
        rel = make_iteration(F, it.substitution, rec.multiplier(it), rec.support)
        pair = oracle_pair(rec, it)
        validate_gosper_pair(rel, pair)
        if it.A is not None:
            validate_abel_pair(rel, oracle_abel(it), pair)


def oracle_pair(rec: IdentityRecord, it: Iteration):
    from .pairsynth import GosperPair

    F = rec.summand_for(it)
    return GosperPair(mul_rational(F, it.g), mul_rational(F, it.h))


def oracle_abel(it: Iteration):
    """The stored Abel pair, rescaled so that it telescopes F itself."""
    from .pairsynth import AbelPair

    if it.A is None:
        return None
    A = it.A if it.abel_scale is None else it.A * it.abel_scale
    return AbelPair(A, it.B)


_BUILTINS = (_1psi1, _2psi2, _3psi3, _4psi4, _6psi6, _binomial, _jacobi, _2phi1, _6phi5, _H)
_default: Catalog | None = None
_default_lock = threading.Lock()


def default_catalog() -> Catalog:
    global _default
    with _default_lock:
        if _default is None:
            cat = Catalog()
            for make in _BUILTINS:
                rec = _replace(make(), builtin=True)
                # oracles are checked by the test suite; skip here to keep start-up fast
                cat.register(rec, validate=False)
            for path in _env_catalogs():
                for rec in load_records(path):
                    cat.register(rec)
            _default = cat
        return _default


def _env_catalogs() -> list[str]:
    raw = os.environ.get("QTEL_CATALOG", "")
    return [p for p in raw.split(os.pathsep) if p]


def lookup(name: str) -> IdentityRecord:
    return default_catalog().lookup(name)


def list_identities() -> list[str]:
    return default_catalog().names()


def register(rec: IdentityRecord) -> IdentityRecord:
    return default_catalog().register(rec)


# ---------------------------------------------------------------------------
# JSON


def record_to_json(rec: IdentityRecord) -> dict:
    its = []
    for it in rec.iterations:
        d = {
            "name": it.name,
            "substitution": {k: str(v) for k, v in it.substitution.items()},
            "provenance": it.provenance,
        }
        if it.multiplier is not None:
            d["multiplier"] = str(it.multiplier)
        for flag in ("symmetrize", "reduction"):
            if getattr(it, flag):
                d[flag] = True
        if not it.summable:
            d["summable"] = False
        if not it.abel:
            d["abel"] = False
        if it.composed_of:
            d["composed_of"] = list(it.composed_of)
        if it.g is not None:
            d["g_over_F"] = str(it.g)
            d["h_over_F"] = str(it.h)
        if it.A is not None:
            d["A"] = format_term(it.A)
            d["B"] = format_term(it.B)
        if it.abel_scale is not None:
            d["abel_scale"] = str(it.abel_scale)
        if it.notes:
            d["notes"] = it.notes
        its.append(d)
    return {
        "name": rec.name,
        "title": rec.title,
        "support": rec.support,
        "summand": format_term(rec.summand),
        "closed_form": rec.closed_form.to_json(),
        "convergence": [str(c) for c in rec.convergence],
        "iterations": its,
        "sample": {k: str(v) for k, v in rec.sample.items()},
    }


def record_from_json(d: Mapping) -> IdentityRecord:
    support = d.get("support", BILATERAL)
    its = []
    for it in d.get("iterations", []):
        A = B = None
        if "A" in it:
            A = parse_term(it["A"], support=support, declare_new=True)
            B = parse_term(it["B"], support=support, declare_new=True)
        its.append(
            Iteration(
                it["name"],
                {k: parse_param(v) for k, v in it.get("substitution", {}).items()},
                multiplier=_M(it["multiplier"]) if "multiplier" in it else None,
                provenance=it.get("provenance", "derived"),
                symmetrize=bool(it.get("symmetrize", False)),
                reduction=bool(it.get("reduction", False)),
                summable=bool(it.get("summable", True)),
                abel=bool(it.get("abel", True)),
                composed_of=tuple(it.get("composed_of", ())),
                g=parse_ratx(it["g_over_F"]) if "g_over_F" in it else None,
                h=parse_ratx(it["h_over_F"]) if "h_over_F" in it else None,
                A=A,
                B=B,
                abel_scale=parse_param(it["abel_scale"]) if "abel_scale" in it else None,
                notes=it.get("notes", ""),
            )
        )
    return IdentityRecord(
        d["name"],
        d.get("title", d["name"]),
        parse_term(d["summand"], support=support, declare_new=True),
        InfProduct.from_json(d.get("closed_form", [])),
        tuple(parse_param(c) for c in d.get("convergence", [])),
        tuple(its),
        {k: Fraction(v) for k, v in d.get("sample", {}).items()},
    )


def export_catalog(cat: Catalog | None = None) -> dict:
    cat = cat or default_catalog()
    return {"schema": SCHEMA, "identities": [record_to_json(r) for r in cat.records()]}


def load_records(path: str) -> list[IdentityRecord]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "identities" in data:
        items = data["identities"]
    elif isinstance(data, list):
        items = data
    else:
        items = [data]
    return [record_from_json(d) for d in items]


__all__ = [
    "SCHEMA",
    "InfProduct",
    "infprod_ratio",
    "SeriesSpec",
    "build_summand",
    "Iteration",
    "IdentityRecord",
    "multiplier_for",
    "Catalog",
    "validate_record",
    "oracle_pair",
    "oracle_abel",
    "default_catalog",
    "lookup",
    "list_identities",
    "register",
    "record_to_json",
    "record_from_json",
    "export_catalog",
    "load_records",
]
