"""Basic hypergeometric terms in canonical form.

A term is

    t_k = coeff * geom**k * q**(qquad*k*(k-1)/2) * pre(q**k) * prod (u_i; q)_k**e_i

Canonical form (enforced by :func:`canonical`, which every operation here
returns through):

* q-shifted factorials whose arguments differ by an integer power of q are
  merged into one factorial on a fixed representative ``u0`` of their
  q-class (``u0`` has q-content zero; the class of pure q-powers uses ``q``),
  the finite leftover products going into ``pre``;
* x-powers are stripped from ``pre`` into ``geom``;
* ``pre`` is normalised to ``pre(0) = 1`` with the constant moved to
  ``coeff``.

Under these rules two terms are equal as functions of k (for generic
parameters) exactly when their canonical forms are equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Mapping

from .errors import (
    DivisionByZero,
    EvalPole,
    InvalidSubstitution,
    NotFactorable,
    NotSimilar,
    NotReconstructible,
    NotSymmetrizable,
    UnsupportedNegativeK,
)
from .exactalg import ParamElem, RatX, X, factor_ratx, product, substitute_x, symbol, _split_x, SYMBOLS

BILATERAL = "bilateral"
UNILATERAL = "unilateral"


@dataclass(frozen=True)
class QFactorial:
    arg: ParamElem
    exp: int

    def __post_init__(self):
        if self.arg.is_zero():
            raise ValueError("q-factorial argument must be nonzero")
        if self.exp == 0:
            raise ValueError("q-factorial exponent must be nonzero")


@dataclass(frozen=True)
class TermValueDomain:
    support: str = BILATERAL

    def __post_init__(self):
        if self.support not in (BILATERAL, UNILATERAL):
            raise ValueError(f"unknown support {self.support!r}")


def _one() -> ParamElem:
    return ParamElem(1)


@dataclass(frozen=True)
class QTerm:
    coeff: ParamElem = dc_field(default_factory=_one)
    geom: ParamElem = dc_field(default_factory=_one)
    qquad: int = 0
    pre: RatX = dc_field(default_factory=lambda: RatX(1))
    factors: tuple[QFactorial, ...] = ()
    support: str = BILATERAL
    zero: bool = False

    @classmethod
    def make(
        cls,
        coeff=1,
        geom=1,
        qquad: int = 0,
        pre=1,
        factors=(),
        support: str = BILATERAL,
    ) -> "QTerm":
        facs = tuple(f if isinstance(f, QFactorial) else QFactorial(_pe(f[0]), int(f[1])) for f in factors)
        raw = cls(_pe(coeff), _pe(geom), int(qquad), _rx(pre), facs, support)
        return canonical(raw)

    @classmethod
    def zero_term(cls, support: str = BILATERAL) -> "QTerm":
        return cls(support=support, zero=True)

    def is_zero(self) -> bool:
        return self.zero

    # arithmetic sugar; every result is canonical
    def __mul__(self, other):
        if isinstance(other, QTerm):
            return mul_terms(self, other)
        if isinstance(other, RatX):
            return mul_rational(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, QTerm):
            return div_terms(self, other)
        return scale(self, 1 / _pe(other)) if not isinstance(other, RatX) else mul_rational(self, 1 / other)

    def __neg__(self):
        return scale(self, -1)

    def __sub__(self, other: "QTerm"):
        return combine_similar(self, other)

    def __add__(self, other: "QTerm"):
        return combine_similar(self, -other)

    def __str__(self):
        from .syntax import format_term

        return format_term(self)


def _pe(v) -> ParamElem:
    if isinstance(v, ParamElem):
        return v
    if isinstance(v, RatX):
        return v.as_param()
    return ParamElem(v)


def _rx(v) -> RatX:
    return v if isinstance(v, RatX) else RatX(v)


# ---------------------------------------------------------------------------
# canonical form


def _q() -> ParamElem:
    return symbol("q")


def _class_of(arg: ParamElem):
    """Return (class key, offset j, representative offset) with arg = key*q**j."""
    j = arg.q_content()
    base = arg / _q() ** j
    if base.is_one():
        if j <= 0:
            # (q^j; q)_k with j <= 0 terminates; it is never merged
            return ("fixed", arg), 0, 0
        return ("q", base), j, 1
    return ("u", base), j, 0


def _shift_product(u: ParamElem, j: int) -> RatX:
    """(u*q**j; q)_k / (u; q)_k as a rational function of x = q**k."""
    x = X()
    q = _q()
    out = RatX(1)
    if j >= 0:
        for i in range(j):
            c = u * q**i
            out = out * (1 - c * x) / (1 - c)
    else:
        for i in range(j, 0):
            c = u * q**i
            out = out * (1 - c) / (1 - c * x)
    return out


def _x_valuation(p) -> int:
    return min(m[1] for m in p.itermonoms())


def canonical(t: QTerm) -> QTerm:
    if t.zero or t.coeff.is_zero() or t.pre.is_zero():
        return QTerm(support=t.support, zero=True)
    if t.geom.is_zero():
        raise ValueError("geometric ratio must be nonzero")
    coeff, geom, pre = t.coeff, t.geom, t.pre
    classes: dict[tuple, list[tuple[int, int]]] = {}
    bases: dict[tuple, ParamElem] = {}
    reps: dict[tuple, int] = {}
    for f in t.factors:
        key, off, rep = _class_of(f.arg)
        classes.setdefault(key, []).append((off, f.exp))
        bases[key] = key[1]
        reps[key] = rep
    q = _q()
    factors = []
    for key, entries in classes.items():
        base, rep = bases[key], reps[key]
        u0 = base * q**rep
        net = 0
        for off, e in entries:
            net += e
            if off != rep:
                pre = pre * _shift_product(u0, off - rep) ** e
        if net:
            factors.append(QFactorial(u0, net))
    if pre.is_zero():
        return QTerm(support=t.support, zero=True)
    fe = pre.frac
    shift = _x_valuation(fe.numer) - _x_valuation(fe.denom)
    x = X()
    if shift:
        geom = geom * q**shift
        pre = pre / x**shift
        fe = pre.frac
    field = SYMBOLS.field
    c_num = _split_x(fe.numer)[0]
    c_den = _split_x(fe.denom)[0]
    ratio = ParamElem._from_frac(field(c_num) / field(c_den))
    pre = pre / ratio
    coeff = coeff * ratio
    factors.sort(key=lambda f: (str(f.arg), f.exp))
    return QTerm(coeff, geom, t.qquad, pre, tuple(factors), t.support, False)


# ---------------------------------------------------------------------------
# ratio and evaluation


def ratio(t: QTerm) -> RatX:
    """t_{k+1}/t_k as a rational function of x = q**k."""
    if t.zero:
        raise ValueError("the zero term has no shift ratio")
    x = X()
    q = _q()
    items = [(RatX(t.geom), 1), (x, t.qquad), (substitute_x(t.pre, q), 1), (t.pre, -1)]
    items += [(1 - f.arg * x, f.exp) for f in t.factors]
    return product(items, RatX)


def _poch_parts(u: Fraction, qv: Fraction, k: int) -> tuple[Fraction, bool]:
    """(u;q)_k as (value, inverted): for k < 0 the product returned is the reciprocal."""
    if k >= 0:
        p = Fraction(1)
        for i in range(k):
            p *= 1 - u * qv**i
        return p, False
    p = Fraction(1)
    for i in range(1, -k + 1):
        p *= 1 - u * qv ** (-i)
    return p, True


def eval_term(t: QTerm, k: int, ctx: Mapping[str, Fraction], extend: bool = False) -> Fraction:
    """Exact value of t_k at a rational parameter point.

    ``ctx`` maps symbol names (including ``q``) to rationals.  Unilateral
    terms refuse negative k unless ``extend`` asks for the formula value.
    """
    if k < 0 and t.support == UNILATERAL and not extend:
        raise UnsupportedNegativeK(f"unilateral term evaluated at k={k}")
    if t.zero:
        return Fraction(0)
    qv = Fraction(ctx["q"])
    xv = qv**k
    try:
        val = t.coeff.evaluate(ctx)
        g = t.geom.evaluate(ctx)
        p = t.pre.evaluate(ctx, xv)
    except EvalPole:
        raise EvalPole(k=k) from None
    if g == 0 and k < 0:
        raise EvalPole("geometric factor vanishes", k=k)
    val *= g**k * p
    if t.qquad:
        val *= qv ** (t.qquad * k * (k - 1) // 2)
    for f in t.factors:
        try:
            u = f.arg.evaluate(ctx)
        except EvalPole:
            raise EvalPole(k=k) from None
        prod, inverted = _poch_parts(u, qv, k)
        e = -f.exp if inverted else f.exp
        if prod == 0 and e < 0:
            raise EvalPole(f"q-factorial ({f.arg};q)_{k} vanishes in a denominator", k=k)
        val *= prod**e
    return val


# ---------------------------------------------------------------------------
# structural operations


def substitute_params(t: QTerm, mapping: Mapping[str, object]) -> QTerm:
    if t.zero:
        return t
    if any(k in ("q", "x") for k in mapping):
        raise InvalidSubstitution("q and x cannot be substituted")
    m = {k: _pe(v) for k, v in mapping.items()}
    for k, v in m.items():
        if v.is_zero():
            raise InvalidSubstitution(f"{k} is mapped to zero")
    try:
        coeff = t.coeff.substitute(m)
        geom = t.geom.substitute(m)
        pre = t.pre.substitute(m)
        facs = []
        for f in t.factors:
            a = f.arg.substitute(m)
            if a.is_zero():
                raise InvalidSubstitution(f"factorial argument {f.arg} becomes zero")
            facs.append(QFactorial(a, f.exp))
    except DivisionByZero as exc:
        raise InvalidSubstitution(str(exc)) from None
    if geom.is_zero() or coeff.is_zero():
        raise InvalidSubstitution("substitution annihilates the term")
    return canonical(QTerm(coeff, geom, t.qquad, pre, tuple(facs), t.support))


def scale(t: QTerm, c) -> QTerm:
    c = _pe(c)
    if c.is_zero():
        raise ValueError("scale factor must be nonzero")
    if t.zero:
        return t
    return canonical(replace(t, coeff=t.coeff * c))


def mul_rational(t: QTerm, r) -> QTerm:
    r = _rx(r)
    if r.is_zero():
        raise ValueError("rational multiplier must be nonzero")
    if t.zero:
        return t
    return canonical(replace(t, pre=t.pre * r))


def _support(s: QTerm, t: QTerm) -> str:
    return UNILATERAL if UNILATERAL in (s.support, t.support) else BILATERAL


def mul_terms(s: QTerm, t: QTerm) -> QTerm:
    if s.zero or t.zero:
        return QTerm.zero_term(_support(s, t))
    return canonical(
        QTerm(
            s.coeff * t.coeff,
            s.geom * t.geom,
            s.qquad + t.qquad,
            s.pre * t.pre,
            s.factors + t.factors,
            _support(s, t),
        )
    )


def inverse_term(t: QTerm) -> QTerm:
    if t.zero:
        raise DivisionByZero("inverse of the zero term")
    facs = tuple(QFactorial(f.arg, -f.exp) for f in t.factors)
    return canonical(QTerm(1 / t.coeff, 1 / t.geom, -t.qquad, 1 / t.pre, facs, t.support))


def div_terms(s: QTerm, t: QTerm) -> QTerm:
    return mul_terms(s, inverse_term(t))


def shift(t: QTerm, n: int = 1) -> QTerm:
    """The term k -> t_{k+n}."""
    if t.zero or n == 0:
        return t
    r = ratio(t)
    q = _q()
    acc = RatX(1)
    if n > 0:
        for i in range(n):
            acc = acc * substitute_x(r, q**i)
    else:
        for i in range(1, -n + 1):
            acc = acc / substitute_x(r, q ** (-i))
    return mul_rational(t, acc)


def as_rational(t: QTerm) -> RatX:
    """If t_k is a rational function of q**k, return it; otherwise NotSimilar."""
    if t.zero:
        return RatX(0)
    if t.factors or t.qquad:
        raise NotSimilar("term contains q-factorials or a q-quadratic part")
    j = t.geom.q_power()
    if j is None:
        raise NotSimilar(f"geometric part {t.geom} is not a power of q")
    return t.coeff * t.pre * X() ** j


def combine_similar(f: QTerm, g: QTerm) -> QTerm:
    """The single term equal to f_k - g_k."""
    if g.zero:
        return f
    if f.zero:
        return -g
    rho = as_rational(div_terms(f, g))
    diff = rho - 1
    if diff.is_zero():
        return QTerm.zero_term(_support(f, g))
    return replace(mul_rational(g, diff), support=_support(f, g))


def add_similar(f: QTerm, g: QTerm) -> QTerm:
    if g.zero:
        return f
    return combine_similar(f, -g)


def reflect(t: QTerm) -> QTerm:
    """The term k -> t_{-k}, using (u;q)_{-k} = (-q/u)^k q^C(k,2) / (q/u;q)_k."""
    if t.support == UNILATERAL:
        raise ValueError("reflection needs a bilateral term")
    if t.zero:
        return t
    q = _q()
    geom = q**t.qquad / t.geom
    qquad = t.qquad
    facs = []
    for f in t.factors:
        geom = geom * (-q / f.arg) ** f.exp
        qquad += f.exp
        facs.append(QFactorial(q / f.arg, -f.exp))
    pre = substitute_x(t.pre, 1, invert=True)
    return canonical(QTerm(t.coeff, geom, qquad, pre, tuple(facs), t.support))


def symmetrize(t: QTerm) -> QTerm:
    """The term (t_k + t_{-k})/2, provided t_{-k}/t_k is rational in q**k."""
    try:
        rho = as_rational(div_terms(reflect(t), t))
    except NotSimilar as exc:
        raise NotSymmetrizable(str(exc)) from None
    if (rho + 1).is_zero():
        return QTerm.zero_term(t.support)
    return mul_rational(t, (1 + rho) / 2)


def reconstruct_from_ratio(r: RatX, v0=1, support: str = BILATERAL) -> QTerm:
    """The term with shift ratio ``r`` and value ``v0`` at k = 0."""
    r = _rx(r)
    if r.is_zero():
        raise NotFactorable("zero ratio")
    const, xpow, linear, other = factor_ratx(r)
    pre = _telescoping_prefactor(dict(other))
    facs = tuple(QFactorial(u, e) for u, e in linear)
    at_zero = pre.at_x(1)
    if at_zero.is_zero():
        raise NotReconstructible("the prefactor vanishes at k = 0, so v0 cannot anchor the term")
    return canonical(QTerm(_pe(v0) / at_zero, const, xpow, pre, facs, support))


_MAX_PRE_SHIFT = 16


def _telescoping_prefactor(other: dict) -> RatX:
    """P with P(qx)/P(x) equal to the product of the nonlinear factors.

    A numerator factor phi(q**j x) against a denominator factor phi(x)
    telescopes to prod_{i<j} phi(q**i x); anything left over is not of
    product form.
    """
    q = symbol("q")
    pre = RatX(1)
    changed = True
    while changed and other:
        changed = False
        for phi, e in list(other.items()):
            if e <= 0 or phi not in other:
                continue
            for psi, f in list(other.items()):
                if f >= 0:
                    continue
                j = _q_shift_between(phi, psi, q)
                if j is None:
                    continue
                m = min(e, -f)
                base, step = (psi, j) if j > 0 else (phi, -j)
                block = product([(substitute_x(base, q**i), 1) for i in range(step)], RatX)
                pre = pre * block**m if j > 0 else pre / block**m
                for key, d in ((phi, -m), (psi, m)):
                    other[key] += d
                    if not other[key]:
                        del other[key]
                changed = True
                break
            if changed:
                break
    if other:
        raise NotFactorable(f"ratio has factors of degree >= 2 in x: {[str(p) for p in other]}")
    return pre


def _q_shift_between(phi: RatX, psi: RatX, q) -> int | None:
    """j != 0 with phi(x) = psi(q**j x), both normalised to value 1 at x = 0."""
    if phi.degree_x() != psi.degree_x():
        return None
    for j in range(1, _MAX_PRE_SHIFT + 1):
        if substitute_x(psi, q**j) == phi:
            return j
        if substitute_x(phi, q**j) == psi:
            return -j
    return None


def value_at_zero(t: QTerm) -> ParamElem:
    """Symbolic t_0."""
    if t.zero:
        return ParamElem(0)
    return t.coeff * t.pre.at_x(1)


def same_term(s: QTerm, t: QTerm) -> bool:
    """Equality of t_k for all k via shift ratio and value at k = 0."""
    if s.zero or t.zero:
        return s.zero and t.zero
    return ratio(s) == ratio(t) and value_at_zero(s) == value_at_zero(t)


def with_support(t: QTerm, support: str) -> QTerm:
    return replace(t, support=support)


__all__ = [
    "BILATERAL",
    "UNILATERAL",
    "QFactorial",
    "QTerm",
    "TermValueDomain",
    "canonical",
    "ratio",
    "eval_term",
    "substitute_params",
    "scale",
    "mul_rational",
    "mul_terms",
    "inverse_term",
    "div_terms",
    "shift",
    "as_rational",
    "combine_similar",
    "add_similar",
    "reflect",
    "symmetrize",
    "reconstruct_from_ratio",
    "value_at_zero",
    "same_term",
    "with_support",
]
