"""The q-Gosper algorithm over Q(q, parameters).

Given the shift ratio r(x) = t_{k+1}/t_k with x = q**k, look for a rational
R(x) such that z_k = R(q**k) t_k satisfies z_{k+1} - z_k = t_k, that is

    R(q x) r(x) - R(x) = 1.

The ratio is first written as r = p(qx)/p(x) * f(x)/g(x) with f(x) and
g(q**j x) coprime for every j >= 0.  Putting R(x) = g(x/q) s(x) / p(x)
turns the problem into the key equation

    f(x) s(qx) - g(x/q) s(x) = p(x)

whose solutions are Laurent polynomials in x.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import Cancelled, DispersionUndetermined, NotSummable
from .exactalg import (
    SYMBOLS,
    EvalPole,
    ParamElem,
    PolyX,
    RatX,
    X,
    eval_numeric,
    factor_ratx,
    product,
    solve_linear,
    substitute_x,
    symbol,
)

J_MAX = 64


class CancelToken:
    """Cooperative cancellation flag checked between pipeline stages."""

    def __init__(self):
        self._event = threading.Event()

    def cancel(self):
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()

    def check(self, stage: str = ""):
        if self._event.is_set():
            raise Cancelled(f"cancelled before {stage}" if stage else "cancelled")


def _check(cancel, stage):
    if cancel is not None:
        cancel.check(stage)


# ---------------------------------------------------------------------------
# factored polynomials


@dataclass
class _Factored:
    """const * x**xpow * prod phi**e with phi(0) = 1 and e > 0."""

    const: ParamElem
    xpow: int
    parts: dict = field(default_factory=dict)  # RatX (phi) -> multiplicity

    def ratx(self) -> RatX:
        return product([(RatX(self.const), 1), (X(), self.xpow), *self.parts.items()], RatX)

    def poly(self) -> PolyX:
        return PolyX.from_ratx(self.ratx())

    def value_at(self, asg, xv) -> Fraction:
        acc = eval_numeric(self.const, asg) * Fraction(xv) ** self.xpow
        for phi, e in self.parts.items():
            acc *= eval_numeric(phi, asg, xv) ** e
        return acc

    def add(self, phi: RatX, e: int):
        n = self.parts.get(phi, 0) + e
        if n:
            self.parts[phi] = n
        else:
            self.parts.pop(phi, None)


def _copy(fac: _Factored) -> _Factored:
    return _Factored(fac.const, fac.xpow, dict(fac.parts))


def _split_ratio(r: RatX) -> tuple[_Factored, _Factored]:
    const, xpow, linear, other = factor_ratx(r)
    num = _Factored(const, max(xpow, 0))
    den = _Factored(ParamElem(1), max(-xpow, 0))
    x = X()
    for u, e in linear:
        (num if e > 0 else den).add(1 - u * x, abs(e))
    for phi, e in other:
        (num if e > 0 else den).add(phi, abs(e))
    return num, den


def split_term_ratio(t) -> tuple[_Factored, _Factored]:
    """Numerator and denominator of ratio(t), factored from the term's structure.

    Only the prefactor pre(x) goes through polynomial factorisation; the
    factors of pre(qx) are its q-dilates and each poch factor contributes
    a single linear factor.
    """
    q = symbol("q")
    x = X()
    const, xpow, linear, other = factor_ratx(t.pre)
    num = _Factored(t.geom * q**xpow, 0)
    den = _Factored(ParamElem(1), 0)
    shift = xpow + t.qquad
    if shift >= 0:
        num.xpow = shift
    else:
        den.xpow = -shift

    def put(phi, e):
        (num if e > 0 else den).add(phi, abs(e))

    for u, e in linear:
        put(1 - u * q * x, e)
        put(1 - u * x, -e)
    for phi, e in other:
        put(substitute_x(phi, q), e)
        put(phi, -e)
    for f in t.factors:
        put(1 - f.arg * x, f.exp)
    return num, den


@lru_cache(maxsize=4096)
def _polyx(phi: RatX) -> PolyX:
    return PolyX.from_ratx(phi)


def _shift_exponent(phi: RatX, psi: RatX) -> int | None:
    """The j with phi(x) = psi(q**j x) exactly, if any (both normalised to value 1 at 0)."""
    a = _polyx(phi)
    b = _polyx(psi)
    if a.degree != b.degree:
        return None
    n = a.degree
    ratio = a.lc() / b.lc()
    jn = ratio.q_power()
    if jn is None or jn % n:
        return None
    j = jn // n
    if b.scale_x(symbol("q") ** j) != a:
        return None
    return j


# ---------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True)
class QGPForm:
    p: PolyX
    f: PolyX
    g: PolyX

    def reassemble(self) -> RatX:
        q = symbol("q")
        pr = self.p.to_ratx()
        return substitute_x(pr, q) / pr * self.f.to_ratx() / self.g.to_ratx()


def _pairs(num: _Factored, den: _Factored):
    """All (phi, psi, j) with phi | f, psi | g and phi(x) ~ psi(q**j x), j >= 0."""
    out = []
    for phi in num.parts:
        for psi in den.parts:
            j = _shift_exponent(phi, psi)
            if j is not None and j >= 0:
                out.append((phi, psi, j))
    return out


def dispersion_set(f: PolyX, g: PolyX, j_max: int = J_MAX) -> set[int]:
    """All j >= 0 for which f(x) and g(q**j x) have a nontrivial common factor."""
    if f.is_zero() or g.is_zero():
        raise ValueError("dispersion of a zero polynomial")
    num, _ = _split_ratio(f.to_ratx())
    den, _ = _split_ratio(g.to_ratx())
    js = {j for _, _, j in _pairs(num, den)}
    if num.xpow and den.xpow:
        raise DispersionUndetermined("both polynomials vanish at x = 0; every j is a dispersion")
    if any(j > j_max for j in js):
        raise DispersionUndetermined(f"dispersion {max(js)} exceeds the bound {j_max}")
    return js


def qgp_decompose(r: RatX | None, j_max: int = J_MAX, split=None) -> QGPForm:
    """``split`` is an optional pre-factored (num, den) pair; ``r`` may then be None."""
    if split is None and (r is None or r.is_zero()):
        raise ValueError("q-Gosper needs a nonzero ratio")
    q = symbol("q")
    num, den = split if split is not None else _split_ratio(r)
    p = RatX(1)
    while True:
        pairs = _pairs(num, den)
        if not pairs:
            break
        phi, psi, j = min(pairs, key=lambda t: t[2])
        if j > j_max:
            raise DispersionUndetermined(f"dispersion {j} exceeds the bound {j_max}")
        m = min(num.parts[phi], den.parts[psi])
        num.add(phi, -m)
        den.add(psi, -m)
        for i in range(1, j + 1):
            p = p * substitute_x(phi, q ** (-i)) ** m
    # keep g monic
    g_poly = den.poly()
    lc = g_poly.lc()
    f_poly = num.poly() * (1 / lc)
    return QGPForm(PolyX.from_ratx(p), f_poly, g_poly.monic())


# ---------------------------------------------------------------------------
# key equation


@dataclass(frozen=True)
class LaurentPoly:
    low: int
    coeffs: tuple[ParamElem, ...]

    def to_ratx(self) -> RatX:
        x = X()
        acc = RatX(0)
        for i, c in enumerate(self.coeffs):
            acc = acc + c * x ** (self.low + i)
        return acc


def _degree_window(form: QGPForm) -> tuple[int, int] | None:
    q = symbol("q")
    f, g, p = form.f, form.g, form.p
    G = g.scale_x(1 / q)
    df, dg = f.degree, G.degree
    if df != dg:
        hi = p.degree - max(df, dg)
    else:
        hi = p.degree - df
        j = (G.lc() / f.lc()).q_power()
        if j is not None:
            hi = max(hi, j)
    vf, vg = f.valuation(), G.valuation()
    if vf != vg:
        lo = p.valuation() - min(vf, vg)
    else:
        lo = p.valuation() - vf
        j = (G.tc() / f.tc()).q_power()
        if j is not None:
            lo = min(lo, j)
    if hi < lo:
        return None
    return lo, hi


def solve_key_equation(form: QGPForm) -> LaurentPoly | None:
    """Laurent solution s of f(x) s(qx) - g(x/q) s(x) = p(x), or None."""
    q = symbol("q")
    window = _degree_window(form)
    if window is None:
        return None
    lo, hi = window
    f, p = form.f, form.p
    G = form.g.scale_x(1 / q)
    n_unk = hi - lo + 1
    top = max(hi + max(f.degree, G.degree), p.degree)
    bottom = min(lo + min(f.valuation(), G.valuation()), p.valuation())
    rows, rhs = [], []
    zero = ParamElem(0)

    def coeff(poly, i):
        return poly.coeffs[i] if 0 <= i < len(poly.coeffs) else zero

    qpow = [q**i for i in range(lo, hi + 1)]
    for n in range(bottom, top + 1):
        row = []
        for idx in range(n_unk):
            i = lo + idx
            row.append(coeff(f, n - i) * qpow[idx] - coeff(G, n - i))
        b = coeff(p, n)
        if all(c.is_zero() for c in row):
            if not b.is_zero():
                return None
            continue
        rows.append(row)
        rhs.append(b)
    sol = solve_linear(rows, rhs)
    if sol is None:
        return None
    return LaurentPoly(lo, tuple(sol))


# ---------------------------------------------------------------------------
# driver


class GosperCertificate:
    """z_k = R(q**k) t_k is an antidifference of t_k.

    The shift ratio may instead be supplied as a factored (num, den) split;
    it is then multiplied out only when :attr:`ratio` is read.
    """

    def __init__(self, R: RatX, ratio: RatX | None = None, form: QGPForm | None = None, split=None):
        if ratio is None and split is None:
            raise ValueError("a certificate needs its shift ratio")
        self.R = R
        self.form = form
        self._ratio = ratio
        self._split = split

    @property
    def ratio(self) -> RatX:
        if self._ratio is None:
            num, den = self._split
            self._ratio = num.ratx() / den.ratx()
        return self._ratio

    def check(self, exact: bool | None = None, points: int = 3, seed: int = 0) -> bool:
        """R(qx) r(x) - R(x) = 1.

        Exact symbolic comparison by default when the reduced ratio is at
        hand; otherwise the identity is tested at random rational points,
        which a nonzero rational function fails with negligible probability.
        """
        q = symbol("q")
        if exact is None:
            exact = self._ratio is not None
        if exact:
            return (substitute_x(self.R, q) * self.ratio - self.R - 1).is_zero()
        rng = random.Random(seed)
        names = [n for n in SYMBOLS.names if n != "x"]
        Rq = substitute_x(self.R, q)
        done = 0
        for _ in range(20 * points):
            asg = {n: Fraction(rng.randint(2, 10**6), rng.randint(2, 10**6)) for n in names}
            xv = Fraction(rng.randint(2, 10**6), rng.randint(2, 10**6))
            try:
                r = self._ratio_at(asg, xv)
                lhs = eval_numeric(Rq, asg, xv) * r - eval_numeric(self.R, asg, xv)
            except (EvalPole, ZeroDivisionError):
                continue
            if lhs != 1:
                return False
            done += 1
            if done == points:
                return True
        raise EvalPole("no pole-free sample point for the certificate check")

    def _ratio_at(self, asg, xv) -> Fraction:
        if self._split is None:
            return eval_numeric(self._ratio, asg, xv)
        num, den = self._split
        return num.value_at(asg, xv) / den.value_at(asg, xv)

    def __repr__(self):
        return f"GosperCertificate(R={self.R})"


def q_gosper(r, cancel: CancelToken | None = None, j_max: int = J_MAX) -> GosperCertificate:
    """Decide q-Gosper summability of the term with shift ratio ``r``.

    ``r`` may also be a QTerm, in which case its ratio is factored
    structurally, which is much cheaper for large prefactors.
    Returns a certificate or raises :class:`NotSummable`.
    """
    q = symbol("q")
    _check(cancel, "decomposition")
    if isinstance(r, RatX):
        split, reduced = None, r
    else:
        split, reduced = split_term_ratio(r), None
        kept = (_copy(split[0]), _copy(split[1]))
    form = qgp_decompose(reduced, j_max, split)
    _check(cancel, "key equation")
    s = solve_key_equation(form)
    if s is None:
        window = _degree_window(form)
        where = "empty degree window" if window is None else f"degrees {window[0]}..{window[1]}"
        raise NotSummable(
            "no q-hypergeometric antidifference",
            f"key equation has no Laurent solution ({where})",
        )
    _check(cancel, "certificate check")
    G = substitute_x(form.g.to_ratx(), 1 / q)
    R = G * s.to_ratx() / form.p.to_ratx()
    cert = GosperCertificate(R, reduced, form, kept if split is not None else None)
    if not cert.check():
        raise AssertionError("q-Gosper certificate failed its own identity")
    return cert


__all__ = [
    "CancelToken",
    "QGPForm",
    "LaurentPoly",
    "GosperCertificate",
    "dispersion_set",
    "split_term_ratio",
    "qgp_decompose",
    "solve_key_equation",
    "q_gosper",
]
