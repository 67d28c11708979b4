"""Numeric checks on exact rationals.

Sums are truncated to |k| <= K, infinite products to their first N factors.
A tolerance only ever applies to the gap between a truncated sum and a
truncated product; pair identities are rational and must hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import ConvergenceViolation, EvalPole, UnsupportedNegativeK
from .exactalg import eval_numeric
from .qterm import BILATERAL, UNILATERAL, QTerm, eval_term, ratio, shift

K_CAP = 200


@dataclass(frozen=True)
class NumericContext:
    qval: Fraction
    assignment: Mapping[str, Fraction] = field(default_factory=dict)
    truncation: int = 60
    cutoff: int = 64
    tolerance: Fraction = Fraction(1, 10**9)

    def __post_init__(self):
        q = Fraction(self.qval)
        object.__setattr__(self, "qval", q)
        object.__setattr__(self, "assignment", {k: Fraction(v) for k, v in self.assignment.items() if k != "q"})
        object.__setattr__(self, "tolerance", Fraction(self.tolerance))
        if q == 0 or abs(q) >= 1:
            raise ValueError(f"q = {q} must satisfy 0 < |q| < 1")
        if not 0 < self.truncation <= K_CAP:
            raise ValueError(f"truncation K must be in 1..{K_CAP}")
        if self.cutoff <= 0:
            raise ValueError("product cutoff N must be positive")

    @classmethod
    def for_record(cls, rec, truncation: int = 60, cutoff: int = 64, tolerance=Fraction(1, 10**9), **overrides):
        """Context at the record's pinned sample point, with optional overrides."""
        sample = dict(rec.sample)
        sample.update({k: Fraction(v) for k, v in overrides.items()})
        qval = sample.pop("q", Fraction(1, 2))
        return cls(qval, sample, truncation, cutoff, tolerance)

    def full_assignment(self) -> dict[str, Fraction]:
        out = dict(self.assignment)
        out["q"] = self.qval
        return out

    def with_truncation(self, K: int) -> "NumericContext":
        return NumericContext(self.qval, self.assignment, K, self.cutoff, self.tolerance)


@dataclass(frozen=True)
class Residual:
    """lhs against rhs; the gaps are always recomputed from the two values."""

    lhs: Fraction
    rhs: Fraction
    label: str = ""
    k: int | None = None
    tail: Mapping[str, Fraction] = field(default_factory=dict)

    @property
    def abs_gap(self) -> Fraction:
        return abs(self.lhs - self.rhs)

    @property
    def rel_gap(self) -> Fraction:
        """Relative gap, or the absolute one when the right side vanishes."""
        if self.rhs == 0:
            return self.abs_gap
        return self.abs_gap / abs(self.rhs)

    @property
    def exact(self) -> bool:
        return self.lhs == self.rhs

    def within(self, tol) -> bool:
        return self.rel_gap < Fraction(tol)

    def to_json(self) -> dict:
        d = {
            "label": self.label,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "abs_gap": float(self.abs_gap),
            "rel_gap": float(self.rel_gap),
        }
        if self.k is not None:
            d["k"] = self.k
        if self.tail:
            d["tail"] = {k: float(v) for k, v in self.tail.items()}
        return d


# ---------------------------------------------------------------------------
# sums and products


def _term_values(t: QTerm, ks, asg, r) -> dict[int, Fraction]:
    """t_k for consecutive ks starting at 0, stepping by the shift ratio.

    Falls back to a direct evaluation wherever the ratio has a pole or a zero,
    since stepping through such a k loses the information.
    """
    qv = asg["q"]
    vals: dict[int, Fraction] = {}
    prev_k, prev = None, None
    for k in ks:
        v = None
        if prev is not None and prev != 0:
            try:
                if k == prev_k + 1:
                    step = eval_numeric(r, asg, qv**prev_k)
                    v = prev * step if step != 0 else None
                elif k == prev_k - 1:
                    step = eval_numeric(r, asg, qv**k)
                    v = prev / step if step != 0 else None
            except EvalPole:
                v = None
        if v is None:
            v = eval_term(t, k, asg)
        vals[k] = v
        prev_k, prev = k, v
    return vals


def term_values(t: QTerm, lo: int, hi: int, ctx: NumericContext | Mapping) -> dict[int, Fraction]:
    """Exact t_k for lo <= k <= hi (lo <= 0 <= hi), evaluated incrementally."""
    asg = ctx.full_assignment() if isinstance(ctx, NumericContext) else dict(ctx)
    if t.zero:
        return {k: Fraction(0) for k in range(lo, hi + 1)}
    r = ratio(t)
    vals = _term_values(t, range(0, hi + 1), asg, r) if hi >= 0 else {}
    if lo < 0:
        vals.update(_term_values(t, range(0, lo - 1, -1), asg, r))
    return {k: vals[k] for k in range(lo, hi + 1)}


def sum_truncated(t: QTerm, ctx: NumericContext) -> Fraction:
    K = ctx.truncation
    lo = -K if t.support == BILATERAL else 0
    vals = term_values(t, lo, K, ctx)
    total = Fraction(0)
    for k in range(lo, K + 1):
        total += vals[k]
    return total


def infprod_eval(p, ctx: NumericContext) -> Fraction:
    """prod over entries of (arg; q**m)_N ** exp."""
    asg = ctx.full_assignment()
    qv = ctx.qval
    N = ctx.cutoff
    val = Fraction(1)
    for u, m, e in p.entries:
        uv = eval_numeric(u, asg)
        step = qv**m
        fac = Fraction(1)
        c = uv
        for _ in range(N):
            fac *= 1 - c
            c *= step
        if fac == 0 and e < 0:
            raise EvalPole(f"({u}; q^{m})_oo vanishes in a denominator")
        val *= fac**e
    return val


def infprod_tail(p, ctx: NumericContext) -> Fraction:
    """Bound on |log| of the omitted factors: sum |e| |u| |q|^(mN) / (1 - |q|^m)."""
    asg = ctx.full_assignment()
    aq = abs(ctx.qval)
    total = Fraction(0)
    for u, m, e in p.entries:
        uv = abs(eval_numeric(u, asg))
        total += abs(e) * uv * aq ** (m * ctx.cutoff) / (1 - aq**m)
    return total


# ---------------------------------------------------------------------------
# identity and pair checks


def check_convergence(rec, ctx: NumericContext) -> None:
    asg = ctx.full_assignment()
    for c in rec.convergence:
        try:
            v = eval_numeric(c, asg)
        except EvalPole:
            raise ConvergenceViolation(f"|{c}| is undefined at this point") from None
        if abs(v) >= 1:
            raise ConvergenceViolation(f"|{c}| = {float(abs(v)):.6g} is not < 1")


def verify_identity(rec, ctx: NumericContext) -> Residual:
    """Truncated sum against truncated closed form, after the convergence check."""
    check_convergence(rec, ctx)
    lhs = sum_truncated(rec.summand, ctx)
    rhs = infprod_eval(rec.closed_form, ctx)
    asg = ctx.full_assignment()
    K = ctx.truncation
    last = [eval_term(rec.summand, K, asg)]
    if rec.support == BILATERAL:
        last.append(eval_term(rec.summand, -K, asg))
    tail = {"sum_last_term": max(abs(v) for v in last), "product_tail": infprod_tail(rec.closed_form, ctx)}
    return Residual(lhs, rhs, f"{rec.name}: sum vs closed form", None, tail)


def _k_range(support: str, K: int, lo_unilateral: int = 0) -> range:
    return range(-K, K + 1) if support == BILATERAL else range(lo_unilateral, K + 1)


def verify_pair_numeric(rel, pair, ctx: NumericContext, K: int | None = None) -> list[Residual]:
    """Per-k residuals of the pair identities; each must be exactly zero."""
    from .pairsynth import AbelPair, GosperPair

    K = K if K is not None else min(ctx.truncation, 20)
    support = rel.support
    out: list[Residual] = []
    if isinstance(pair, GosperPair):
        lo = -K if support == BILATERAL else 0
        F = term_values(rel.F, lo, K, ctx)
        G = term_values(rel.G, lo, K, ctx)
        g = term_values(pair.g, lo, K, ctx)
        h = term_values(pair.h, lo, K + 1, ctx)
        for k in _k_range(support, K):
            out.append(Residual(g[k] - h[k], F[k], "g - h = F", k))
            out.append(Residual(g[k] - h[k + 1], G[k], "g - h(k+1) = G", k))
    elif isinstance(pair, AbelPair):
        # the unilateral lemma never uses B_{-1}; start the F identity at k = 1 there
        lo = -K - 1 if support == BILATERAL else 0
        F = term_values(rel.F, lo, K, ctx)
        G = term_values(rel.G, lo, K, ctx)
        A = term_values(pair.A, lo, K + 1, ctx)
        B = term_values(pair.B, lo, K, ctx)
        for k in _k_range(support, K, 1):
            out.append(Residual(A[k] * (B[k] - B[k - 1]), F[k], "A (B - B(k-1)) = F", k))
        for k in _k_range(support, K):
            out.append(Residual(B[k] * (A[k] - A[k + 1]), G[k], "B (A - A(k+1)) = G", k))
    else:
        raise TypeError("expected a GosperPair or an AbelPair")
    return out


def verify_relation(rel, ctx: NumericContext) -> Residual:
    """Truncated sum F against truncated sum G."""
    return Residual(sum_truncated(rel.F, ctx), sum_truncated(rel.G, ctx), "sum F vs sum G")


__all__ = [
    "K_CAP",
    "NumericContext",
    "Residual",
    "term_values",
    "sum_truncated",
    "infprod_eval",
    "infprod_tail",
    "check_convergence",
    "verify_identity",
    "verify_pair_numeric",
    "verify_relation",
]
