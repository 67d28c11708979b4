"""Gosper pairs and Abel pairs from iteration relations.

An iteration relation says that sum F_k equals sum G_k, where G is a rational
multiple of F with shifted parameters.  A Gosper pair (g, h) certifies it:

    g_k - h_k = F_k,    g_k - h_{k+1} = G_k.

Writing g_k = A_k B_k and h_k = A_k B_{k-1} with B_0 = 1 gives an Abel pair,
for which A_k (B_k - B_{k-1}) = F_k and B_k (A_k - A_{k+1}) = G_k.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import NotReconstructible, NotSimilar, NotSummable, PairValidationError, ZeroH
from .exactalg import Factored, ParamElem, symbol
from .qgosper import CancelToken, GosperCertificate, _check, q_gosper
from .qterm import (
    BILATERAL,
    UNILATERAL,
    QTerm,
    as_rational,
    combine_similar,
    div_terms,
    eval_term,
    mul_rational,
    mul_terms,
    reconstruct_from_ratio,
    shift,
    substitute_params,
    value_at_zero,
    with_support,
)
from .syntax import parse_substitution

BILATERAL_CAVEAT = (
    "sum identity assumes h_k has equal limits as k -> +oo and k -> -oo; "
    "checked numerically only"
)
UNILATERAL_CAVEAT = "sum identity assumes h_k -> h_0 as k -> oo; checked numerically only"


@dataclass(frozen=True)
class IterationRelation:
    F: QTerm
    G: QTerm
    substitution: Mapping[str, ParamElem]
    multiplier: ParamElem
    support: str = BILATERAL


@dataclass(frozen=True)
class GosperPair:
    g: QTerm
    h: QTerm


@dataclass(frozen=True)
class AbelPair:
    A: QTerm
    B: QTerm
    anchor: int = 0  # the k with B_k = 1


def make_iteration(F: QTerm, substitution: Mapping[str, object], multiplier, support: str | None = None) -> IterationRelation:
    """The relation sum F = sum multiplier * F(substituted)."""
    support = support or F.support
    F = with_support(F, support)
    if isinstance(multiplier, Factored):
        multiplier = multiplier.expand()
    mult = multiplier if isinstance(multiplier, ParamElem) else ParamElem(multiplier)
    G = with_support(substitute_params(F, substitution) * mult, support)
    sub = {k: (v if isinstance(v, ParamElem) else ParamElem(v)) for k, v in substitution.items()}
    rel = IterationRelation(F, G, sub, mult, support)
    # similarity is required for telescoping; fail early with NotSimilar
    as_rational(div_terms(F, G))
    return rel


def build_iteration(identity, substitution, multiplier=None) -> IterationRelation:
    """Iteration relation for a catalog identity.

    ``substitution`` is a registered iteration name or a symbol map.  When the
    map is not registered, the multiplier is derived from the closed form.
    """
    from .catalog import lookup, multiplier_for

    rec = lookup(identity) if isinstance(identity, str) else identity
    it = rec.find_iteration(substitution)
    if it is not None:
        if it.reduction:
            raise ValueError(f"iteration {it.name!r} of {rec.name} is a reduction note, not a relation")
        return make_iteration(rec.summand_for(it), it.substitution, it.multiplier, rec.support)
    if isinstance(substitution, str):
        substitution = parse_substitution(substitution)
    if multiplier is None:
        multiplier = multiplier_for(rec, substitution)
    return make_iteration(rec.summand, substitution, multiplier, rec.support)


# ---------------------------------------------------------------------------
# validation


def validate_gosper_pair(rel: IterationRelation, pair: GosperPair) -> None:
    """Raise PairValidationError unless both defining identities hold exactly."""
    try:
        d1 = combine_similar(combine_similar(pair.g, pair.h), rel.F)
        d2 = combine_similar(combine_similar(pair.g, shift(pair.h, 1)), rel.G)
    except NotSimilar as exc:
        raise PairValidationError(f"pair terms are not similar to F: {exc}") from None
    if not d1.zero:
        raise PairValidationError("g_k - h_k != F_k")
    if not d2.zero:
        raise PairValidationError("g_k - h_{k+1} != G_k")


def validate_abel_pair(rel: IterationRelation, pair: AbelPair, gosper: GosperPair | None = None) -> None:
    A, B = pair.A, pair.B
    try:
        lhs_f = mul_terms(A, combine_similar(B, shift(B, -1)))
        lhs_g = mul_terms(B, combine_similar(A, shift(A, 1)))
        if not combine_similar(lhs_f, rel.F).zero:
            raise PairValidationError("A_k (B_k - B_{k-1}) != F_k")
        if not combine_similar(lhs_g, rel.G).zero:
            raise PairValidationError("B_k (A_k - A_{k+1}) != G_k")
        if gosper is not None:
            if not combine_similar(mul_terms(A, B), gosper.g).zero:
                raise PairValidationError("A_k B_k != g_k")
            if not combine_similar(mul_terms(A, shift(B, -1)), gosper.h).zero:
                raise PairValidationError("A_k B_{k-1} != h_k")
    except NotSimilar as exc:
        raise PairValidationError(f"Abel pair terms are not similar to F: {exc}") from None
    if not _b_anchor_is_one(B, pair.anchor):
        raise PairValidationError(f"B_{pair.anchor} != 1")


def _b_anchor_is_one(B: QTerm, anchor: int) -> bool:
    if B.zero:
        return False
    return value_at_zero(shift(B, anchor)).is_one()


# ---------------------------------------------------------------------------
# synthesis


def synthesize_gosper_pair(rel: IterationRelation, cancel: CancelToken | None = None) -> GosperPair:
    """Run q-Gosper on F - G; h = R t and g = h + F."""
    t = combine_similar(rel.F, rel.G)
    if t.zero:
        # F = G already; the trivial pair h = 0 does the job
        pair = GosperPair(rel.F, QTerm.zero_term(rel.support))
        validate_gosper_pair(rel, pair)
        return pair
    _check(cancel, "q-Gosper")
    try:
        cert = q_gosper(t, cancel)
    except NotSummable as exc:
        subs = ", ".join(f"{k}->{v}" for k, v in rel.substitution.items())
        raise NotSummable(
            f"F - G is not q-Gosper summable for the iteration {subs}",
            exc.diagnostic,
        ) from None
    h = with_support(mul_rational(t, cert.R), rel.support)
    g = with_support(combine_similar(h, -rel.F), rel.support)
    pair = GosperPair(g, h)
    _check(cancel, "validation")
    validate_gosper_pair(rel, pair)
    return pair


def certificate_of(rel: IterationRelation) -> GosperCertificate:
    return q_gosper(combine_similar(rel.F, rel.G))


def derive_abel_pair(pair: GosperPair, rel: IterationRelation | None = None, max_anchor: int = 8) -> AbelPair:
    """B from B_k / B_{k-1} = g_k / h_k and B_0 = 1, then A = g / B."""
    if pair.h.zero:
        raise ZeroH("h vanishes identically; the Abel pair is undefined")
    if pair.g.zero:
        raise NotReconstructible("g vanishes identically")
    try:
        rho = as_rational(div_terms(pair.g, pair.h))
    except NotSimilar as exc:
        raise NotReconstructible(f"g/h is not rational in q**k: {exc}") from None
    # B_{k+1}/B_k = rho(q x)
    rb = rho.substitute_x(symbol("q"))
    support = pair.g.support
    B = reconstruct_from_ratio(rb, 1, support)
    A = with_support(div_terms(pair.g, B), support)
    out = AbelPair(A, B)
    if rel is not None:
        validate_abel_pair(rel, out, pair)
    return out


# ---------------------------------------------------------------------------
# limit condition


@dataclass(frozen=True)
class LimitReport:
    support: str
    K: int
    h_plus: Fraction
    h_minus: Fraction | None
    h_zero: Fraction
    gap: Fraction
    tail: Fraction
    decaying: bool
    advisory: str = ""
    caveat: str = ""

    def passed(self, tol=Fraction(1, 10**8)) -> bool:
        return abs(self.gap) < tol and self.decaying


def _abs_h(h: QTerm, k: int, assignment) -> Fraction:
    return abs(eval_term(h, k, assignment))


def check_limit_condition(pair: GosperPair, ctx) -> LimitReport:
    """Numeric look at the tails of h.

    Bilateral: gap = |h_K - h_{-K}|, tail = max(|h_K|, |h_{-K}|) with both
    tails expected to agree.  Unilateral: gap = |h_K - h_0|, the distance
    from the limit value h_0 that the unilateral lemma needs.
    """
    h = pair.h
    K = ctx.truncation
    asg = ctx.full_assignment()
    support = h.support
    if h.zero:
        z = Fraction(0)
        return LimitReport(support, K, z, z if support == BILATERAL else None, z, z, z, True, "h = 0",
                           BILATERAL_CAVEAT if support == BILATERAL else UNILATERAL_CAVEAT)
    hK = eval_term(h, K, asg)
    h0 = eval_term(h, 0, asg)
    window = range(K - 10, K + 1)
    if support == BILATERAL:
        hm = eval_term(h, -K, asg)
        gap = abs(hK - hm)
        tail = max(abs(hK), abs(hm))
        plus = [_abs_h(h, k, asg) for k in window]
        minus = [_abs_h(h, -k, asg) for k in window]
        decaying = _nonincreasing(plus) and _nonincreasing(minus)
        caveat = BILATERAL_CAVEAT
    else:
        hm = None
        # the lemma needs lim h_k = h_0; report how far h_K sits from h_0
        gap = abs(hK - h0)
        tail = abs(hK)
        vals = [abs(eval_term(h, k, asg) - h0) for k in window]
        decaying = _nonincreasing(vals)
        caveat = UNILATERAL_CAVEAT
    return LimitReport(support, K, hK, hm, h0, gap, tail, decaying, growth_advisory(h), caveat)


def _nonincreasing(vals) -> bool:
    return all(b <= a for a, b in zip(vals, vals[1:]))


def growth_advisory(h: QTerm) -> str:
    """Heuristic description of the growth of h_k; never used as a proof."""
    if h.qquad > 0:
        return "q-quadratic factor dominates: h_k -> 0 in both directions when |q| < 1"
    if h.qquad < 0:
        return "q-quadratic factor grows: tails may diverge"
    return "geometric growth controlled by the convergence region"


__all__ = [
    "BILATERAL_CAVEAT",
    "UNILATERAL_CAVEAT",
    "IterationRelation",
    "GosperPair",
    "AbelPair",
    "LimitReport",
    "make_iteration",
    "build_iteration",
    "validate_gosper_pair",
    "validate_abel_pair",
    "synthesize_gosper_pair",
    "certificate_of",
    "derive_abel_pair",
    "check_limit_condition",
    "growth_advisory",
]
