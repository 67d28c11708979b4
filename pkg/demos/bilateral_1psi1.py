"""Walk the 1psi1 sum through the pipeline by hand.

Shifting b -> bq relates the summand to a shifted copy of itself.  The
difference of the two is q-Gosper summable, and the antidifference gives
the Gosper pair (g, h) and from it the Abel pair (A, B).
"""

from qtelescope import (
    NumericContext,
    build_iteration,
    check_limit_condition,
    derive_abel_pair,
    format_term,
    lookup,
    synthesize_gosper_pair,
    verify_identity,
)

rec = lookup("1psi1")
print(rec.title)
print("summand:", format_term(rec.summand))

rel = build_iteration(rec, "b->b*q")
print("multiplier of the closed form:", rel.multiplier)

pair = synthesize_gosper_pair(rel)
print("g =", format_term(pair.g))
print("h =", format_term(pair.h))

abel = derive_abel_pair(pair, rel)
print("A =", format_term(abel.A))
print("B =", format_term(abel.B))

ctx = NumericContext.for_record(rec)
print("sample point:", dict(ctx.assignment))
res = verify_identity(rec, ctx)
print(f"sum vs product at the sample point: relative gap {float(res.rel_gap):.2e}")

rep = check_limit_condition(pair, ctx.with_truncation(40))
print(f"|h_40| and |h_-40| are at most {float(rep.tail):.2e}")
