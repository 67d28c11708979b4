import random
from dataclasses import replace
from fractions import Fraction

import mpmath
import pytest

from oracles import ORACLE_SUMS, oracle_abel, oracle_iterations, oracle_pair, random_point, random_term
from qtelescope.catalog import InfProduct, default_catalog, lookup
from qtelescope.errors import ConvergenceViolation, EvalPole
from qtelescope.exactalg import ParamElem
from qtelescope.numeval import (
    NumericContext,
    infprod_eval,
    infprod_tail,
    sum_truncated,
    term_values,
    verify_identity,
    verify_pair_numeric,
    verify_relation,
)
from qtelescope.pairsynth import build_iteration
from qtelescope.qterm import QTerm, eval_term
from qtelescope.syntax import parse_term as T

HALF = Fraction(1, 2)
TOL = Fraction(1, 10**9)


def ctx_of(**kw):
    q = kw.pop("q", HALF)
    trunc = kw.pop("K", 60)
    cutoff = kw.pop("N", 64)
    return NumericContext(q, {k: Fraction(v) for k, v in kw.items()}, trunc, cutoff)


class TestContext:
    @pytest.mark.parametrize("q", [0, 1, -1, Fraction(3, 2)])
    def test_q_out_of_range(self, q):
        with pytest.raises(ValueError):
            NumericContext(q, {})

    def test_truncation_bounds(self):
        with pytest.raises(ValueError):
            NumericContext(HALF, {}, truncation=0)
        with pytest.raises(ValueError):
            NumericContext(HALF, {}, truncation=10**6)

    def test_for_record_overrides(self):
        ctx = NumericContext.for_record(lookup("1psi1"), z=Fraction(1, 3), q=Fraction(1, 3))
        assert ctx.qval == Fraction(1, 3)
        assert ctx.assignment["z"] == Fraction(1, 3)
        assert "q" not in ctx.assignment


class TestSums:
    def test_geometric(self):
        t = T("geom(z)", support="unilateral")
        assert sum_truncated(t, ctx_of(z=HALF, K=20)) == 2 - Fraction(1, 2**20)

    def test_zero_term(self):
        assert sum_truncated(QTerm.zero_term(), ctx_of(K=10)) == 0

    def test_incremental_values_match_direct(self):
        rng = random.Random(5)
        done = 0
        while done < 30:
            t = random_term(rng)
            asg = random_point(rng)
            try:
                direct = {k: eval_term(t, k, asg) for k in range(-6, 7)}
            except EvalPole:
                continue
            assert term_values(t, -6, 6, asg) == direct
            done += 1


class TestProducts:
    def test_zero_argument(self):
        assert infprod_eval(InfProduct.of(["0"]), ctx_of()) == 1

    def test_q_q_infinity(self):
        ctx = ctx_of()
        p = InfProduct.of(["q"])
        assert infprod_tail(p, ctx) < Fraction(1, 10**18)
        mpmath.mp.dps = 30
        assert abs(float(infprod_eval(p, ctx)) - float(mpmath.qp(0.5))) < 1e-15

    def test_vanishing_denominator(self):
        with pytest.raises(EvalPole):
            infprod_eval(InfProduct.of([], ["a"]), ctx_of(a=Fraction(4)))


class TestIdentities:
    @pytest.mark.parametrize("rec", default_catalog().records(), ids=lambda r: r.name)
    def test_sample_points(self, rec):
        res = verify_identity(rec, NumericContext.for_record(rec))
        assert res.within(TOL)
        oracle = mpmath.mpf(ORACLE_SUMS[rec.name])
        assert abs(mpmath.mpf(res.lhs.numerator) / res.lhs.denominator - oracle) < 1e-15 * abs(oracle)

    def test_1psi1_degenerate_point(self):
        # a q = 1 kills k >= 2 and q/b = 2 kills k <= -2; both sides vanish
        res = verify_identity(lookup("1psi1"), ctx_of(a=2, b=Fraction(1, 4), z=HALF, K=40))
        assert res.rhs == 0
        assert res.abs_gap < Fraction(1, 10**10)
        assert res.within(TOL)

    def test_jacobi_at_z_one(self):
        res = verify_identity(lookup("jacobi"), ctx_of(z=1))
        assert res.abs_gap < Fraction(1, 10**10)

    def test_q_gauss_pole_point(self):
        # c = 2 with q = 1/2 puts (1 - c q) = 0 in a denominator at k = 2
        with pytest.raises(EvalPole):
            verify_identity(lookup("2phi1"), ctx_of(a=3, b=5, c=2))

    def test_q_gauss_regular_point(self):
        res = verify_identity(lookup("2phi1"), ctx_of(a=3, b=5, c=Fraction(5, 2)))
        assert res.within(TOL)

    def test_convergence_violation(self):
        with pytest.raises(ConvergenceViolation):
            verify_identity(lookup("1psi1"), ctx_of(a=2, b=Fraction(1, 4), z=2))

    def test_truncation_improves_with_scaled_cutoff(self):
        # the gap shrinks when both truncations grow; at fixed N the product error dominates
        for rec in default_catalog().records():
            coarse = verify_identity(rec, NumericContext.for_record(rec, 30, 32))
            fine = verify_identity(rec, NumericContext.for_record(rec, 60, 64))
            assert fine.abs_gap <= coarse.abs_gap, rec.name

    def test_relation_sums_agree(self):
        rel = build_iteration("1psi1", "b->b*q")
        res = verify_relation(rel, NumericContext.for_record(lookup("1psi1")))
        assert res.within(TOL)


class TestPairResiduals:
    def test_1psi1_range(self):
        rec = lookup("1psi1")
        rel = build_iteration(rec, "b->b*q")
        it = rec.find_iteration("b->b*q")
        res = verify_pair_numeric(rel, oracle_pair(rec, it), NumericContext.for_record(rec), K=20)
        assert {r.k for r in res} == set(range(-20, 21))
        assert all(r.exact for r in res)

    def test_chu_abel_pair(self):
        rec = lookup("6psi6")
        it = rec.find_iteration("chu")
        res = verify_pair_numeric(build_iteration(rec, "chu"), oracle_abel(it), NumericContext.for_record(rec))
        assert res and all(r.exact for r in res)

    def test_tampered_pair(self):
        rec = lookup("1psi1")
        it = rec.find_iteration("b->b*q")
        pair = oracle_pair(rec, it)
        bad = replace(pair, h=pair.h * ParamElem(2))
        res = verify_pair_numeric(build_iteration(rec, it.name), bad, NumericContext.for_record(rec))
        assert not all(r.exact for r in res)

    @pytest.mark.parametrize("rec,it", oracle_iterations(), ids=lambda v: getattr(v, "name", v))
    def test_all_reference_pairs(self, rec, it):
        ctx = NumericContext.for_record(rec)
        rel = build_iteration(rec, it.name)
        res = verify_pair_numeric(rel, oracle_pair(rec, it), ctx)
        abel = oracle_abel(it)
        if abel is not None:
            res += verify_pair_numeric(rel, abel, ctx)
        assert all(r.exact for r in res)

    def test_rejects_other_objects(self):
        with pytest.raises(TypeError):
            verify_pair_numeric(build_iteration("1psi1", "b->b*q"), object(), ctx_of(a=2, b=3, z=HALF))
