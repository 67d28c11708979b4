import random

import pytest

from oracles import summable_term
from qtelescope.catalog import lookup
from qtelescope.errors import Cancelled, DispersionUndetermined, NotSummable
from qtelescope.exactalg import PolyX, RatX, substitute_x, symbol
from qtelescope.pairsynth import build_iteration
from qtelescope.qgosper import (
    CancelToken,
    GosperCertificate,
    dispersion_set,
    qgp_decompose,
    q_gosper,
    solve_key_equation,
    split_term_ratio,
)
from qtelescope.qterm import combine_similar, mul_rational, ratio, same_term
from qtelescope.syntax import parse_ratx as R


def px(src):
    return PolyX.from_ratx(R(src))


class TestDecompose:
    def test_constant_ratio(self):
        form = qgp_decompose(R("z"))
        assert form.p.to_ratx() == RatX(1)
        assert form.reassemble() == R("z")

    def test_generic_linear(self):
        form = qgp_decompose(R("z*(1-a*x)/(1-b*x)"))
        assert form.p.to_ratx() == RatX(1)
        assert form.reassemble() == R("z*(1-a*x)/(1-b*x)")

    def test_shift_moves_into_p(self):
        r = R("(1-a*q*x)/(1-a*x)")
        form = qgp_decompose(r)
        assert form.reassemble() == r
        assert form.p.degree >= 1

    def test_zero_ratio(self):
        with pytest.raises(ValueError):
            qgp_decompose(RatX(0))


class TestDispersion:
    def test_root_ratio_q(self):
        # f(x) = 1 - a x and g(q x) share the root 1/a
        assert dispersion_set(px("1-a*x"), px("x-q/a")) == {1}

    def test_no_q_power_ratio(self):
        assert dispersion_set(px("1-a*x"), px("1-b*x")) == set()

    def test_equal(self):
        assert dispersion_set(px("1-a*x"), px("1-a*x")) == {0}

    def test_large_shift_is_undetermined(self):
        with pytest.raises(DispersionUndetermined):
            dispersion_set(px("1-a*x"), px("1-a*x/q^100"), j_max=64)

    def test_both_vanish_at_zero(self):
        with pytest.raises(DispersionUndetermined):
            dispersion_set(px("x*(1-a*x)"), px("x"))


class TestGosper:
    def test_geometric(self):
        cert = q_gosper(R("z"))
        assert cert.R == R("1/(z-1)")
        assert cert.check()

    def test_constant_term_not_summable(self):
        with pytest.raises(NotSummable) as exc:
            q_gosper(R("1"))
        assert exc.value.diagnostic

    def test_1psi1_difference(self):
        rel = build_iteration("1psi1", "b->b*q")
        t = combine_similar(rel.F, rel.G)
        cert = q_gosper(ratio(t))
        assert same_term(mul_rational(t, cert.R), mul_rational(rel.F, R("b/(a*z-b)")))

    def test_3psi3_raw_iteration_fails(self):
        rel = build_iteration("3psi3", "d->d/q")
        t = combine_similar(rel.F, rel.G)
        with pytest.raises(NotSummable):
            q_gosper(t)
        form = qgp_decompose(None, split=split_term_ratio(t))
        assert solve_key_equation(form) is None

    def test_term_and_ratio_agree(self):
        rel = build_iteration("2psi2", "b->b/q")
        t = combine_similar(rel.F, rel.G)
        assert q_gosper(t).R == q_gosper(ratio(t)).R

    def test_cancellation(self):
        token = CancelToken()
        token.cancel()
        with pytest.raises(Cancelled):
            q_gosper(R("z"), token)

    def test_certificate_checks_detect_wrong_r(self):
        cert = GosperCertificate(R("1/(z-2)"), R("z"))
        assert not cert.check()
        assert not cert.check(exact=False)

    def test_summand_itself_not_summable(self):
        with pytest.raises(NotSummable):
            q_gosper(lookup("1psi1").summand)


def test_constructed_summable_terms():
    rng = random.Random(2024)
    q = symbol("q")
    for _ in range(50):
        t, z = summable_term(rng)
        cert = q_gosper(t)
        # exact symbolic identity R(qx) r(x) - R(x) = 1
        assert (substitute_x(cert.R, q) * ratio(t) - cert.R - 1).is_zero()
        assert same_term(mul_rational(t, cert.R), z)
