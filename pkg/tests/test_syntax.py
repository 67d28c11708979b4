import pytest

from qtelescope.catalog import default_catalog
from qtelescope.qterm import same_term, symmetrize
from qtelescope.syntax import (
    TermSyntaxError,
    UnknownSymbol,
    format_substitution,
    format_term,
    parse_param,
    parse_ratx,
    parse_substitution,
    parse_term,
    parse_term_expr,
    print_term_expr,
    term_expr_of,
)


def test_1psi1_summand():
    assert same_term(parse_term("poch(a)*poch(b)^-1*geom(z)"), default_catalog().lookup("1psi1").summand)


def test_symmetrized_3psi3():
    src = "pre((1+x)/2)*poch(b)*poch(c)*poch(d)*poch(q/b)^-1*poch(q/c)^-1*poch(q/d)^-1*geom(q/(b*c*d))"
    assert same_term(parse_term(src), symmetrize(default_catalog().lookup("3psi3").summand))


def test_unclosed_paren_reports_column():
    with pytest.raises(TermSyntaxError) as exc:
        parse_term("poch(")
    assert exc.value.line == 1
    assert exc.value.column == 6


@pytest.mark.parametrize(
    "src",
    ["poch(a", "poch(a)^", "geom()", "qquad(x)", "foo(a)", "poch(a)**2", "pre(1/)", "poch(a)*"],
)
def test_malformed(src):
    with pytest.raises(TermSyntaxError):
        parse_term(src)


def test_undeclared_symbol_rejected():
    with pytest.raises(UnknownSymbol):
        parse_term("geom(zz9)")


def test_x_only_inside_pre():
    with pytest.raises(TermSyntaxError):
        parse_term("geom(x)")
    parse_term("pre(1-x)")


def test_declared_list():
    with pytest.raises(UnknownSymbol):
        parse_param("a*b", declared=("a", "q"), declare_new=False)


def test_substitution_syntax():
    sub = parse_substitution("b->b*q, c->c/q")
    assert format_substitution(sub) == "b->q*b, c->c/q"
    with pytest.raises(TermSyntaxError):
        parse_substitution("b=>b*q")


def test_rational_literals():
    assert parse_param("3/4*a") == parse_param("a*3/4")
    assert parse_ratx("x^-1") == 1 / parse_ratx("x")


@pytest.mark.parametrize("rec", default_catalog().records(), ids=lambda r: r.name)
def test_round_trip_catalog_summands(rec):
    t = rec.summand
    again = parse_term(format_term(t), support=t.support)
    assert again == t
    assert format_term(again) == format_term(t)


def test_term_expr_round_trip():
    te = parse_term_expr("const(2)*poch(a)^2*poch(b)^-1*geom(z)*qquad(-1)*pre(1-x)")
    assert parse_term_expr(print_term_expr(te)) == te
    t = te.to_qterm()
    assert term_expr_of(t).to_qterm() == t
