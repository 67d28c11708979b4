"""Exact coefficient arithmetic.

The coefficient field is F = Q(q, a, b, ...) with every symbol treated as an
independent transcendental.  Rational functions in the shift variable
``x`` (standing for ``q**k``) live in F(x).  Both are stored as reduced
fractions of integer multivariate polynomials in one global lexicographic
ring whose generator list starts ``q, x`` and grows as new parameter symbols
are declared.  The sparse polynomial kernels (multiplication, gcd,
factorisation) are sympy's; everything above them is built here.
"""

from __future__ import annotations

import re
import threading
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Mapping, Sequence

from sympy import QQ, ZZ, Symbol
from sympy.polys.fields import FracField
from sympy.polys.orderings import lex
from sympy.polys.modulargcd import modgcd_multivariate
from sympy.polys.polyerrors import HeuristicGCDFailed
from sympy.polys.rings import PolyElement, PolyRing

Rat = Fraction


def _gcd_zz(f, g, _heuristic=PolyElement._gcd_ZZ):
    # sympy's ring gcd over ZZ is heuristic only and gives up on some inputs
    try:
        return _heuristic(f, g)
    except HeuristicGCDFailed:
        return modgcd_multivariate(f, g)


PolyElement._gcd_ZZ = _gcd_zz

__all__ = [
    "Rat",
    "DivisionByZero",
    "EvalPole",
    "SymbolTable",
    "SYMBOLS",
    "MPoly",
    "ParamElem",
    "RatX",
    "PolyX",
    "symbol",
    "X",
    "mpoly_arith",
    "pfield_arith",
    "polyx_gcd",
    "polyx_resultant",
    "substitute_x",
    "eval_numeric",
    "solve_linear",
    "factor_ratx",
]

SYMBOL_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
RESERVED = ("q", "x")
DEFAULT_SYMBOLS = ("q", "x", "a", "b", "c", "d", "e", "z", "w", "ra")


class DivisionByZero(ZeroDivisionError):
    pass


class EvalPole(ArithmeticError):
    """A denominator vanished at the requested numeric point."""

    def __init__(self, message: str = "denominator vanishes", k: int | None = None):
        super().__init__(message if k is None else f"{message} (k={k})")
        self.k = k


class SymbolTable:
    """Append-only, globally ordered symbol list backing the coefficient ring.

    Symbols are only ever appended, so an element built before a new symbol
    was declared is lifted into the larger ring by zero-padding exponent
    vectors; the lexicographic order of existing monomials is unchanged.
    """

    def __init__(self, names: Iterable[str]):
        self._lock = threading.Lock()
        self._names: tuple[str, ...] = ()
        self._field: FracField | None = None
        self._qq: PolyRing | None = None
        self.declare(*names)

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def field(self) -> FracField:
        return self._field

    @property
    def qq_ring(self) -> PolyRing:
        return self._qq

    def index(self, name: str) -> int:
        try:
            return self._names.index(name)
        except ValueError:
            raise KeyError(f"undeclared symbol {name!r}") from None

    def declare(self, *names: str) -> None:
        new = [n for n in dict.fromkeys(names) if n not in self._names]
        if not new:
            return
        for n in new:
            if not SYMBOL_RE.match(n):
                raise ValueError(f"invalid symbol name {n!r}")
        with self._lock:
            names_ = self._names + tuple(n for n in new if n not in self._names)
            syms = tuple(Symbol(n) for n in names_)
            self._field = FracField(syms, ZZ, lex)
            self._qq = PolyRing(syms, QQ, lex)
            self._names = names_


SYMBOLS = SymbolTable(DEFAULT_SYMBOLS)
_X_INDEX = 1


# ---------------------------------------------------------------------------
# lifting between rings of different generator counts


def _pad_poly(p, ring):
    n = ring.ngens
    if p.ring is ring:
        return p
    return ring.from_dict({m + (0,) * (n - len(m)): c for m, c in p.items()})


def _lift(fe):
    field = SYMBOLS.field
    if fe.field is field:
        return fe
    return field.raw_new(_pad_poly(fe.numer, field.ring), _pad_poly(fe.denom, field.ring))


def _poly_key(p) -> tuple:
    out = []
    for m, c in p.items():
        m = tuple(m)
        while m and m[-1] == 0:
            m = m[:-1]
        out.append((m, int(c)))
    out.sort()
    return tuple(out)


# ---------------------------------------------------------------------------
# multivariate polynomials with rational coefficients


class MPoly:
    """Polynomial over Q in the declared symbols (no ``x``)."""

    __slots__ = ("_p",)

    def __init__(self, value=0):
        ring = SYMBOLS.qq_ring
        if isinstance(value, MPoly):
            self._p = _pad_poly(value._p, ring)
        elif isinstance(value, (int, Fraction)):
            self._p = ring(QQ(value.numerator, value.denominator)) if isinstance(value, Fraction) else ring(value)
        elif isinstance(value, str):
            SYMBOLS.declare(value)
            ring = SYMBOLS.qq_ring
            self._p = ring.gens[SYMBOLS.index(value)]
        else:
            # from_dict converts the coefficients into the target domain
            self._p = _pad_poly(value, ring)

    @classmethod
    def from_dict(cls, terms: Mapping[tuple[int, ...], Fraction | int]) -> "MPoly":
        ring = SYMBOLS.qq_ring
        n = ring.ngens
        d = {}
        for m, c in terms.items():
            if any(e < 0 for e in m):
                raise ValueError("negative exponent in polynomial")
            c = Fraction(c)
            if c:
                d[tuple(m) + (0,) * (n - len(m))] = QQ(c.numerator, c.denominator)
        return cls(ring.from_dict(d))

    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return {
            m: Fraction(int(c.numerator), int(c.denominator)) for m, c in self._p.items()
        }

    def _other(self, other):
        if not isinstance(other, MPoly):
            other = MPoly(other)
        ring = SYMBOLS.qq_ring
        return _pad_poly(self._p, ring), _pad_poly(other._p, ring)

    def __add__(self, other):
        a, b = self._other(other)
        return MPoly(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._other(other)
        return MPoly(a - b)

    def __rsub__(self, other):
        a, b = self._other(other)
        return MPoly(b - a)

    def __mul__(self, other):
        a, b = self._other(other)
        return MPoly(a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return MPoly(-self._p)

    def __pow__(self, n: int):
        return MPoly(self._p**n)

    def __eq__(self, other):
        if not isinstance(other, (MPoly, int, Fraction)):
            return NotImplemented
        a, b = self._other(other)
        return a == b

    def __hash__(self):
        return hash(frozenset(self.terms().items()))

    def is_zero(self) -> bool:
        return not self._p

    def __bool__(self):
        return bool(self._p)

    def __repr__(self):
        return f"MPoly({self})"

    def __str__(self):
        return _format_poly(self._p)

    def to_param(self) -> "ParamElem":
        den = self._p.clear_denoms()
        c, p = den
        field = SYMBOLS.field
        num = _pad_poly(p, field.ring)
        return ParamElem._from_frac(field.new(num, field.ring(int(c))))


def mpoly_arith(lhs: MPoly, rhs: MPoly, op: str) -> MPoly:
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        return lhs * rhs
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# formatting in the term mini-language


def _format_monomial(m, c, names, with_coeff=True) -> str:
    factors = []
    for i, e in enumerate(m):
        if e:
            factors.append(names[i] if e == 1 else f"{names[i]}^{e}")
    c = Fraction(int(getattr(c, "numerator", c)), int(getattr(c, "denominator", 1)))
    sign = "-" if c < 0 else ""
    c = abs(c)
    if not factors:
        return sign + str(c)
    if c != 1:
        factors.insert(0, str(c))
    return sign + "*".join(factors)


def _format_poly(p) -> str:
    if not p:
        return "0"
    names = [str(s) for s in p.ring.symbols]
    parts = []
    for m, c in p.terms():
        s = _format_monomial(m, c, names)
        if parts:
            parts.append(("- " + s[1:]) if s.startswith("-") else ("+ " + s))
        else:
            parts.append(s)
    return " ".join(parts).replace(" ", "")


def _is_atomic(p) -> bool:
    if len(p) != 1:
        return False
    (m, c), = p.items()
    nz = sum(1 for e in m if e)
    return (c == 1 and nz <= 1) or nz == 0 and c > 0


def _format_frac(fe) -> str:
    num, den = fe.numer, fe.denom
    ns = _format_poly(num)
    if den == 1:
        return ns
    if len(num) > 1:
        ns = f"({ns})"
    ds = _format_poly(den)
    if not _is_atomic(den):
        ds = f"({ds})"
    return f"{ns}/{ds}"


# ---------------------------------------------------------------------------
# field elements


def _coerce_frac(value):
    field = SYMBOLS.field
    if isinstance(value, _FieldElem):
        return _lift(value._f)
    if isinstance(value, bool):
        raise TypeError("bool is not a field element")
    if isinstance(value, int):
        return field(value)
    if isinstance(value, Fraction):
        return field.new(field.ring(value.numerator), field.ring(value.denominator))
    if isinstance(value, str):
        return _coerce_frac(symbol(value))
    raise TypeError(f"cannot coerce {type(value).__name__} to a field element")


def _normal(field, num, den):
    if den.LC < 0:
        num, den = -num, -den
    return field.raw_new(num, den)


def _fmul(f, g):
    """Product of reduced fractions, cancelling crosswise only."""
    if not f or not g:
        return f.field.zero
    _, n1, d2 = f.numer.cofactors(g.denom)
    _, n2, d1 = g.numer.cofactors(f.denom)
    return _normal(f.field, n1 * n2, d1 * d2)


def _fdiv(f, g):
    return _fmul(f, g.field.raw_new(g.denom, g.numer))


def _fadd(f, g):
    """Sum of reduced fractions; any common factor of the result divides gcd(d1, d2)."""
    if not f:
        return g
    if not g:
        return f
    d, c1, c2 = f.denom.cofactors(g.denom)
    num = f.numer * c2 + g.numer * c1
    if not num:
        return f.field.zero
    _, num, d = num.cofactors(d)
    return _normal(f.field, num, d * c1 * c2)


class _FieldElem:
    __slots__ = ("_f", "_k")

    def __init__(self, value=0):
        self._f = _coerce_frac(value)
        self._k = None
        self._check()

    def _check(self):
        pass

    @classmethod
    def _from_frac(cls, fe):
        obj = object.__new__(cls)
        obj._f = fe
        obj._k = None
        obj._check()
        return obj

    @property
    def frac(self):
        """Underlying sympy fraction, lifted into the current ring."""
        self._f = _lift(self._f)
        return self._f

    def _result(self, fe, other):
        cls = RatX if isinstance(self, RatX) or isinstance(other, RatX) else ParamElem
        return cls._from_frac(fe)

    def _binary(self, other):
        try:
            o = _coerce_frac(other)
        except TypeError:
            return None
        return o

    def __add__(self, other):
        o = self._binary(other)
        if o is None:
            return NotImplemented
        return self._result(_fadd(self.frac, o), other)

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        o = self._binary(other)
        if o is None:
            return NotImplemented
        return self._result(_fadd(self.frac, -o), other)

    def __rsub__(self, other):
        o = self._binary(other)
        if o is None:
            return NotImplemented
        return self._result(_fadd(o, -self.frac), other)

    def __mul__(self, other):
        o = self._binary(other)
        if o is None:
            return NotImplemented
        return self._result(_fmul(self.frac, o), other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        o = self._binary(other)
        if o is None:
            return NotImplemented
        if not o:
            raise DivisionByZero("division by zero field element")
        return self._result(_fdiv(self.frac, o), other)

    def __rtruediv__(self, other):
        o = self._binary(other)
        if o is None:
            return NotImplemented
        if not self.frac:
            raise DivisionByZero("division by zero field element")
        return self._result(_fdiv(o, self.frac), other)

    def __neg__(self):
        return type(self)._from_frac(-self.frac)

    def __pos__(self):
        return self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0 and not self.frac:
            raise DivisionByZero("negative power of zero")
        return type(self)._from_frac(self.frac**n)

    def inverse(self):
        if not self.frac:
            raise DivisionByZero("zero has no inverse")
        return type(self)._from_frac(1 / self.frac)

    def __bool__(self):
        return bool(self._f)

    def is_zero(self) -> bool:
        return not self._f

    def is_one(self) -> bool:
        return self._f == 1

    def key(self) -> tuple:
        if self._k is None:
            self._k = (_poly_key(self._f.numer), _poly_key(self._f.denom))
        return self._k

    def __eq__(self, other):
        if isinstance(other, _FieldElem):
            return self.key() == other.key()
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.frac == _coerce_frac(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        return _format_frac(self._f)

    def __repr__(self):
        return f"{type(self).__name__}({str(self)!r})"

    # structural queries -------------------------------------------------

    def symbols_used(self) -> set[str]:
        names = SYMBOLS.names
        out = set()
        for p in (self._f.numer, self._f.denom):
            for m in p.itermonoms():
                out.update(names[i] for i, e in enumerate(m) if e)
        return out

    @property
    def num(self) -> MPoly:
        return MPoly(self.frac.numer)

    @property
    def den(self) -> MPoly:
        return MPoly(self.frac.denom)

    def is_monomial(self) -> bool:
        return len(self.frac.numer) == 1 and len(self.frac.denom) == 1

    def q_content(self) -> int:
        """Exponent of the largest power of q dividing this element."""
        fe = self.frac
        if not fe.numer:
            raise ValueError("zero has no q-content")
        return min(m[0] for m in fe.numer.itermonoms()) - min(m[0] for m in fe.denom.itermonoms())

    def q_power(self) -> int | None:
        """If this element equals q**j exactly, return j."""
        fe = self.frac
        if len(fe.numer) != 1 or len(fe.denom) != 1:
            return None
        (mn, cn), = fe.numer.items()
        (md, cd), = fe.denom.items()
        if cn != 1 or cd != 1 or any(mn[1:]) or any(md[1:]):
            return None
        return mn[0] - md[0]

    def evaluate(self, assignment: Mapping[str, Fraction], xval=None) -> Fraction:
        return eval_numeric(self, assignment, xval)

    def substitute(self, mapping: Mapping[str, "ParamElem"]):
        """Simultaneous substitution of symbols by field elements."""
        if not mapping:
            return self
        fe = self.frac
        field = fe.field
        names = SYMBOLS.names
        images = []
        for i, n in enumerate(names):
            if n in mapping:
                images.append(_coerce_frac(mapping[n]))
            else:
                images.append(field.gens[i])
        num = _eval_poly_at(fe.numer, images, field)
        den = _eval_poly_at(fe.denom, images, field)
        if not den:
            raise DivisionByZero("substitution makes a denominator vanish")
        return type(self)._from_frac(num / den)


def _eval_poly_at(p, images, field):
    touched = [i for i, g in enumerate(images) if g != field.gens[i]]
    if not touched:
        return field(p)
    # group by the touched exponents so the untouched part stays polynomial
    groups: dict[tuple, dict] = {}
    for m, c in p.items():
        key = tuple(m[i] for i in touched)
        rest = list(m)
        for i in touched:
            rest[i] = 0
        groups.setdefault(key, {})[tuple(rest)] = c
    ring = field.ring
    powcache: dict[tuple[int, int], object] = {}

    def power(i, e):
        k = (i, e)
        if k not in powcache:
            powcache[k] = images[i] ** e
        return powcache[k]

    total = field(0)
    for key, rest in groups.items():
        term = field(ring.from_dict(rest))
        for i, e in zip(touched, key):
            if e:
                term = term * power(i, e)
        total = total + term
    return total


class ParamElem(_FieldElem):
    """Element of the coefficient field Q(q, parameters); never involves x."""

    __slots__ = ()

    def _check(self):
        fe = self._f
        if fe.numer.degree(_X_INDEX) > 0 or fe.denom.degree(_X_INDEX) > 0:
            raise ValueError("ParamElem may not depend on x")


class RatX(_FieldElem):
    """Rational function in x over the coefficient field."""

    __slots__ = ()

    @classmethod
    def x(cls) -> "RatX":
        return cls._from_frac(SYMBOLS.field.gens[_X_INDEX])

    def degree_x(self) -> int:
        """Degree of numerator minus degree of denominator in x."""
        fe = self.frac
        return fe.numer.degree(_X_INDEX) - fe.denom.degree(_X_INDEX)

    def is_constant(self) -> bool:
        fe = self.frac
        return fe.numer.degree(_X_INDEX) <= 0 and fe.denom.degree(_X_INDEX) <= 0

    def as_param(self) -> ParamElem:
        if not self.is_constant():
            raise ValueError("rational function depends on x")
        return ParamElem._from_frac(self.frac)

    def is_polynomial(self) -> bool:
        return self.frac.denom.degree(_X_INDEX) <= 0

    def numer_polyx(self) -> "PolyX":
        """Numerator with the normalisation making the denominator monic in x."""
        num, den = _split_x(self.frac.numer), _split_x(self.frac.denom)
        lc = den[max(den)]
        field = SYMBOLS.field
        return PolyX._from_split(num, field(lc))

    def denom_polyx(self) -> "PolyX":
        den = _split_x(self.frac.denom)
        lc = den[max(den)]
        return PolyX._from_split(den, SYMBOLS.field(lc))

    def at_x(self, value) -> ParamElem:
        """Value of the rational function at x = value (a field element)."""
        v = _coerce_frac(value)
        field = SYMBOLS.field
        fe = self.frac

        def ev(p):
            acc = field(0)
            for d, c in _split_x(p).items():
                acc = acc + field(c) * v**d
            return acc

        den = ev(fe.denom)
        if not den:
            raise DivisionByZero("pole at the requested x")
        return ParamElem._from_frac(ev(fe.numer) / den)

    def substitute_x(self, scale) -> "RatX":
        return substitute_x(self, scale)

    def specialize(self, assignment: Mapping[str, Fraction]) -> tuple[list[Fraction], list[Fraction]]:
        """Numeric coefficient lists (low degree first) of numerator and denominator in x."""
        vals = _assignment_vector(assignment, self.symbols_used() - {"x"})
        fe = self.frac
        return _specialize_poly(fe.numer, vals), _specialize_poly(fe.denom, vals)


def symbol(name: str) -> ParamElem:
    if name == "x":
        raise ValueError("x is reserved for q**k; use RatX.x()")
    SYMBOLS.declare(name)
    field = SYMBOLS.field
    return ParamElem._from_frac(field.gens[SYMBOLS.index(name)])


def X() -> RatX:
    return RatX.x()


def pfield_arith(lhs: ParamElem, rhs: ParamElem, op: str) -> ParamElem:
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        return lhs * rhs
    if op == "div":
        return lhs / rhs
    raise ValueError(f"unknown op {op!r}")


def _split_x(p) -> dict[int, object]:
    """Split an integer polynomial by its degree in x (x-free coefficients)."""
    ring = p.ring
    groups: dict[int, dict] = {}
    for m, c in p.items():
        d = m[_X_INDEX]
        mm = m[:_X_INDEX] + (0,) + m[_X_INDEX + 1 :]
        groups.setdefault(d, {})[mm] = c
    if not groups:
        return {0: ring(0)}
    return {d: ring.from_dict(t) for d, t in groups.items()}


# ---------------------------------------------------------------------------
# numeric evaluation


def _assignment_vector(assignment: Mapping[str, Fraction], needed: Iterable[str]) -> list:
    names = SYMBOLS.names
    missing = [n for n in needed if n not in assignment]
    if missing:
        raise KeyError(f"assignment is missing symbols {sorted(missing)}")
    return [Fraction(assignment[n]) if n in assignment else None for n in names]


def _eval_int_poly(p, vals) -> Fraction:
    total = Fraction(0)
    cache: dict[tuple[int, int], Fraction] = {}
    for m, c in p.items():
        t = Fraction(int(c))
        for i, e in enumerate(m):
            if e:
                k = (i, e)
                v = cache.get(k)
                if v is None:
                    v = cache[k] = vals[i] ** e
                t *= v
        total += t
    return total


def _specialize_poly(p, vals) -> list[Fraction]:
    out: dict[int, Fraction] = {}
    for m, c in p.items():
        t = Fraction(int(c))
        for i, e in enumerate(m):
            if e and i != _X_INDEX:
                t *= vals[i] ** e
        d = m[_X_INDEX]
        out[d] = out.get(d, Fraction(0)) + t
    n = max(out) + 1 if out else 1
    return [out.get(i, Fraction(0)) for i in range(n)]


def horner(coeffs: Sequence[Fraction], xv: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * xv + c
    return acc


def eval_numeric(e, assignment: Mapping[str, Fraction], xval=None) -> Fraction:
    """Exact value of a field element or rational function at a rational point."""
    assignment = dict(assignment)
    needed = e.symbols_used()
    if "x" in needed:
        if xval is None:
            raise KeyError("x value required")
        assignment["x"] = Fraction(xval)
    vals = _assignment_vector(assignment, needed)
    fe = e.frac
    den = _eval_int_poly(fe.denom, vals)
    if den == 0:
        raise EvalPole()
    return _eval_int_poly(fe.numer, vals) / den


def product(items, cls=None):
    """prod b**e over (b, e) pairs with a single cancellation at the end.

    Multiplying through the fraction field runs a gcd at every step, which
    dominates for long products of sizeable factors.
    """
    field = SYMBOLS.field
    ring = field.ring
    num, den = ring.one, ring.one
    out_cls = cls or ParamElem
    for b, e in items:
        if isinstance(b, RatX):
            out_cls = RatX
        fe = _coerce_frac(b)
        n, d = (fe.numer, fe.denom) if e >= 0 else (fe.denom, fe.numer)
        if not n:
            raise DivisionByZero("zero to a negative power")
        num = num * n ** abs(e)
        den = den * d ** abs(e)
    return out_cls._from_frac(field.new(num, den))


# ---------------------------------------------------------------------------
# univariate polynomials in x


class PolyX:
    """Polynomial in x; ``coeffs[i]`` is the coefficient of ``x**i``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [c if isinstance(c, ParamElem) else ParamElem(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs: tuple[ParamElem, ...] = tuple(cs)

    @classmethod
    def _from_split(cls, parts: dict, scale_fe) -> "PolyX":
        field = SYMBOLS.field
        n = max(parts) + 1
        cs = []
        for i in range(n):
            p = parts.get(i)
            cs.append(ParamElem._from_frac(field(p) / scale_fe) if p else ParamElem(0))
        return cls(cs)

    @classmethod
    def from_ratx(cls, r: RatX) -> "PolyX":
        if not r.is_polynomial():
            raise ValueError("not a polynomial in x")
        fe = r.frac
        return cls._from_split(_split_x(fe.numer), SYMBOLS.field(fe.denom))

    def to_ratx(self) -> RatX:
        field = SYMBOLS.field
        xg = field.gens[_X_INDEX]
        acc = field(0)
        for c in reversed(self.coeffs):
            acc = acc * xg + c.frac
        return RatX._from_frac(acc)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def valuation(self) -> int:
        for i, c in enumerate(self.coeffs):
            if not c.is_zero():
                return i
        raise ValueError("zero polynomial has no valuation")

    def lc(self) -> ParamElem:
        return self.coeffs[-1] if self.coeffs else ParamElem(0)

    def tc(self) -> ParamElem:
        return self.coeffs[self.valuation()]

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def monic(self) -> "PolyX":
        if not self.coeffs:
            return self
        lc = self.lc()
        return PolyX(c / lc for c in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, PolyX):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other: "PolyX") -> "PolyX":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (ParamElem(0),) * (n - len(self.coeffs))
        b = other.coeffs + (ParamElem(0),) * (n - len(other.coeffs))
        return PolyX(x + y for x, y in zip(a, b))

    def __neg__(self):
        return PolyX(-c for c in self.coeffs)

    def __sub__(self, other: "PolyX") -> "PolyX":
        return self + (-other)

    def __mul__(self, other) -> "PolyX":
        if not isinstance(other, PolyX):
            return PolyX(c * other for c in self.coeffs)
        if not self.coeffs or not other.coeffs:
            return PolyX()
        out = [ParamElem(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return PolyX(out)

    __rmul__ = __mul__

    def divmod(self, other: "PolyX") -> tuple["PolyX", "PolyX"]:
        if not other.coeffs:
            raise DivisionByZero("polynomial division by zero")
        r = list(self.coeffs)
        dq = other.degree
        lc = other.lc()
        quo = [ParamElem(0)] * max(len(r) - dq, 1)
        for i in range(len(r) - 1, dq - 1, -1):
            c = r[i]
            if c.is_zero():
                continue
            f = c / lc
            quo[i - dq] = f
            for j, b in enumerate(other.coeffs):
                r[i - dq + j] = r[i - dq + j] - f * b
        return PolyX(quo), PolyX(r[:dq] if dq > 0 else [])

    def __call__(self, value):
        acc = ParamElem(0)
        for c in reversed(self.coeffs):
            acc = acc * value + c
        return acc

    def scale_x(self, s) -> "PolyX":
        """f(s*x)."""
        out, p = [], ParamElem(1)
        for c in self.coeffs:
            out.append(c * p)
            p = p * s
        return PolyX(out)

    def __repr__(self):
        return f"PolyX({str(self.to_ratx())!r})"

    __str__ = lambda self: str(self.to_ratx())


def polyx_gcd(f: PolyX, g: PolyX) -> PolyX:
    """Monic gcd by the Euclidean algorithm over F, normalising to monic each step."""
    if f.is_zero() and g.is_zero():
        raise ValueError("gcd(0, 0) is undefined")
    a, b = f.monic(), g.monic()
    if a.degree < b.degree:
        a, b = b, a
    while b:
        _, r = a.divmod(b)
        a, b = b, r.monic()
    return a.monic()


def polyx_resultant(f: PolyX, g: PolyX) -> ParamElem:
    """Resultant with the convention ``Res(f, g) = lc(g)**deg f * prod f(roots of g)``.

    Computed with the subresultant PRS; the standard convention
    ``lc(f)**deg g * prod g(roots of f)`` differs by ``(-1)**(deg f * deg g)``.
    """
    if f.is_zero() or g.is_zero():
        raise ValueError("resultant of a zero polynomial")
    sign = -1 if (f.degree * g.degree) % 2 else 1
    return sign * _subresultant(f, g)


def _prem(a: PolyX, b: PolyX) -> PolyX:
    delta = a.degree - b.degree
    scaled = a * (b.lc() ** (delta + 1))
    return scaled.divmod(b)[1]


def _subresultant(a: PolyX, b: PolyX) -> ParamElem:
    # standard convention lc(a)^deg b * prod b(roots of a)
    if a.degree == 0 and b.degree == 0:
        return ParamElem(1)
    s = 1
    if a.degree < b.degree:
        a, b = b, a
        if a.degree % 2 and b.degree % 2:
            s = -1
    if b.degree == 0:
        return s * b.lc() ** a.degree
    g = h = ParamElem(1)
    while True:
        delta = a.degree - b.degree
        if a.degree % 2 and b.degree % 2:
            s = -s
        r = _prem(a, b)
        if r.is_zero():
            return ParamElem(0)
        a, b = b, r * (1 / (g * h**delta))
        g = a.lc()
        h = h ** (1 - delta) * g**delta if delta <= 1 else g**delta / h ** (delta - 1)
        if b.degree == 0:
            h = b.lc() ** a.degree / h ** (a.degree - 1) if a.degree >= 1 else ParamElem(1)
            return s * h


def substitute_x(f, scale, invert: bool = False) -> RatX:
    """``f(scale*x)``, or ``f(scale/x)`` when ``invert`` is set."""
    if not isinstance(scale, _FieldElem):
        scale = ParamElem(scale)
    if scale.is_zero():
        raise ValueError("scale must be nonzero")
    fe = f.frac if isinstance(f, _FieldElem) else _coerce_frac(f)
    field = SYMBOLS.field
    xg = field.gens[_X_INDEX]
    s = scale.frac
    arg = s / xg if invert else s * xg

    def comp(p):
        parts = _split_x(p)
        acc = field(0)
        for d, c in parts.items():
            acc = acc + field(c) * arg**d
        return acc

    return RatX._from_frac(comp(fe.numer) / comp(fe.denom))


# ---------------------------------------------------------------------------
# fraction-free linear algebra


def solve_linear(rows: Sequence[Sequence[ParamElem]], rhs: Sequence[ParamElem]):
    """Solve ``rows * s = rhs`` over F by fraction-free (Bareiss) elimination.

    Returns one solution (free variables set to zero) or ``None`` when the
    system is inconsistent.
    """
    m = len(rows)
    n = len(rows[0]) if rows else 0
    ring = SYMBOLS.field.ring
    mat = []
    for row, b in zip(rows, rhs):
        fes = [_coerce_frac(v) for v in list(row) + [b]]
        den = reduce(lambda u, v: u.lcm(v), (fe.denom for fe in fes), ring(1))
        mat.append([fe.numer * den.exquo(fe.denom) for fe in fes])
    pivots = []
    prev = ring(1)
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, m) if mat[i][col]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        p = mat[r][col]
        for i in range(r + 1, m):
            a = mat[i][col]
            row_i = mat[i]
            row_r = mat[r]
            for j in range(col, n + 1):
                row_i[j] = (p * row_i[j] - a * row_r[j]).exquo(prev)
        # columns left of col in rows below are already zero
        prev = p
        pivots.append(col)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if mat[i][n]:
            return None
    field = SYMBOLS.field
    if r == 0:
        return [ParamElem(0)] * n
    # fraction-free back substitution: s_j = num_j / det with det the last pivot
    det = mat[r - 1][pivots[r - 1]]
    nums = [ring(0)] * n
    for i in range(r - 1, -1, -1):
        col = pivots[i]
        acc = det * mat[i][n]
        for j in range(col + 1, n):
            if mat[i][j] and nums[j]:
                acc = acc - mat[i][j] * nums[j]
        nums[col] = acc.exquo(mat[i][col])
    sol = [field.new(v, det) if v else field(0) for v in nums]
    return [ParamElem._from_frac(v) for v in sol]


# ---------------------------------------------------------------------------
# factorisation in x


@lru_cache(maxsize=4096)
def factor_ratx(r: RatX):
    """Split ``r`` as ``const * x**m * prod (1 - u*x)**e * prod phi(x)**e``.

    Returns ``(const, m, linear, other)`` with ``linear`` a list of ``(u, e)``
    and ``other`` a list of ``(phi, e)`` for irreducible factors of degree at
    least two in x, each normalised to ``phi(0) = 1``.
    """
    fe = r.frac
    if not fe.numer:
        raise ValueError("cannot factor zero")
    field = SYMBOLS.field
    const = field(1)
    xpow = 0
    linear: dict[ParamElem, int] = {}
    other: dict[RatX, int] = {}
    for poly, sign in ((fe.numer, 1), (fe.denom, -1)):
        content, facs = poly.factor_list()
        const = const * field(int(content)) ** sign
        for phi, mult in facs:
            e = sign * mult
            parts = _split_x(phi)
            deg = max(parts)
            if deg == 0:
                const = const * field(phi) ** e
                continue
            c0 = parts.get(0)
            if not c0:
                # irreducible with phi(0) = 0 is an associate of x
                const = const * field(parts[1]) ** e
                xpow += e
                continue
            const = const * field(c0) ** e
            if deg == 1:
                u = ParamElem._from_frac(-field(parts[1]) / field(c0))
                linear[u] = linear.get(u, 0) + e
            else:
                norm = RatX._from_frac(field(phi) / field(c0))
                other[norm] = other.get(norm, 0) + e
    lin = sorted(((u, e) for u, e in linear.items() if e), key=lambda t: str(t[0]))
    oth = sorted(((f, e) for f, e in other.items() if e), key=lambda t: str(t[0]))
    return ParamElem._from_frac(const), xpow, lin, oth


# ---------------------------------------------------------------------------
# factored field elements


class Factored:
    """A field element kept as ``unit * prod p_i**e_i`` with irreducible p_i.

    Equality compares the factor multisets, so long products of binomials
    (iteration multipliers) can be compared without expanding them.
    """

    __slots__ = ("unit", "parts")

    def __init__(self, unit=1, parts: Mapping["ParamElem", int] | None = None):
        self.unit = Fraction(unit)
        self.parts: dict[ParamElem, int] = {p: e for p, e in (parts or {}).items() if e}

    @classmethod
    def of(cls, value) -> "Factored":
        if isinstance(value, Factored):
            return value
        v = value if isinstance(value, ParamElem) else ParamElem(value)
        if v.is_zero():
            raise DivisionByZero("zero has no factorisation")
        return _factor_param(v)

    def __mul__(self, other) -> "Factored":
        other = Factored.of(other)
        parts = dict(self.parts)
        for p, e in other.parts.items():
            parts[p] = parts.get(p, 0) + e
        return Factored(self.unit * other.unit, parts)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Factored":
        if n < 0 and self.unit == 0:
            raise DivisionByZero("zero to a negative power")
        return Factored(self.unit**n, {p: e * n for p, e in self.parts.items()})

    def inverse(self) -> "Factored":
        return self**-1

    def __truediv__(self, other) -> "Factored":
        return self * Factored.of(other).inverse()

    def __rtruediv__(self, other) -> "Factored":
        return Factored.of(other) * self.inverse()

    def __eq__(self, other):
        if isinstance(other, (ParamElem, int, Fraction)):
            other = Factored.of(other)
        if not isinstance(other, Factored):
            return NotImplemented
        return self.unit == other.unit and self.parts == other.parts

    def __hash__(self):
        return hash((self.unit, frozenset(self.parts.items())))

    def is_one(self) -> bool:
        return self.unit == 1 and not self.parts

    def expand(self) -> "ParamElem":
        return product([(ParamElem(self.unit), 1), *self.parts.items()])

    def substitute(self, mapping: Mapping[str, "ParamElem"]) -> "Factored":
        acc = Factored(self.unit)
        for p, e in self.parts.items():
            acc = acc * Factored.of(p.substitute(mapping)) ** e
        return acc

    def evaluate(self, assignment: Mapping[str, Fraction]) -> Fraction:
        val = self.unit
        for p, e in self.parts.items():
            v = p.evaluate(assignment)
            if v == 0 and e < 0:
                raise EvalPole()
            val *= v**e
        return val

    def __str__(self):
        out = [] if self.unit == 1 and self.parts else [str(self.unit)]
        for p, e in sorted(self.parts.items(), key=lambda t: str(t[0])):
            s = str(p)
            s = s if _is_atomic_str(s) else f"({s})"
            out.append(s if e == 1 else f"{s}^{e}")
        return "*".join(out)

    def __repr__(self):
        return f"Factored({str(self)!r})"


def _is_atomic_str(s: str) -> bool:
    return re.fullmatch(r"[a-z0-9_^]+", s) is not None


@lru_cache(maxsize=8192)
def _factor_param(v: "ParamElem") -> Factored:
    fe = v.frac
    field = SYMBOLS.field
    unit = Fraction(1)
    parts: dict[ParamElem, int] = {}
    for poly, sign in ((fe.numer, 1), (fe.denom, -1)):
        content, facs = poly.factor_list()
        unit *= Fraction(int(content)) ** sign
        for phi, mult in facs:
            # make each factor primitive with positive leading coefficient
            lc = phi.LC
            if lc < 0:
                phi = -phi
                unit *= Fraction(-1) ** (mult)
            key = ParamElem._from_frac(field(phi))
            parts[key] = parts.get(key, 0) + sign * mult
    return Factored(unit, parts)


__all__ += ["Factored", "product"]
