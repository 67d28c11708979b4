"""Term mini-language: parsing and printing.

Grammar::

    term   := atom ("*" atom)*
    atom   := "poch(" pexpr ")" ["^" sint] | "geom(" pexpr ")"
            | "qquad(" sint ")" | "pre(" rexpr ")" | "const(" pexpr ")"
    pexpr  := sum over symbols, with + - * / and ^sint, parentheses,
              integer literals (so "3/4" is a rational)
    rexpr  := as pexpr, additionally allowing the reserved variable x

Substitutions are written ``"b->b*q, d->d/q"``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .errors import QTelescopeError
from .exactalg import SYMBOLS, ParamElem, RatX, X, symbol
from .qterm import BILATERAL, QFactorial, QTerm, canonical

KEYWORDS = ("poch", "geom", "qquad", "pre", "const")


class TermSyntaxError(QTelescopeError, SyntaxError):
    def __init__(self, message: str, src: str, pos: int):
        line = src.count("\n", 0, pos) + 1
        col = pos - (src.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.reason = message
        self.line = line
        self.column = col


class UnknownSymbol(TermSyntaxError):
    pass


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[a-z][a-z0-9_]*)|(?P<arrow>->)|(?P<op>[-+*/^(),]))")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    out = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise TermSyntaxError(f"unexpected character {src[pos]!r}", src, pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append(Token(kind, m.group(kind), start))
        pos = m.end()
    out.append(Token("eof", "", n))
    return out


class _Parser:
    def __init__(self, src: str, allow_x: bool, declared: Iterable[str] | None, declare_new: bool):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.allow_x = allow_x
        self.declared = set(SYMBOLS.names if declared is None else declared) | {"q"}
        self.declare_new = declare_new

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise TermSyntaxError(msg, self.src, tok.pos)

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.text != text or t.kind == "eof":
            what = "end of input" if t.kind == "eof" else repr(t.text)
            self.error(f"expected {text!r}, found {what}")
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "eof":
            self.i += 1
            return True
        return False

    # expressions ---------------------------------------------------------

    def expr(self):
        if self.accept("-"):
            acc = -self.product()
        else:
            self.accept("+")
            acc = self.product()
        while True:
            if self.accept("+"):
                acc = acc + self.product()
            elif self.accept("-"):
                acc = acc - self.product()
            else:
                return acc

    def product(self):
        acc = self.power()
        while True:
            if self.accept("*"):
                acc = acc * self.power()
            elif self.tok.text == "/":
                t = self.tok
                self.i += 1
                d = self.power()
                if d.is_zero():
                    self.error("division by zero", t)
                acc = acc / d
            else:
                return acc

    def power(self):
        if self.accept("-"):
            return -self.power()
        base = self.primary()
        if self.accept("^"):
            t = self.tok
            e = self.sint()
            if e < 0 and base.is_zero():
                self.error("negative power of zero", t)
            base = base**e
        return base

    def sint(self) -> int:
        if self.accept("("):
            v = self.sint()
            self.expect(")")
            return v
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        t = self.tok
        if t.kind != "num":
            self.error("expected an integer")
        self.i += 1
        return sign * int(t.text)

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return ParamElem(int(t.text))
        if t.kind == "name":
            self.i += 1
            if t.text == "x":
                if not self.allow_x:
                    raise UnknownSymbol("x is only allowed inside pre(...)", self.src, t.pos)
                return X()
            if t.text not in self.declared:
                if not self.declare_new:
                    raise UnknownSymbol(f"undeclared symbol {t.text!r}", self.src, t.pos)
                self.declared.add(t.text)
            return symbol(t.text)
        if self.accept("("):
            v = self.expr()
            self.expect(")")
            return v
        what = "end of input" if t.kind == "eof" else repr(t.text)
        self.error(f"unexpected {what}")

    def done(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")


# ---------------------------------------------------------------------------
# term AST


@dataclass(frozen=True)
class Atom:
    kind: str
    value: object = None
    exp: int = 1


@dataclass(frozen=True)
class TermExpr:
    atoms: tuple[Atom, ...]

    def to_qterm(self, support: str = BILATERAL) -> QTerm:
        coeff, geom, pre = ParamElem(1), ParamElem(1), RatX(1)
        qquad = 0
        facs = []
        for a in self.atoms:
            if a.kind == "const":
                coeff = coeff * a.value
            elif a.kind == "geom":
                geom = geom * a.value
            elif a.kind == "qquad":
                qquad += a.value
            elif a.kind == "pre":
                pre = pre * a.value
            else:
                facs.append(QFactorial(a.value, a.exp))
        if coeff.is_zero() or pre.is_zero():
            return QTerm.zero_term(support)
        if geom.is_zero():
            raise ValueError("geom(0) is not a valid term")
        return canonical(QTerm(coeff, geom, qquad, pre, tuple(facs), support))

    def __str__(self):
        return print_term_expr(self)


def parse_param(src: str, declared=None, declare_new: bool = True) -> ParamElem:
    p = _Parser(src, False, declared, declare_new)
    v = p.expr()
    p.done()
    return v


def parse_ratx(src: str, declared=None, declare_new: bool = True) -> RatX:
    p = _Parser(src, True, declared, declare_new)
    v = p.expr()
    p.done()
    return v if isinstance(v, RatX) else RatX(v)


def parse_term_expr(src: str, declared=None, declare_new: bool = False) -> TermExpr:
    p = _Parser(src, False, declared, declare_new)
    atoms = [_atom(p)]
    while p.accept("*"):
        atoms.append(_atom(p))
    p.done()
    return TermExpr(tuple(atoms))


def _atom(p: _Parser) -> Atom:
    t = p.tok
    if t.kind != "name" or t.text not in KEYWORDS:
        what = "end of input" if t.kind == "eof" else repr(t.text)
        p.error(f"expected one of {', '.join(KEYWORDS)}; found {what}")
    p.i += 1
    p.expect("(")
    kind = t.text
    if kind == "qquad":
        v = p.sint()
        p.expect(")")
        return Atom(kind, v)
    if kind == "pre":
        p.allow_x = True
        v = p.expr()
        p.allow_x = False
        p.expect(")")
        if v.is_zero():
            return Atom("const", ParamElem(0))
        return Atom(kind, v if isinstance(v, RatX) else RatX(v))
    v = p.expr()
    p.expect(")")
    if kind == "poch":
        if v.is_zero():
            p.error("poch argument must be nonzero", t)
        e = 1
        if p.accept("^"):
            e = p.sint()
        if e == 0:
            p.error("poch exponent must be nonzero", t)
        return Atom(kind, v, e)
    if kind == "geom" and v.is_zero():
        p.error("geom argument must be nonzero", t)
    return Atom(kind, v)


def parse_term(src: str, declared=None, support: str = BILATERAL, declare_new: bool = False) -> QTerm:
    return parse_term_expr(src, declared, declare_new).to_qterm(support)


def parse_substitution(src: str, declared=None, declare_new: bool = False) -> dict[str, ParamElem]:
    out: dict[str, ParamElem] = {}
    for chunk in _split_top(src):
        p = _Parser(chunk, False, declared, declare_new)
        t = p.tok
        if t.kind != "name":
            p.error("expected a symbol")
        p.i += 1
        if t.text in ("q", "x"):
            p.error(f"{t.text} cannot be substituted", t)
        if t.text not in p.declared and not declare_new:
            raise UnknownSymbol(f"undeclared symbol {t.text!r}", chunk, t.pos)
        if p.tok.kind != "arrow":
            p.error("expected '->'")
        p.i += 1
        v = p.expr()
        p.done()
        if t.text in out:
            p.error(f"{t.text} substituted twice", t)
        out[t.text] = v
    if not out:
        raise TermSyntaxError("empty substitution", src, 0)
    return out


def _split_top(src: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(src):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(src[start:i])
            start = i + 1
    parts.append(src[start:])
    return [p for p in parts if p.strip()]


# ---------------------------------------------------------------------------
# printing


def term_expr_of(t: QTerm) -> TermExpr:
    if t.zero:
        return TermExpr((Atom("const", ParamElem(0)),))
    atoms = []
    if not t.coeff.is_one():
        atoms.append(Atom("const", t.coeff))
    if not t.geom.is_one():
        atoms.append(Atom("geom", t.geom))
    if t.qquad:
        atoms.append(Atom("qquad", t.qquad))
    if not t.pre.is_one():
        atoms.append(Atom("pre", t.pre))
    atoms.extend(Atom("poch", f.arg, f.exp) for f in t.factors)
    if not atoms:
        atoms.append(Atom("const", ParamElem(1)))
    return TermExpr(tuple(atoms))


def print_term_expr(te: TermExpr) -> str:
    out = []
    for a in te.atoms:
        if a.kind == "qquad":
            out.append(f"qquad({a.value})")
        elif a.kind == "poch":
            s = f"poch({a.value})"
            if a.exp != 1:
                s += f"^{a.exp}"
            out.append(s)
        else:
            out.append(f"{a.kind}({a.value})")
    return "*".join(out)


def format_term(t: QTerm) -> str:
    return print_term_expr(term_expr_of(t))


def format_substitution(sub: dict) -> str:
    return ", ".join(f"{k}->{v}" for k, v in sub.items())


__all__ = [
    "TermSyntaxError",
    "UnknownSymbol",
    "Atom",
    "TermExpr",
    "tokenize",
    "parse_param",
    "parse_ratx",
    "parse_term_expr",
    "parse_term",
    "parse_substitution",
    "term_expr_of",
    "print_term_expr",
    "format_term",
    "format_substitution",
]
