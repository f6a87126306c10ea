"""Expression grammar: infix arithmetic, ``^`` power, named function calls.

    expr    := term  (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-'* power
    power   := atom ('^' factor)?
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Juxtaposition is forbidden (``2x`` is a syntax error).  Integer and
fraction literals fold to exact rationals; decimal literals stay floating
point and are quarantined from exact cancellation downstream.  The name
``i`` is reserved for the imaginary unit.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .nodes import (
    FUNCTIONS,
    IMAG_NAME,
    Apply,
    Const,
    Expr,
    Power,
    Product,
    Quotient,
    Sum,
    SymConst,
    Var,
    neg,
)

__all__ = ["parse_expr", "ExpressionError", "SyntaxError_", "UndeclaredVariableError"]

_FN_ALIASES = {"lambertw": "lambertW", "LambertW": "lambertW"}


class ExpressionError(ValueError):
    """Base class for parse-time failures; carries the source position."""

    def __init__(self, message: str, text: str, pos: int):
        self.pos = pos
        self.text = text
        caret = " " * pos + "^"
        super().__init__(f"{message} at position {pos}\n  {text}\n  {caret}")


class SyntaxError_(ExpressionError):
    pass


class UndeclaredVariableError(ExpressionError):
    pass


class _Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind: str, value, pos: int):
        self.kind = kind
        self.value = value
        self.pos = pos


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    idx, n = 0, len(text)
    while idx < n:
        c = text[idx]
        if c.isspace():
            idx += 1
            continue
        if c in "+-*/^(),":
            tokens.append(_Token(c, c, idx))
            idx += 1
            continue
        if c.isdigit() or (c == "." and idx + 1 < n and text[idx + 1].isdigit()):
            start = idx
            is_float = False
            while idx < n and text[idx].isdigit():
                idx += 1
            if idx < n and text[idx] == ".":
                is_float = True
                idx += 1
                while idx < n and text[idx].isdigit():
                    idx += 1
            if idx < n and text[idx] in "eE":
                mark = idx + 1
                if mark < n and text[mark] in "+-":
                    mark += 1
                if mark < n and text[mark].isdigit():
                    is_float = True
                    idx = mark
                    while idx < n and text[idx].isdigit():
                        idx += 1
            lit = text[start:idx]
            if idx < n and (text[idx].isalpha() or text[idx] == "_"):
                raise SyntaxError_("juxtaposition is not allowed (insert '*')", text, idx)
            value = float(lit) if is_float else Fraction(int(lit))
            tokens.append(_Token("number", value, start))
            continue
        if c.isalpha() or c == "_":
            start = idx
            while idx < n and (text[idx].isalnum() or text[idx] == "_"):
                idx += 1
            tokens.append(_Token("name", text[start:idx], start))
            continue
        raise SyntaxError_(f"unexpected character {c!r}", text, idx)
    tokens.append(_Token("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str], constants: Optional[Sequence[str]]):
        self.text = text
        self.tokens = _tokenize(text)
        self.k = 0
        self.variables = set(variables)
        self.constants = None if constants is None else set(constants)
        if IMAG_NAME in self.variables:
            raise ExpressionError(f"{IMAG_NAME!r} is reserved for the imaginary unit", text, 0)

    def peek(self) -> _Token:
        return self.tokens[self.k]

    def advance(self) -> _Token:
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise SyntaxError_(f"expected {kind!r}, found {tok.kind!r}", self.text, tok.pos)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise SyntaxError_(f"unexpected {tok.kind!r}", self.text, tok.pos)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek().kind in "+-":
            op = self.advance()
            t = self.term()
            terms.append(t if op.kind == "+" else neg(t))
        if len(terms) == 1:
            return terms[0]
        return _fold_sum(terms)

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().kind in "*/":
            op = self.advance()
            rhs = self.factor()
            if op.kind == "*":
                e = _fold_mul(e, rhs)
            else:
                e = _fold_div(e, rhs, self.text, op.pos)
        return e

    def factor(self) -> Expr:
        signs = 0
        while self.peek().kind == "-":
            self.advance()
            signs += 1
        e = self.power()
        return neg(e) if signs % 2 else e

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "^":
            self.advance()
            exponent = self.factor()
            return _fold_pow(base, exponent)
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "number":
            return Const(tok.value)
        if tok.kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            name = _FN_ALIASES.get(tok.value, tok.value)
            if self.peek().kind == "(":
                if name not in FUNCTIONS:
                    raise SyntaxError_(f"unknown function {tok.value!r}", self.text, tok.pos)
                self.advance()
                arg = self.expr()
                self.expect(")")
                if name == "sqrt":
                    # sqrt(x) is grammar sugar for x^(1/2); one structural form
                    return Power(arg, Const(Fraction(1, 2)))
                return Apply(name, arg)
            if name in FUNCTIONS:
                raise SyntaxError_(f"function {name!r} requires an argument list", self.text, tok.pos)
            return self.classify(name, tok.pos)
        raise SyntaxError_(f"unexpected {tok.kind!r}", self.text, tok.pos)

    def classify(self, name: str, pos: int) -> Expr:
        if name == IMAG_NAME:
            return SymConst(IMAG_NAME)
        if name in self.variables:
            return Var(name)
        if self.constants is None or name in self.constants:
            return SymConst(name)
        raise UndeclaredVariableError(f"undeclared variable {name!r}", self.text, pos)


def _fold_sum(terms: list[Expr]) -> Expr:
    if all(isinstance(t, Const) for t in terms):
        acc = terms[0].value
        for t in terms[1:]:
            acc = acc + t.value
        return Const(acc)
    flat: list[Expr] = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    return Sum(tuple(flat))


def _fold_mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    factors: list[Expr] = []
    for f in (a, b):
        if isinstance(f, Product):
            factors.extend(f.factors)
        else:
            factors.append(f)
    return Product(tuple(factors))


def _fold_div(a: Expr, b: Expr, text: str, pos: int) -> Expr:
    if isinstance(b, Const) and b.value == 0:
        raise SyntaxError_("division by constant zero", text, pos)
    if isinstance(a, Const) and isinstance(b, Const):
        if a.is_exact and b.is_exact:
            return Const(a.value / b.value)
        return Const(float(a.value) / float(b.value))
    return Quotient(a, b)


def _fold_pow(base: Expr, exponent: Expr) -> Expr:
    if (isinstance(base, Const) and isinstance(exponent, Const)
            and base.is_exact and exponent.is_exact
            and exponent.value.denominator == 1):
        k = exponent.value.numerator
        if k >= 0 or base.value != 0:
            return Const(base.value ** k)
    return Power(base, exponent)


def parse_expr(text: str, variables: Sequence[str], constants: Optional[Sequence[str]] = None) -> Expr:
    """Parse ``text`` against a declared variable list.

    Names in ``variables`` become :class:`Var`; other names become symbolic
    constants.  Passing an explicit ``constants`` list makes classification
    strict: any name outside both lists raises
    :class:`UndeclaredVariableError` with its position.
    """
    return _Parser(text, variables, constants).parse()
