"""Exact symbolic differentiation and capture-free substitution."""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Union

from .nodes import (
    Apply,
    Const,
    Expr,
    Power,
    Product,
    Quotient,
    Sum,
    SymConst,
    Var,
    as_expr,
    neg,
)
from .normal import simplify

__all__ = ["differentiate", "substitute"]

_ZERO = Const(Fraction(0))
_ONE = Const(Fraction(1))


def differentiate(e: Expr, var: str, simplified: bool = True) -> Expr:
    """Exact partial derivative with respect to the named variable."""
    d = _diff(e, var)
    return simplify(d) if simplified else d


def _diff(e: Expr, v: str) -> Expr:
    if isinstance(e, (Const, SymConst)):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.name == v else _ZERO
    if isinstance(e, Sum):
        return Sum(tuple(_diff(t, v) for t in e.terms))
    if isinstance(e, Product):
        terms = []
        for k in range(len(e.factors)):
            fs = list(e.factors)
            fs[k] = _diff(fs[k], v)
            terms.append(Product(tuple(fs)))
        return Sum(tuple(terms))
    if isinstance(e, Quotient):
        a, b = e.num, e.den
        da, db = _diff(a, v), _diff(b, v)
        return Quotient(Sum((Product((da, b)), neg(Product((a, db))))), Power(b, Const(Fraction(2))))
    if isinstance(e, Power):
        b, ex = e.base, e.exponent
        db = _diff(b, v)
        if isinstance(ex, Const):
            new_exp = Const(ex.value - 1)
            return Product((ex, Power(b, new_exp), db))
        dex = _diff(ex, v)
        inner = Sum((Product((dex, Apply("ln", b))), Product((ex, Quotient(db, b)))))
        return Product((e, inner))
    if isinstance(e, Apply):
        da = _diff(e.arg, v)
        a = e.arg
        table = {
            "exp": lambda: e,
            "ln": lambda: Quotient(_ONE, a),
            "sqrt": lambda: Quotient(_ONE, Product((Const(Fraction(2)), e))),
            "sin": lambda: Apply("cos", a),
            "cos": lambda: neg(Apply("sin", a)),
            "sinh": lambda: Apply("cosh", a),
            "cosh": lambda: Apply("sinh", a),
            "tanh": lambda: Sum((_ONE, neg(Power(Apply("tanh", a), Const(Fraction(2)))))),
            "lambertW": lambda: Quotient(e, Product((a, Sum((_ONE, e))))),
        }
        return Product((table[e.fn](), da))
    raise TypeError(f"cannot differentiate {e!r}")


def substitute(e: Expr, bindings: Mapping[str, Union[Expr, int, Fraction, float]]) -> Expr:
    """Simultaneous capture-free substitution of names (variables or constants).

    Returns the raw substituted tree; callers simplify when they need the
    canonical form.
    """
    repl = {name: as_expr(val) for name, val in bindings.items()}
    return _subst(e, repl)


def _subst(e: Expr, repl: Mapping[str, Expr]) -> Expr:
    if isinstance(e, (Var, SymConst)):
        return repl.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Sum):
        return Sum(tuple(_subst(t, repl) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(_subst(f, repl) for f in e.factors))
    if isinstance(e, Quotient):
        return Quotient(_subst(e.num, repl), _subst(e.den, repl))
    if isinstance(e, Power):
        return Power(_subst(e.base, repl), _subst(e.exponent, repl))
    if isinstance(e, Apply):
        return Apply(e.fn, _subst(e.arg, repl))
    raise TypeError(f"cannot substitute into {e!r}")
