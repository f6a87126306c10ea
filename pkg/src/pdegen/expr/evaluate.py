"""Scalar evaluation with pole/branch diagnostics.

Real mode (default) rejects negative sqrt/ln arguments, fractional powers
of negative bases, Lambert W below -1/e and any appearance of the
imaginary unit.  Complex mode evaluates principal branches via ``cmath``.
Failures carry the offending subtree.
"""
from __future__ import annotations

import cmath
import math
from typing import Mapping, Optional, Union

from .lambertw import BRANCH_POINT, lambert_w, lambert_w_complex
from .nodes import (
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
    render,
)

__all__ = ["evaluate", "EvalError", "PoleError", "DomainError", "UnboundSymbolError", "Point"]

#: A point binds variable names to numbers (imaginary parts optional).
Point = Mapping[str, Union[int, float, complex]]


class EvalError(ValueError):
    def __init__(self, message: str, subtree: Expr):
        self.subtree = subtree
        super().__init__(f"{message} in subtree: {render(subtree)}")


class PoleError(EvalError):
    pass


class DomainError(EvalError):
    pass


class UnboundSymbolError(EvalError):
    pass


def evaluate(e: Expr, point: Optional[Point] = None, consts: Optional[Point] = None,
             complex_mode: bool = False) -> Union[float, complex]:
    """Evaluate at a point; all free symbols must be bound."""
    env: dict[str, complex] = {}
    for src in (point, consts):
        if src:
            env.update(src)
    val = _eval(e, env, complex_mode)
    if not _finite(val):
        raise PoleError("non-finite result", e)
    return val


def _finite(v) -> bool:
    if isinstance(v, complex):
        return math.isfinite(v.real) and math.isfinite(v.imag)
    return math.isfinite(v)


def _eval(e: Expr, env, cm: bool):
    if isinstance(e, Const):
        v = e.value
        return complex(v) if cm else float(v)
    if isinstance(e, SymConst):
        if e.name == IMAG_NAME:
            if not cm:
                raise DomainError("imaginary unit requires complex mode", e)
            return 1j
        if e.name not in env:
            raise UnboundSymbolError(f"unbound constant {e.name!r}", e)
        return complex(env[e.name]) if cm else _as_real(env[e.name], e)
    if isinstance(e, Var):
        if e.name not in env:
            raise UnboundSymbolError(f"unbound variable {e.name!r}", e)
        return complex(env[e.name]) if cm else _as_real(env[e.name], e)
    if isinstance(e, Sum):
        return sum(_eval(t, env, cm) for t in e.terms)
    if isinstance(e, Product):
        acc = 1.0 + 0j if cm else 1.0
        for f in e.factors:
            acc *= _eval(f, env, cm)
        return acc
    if isinstance(e, Quotient):
        den = _eval(e.den, env, cm)
        if den == 0:
            raise PoleError("division by zero", e)
        return _eval(e.num, env, cm) / den
    if isinstance(e, Power):
        base = _eval(e.base, env, cm)
        expo = _eval(e.exponent, env, cm)
        return _pow(base, expo, e, cm)
    if isinstance(e, Apply):
        arg = _eval(e.arg, env, cm)
        return _apply(e.fn, arg, e, cm)
    raise TypeError(f"cannot evaluate {e!r}")


def _as_real(v, e: Expr) -> float:
    if isinstance(v, complex):
        if v.imag != 0:
            raise DomainError("complex binding in real mode", e)
        return float(v.real)
    return float(v)


def _pow(base, expo, e: Expr, cm: bool):
    if cm:
        if base == 0:
            if expo.real < 0:
                raise PoleError("zero base with negative exponent", e)
            return 0j if expo != 0 else 1.0 + 0j
        try:
            return base ** expo
        except (OverflowError, ValueError):
            raise PoleError("power overflow", e) from None
    if base == 0.0:
        if expo < 0:
            raise PoleError("zero base with negative exponent", e)
        return 1.0 if expo == 0 else 0.0
    if base < 0.0 and expo != int(expo):
        raise DomainError("fractional power of a negative base in real mode", e)
    try:
        return base ** expo
    except OverflowError:
        raise PoleError("power overflow", e) from None


def _apply(fn: str, arg, e: Expr, cm: bool):
    try:
        if cm:
            if fn == "ln":
                if arg == 0:
                    raise PoleError("ln of zero", e)
                return cmath.log(arg)
            if fn == "sqrt":
                return cmath.sqrt(arg)
            if fn == "lambertW":
                return lambert_w_complex(arg)
            return getattr(cmath, fn)(arg)
        if fn == "ln":
            if arg == 0.0:
                raise PoleError("ln of zero", e)
            if arg < 0.0:
                raise DomainError("ln of a negative number in real mode", e)
            return math.log(arg)
        if fn == "sqrt":
            if arg < 0.0:
                raise DomainError("sqrt of a negative number in real mode", e)
            return math.sqrt(arg)
        if fn == "lambertW":
            if arg < BRANCH_POINT:
                raise DomainError("lambertW argument below -1/e on the real branch", e)
            return lambert_w(arg)
        return getattr(math, fn)(arg)
    except OverflowError:
        raise PoleError("function overflow", e) from None
