"""Vectorised numpy evaluation of expression trees.

``compile_expr`` builds a closure evaluating the tree over arrays; domain
violations surface as NaN/inf rather than exceptions (callers mask or
resample).  Matches the scalar evaluator to rounding on shared domains
(tested property).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .lambertw import lambert_w_np
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
    free_symbols,
)

__all__ = ["compile_expr"]

_REAL_FNS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "lambertW": lambert_w_np,
}


def _ln_real(x):
    with np.errstate(all="ignore"):
        return np.log(x)


def _sqrt_real(x):
    with np.errstate(all="ignore"):
        return np.sqrt(x)


def _lambertw_cplx(z):
    from .lambertw import lambert_w_complex
    flat = np.asarray(z, dtype=complex).ravel()
    out = np.array([lambert_w_complex(complex(v)) for v in flat])
    return out.reshape(np.shape(z))


def compile_expr(e: Expr, names: Sequence[str], complex_mode: bool = False) -> Callable:
    """Compile to ``f(*arrays) -> array``; ``names`` fixes the argument order."""
    missing = free_symbols(e) - set(names) - {IMAG_NAME}
    if missing:
        raise ValueError(f"unbound symbols {sorted(missing)} when compiling")
    if not complex_mode and IMAG_NAME in free_symbols(e):
        raise ValueError("expression contains the imaginary unit; compile with complex_mode=True")
    index = {n: k for k, n in enumerate(names)}
    dtype = complex if complex_mode else float
    body = _build(e, index, complex_mode)

    def fn(*arrays):
        env = [np.asarray(a, dtype=dtype) for a in arrays]
        with np.errstate(all="ignore"):
            out = body(env)
        shape = np.broadcast(*env).shape if env else ()
        return np.broadcast_to(np.asarray(out, dtype=dtype), shape).copy() if shape else out

    return fn


def _build(e: Expr, index: dict[str, int], cm: bool):
    if isinstance(e, Const):
        v = complex(e.value) if cm else float(e.value)
        return lambda env: v
    if isinstance(e, SymConst) and e.name == IMAG_NAME:
        return lambda env: 1j
    if isinstance(e, (Var, SymConst)):
        k = index[e.name]
        return lambda env: env[k]
    if isinstance(e, Sum):
        parts = [_build(t, index, cm) for t in e.terms]
        def _sum(env):
            acc = parts[0](env)
            for p in parts[1:]:
                acc = acc + p(env)
            return acc
        return _sum
    if isinstance(e, Product):
        parts = [_build(f, index, cm) for f in e.factors]
        def _prod(env):
            acc = parts[0](env)
            for p in parts[1:]:
                acc = acc * p(env)
            return acc
        return _prod
    if isinstance(e, Quotient):
        fa, fb = _build(e.num, index, cm), _build(e.den, index, cm)
        return lambda env: fa(env) / fb(env)
    if isinstance(e, Power):
        fb = _build(e.base, index, cm)
        if isinstance(e.exponent, Const) and e.exponent.is_exact and e.exponent.value.denominator == 1:
            k = int(e.exponent.value)
            return lambda env: fb(env) ** k
        fe = _build(e.exponent, index, cm)
        if cm:
            return lambda env: fb(env) ** fe(env)
        def _pow(env):
            b = fb(env)
            return np.power(np.asarray(b, dtype=float), fe(env))
        return _pow
    if isinstance(e, Apply):
        fa = _build(e.arg, index, cm)
        if cm:
            import numpy as _np
            table = {
                "exp": _np.exp, "sin": _np.sin, "cos": _np.cos, "sinh": _np.sinh,
                "cosh": _np.cosh, "tanh": _np.tanh,
                "ln": lambda z: _np.log(z.astype(complex) if hasattr(z, "astype") else complex(z)),
                "sqrt": lambda z: _np.sqrt(z.astype(complex) if hasattr(z, "astype") else complex(z)),
                "lambertW": _lambertw_cplx,
            }
            g = table[e.fn]
            return lambda env: g(np.asarray(fa(env), dtype=complex))
        if e.fn == "ln":
            return lambda env: _ln_real(fa(env))
        if e.fn == "sqrt":
            return lambda env: _sqrt_real(fa(env))
        g = _REAL_FNS[e.fn]
        return lambda env: g(fa(env))
    raise TypeError(f"cannot compile {e!r}")
