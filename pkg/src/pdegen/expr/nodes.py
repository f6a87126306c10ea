"""Immutable expression trees over named variables, rationals and special functions.

Node kinds: constant, symbolic constant, variable, sum, product, power,
quotient, function application.  Trees are plain frozen dataclasses; all
structure-changing work (canonicalisation, GCD cancellation) lives in
``pdegen.expr.normal``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

__all__ = [
    "Expr",
    "Const",
    "SymConst",
    "Var",
    "Sum",
    "Product",
    "Power",
    "Quotient",
    "Apply",
    "FUNCTIONS",
    "IMAG_NAME",
    "as_expr",
    "const",
    "neg",
    "render",
    "free_variables",
    "free_constants",
    "free_symbols",
]

#: Functions understood by the grammar, the evaluators and the derivative table.
FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos", "sinh", "cosh", "tanh", "lambertW")

#: Reserved name for the imaginary unit (a symbolic constant with i*i = -1).
IMAG_NAME = "i"

Number = Union[int, Fraction, float]


class Expr:
    """Base class; subclasses are frozen dataclasses and safe to share."""

    __slots__ = ()

    def __add__(self, other):
        return _sum2(self, as_expr(other))

    def __radd__(self, other):
        return _sum2(as_expr(other), self)

    def __sub__(self, other):
        return _sum2(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return _sum2(as_expr(other), neg(self))

    def __mul__(self, other):
        return _prod2(self, as_expr(other))

    def __rmul__(self, other):
        return _prod2(as_expr(other), self)

    def __truediv__(self, other):
        return Quotient(self, as_expr(other))

    def __rtruediv__(self, other):
        return Quotient(as_expr(other), self)

    def __pow__(self, other):
        return Power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return render(self)


@dataclass(frozen=True, slots=True, eq=False)
class Const(Expr):
    """Exact rational constant, or a quarantined floating literal.

    Equality and hashing distinguish exact from floating values even when
    numerically equal, so floats never alias exact constants in caches.
    """

    value: Union[Fraction, float]

    def __post_init__(self):
        if isinstance(self.value, int):
            object.__setattr__(self, "value", Fraction(self.value))

    def __eq__(self, other):
        return (isinstance(other, Const) and type(other.value) is type(self.value)
                and other.value == self.value)

    def __hash__(self):
        return hash((Const, type(self.value).__name__, self.value))

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)


@dataclass(frozen=True, slots=True)
class SymConst(Expr):
    """Named symbolic constant (C1, k, a, ...); ``i`` is the imaginary unit."""

    name: str


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Sum(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Product(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Power(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True, slots=True)
class Quotient(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True, slots=True)
class Apply(Expr):
    fn: str
    arg: Expr

    def __post_init__(self):
        if self.fn not in FUNCTIONS:
            raise ValueError(f"unknown function {self.fn!r}")


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
MINUS_ONE = Const(Fraction(-1))
I = SymConst(IMAG_NAME)


def const(v: Number) -> Const:
    if isinstance(v, float):
        return Const(v)
    return Const(Fraction(v))


def as_expr(e) -> Expr:
    if isinstance(e, Expr):
        return e
    if isinstance(e, (int, Fraction, float)):
        return const(e)
    raise TypeError(f"cannot interpret {e!r} as an expression")


def _sum2(a: Expr, b: Expr) -> Expr:
    terms: list[Expr] = []
    for t in (a, b):
        if isinstance(t, Sum):
            terms.extend(t.terms)
        else:
            terms.append(t)
    return Sum(tuple(terms))


def _prod2(a: Expr, b: Expr) -> Expr:
    factors: list[Expr] = []
    for f in (a, b):
        if isinstance(f, Product):
            factors.extend(f.factors)
        else:
            factors.append(f)
    return Product(tuple(factors))


def neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Product) and e.factors:
        if isinstance(e.factors[0], Const):
            first = Const(-e.factors[0].value)
            rest = e.factors[1:]
            if first == ONE and rest:
                return rest[0] if len(rest) == 1 else Product(rest)
            return Product((first,) + rest)
        return Product((MINUS_ONE,) + e.factors)
    return Product((MINUS_ONE, e))


def free_variables(e: Expr) -> set[str]:
    out: set[str] = set()
    _walk_names(e, out, Var)
    return out


def free_constants(e: Expr) -> set[str]:
    out: set[str] = set()
    _walk_names(e, out, SymConst)
    return out


def free_symbols(e: Expr) -> set[str]:
    return free_variables(e) | free_constants(e)


def _walk_names(e: Expr, out: set[str], cls) -> None:
    if isinstance(e, cls):
        out.add(e.name)
    elif isinstance(e, Sum):
        for t in e.terms:
            _walk_names(t, out, cls)
    elif isinstance(e, Product):
        for f in e.factors:
            _walk_names(f, out, cls)
    elif isinstance(e, Power):
        _walk_names(e.base, out, cls)
        _walk_names(e.exponent, out, cls)
    elif isinstance(e, Quotient):
        _walk_names(e.num, out, cls)
        _walk_names(e.den, out, cls)
    elif isinstance(e, Apply):
        _walk_names(e.arg, out, cls)


# --- rendering ------------------------------------------------------------
#
# Precedence levels: sum 1, product/quotient 2, power 3, atoms 4.  The
# renderer emits strings that re-parse to the same tree (tested property),
# which forces a few extra parentheses (quotients inside products, rational
# constants inside products).


def _prec(e: Expr) -> int:
    if isinstance(e, Sum):
        return 1
    if isinstance(e, (Product, Quotient)):
        return 2
    if isinstance(e, Power):
        return 3
    return 4


def _render_const(c: Const) -> str:
    v = c.value
    if isinstance(v, float):
        return repr(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _is_negative_leading(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value < 0
    if isinstance(e, Product) and e.factors:
        return _is_negative_leading(e.factors[0])
    if isinstance(e, Quotient):
        return _is_negative_leading(e.num)
    return False


def _strip_minus(e: Expr) -> Expr:
    """Inverse of ``neg`` for negative-leading terms; used for `a - b` output."""
    return neg(e)


def _is_fraction_const(e: Expr) -> bool:
    return isinstance(e, Const) and e.is_exact and e.value.denominator != 1


def render(e: Expr) -> str:
    """Deterministic textual form; ``parse_expr(render(e))`` rebuilds ``e``."""
    if isinstance(e, Const):
        return _render_const(e)
    if isinstance(e, (Var, SymConst)):
        return e.name
    if isinstance(e, Apply):
        return f"{e.fn}({render(e.arg)})"
    if isinstance(e, Sum):
        if not e.terms:
            return "0"
        parts = []
        for k, t in enumerate(e.terms):
            body, op = t, " + "
            if k > 0 and _is_negative_leading(t):
                body, op = _strip_minus(t), " - "
            s = render(body)
            if isinstance(body, Sum):
                s = f"({s})"
            parts.append(s if k == 0 else op + s)
        return "".join(parts)
    if isinstance(e, Product):
        if not e.factors:
            return "1"
        parts = []
        for k, f in enumerate(e.factors):
            s = render(f)
            if isinstance(f, (Sum, Quotient, Product)) or (
                isinstance(f, Const) and k > 0 and (_is_negative_leading(f) or _is_fraction_const(f))
            ):
                s = f"({s})"
            parts.append(s)
        return "*".join(parts)
    if isinstance(e, Quotient):
        num = render(e.num)
        if isinstance(e.num, (Sum, Quotient)):
            num = f"({num})"
        den = render(e.den)
        if _prec(e.den) <= 2 or _is_negative_leading(e.den) or _is_fraction_const(e.den):
            den = f"({den})"
        return f"{num}/{den}"
    if isinstance(e, Power):
        if e.exponent == Const(Fraction(1, 2)):
            return f"sqrt({render(e.base)})"
        base = render(e.base)
        if _prec(e.base) <= 3 or _is_negative_leading(e.base) or _is_fraction_const(e.base):
            base = f"({base})"
        exp = render(e.exponent)
        simple_exp = (isinstance(e.exponent, Const) and e.exponent.is_exact
                      and e.exponent.value.denominator == 1 and e.exponent.value >= 0)
        if not (simple_exp or isinstance(e.exponent, (Var, SymConst))):
            exp = f"({exp})"
        return f"{base}^{exp}"
    raise TypeError(f"cannot render {e!r}")


def iter_terms(e: Expr) -> Iterable[Expr]:
    """Top-level additive terms of ``e`` (a non-sum is its own single term)."""
    if isinstance(e, Sum):
        return e.terms
    return (e,)
