"""Lie symmetry generators for the linear heat equation and the Slid equation.

Coefficients are expressions in the equation coordinates plus the dependent
variable (``v`` for heat, ``u`` for Slid).  The characteristic is
``Q[w] = eta - xi^mu w_mu``; generator application to solutions normalises
pure-derivative operators to the positive sign (so P0 maps v to v0).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .expr import (
    Expr,
    Var,
    differentiate,
    free_variables,
    is_zero,
    parse_expr,
    simplify,
    substitute,
)

__all__ = [
    "SymOpLin",
    "SymOpSlid",
    "heat_operator",
    "heat_operator_ids",
    "linear_heat_generators",
    "slid_generators",
    "slid_commutator",
    "affine_coefficients",
    "in_span",
]


def _pl(text: str) -> Expr:
    return parse_expr(text, ["y0", "y1", "v"])


def _ps(text: str) -> Expr:
    return parse_expr(text, ["x0", "x1", "x2", "u"])


@dataclass(frozen=True)
class SymOpLin:
    """Heat-equation generator: xi0 d0 + xi1 d1 + eta dv."""

    id: str
    xi0: Expr
    xi1: Expr
    eta: Expr

    def characteristic(self, v: Expr) -> Expr:
        """Q[v] = eta - xi0*v0 - xi1*v1 with the solution substituted."""
        v0 = differentiate(v, "y0")
        v1 = differentiate(v, "y1")
        eta = substitute(self.eta, {"v": v})
        return simplify(eta - self.xi0 * v0 - self.xi1 * v1)

    def apply(self, v: Expr) -> Expr:
        """Action on solutions; sign normalised so P0 gives v0."""
        q = self.characteristic(v)
        if is_zero(self.eta):
            return simplify(-1 * q)
        return q


_Z = _pl("0")

_HEAT_OPS = {
    "P0": SymOpLin("P0", _pl("1"), _Z, _Z),
    "P1": SymOpLin("P1", _Z, _pl("1"), _Z),
    "P0+P1": SymOpLin("P0+P1", _pl("1"), _pl("1"), _Z),
    "I": SymOpLin("I", _Z, _Z, _pl("v")),
    "D": SymOpLin("D", _pl("2*y0"), _pl("y1"), _Z),
    "G": SymOpLin("G", _Z, _pl("y0"), _pl("-1/2*y1*v")),
    # the projective generator; the xi1 component y0*y1 is forced by the
    # invariance condition (checked in tests against seeded solutions)
    "F": SymOpLin("F", _pl("y0^2"), _pl("y0*y1"), _pl("-1/4*(y1^2+2*y0)*v")),
}


def heat_operator(op_id: str, b: Optional[Expr] = None) -> SymOpLin:
    """Named generator; ``S`` needs an accompanying heat solution ``b``."""
    if op_id == "S":
        if b is None:
            raise ValueError("operator S requires a heat solution b(y0, y1)")
        extra = free_variables(b) - {"y0", "y1"}
        if extra:
            raise ValueError(f"b depends on {sorted(extra)}; expected (y0, y1)")
        res = differentiate(b, "y0") - differentiate(differentiate(b, "y1"), "y1")
        if not is_zero(simplify(res)):
            raise ValueError("S requires b with b0 = b11 (not satisfied symbolically)")
        return SymOpLin("S", _Z, _Z, b)
    if op_id not in _HEAT_OPS:
        raise KeyError(f"unknown heat operator {op_id!r}")
    return _HEAT_OPS[op_id]


def heat_operator_ids() -> tuple[str, ...]:
    return ("P0", "P1", "I", "D", "G", "F", "S")


def linear_heat_generators(b: Optional[Expr] = None) -> list[SymOpLin]:
    """The seven-generator basis; ``S`` included when ``b`` is supplied."""
    ops = [_HEAT_OPS[k] for k in ("P0", "P1", "I", "D", "G", "F")]
    if b is not None:
        ops.append(heat_operator("S", b))
    else:
        ops.append(SymOpLin("S", _Z, _Z, _pl("0")))
    return ops


@dataclass(frozen=True)
class SymOpSlid:
    """Slid-equation generator: xi^mu d_mu + eta du."""

    id: str
    xi: tuple[Expr, Expr, Expr]
    eta: Expr

    def characteristic(self, u: Expr) -> Expr:
        out = substitute(self.eta, {"u": u})
        for mu in range(3):
            out = out - substitute(self.xi[mu], {"u": u}) * differentiate(u, f"x{mu}")
        return simplify(out)


def slid_generators() -> list[SymOpSlid]:
    z = _ps("0")
    one = _ps("1")
    return [
        SymOpSlid("P0", (one, z, z), z),
        SymOpSlid("P1", (z, one, z), z),
        SymOpSlid("P2", (z, z, one), z),
        SymOpSlid("P3", (z, z, z), one),
        SymOpSlid("I", (z, z, z), _ps("u")),
        SymOpSlid("J01", (_ps("x1"), _ps("x0"), z), z),
        SymOpSlid("J02", (_ps("x2"), z, _ps("x0")), z),
        SymOpSlid("J12", (z, _ps("-x2"), _ps("x1")), z),
        SymOpSlid("D", (_ps("x0"), _ps("x1"), _ps("x2")), z),
        SymOpSlid("Q0", (z, z, z), _ps("x0")),
        SymOpSlid("Q1", (z, z, z), _ps("x1")),
        SymOpSlid("Q2", (z, z, z), _ps("x2")),
    ]


def slid_generator(op_id: str) -> SymOpSlid:
    for op in slid_generators():
        if op.id == op_id:
            return op
    raise KeyError(f"unknown Slid operator {op_id!r}")


_SLID_COORDS = ("x0", "x1", "x2", "u")


def _vf_apply(op: SymOpSlid, f: Expr) -> Expr:
    """Vector-field action of the generator on a function of (x, u)."""
    acc = op.eta * differentiate(f, "u")
    for mu in range(3):
        acc = acc + op.xi[mu] * differentiate(f, f"x{mu}")
    return simplify(acc)


def slid_commutator(a: SymOpSlid, b: SymOpSlid) -> SymOpSlid:
    xi = tuple(simplify(_vf_apply(a, b.xi[mu]) - _vf_apply(b, a.xi[mu])) for mu in range(3))
    eta = simplify(_vf_apply(a, b.eta) - _vf_apply(b, a.eta))
    return SymOpSlid(f"[{a.id},{b.id}]", xi, eta)


def affine_coefficients(e: Expr) -> Optional[list[Fraction]]:
    """Coefficients of (1, x0, x1, x2, u) when ``e`` is affine, else None."""
    from .expr import as_constant

    coeffs = []
    rest = simplify(e)
    for name in _SLID_COORDS:
        d = differentiate(rest, name)
        if free_variables(d):
            return None
        c = as_constant(d)
        if c is None or not isinstance(c, Fraction):
            return None
        coeffs.append(c)
        rest = simplify(rest - c * Var(name))
    c0 = as_constant(rest)
    if c0 is None or not isinstance(c0, Fraction):
        return None
    return [c0] + coeffs


def _op_vector(op: SymOpSlid) -> Optional[list[Fraction]]:
    vec: list[Fraction] = []
    for comp in (*op.xi, op.eta):
        c = affine_coefficients(comp)
        if c is None:
            return None
        vec.extend(c)
    return vec


def in_span(op: SymOpSlid, basis: Sequence[SymOpSlid]) -> bool:
    """Exact membership of the operator in the rational span of the basis."""
    target = _op_vector(op)
    if target is None:
        return False
    mat = [_op_vector(b) for b in basis]
    if any(v is None for v in mat):
        return False
    cols = [list(col) for col in zip(*mat)]  # rows: coordinates, cols: basis
    n_rows, n_cols = len(cols), len(mat)
    aug = [cols[r] + [target[r]] for r in range(n_rows)]
    row = 0
    for col in range(n_cols):
        piv = next((r for r in range(row, n_rows) if aug[r][col] != 0), None)
        if piv is None:
            continue
        aug[row], aug[piv] = aug[piv], aug[row]
        pv = aug[row][col]
        aug[row] = [x / pv for x in aug[row]]
        for r in range(n_rows):
            if r != row and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[row])]
        row += 1
    for r in range(row, n_rows):
        if aug[r][-1] != 0:
            return False
    # consistent system: solution exists
    return True
