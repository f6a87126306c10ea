"""Solution-generating maps for the Burgers and nonlinear heat equations.

The four one-step generation formulas act directly on solutions; they are
the conjugates of heat-equation symmetry actions by the linearizing
substitutions (tested as the commutation property).  Chains iterate one
formula, verifying every element.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .expr import (
    Expr,
    SampleDomain,
    SymConst,
    Var,
    as_expr,
    compile_expr,
    differentiate,
    free_constants,
    free_variables,
    is_zero,
    parse_expr,
    poly_in_var,
    simplify,
    substitute,
)
from .grid import GridFunction, GridSpec
from .operators import SymOpLin, heat_operator
from .pde import BURGERS, LINHEAT, NLHEAT, Report, check_solution, get_pde

__all__ = [
    "DegenerateSeedError",
    "ParametricSolution",
    "StormSolution",
    "ChainResult",
    "GENERATOR_IDS",
    "cole_hopf",
    "storm_forward",
    "apply_linear_symmetry",
    "gen_burgers_p0",
    "gen_burgers_p0p1",
    "gen_burgers_d",
    "gen_nlheat_p0p1",
    "generate_once",
    "chain",
    "shift_generate",
    "auto_consts",
    "seeded_heat_family",
]

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


class DegenerateSeedError(ValueError):
    """The formula's denominator vanishes identically for this seed."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        super().__init__(message if step is None else f"{message} (chain step {step})")


def auto_consts(names, seed: int = 0) -> dict[str, float]:
    """Deterministic generic bindings for free constants in numeric checks."""
    rng = np.random.default_rng(seed + 1000003)
    return {n: float(rng.uniform(0.45, 1.55)) for n in sorted(names)}


def _numeric_consts(exprs: Sequence[Expr], consts: Optional[Mapping[str, complex]]) -> dict:
    names = set()
    for e in exprs:
        names |= free_constants(e)
    names -= {"i"}
    out = dict(auto_consts(names))
    out.update({k: v for k, v in (consts or {}).items()})
    return out


def _is_degenerate(den: Expr, variables: Sequence[str],
                   consts: Optional[Mapping[str, complex]] = None) -> bool:
    """Identically-vanishing test: simplify-to-zero plus 20-point sampling."""
    den = simplify(den)
    if is_zero(den):
        return True
    cb = _numeric_consts([den], consts)
    names = list(variables) + sorted(cb)
    try:
        fn = compile_expr(den, names)
    except ValueError:
        return False
    rng = np.random.default_rng(17)
    cols = [rng.uniform(0.6, 1.7, 20) for _ in variables]
    cols += [np.full(20, cb[n]) for n in sorted(cb)]
    vals = fn(*cols)
    finite = np.isfinite(vals)
    return bool(np.any(finite)) and bool(np.nanmax(np.abs(vals[finite])) < 1e-9)


def _verify(eq, u, domain, tol, consts, label):
    cb = _numeric_consts([u], consts)
    rep = check_solution(eq, u, domain=domain, tol=tol, consts=cb)
    if not rep.passed:
        raise ValueError(f"{label} failed {eq.id} verification: max residual {rep.max_residual:.3g}")
    return rep


# --- linearizing substitutions ----------------------------------------------


def _y_to_x(e: Expr) -> Expr:
    return substitute(e, {"y0": Var("x0"), "y1": Var("x1")})


def _x_to_y(e: Expr) -> Expr:
    return substitute(e, {"x0": Var("y0"), "x1": Var("y1")})


def cole_hopf(v: Expr, verify: bool = True, domain: Optional[SampleDomain] = None,
              consts: Optional[Mapping[str, complex]] = None) -> Expr:
    """Map a heat solution v(y0,y1) to the Burgers solution -2*v1/v in (x0,x1)."""
    if is_zero(v):
        raise ValueError("cole_hopf requires a nonzero heat solution")
    if verify:
        _verify(LINHEAT, v, domain, 1e-9, consts, "cole_hopf input")
    u = simplify(-2 * differentiate(v, "y1") / v)
    return simplify(_y_to_x(u))


def shift_generate(v: Expr, r: Union[Expr, int, float, Fraction], verify: bool = True,
                   domain: Optional[SampleDomain] = None,
                   consts: Optional[Mapping[str, complex]] = None) -> Expr:
    """-2*v1/(v+r) for a heat solution v(x0,x1); a Cole-Hopf map of v+r.

    The heat reading of ``v`` is the one the verification oracle accepts;
    a Burgers-solution reading generally fails (tested).
    """
    r = as_expr(r)
    vy = _x_to_y(v)
    if verify:
        _verify(LINHEAT, vy, domain, 1e-9, consts, "shift_generate input")
    if is_zero(simplify(v + r)):
        raise ValueError("v + r simplifies to zero")
    out = simplify(-2 * differentiate(v, "x1") / (v + r))
    if verify:
        _verify(BURGERS, out, domain, 1e-8, consts, "shift_generate output")
    return out


@dataclass
class StormSolution:
    """Implicit nonlinear-heat solution u = 1/v1, x1 = v, x0 = y0."""

    v: Expr
    u_of_y: Expr
    x1_of_y: Expr

    def solve_y1(self, x0: float, x1: float, bracket: tuple[float, float],
                 consts: Optional[Mapping[str, float]] = None, n_scan: int = 64) -> float:
        cb = _numeric_consts([self.x1_of_y], consts)
        fn = compile_expr(self.x1_of_y, ["y0", "y1"] + sorted(cb))
        extras = [cb[k] for k in sorted(cb)]

        def f(y1):
            return float(fn(np.float64(x0), np.float64(y1), *extras)) - x1

        ys = np.linspace(bracket[0], bracket[1], n_scan)
        vals = [f(y) for y in ys]
        for k in range(n_scan - 1):
            if np.isfinite(vals[k]) and np.isfinite(vals[k + 1]) and vals[k] * vals[k + 1] <= 0:
                a, b = ys[k], ys[k + 1]
                fa = vals[k]
                for _ in range(80):
                    m = 0.5 * (a + b)
                    fm = f(m)
                    if fa * fm <= 0:
                        b = m
                    else:
                        a, fa = m, fm
                    if abs(b - a) < 1e-14:
                        break
                return 0.5 * (a + b)
        raise ValueError(f"no y1 with v(y0,y1)=x1 in bracket {bracket} at (x0,x1)=({x0},{x1})")

    def to_grid(self, grid: GridSpec, bracket: tuple[float, float],
                consts: Optional[Mapping[str, float]] = None) -> GridFunction:
        cb = _numeric_consts([self.u_of_y, self.x1_of_y], consts)
        ufn = compile_expr(self.u_of_y, ["y0", "y1"] + sorted(cb))
        extras = [cb[k] for k in sorted(cb)]
        (lo0, hi0, n0) = grid["x0"]
        (lo1, hi1, n1) = grid["x1"]
        xs0 = np.linspace(lo0, hi0, n0)
        xs1 = np.linspace(lo1, hi1, n1)
        out = np.empty((n0, n1))
        for i, a in enumerate(xs0):
            for j, b in enumerate(xs1):
                y1 = self.solve_y1(float(a), float(b), bracket, cb)
                out[i, j] = float(ufn(np.float64(a), np.float64(y1), *extras))
        return GridFunction(("x0", "x1"), ((lo0, hi0, n0), (lo1, hi1, n1)), out)


def storm_forward(v: Expr, verify: bool = True, domain: Optional[SampleDomain] = None,
                  consts: Optional[Mapping[str, complex]] = None) -> StormSolution:
    """Nonlocal linearization of the nonlinear heat equation, forward direction."""
    if verify:
        _verify(LINHEAT, v, domain, 1e-9, consts, "storm_forward input")
    v1 = simplify(differentiate(v, "y1"))
    if is_zero(v1):
        raise ValueError("storm_forward requires v with nonvanishing v1")
    return StormSolution(v=v, u_of_y=simplify(1 / v1), x1_of_y=simplify(v))


def apply_linear_symmetry(op: Union[str, SymOpLin], v: Expr, b: Optional[Expr] = None,
                          verify: bool = True, domain: Optional[SampleDomain] = None,
                          consts: Optional[Mapping[str, complex]] = None) -> Expr:
    """Generator action on a verified heat solution; result is again a solution."""
    if isinstance(op, str):
        op = heat_operator(op, b=b)
    if verify:
        _verify(LINHEAT, v, domain, 1e-9, consts, "apply_linear_symmetry input")
    out = op.apply(v)
    if verify:
        _verify(LINHEAT, out, domain, 1e-9, consts, "apply_linear_symmetry output")
    return out


# --- one-step generation formulas --------------------------------------------


def _burgers_jets(u: Expr):
    return differentiate(u, "x0"), differentiate(u, "x1")


def gen_burgers_p0(u: Expr, consts: Optional[Mapping[str, complex]] = None) -> Expr:
    """u' = u + u0 / (-u1/2 + u^2/4)."""
    u0, u1 = _burgers_jets(u)
    den = -HALF * u1 + QUARTER * u * u
    if _is_degenerate(den, BURGERS.variables, consts):
        raise DegenerateSeedError("denominator -u1/2 + u^2/4 vanishes identically")
    return simplify(u + u0 / den)


def gen_burgers_p0p1(u: Expr, consts: Optional[Mapping[str, complex]] = None) -> Expr:
    """u' = u - 2(u0+u1) / (u1 - u^2/2 + u)."""
    u0, u1 = _burgers_jets(u)
    den = u1 - HALF * u * u + u
    if _is_degenerate(den, BURGERS.variables, consts):
        raise DegenerateSeedError("denominator u1 - u^2/2 + u vanishes identically")
    return simplify(u - 2 * (u0 + u1) / den)


def gen_burgers_d(u: Expr, consts: Optional[Mapping[str, complex]] = None) -> Expr:
    """u' = u + (2*x0*u0 + u + x1*u1) / (-x0*(u1 - u^2/2) - x1*u/2)."""
    u0, u1 = _burgers_jets(u)
    x0, x1 = Var("x0"), Var("x1")
    den = -1 * x0 * (u1 - HALF * u * u) - HALF * x1 * u
    if _is_degenerate(den, BURGERS.variables, consts):
        raise DegenerateSeedError("scaling-formula denominator vanishes identically")
    return simplify(u + (2 * x0 * u0 + u + x1 * u1) / den)


@dataclass
class ParametricSolution:
    """Solution given as u'(x0, tau) with the spatial coordinate x1 = X(x0, tau)."""

    param: str
    value: Expr
    constraint: Expr
    interval: tuple[float, float] = (0.25, 4.0)

    def eliminate(self) -> Optional[list[Expr]]:
        """Symbolic inversion when X is affine or quadratic in the parameter."""
        pv = poly_in_var(self.constraint, self.param)
        if pv is None:
            return None
        coeffs, den = pv
        deg = max(coeffs) if coeffs else 0
        x1 = Var("x1")
        if deg == 1:
            a0 = coeffs.get(0, as_expr(0))
            tau = simplify((x1 * den - a0) / coeffs[1])
            return [simplify(substitute(self.value, {self.param: tau}))]
        if deg == 2:
            a0 = simplify(coeffs.get(0, as_expr(0)) - x1 * den)
            a1 = coeffs.get(1, as_expr(0))
            a2 = coeffs[2]
            disc = simplify(a1 * a1 - 4 * a2 * a0)
            root = disc ** HALF
            outs = []
            for sign in (1, -1):
                tau = simplify((-1 * a1 + sign * root) / (2 * a2))
                outs.append(simplify(substitute(self.value, {self.param: tau})))
            return outs
        return None

    def solve_param(self, x0: float, x1: float,
                    consts: Optional[Mapping[str, float]] = None, n_scan: int = 96) -> float:
        """Bracket-scan plus bisection for X(x0, tau) = x1 on the interval."""
        cb = _numeric_consts([self.constraint], consts)
        fn = compile_expr(self.constraint, ["x0", self.param] + sorted(cb))
        extras = [cb[k] for k in sorted(cb)]

        def f(t):
            return float(fn(np.float64(x0), np.float64(t), *extras)) - x1

        ts = np.linspace(self.interval[0], self.interval[1], n_scan)
        vals = [f(t) for t in ts]
        for k in range(n_scan - 1):
            if np.isfinite(vals[k]) and np.isfinite(vals[k + 1]) and vals[k] * vals[k + 1] <= 0:
                a, b = ts[k], ts[k + 1]
                fa = vals[k]
                for _ in range(80):
                    m = 0.5 * (a + b)
                    fm = f(m)
                    if fa * fm <= 0:
                        b = m
                    else:
                        a, fa = m, fm
                return 0.5 * (a + b)
        raise ValueError(f"no parameter solving X=x1 at ({x0},{x1}) in {self.interval}")

    def to_grid(self, grid: GridSpec, consts: Optional[Mapping[str, float]] = None) -> GridFunction:
        cb = _numeric_consts([self.value, self.constraint], consts)
        vfn = compile_expr(self.value, ["x0", self.param] + sorted(cb))
        extras = [cb[k] for k in sorted(cb)]
        (lo0, hi0, n0) = grid["x0"]
        (lo1, hi1, n1) = grid["x1"]
        out = np.empty((n0, n1))
        for i, a in enumerate(np.linspace(lo0, hi0, n0)):
            for j, b in enumerate(np.linspace(lo1, hi1, n1)):
                t = self.solve_param(float(a), float(b), cb)
                out[i, j] = float(vfn(np.float64(a), np.float64(t), *extras))
        return GridFunction(("x0", "x1"), ((lo0, hi0, n0), (lo1, hi1, n1)), out)


def gen_nlheat_p0p1(u: Expr, consts: Optional[Mapping[str, complex]] = None,
                    interval: tuple[float, float] = (0.25, 4.0)) -> ParametricSolution:
    """u' = u^5 [u_tau^2 - u0 u^3 - u_tau u^2]^(-1) with x1 = -u_tau u^-3 + u^-1.

    The seed's spatial argument is renamed to the parameter tau.
    """
    useed = substitute(u, {"x1": Var("tau")})
    u_tau = differentiate(useed, "tau")
    u_0 = differentiate(useed, "x0")
    bracket = simplify(u_tau * u_tau - u_0 * useed ** 3 - u_tau * useed * useed)
    if _is_degenerate(bracket, ("x0", "tau"), consts):
        raise DegenerateSeedError("bracket u_tau^2 - u0 u^3 - u_tau u^2 vanishes identically")
    value = simplify(useed ** 5 / bracket)
    constraint = simplify(-1 * u_tau * useed ** (-3) + useed ** (-1))
    return ParametricSolution("tau", value, constraint, interval)


GENERATOR_IDS = ("thm1", "thm2", "thm3", "thm4")


def generate_once(gen_id: str, u: Expr, consts: Optional[Mapping[str, complex]] = None):
    """Dispatch one application of a named generation formula."""
    table = {
        "thm1": gen_burgers_p0,
        "thm2": gen_burgers_p0p1,
        "thm3": gen_nlheat_p0p1,
        "thm4": gen_burgers_d,
    }
    if gen_id not in table:
        raise KeyError(f"unknown generator {gen_id!r}; known: {', '.join(GENERATOR_IDS)}")
    return table[gen_id](u, consts=consts)


@dataclass
class ChainResult:
    generator: str
    elements: list[Expr]
    reports: list[Report] = field(default_factory=list)
    stopped_at: Optional[int] = None
    reason: str = ""

    def to_dict(self) -> dict:
        from .expr import render
        return {
            "generator": self.generator,
            "elements": [render(e) for e in self.elements],
            "reports": [r.to_dict() for r in self.reports],
            "stopped_at": self.stopped_at,
            "reason": self.reason,
        }


def chain(gen_id: str, seed: Expr, n: int, verify: bool = True,
          domain: Optional[SampleDomain] = None, tol: float = 1e-8,
          consts: Optional[Mapping[str, complex]] = None) -> ChainResult:
    """Iterate a generation formula n times from a seed, verifying elements."""
    eq = NLHEAT if gen_id == "thm3" else BURGERS
    out = ChainResult(gen_id, [seed])
    cb = _numeric_consts([seed], consts)

    def record(e):
        if verify:
            out.reports.append(check_solution(eq, e, domain=domain, tol=tol, consts=cb))
            if not out.reports[-1].passed:
                raise ValueError(
                    f"chain element {len(out.elements) - 1} failed verification "
                    f"(max residual {out.reports[-1].max_residual:.3g})")

    record(seed)
    for step in range(1, n + 1):
        try:
            nxt = generate_once(gen_id, out.elements[-1], consts=cb)
        except DegenerateSeedError as exc:
            out.stopped_at = step
            out.reason = str(exc)
            return out
        if isinstance(nxt, ParametricSolution):
            cands = nxt.eliminate()
            if not cands:
                out.stopped_at = step
                out.reason = "parameter elimination is not closed-form; use to_grid"
                return out
            nxt = cands[0]
        out.elements.append(nxt)
        record(nxt)
    return out


# --- seeded exact heat solutions for property tests ---------------------------

_HEAT_POLYS = (
    "1", "y1", "y1^2 + 2*y0", "y1^3 + 6*y0*y1", "y1^4 + 12*y0*y1^2 + 12*y0^2",
)


def seeded_heat_family(count: int, seed: int = 0) -> list[Expr]:
    """Exact heat solutions: rational combinations of heat polynomials and
    plane waves exp(a^2 y0 + a y1) with small rational a."""
    rng = np.random.default_rng(seed)
    waves = [Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(-1, 2), Fraction(3, 2), Fraction(2)]
    out = []
    for _ in range(count):
        terms = []
        n_terms = int(rng.integers(1, 4))
        for _ in range(n_terms):
            coef = Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 4)))
            if rng.random() < 0.5:
                p = parse_expr(_HEAT_POLYS[int(rng.integers(0, len(_HEAT_POLYS)))], ["y0", "y1"])
            else:
                a = waves[int(rng.integers(0, len(waves)))]
                p = parse_expr(f"exp(({a})^2*y0 + ({a})*y1)", ["y0", "y1"])
            terms.append(as_expr(coef) * p)
        e = terms[0]
        for t in terms[1:]:
            e = e + t
        s = simplify(e)
        if not is_zero(s):
            out.append(s)
    return out
