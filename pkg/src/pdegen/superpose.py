"""Nonlinear superposition of solutions.

Burgers: each solution gets a heat potential tau with
``-2 d1 ln tau = u`` and ``-2 d0 ln tau = u1 - u^2/2``; weighted potential
sums map back through the log-derivative.  The antiderivatives needed for
potential construction come from a restricted closed table (polynomials,
single linear denominators, exponentials, tanh -> ln cosh).

Nonlinear heat: functional parameters tau1 + tau2 = x1 satisfy a pairing
ODE in x1 and an evolution constraint in x0; reciprocal values add:
``1/u3 = 1/u1(x0,tau1) + 1/u2(x0,tau2)``.  The literal non-reciprocal
reading fails idempotence and the linearization oracle, while this one
reproduces the printed closed forms (tested).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .expr import (
    Apply,
    Expr,
    SampleDomain,
    Var,
    as_expr,
    compile_expr,
    differentiate,
    equivalent,
    free_symbols,
    free_variables,
    is_zero,
    ratform,
    simplify,
    substitute,
)
from .expr.normal import poly_to_expr
from .generate import _numeric_consts
from .grid import GridFunction, GridSpec
from .pde import BURGERS, LINHEAT, NLHEAT, Report, check_solution

__all__ = [
    "UnsupportedAntiderivative",
    "antiderivative",
    "Potential",
    "burgers_potential",
    "burgers_superpose",
    "fit_burgers_weights",
    "complex_const",
    "NLHeatPairing",
    "nlheat_superpose",
    "verify_pairing",
    "PairingSingularityError",
]

HALF = Fraction(1, 2)


class UnsupportedAntiderivative(ValueError):
    """Integrand falls outside the closed antiderivative table."""


class PairingSingularityError(RuntimeError):
    """u1 + u2 vanished along the pairing integration path."""


# --- restricted antiderivative table -----------------------------------------


def _bases_with_var(poly, var: str):
    out = []
    for m in poly:
        for b, _ in m:
            if b == Var(var) or var in free_variables(b):
                out.append(b)
    return out


def _mono_antideriv(m, coeff, var: str) -> Expr:
    """Antiderivative of a single monomial in the closed table."""
    var_factors = []
    rest: list[Expr] = []
    for b, e in m:
        if b == Var(var) or var in free_variables(b):
            var_factors.append((b, e))
        else:
            rest.append(b if e == 1 else b ** as_expr(e))
    rest_expr = as_expr(coeff)
    for r in rest:
        rest_expr = rest_expr * r
    if not var_factors:
        return simplify(rest_expr * Var(var))
    if len(var_factors) > 1:
        raise UnsupportedAntiderivative(
            f"monomial mixes several {var}-dependent factors")
    b, e = var_factors[0]
    if b == Var(var):
        if e == -1:
            return simplify(rest_expr * Apply("ln", Var(var)))
        return simplify(rest_expr * Var(var) ** as_expr(e + 1) / as_expr(e + 1))
    if isinstance(b, Apply) and b.fn == "exp":
        alpha = differentiate(b.arg, var)
        if var in free_variables(alpha) or is_zero(alpha):
            raise UnsupportedAntiderivative("exp argument is not affine in the variable")
        return simplify(rest_expr * (b ** as_expr(e)) / (as_expr(e) * alpha))
    if isinstance(b, Apply) and b.fn == "tanh" and e == 1:
        alpha = differentiate(b.arg, var)
        if var in free_variables(alpha) or is_zero(alpha):
            raise UnsupportedAntiderivative("tanh argument is not affine in the variable")
        return simplify(rest_expr * Apply("ln", Apply("cosh", b.arg)) / alpha)
    raise UnsupportedAntiderivative(f"factor {b!r}^{e} outside the table")


def _exprpoly_in_var(poly, var: str) -> Optional[dict[int, Expr]]:
    """Polynomial view degree -> Expr coefficient, None if not polynomial."""
    v = Var(var)
    out: dict[int, Expr] = {}
    for m, c in poly.items():
        deg = 0
        rest = []
        for b, e in m:
            if b == v:
                if e.denominator != 1 or e < 0:
                    return None
                deg = int(e)
            elif var in free_variables(b):
                return None
            else:
                rest.append((b, e))
        piece = poly_to_expr({tuple(rest): c})
        out[deg] = simplify(out.get(deg, as_expr(0)) + piece)
    return {k: v_ for k, v_ in out.items() if not is_zero(v_)}


def _poly_divmod(num: dict[int, Expr], den: dict[int, Expr]):
    dd = max(den)
    lead = den[dd]
    q: dict[int, Expr] = {}
    r = dict(num)
    while r and max(r) >= dd:
        dr = max(r)
        c = simplify(r[dr] / lead)
        q[dr - dd] = c
        for k, dc in den.items():
            kk = dr - dd + k
            r[kk] = simplify(r.get(kk, as_expr(0)) - c * dc)
        r = {k: v for k, v in r.items() if not is_zero(v)}
    return q, r


def _exp_route(num, den, var: str) -> Expr:
    """Substitution t = exp(p/L) turning the integrand into a rational in t."""
    bases = {b for b in _bases_with_var(num, var) + _bases_with_var(den, var)
             if isinstance(b, Apply) and b.fn == "exp"}
    others = {b for b in _bases_with_var(num, var) + _bases_with_var(den, var)} - bases
    if len(bases) != 1 or others:
        raise UnsupportedAntiderivative(
            "need exactly one exponential of the variable and nothing else")
    (base,) = bases
    p = base.arg
    alpha = differentiate(p, var)
    if var in free_variables(alpha) or is_zero(alpha):
        raise UnsupportedAntiderivative("exp argument is not affine in the variable")
    lcm = 1
    for poly in (num, den):
        for m in poly:
            for b, e in m:
                if b == base:
                    lcm = int(lcm * e.denominator // math.gcd(lcm, e.denominator))

    def to_tpoly(poly) -> dict[int, Expr]:
        out: dict[int, Expr] = {}
        for m, c in poly.items():
            deg = 0
            rest = []
            for b, e in m:
                if b == base:
                    deg = int(e * lcm)
                else:
                    rest.append((b, e))
            piece = poly_to_expr({tuple(rest): c})
            out[deg] = simplify(out.get(deg, as_expr(0)) + piece)
        return {k: v for k, v in out.items() if not is_zero(v)}

    n_t = to_tpoly(num)
    d_t = to_tpoly(den)
    # integrand dvar = (lcm/alpha) dt / t
    k0 = min(d_t)
    d2 = {k - k0: v for k, v in d_t.items()}
    if max(d2) > 1:
        raise UnsupportedAntiderivative("denominator is not monomial-times-linear in exp")
    t_expr = base if lcm == 1 else base ** as_expr(Fraction(1, lcm))

    def t_power(mdeg: int) -> Expr:
        if mdeg == 0:
            return as_expr(1)
        return base ** as_expr(Fraction(mdeg, lcm))

    # N / (t^(k0+1) * (a t + b))  [a may be 0]
    k = k0 + 1
    a = d2.get(1, as_expr(0))
    b = d2.get(0, as_expr(0))
    pieces: list[Expr] = []
    n_cur = dict(n_t)
    if is_zero(a):
        for deg, c in n_cur.items():
            m = deg - k
            if m == -1:
                pieces.append(simplify(c / b * p / lcm))
            else:
                pieces.append(simplify(c / b * t_power(m + 1) / as_expr(m + 1)))
    else:
        for j in range(k, 0, -1):
            c0 = simplify(n_cur.get(0, as_expr(0)) / b)
            if not is_zero(c0):
                if j == 1:
                    pieces.append(simplify(c0 * p / lcm))
                else:
                    pieces.append(simplify(-c0 / as_expr(j - 1) * t_power(-(j - 1))))
            sub = {0: simplify(c0 * b), 1: simplify(c0 * a)}
            shifted: dict[int, Expr] = {}
            for deg in set(n_cur) | set(sub):
                val = simplify(n_cur.get(deg, as_expr(0)) - sub.get(deg, as_expr(0)))
                if not is_zero(val):
                    shifted[deg] = val
            n_cur = {d_ - 1: c for d_, c in shifted.items()}
            if any(d_ < 0 for d_ in n_cur):
                raise UnsupportedAntiderivative("partial fraction reduction failed")
        q, r = _poly_divmod(n_cur, {1: a, 0: b}) if n_cur else ({}, {})
        for deg, c in q.items():
            pieces.append(simplify(c * t_power(deg + 1) / as_expr(deg + 1)))
        r0 = simplify(r.get(0, as_expr(0))) if r else as_expr(0)
        if not is_zero(r0):
            pieces.append(simplify(r0 / a * Apply("ln", simplify(a * t_expr + b))))
    total = as_expr(0)
    for piece in pieces:
        total = total + piece
    return simplify(total / alpha * as_expr(lcm))


def antiderivative(e: Expr, var: str) -> Expr:
    """Antiderivative within the closed table; raises otherwise.

    Supported: polynomials (any rational powers except -1 handled by the
    power rule), rational functions with a single linear-in-var denominator,
    exponentials of affine arguments (including rational functions of one
    exponential), and tanh of an affine argument.
    """
    num, den = ratform(simplify(e))
    den_has_var = bool(_bases_with_var(den, var))
    num_exp = [b for b in _bases_with_var(num, var) if isinstance(b, Apply) and b.fn == "exp"]
    if den_has_var:
        den_exp = [b for b in _bases_with_var(den, var) if isinstance(b, Apply) and b.fn == "exp"]
        if den_exp or num_exp:
            return _exp_route(num, den, var)
        np_ = _exprpoly_in_var(num, var)
        dp = _exprpoly_in_var(den, var)
        if np_ is None or dp is None:
            raise UnsupportedAntiderivative(
                f"integrand is not rational in {var}; supply the potential manually")
        if max(dp) != 1:
            raise UnsupportedAntiderivative(
                "denominator degree exceeds the linear-denominator table; "
                "supply the potential manually")
        q, r = _poly_divmod(np_, dp)
        total = as_expr(0)
        for deg, c in q.items():
            total = total + c * Var(var) ** as_expr(deg + 1) / as_expr(deg + 1)
        r0 = r.get(0, as_expr(0)) if r else as_expr(0)
        if not is_zero(r0):
            den_expr = simplify(dp[1] * Var(var) + dp.get(0, as_expr(0)))
            total = total + r0 / dp[1] * Apply("ln", den_expr)
        return simplify(total)
    den_expr = poly_to_expr(den)
    total = as_expr(0)
    for m, c in num.items():
        total = total + _mono_antideriv(m, c, var)
    return simplify(total / den_expr)


# --- Burgers potentials and superposition -------------------------------------


@dataclass
class Potential:
    """Heat potential of a Burgers solution with its two defining checks."""

    tau: Expr
    source: Expr
    x1_report: Report
    x0_report: Report

    @property
    def verified(self) -> bool:
        return self.x1_report.passed and self.x0_report.passed


def _condition_report(lhs: Expr, rhs: Expr, domain: Optional[SampleDomain], tol: float,
                      consts: Optional[Mapping[str, complex]]) -> Report:
    diff = simplify(lhs - rhs)
    if is_zero(diff):
        return Report(True, 0.0, tol, "symbolic")
    if domain is None:
        domain = SampleDomain({"x0": (0.6, 1.6), "x1": (0.6, 1.6)}, count=60, seed=0)
    cb = _numeric_consts([diff], consts)
    ok, rep = equivalent(lhs, rhs, domain, tol, consts=cb)
    return Report(ok, rep.max_rel_diff, tol, "sampled", rep.samples, rep.worst_point)


def burgers_potential(u: Expr, tau: Optional[Expr] = None,
                      domain: Optional[SampleDomain] = None, tol: float = 1e-9,
                      consts: Optional[Mapping[str, complex]] = None) -> Potential:
    """Construct (or verify) the heat potential of a Burgers solution.

    The free pure-x0 factor is fixed by the x0 condition; the residual
    constant is the superposition weight.
    """
    u = simplify(u)
    if tau is None:
        s = antiderivative(u, "x1")
        spatial = simplify(HALF * -1 * s)
        u1 = differentiate(u, "x1")
        gprime = simplify(-HALF * (u1 - HALF * u * u) - differentiate(spatial, "x0"))
        if "x1" in free_variables(gprime):
            raise ValueError(
                "x0-condition is not x1-free; the input is not a Burgers solution "
                "(or needs a manually supplied potential)")
        g = antiderivative(gprime, "x0")
        tau = simplify(Apply("exp", simplify(spatial + g)))
    lhs1 = simplify(-2 * differentiate(tau, "x1") / tau)
    rep1 = _condition_report(lhs1, u, domain, tol, consts)
    lhs0 = simplify(-2 * differentiate(tau, "x0") / tau)
    rhs0 = simplify(differentiate(u, "x1") - HALF * u * u)
    rep0 = _condition_report(lhs0, rhs0, domain, tol, consts)
    return Potential(tau, u, rep1, rep0)


def burgers_superpose(u1: Expr, u2: Expr,
                      c1: Union[Expr, int, float, Fraction] = 1,
                      c2: Union[Expr, int, float, Fraction] = 1,
                      tau1: Optional[Expr] = None, tau2: Optional[Expr] = None,
                      verify: bool = True, domain: Optional[SampleDomain] = None,
                      tol: float = 1e-8,
                      consts: Optional[Mapping[str, complex]] = None) -> Expr:
    """u3 = -2 d1 ln(c1*tau1 + c2*tau2) from the weighted heat potentials."""
    p1 = burgers_potential(u1, tau1, domain=domain, consts=consts)
    p2 = burgers_potential(u2, tau2, domain=domain, consts=consts)
    for k, p in (("u1", p1), ("u2", p2)):
        if not p.verified:
            raise ValueError(f"potential for {k} failed its defining conditions")
    s = simplify(as_expr(c1) * p1.tau + as_expr(c2) * p2.tau)
    if is_zero(s):
        raise ValueError("weighted potential sum is identically zero")
    u3 = simplify(-2 * differentiate(s, "x1") / s)
    if verify:
        cb = _numeric_consts([u3], consts)
        rep = check_solution(BURGERS, u3, domain=domain, tol=tol, consts=cb)
        if not rep.passed:
            raise ValueError(f"superposition failed verification: {rep.max_residual:.3g}")
    return u3


def complex_const(z: complex) -> Expr:
    """Expression form of a complex number, using the imaginary unit symbol."""
    from .expr import SymConst
    re, im = float(np.real(z)), float(np.imag(z))
    if im == 0.0:
        return as_expr(re)
    return simplify(as_expr(re) + as_expr(im) * SymConst("i"))


def fit_burgers_weights(u1: Expr, u2: Expr, target: Expr,
                        target_consts: Mapping[str, complex],
                        point: Mapping[str, float],
                        tau1: Optional[Expr] = None, tau2: Optional[Expr] = None
                        ) -> tuple[Expr, Expr, Potential, Potential]:
    """Weights (1, lambda) making the superposition match ``target`` at ``point``.

    The composite is a Moebius function of lambda = c2/c1, so one sample
    pins it:  lambda = -(a - P c) / (b - P d) with a, b the numerator and
    c, d the denominator contributions of each potential.
    """
    from .expr import evaluate
    p1 = burgers_potential(u1, tau1)
    p2 = burgers_potential(u2, tau2)
    a = evaluate(simplify(-2 * differentiate(p1.tau, "x1")), point, complex_mode=True)
    b = evaluate(simplify(-2 * differentiate(p2.tau, "x1")), point, complex_mode=True)
    c = evaluate(p1.tau, point, complex_mode=True)
    d = evaluate(p2.tau, point, complex_mode=True)
    pval = evaluate(target, point, consts=target_consts, complex_mode=True)
    lam = -(a - pval * c) / (b - pval * d)
    return as_expr(1), complex_const(lam), p1, p2


# --- nonlinear heat: numeric pairing ------------------------------------------


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_adaptive(f, t0: float, y0, targets: Sequence[float], tol: float) -> list:
    """Integrate dy/dt = f(t, y) hitting each target; step-doubling control.

    ``y`` may be a scalar or a vector (a stack of independent ODEs sharing
    the time axis); the error control uses the max norm.
    """
    out = []
    t, y = t0, y0
    for tt in targets:
        direction = 1.0 if tt >= t else -1.0
        remaining = abs(tt - t)
        h = max(remaining / 8.0, 1e-12) * direction
        while remaining > 1e-14:
            h = direction * min(abs(h), remaining)
            y_full = _rk4_step(f, t, y, h)
            y_half = _rk4_step(f, t + h / 2, _rk4_step(f, t, y, h / 2), h / 2)
            err = float(np.max(np.abs(y_full - y_half)))
            if not np.all(np.isfinite(np.asarray(y_half))):
                raise PairingSingularityError(f"integration blew up near t={t}")
            if err <= tol:
                t += h
                y = y_half + (y_half - y_full) / 15.0
                remaining = abs(tt - t)
                if err < tol / 64:
                    h *= 2.0
            else:
                h /= 2.0
                if abs(h) < 1e-13:
                    raise PairingSingularityError(f"step underflow near t={t}")
        out.append(y)
        t = tt
    return out


@dataclass
class NLHeatPairing:
    """Functional parameters of a nonlinear-heat superposition on a grid."""

    tau1: GridFunction
    tau2: GridFunction
    anchor_x1: float
    anchor_tau: float
    u3: GridFunction


def nlheat_superpose(u1: Expr, u2: Expr, grid: GridSpec,
                     anchor: tuple[float, float],
                     consts: Optional[Mapping[str, float]] = None,
                     ode_tol: float = 1e-10, verify_inputs: bool = True
                     ) -> tuple[GridFunction, NLHeatPairing]:
    """Superpose two nonlinear-heat solutions numerically.

    ``anchor = (x1_0, tau1_0)`` fixes the integration constant on the first
    x0 slice; anchors for later slices follow the evolution constraint
    tau_0 = tau_1^-2 tau_11 u^-2, integrated in x0 with the same adaptive
    scheme.  Reciprocal values add: 1/u3 = 1/u1(x0,tau1) + 1/u2(x0,tau2).
    """
    cb = _numeric_consts([u1, u2], consts)
    if verify_inputs:
        for label, uu in (("u1", u1), ("u2", u2)):
            rep = check_solution(NLHEAT, uu, tol=1e-8, consts=cb,
                                 domain=SampleDomain({"x0": (0.1, 0.9), "x1": (0.6, 2.4)},
                                                     count=40, seed=3))
            if not rep.passed:
                raise ValueError(f"{label} is not a nonlinear-heat solution "
                                 f"(max residual {rep.max_residual:.3g})")
    tau = Var("tau")
    u1t = substitute(u1, {"x1": tau})
    u2t = substitute(u2, {"x1": Var("x1") - tau})
    f_expr = simplify(u2t / (u1t + u2t))
    f_x1 = differentiate(f_expr, "x1")
    f_tau = differentiate(f_expr, "tau")
    names = ["x0", "x1", "tau"] + sorted(cb)
    extras = [cb[k] for k in sorted(cb)]
    fc = compile_expr(f_expr, names)
    fx1c = compile_expr(f_x1, names)
    ftauc = compile_expr(f_tau, names)
    u1c = compile_expr(u1t, ["x0", "tau"] + sorted(cb))
    u2c = compile_expr(u2t, names)
    sumc = compile_expr(simplify(u1t + u2t), names)

    x1_0, tau1_0 = anchor
    (lo0, hi0, n0) = grid["x0"]
    (lo1, hi1, n1) = grid["x1"]
    xs0 = np.linspace(lo0, hi0, n0)
    xs1 = np.linspace(lo1, hi1, n1)

    def anchor_rhs(x0v, tauv):
        args = (np.float64(x0v), np.float64(x1_0), np.float64(tauv)) + tuple(extras)
        fv = float(fc(*args))
        t11 = float(fx1c(*args)) + float(ftauc(*args)) * fv
        u1v = float(u1c(np.float64(x0v), np.float64(tauv), *extras))
        return t11 / (fv * fv) / (u1v * u1v)

    anchors = np.asarray(_rk4_adaptive(anchor_rhs, float(xs0[0]), float(tau1_0),
                                       [float(v) for v in xs0], ode_tol))
    extras_vec = [np.full(n0, v) for v in extras]

    def f_all(x1v, tau_vec):
        """Pairing right-hand side for every x0 slice at once."""
        x1_col = np.full(n0, x1v)
        s = sumc(xs0, x1_col, tau_vec, *extras_vec)
        if not np.all(np.isfinite(s)) or np.min(np.abs(s)) < 1e-12:
            bad = int(np.argmin(np.abs(s)))
            raise PairingSingularityError(
                f"u1+u2 vanished near x0={xs0[bad]:.4g}, x1={x1v:.4g}")
        return fc(xs0, x1_col, tau_vec, *extras_vec)

    tau1_vals = np.empty((n0, n1))
    right = [float(v) for v in xs1[xs1 >= x1_0]]
    left = [float(v) for v in xs1[xs1 < x1_0][::-1]]
    vals_right = _rk4_adaptive(f_all, x1_0, anchors.copy(), right, ode_tol)
    tau1_vals[:, xs1 >= x1_0] = np.stack(vals_right, axis=1)
    if left:
        vals_left = _rk4_adaptive(f_all, x1_0, anchors.copy(), left, ode_tol)
        tau1_vals[:, xs1 < x1_0] = np.stack(vals_left[::-1], axis=1)
    mesh0, mesh1 = np.meshgrid(xs0, xs1, indexing="ij")
    tau2_vals = mesh1 - tau1_vals
    with np.errstate(all="ignore"):
        u1v = u1c(mesh0, tau1_vals, *[np.full(tau1_vals.shape, v) for v in extras])
        u2v = u2c(mesh0, mesh1, tau1_vals, *[np.full(tau1_vals.shape, v) for v in extras])
        u3_vals = 1.0 / (1.0 / u1v + 1.0 / u2v)
    bounds = ((lo0, hi0, n0), (lo1, hi1, n1))
    g3 = GridFunction(("x0", "x1"), bounds, u3_vals)
    pairing = NLHeatPairing(
        tau1=GridFunction(("x0", "x1"), bounds, tau1_vals),
        tau2=GridFunction(("x0", "x1"), bounds, tau2_vals),
        anchor_x1=x1_0, anchor_tau=tau1_0, u3=g3,
    )
    return g3, pairing


def verify_pairing(p: NLHeatPairing, u1: Expr, u2: Expr,
                   consts: Optional[Mapping[str, float]] = None,
                   tol: float = 1e-3) -> dict[str, Report]:
    """Finite-difference check of tau_0 = tau_1^-2 tau_11 u^-2 for k = 1, 2."""
    cb = _numeric_consts([u1, u2], consts)
    extras = sorted(cb)
    out: dict[str, Report] = {}
    for key, g, uu in (("tau1", p.tau1, u1), ("tau2", p.tau2, u2)):
        h0, h1 = g.spacing(0), g.spacing(1)
        v = g.values
        t0 = np.full_like(v, np.nan)
        t1 = np.full_like(v, np.nan)
        t11 = np.full_like(v, np.nan)
        t0[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2 * h0)
        t1[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2 * h1)
        t11[:, 1:-1] = (v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]) / (h1 * h1)
        ufn = compile_expr(substitute(uu, {"x1": Var("tau")}), ["x0", "tau"] + extras)
        mesh0 = g.meshgrid()[0]
        with np.errstate(all="ignore"):
            uv = ufn(mesh0, v, *[np.full(v.shape, cb[k]) for k in extras])
            rhs = t11 / (t1 * t1) / (uv * uv)
            resid = t0 - rhs
            scale = 1.0 + np.abs(t0) + np.abs(rhs)
            rel = np.abs(resid) / scale
        rel = rel[1:-1, 1:-1]
        finite = np.isfinite(rel)
        worst = float(np.nanmax(np.where(finite, rel, 0.0)))
        out[key] = Report(
            passed=bool(worst <= tol), max_residual=worst, tolerance=tol,
            method="finite-difference", samples=int(np.sum(finite)),
        )
    return out
