"""PDE residual functionals and solution verification.

Each equation is a sum of residual terms over jet symbols (``u``, ``u0``,
``u11``, ...).  Verification substitutes exact derivatives and tries the
symbolic simplify-to-zero route first, falling back to seeded sampling
with a cancellation-aware relative tolerance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .expr import (
    Expr,
    SampleDomain,
    Var,
    compile_expr,
    differentiate,
    free_constants,
    free_symbols,
    free_variables,
    is_zero,
    parse_expr,
    simplify,
    substitute,
)

__all__ = [
    "PDESpec",
    "Report",
    "get_pde",
    "PDE_IDS",
    "residual",
    "jet_derivatives",
    "check_solution",
    "default_domain",
    "slid_cofactor_form",
    "slid_expanded_form",
]


@dataclass(frozen=True)
class PDESpec:
    """A PDE as a residual functional: residual(u) = sum of ``terms``.

    ``terms`` are expressions over the equation variables and jet symbols
    ``u``, ``u<mu>``, ``u<mu><nu>`` (second-order, mixed included).  Keeping
    the terms separate lets numeric checks scale tolerances by the term
    magnitudes, which defuses catastrophic cancellation.
    """

    id: str
    variables: tuple[str, ...]
    terms: tuple[Expr, ...]

    @property
    def jet_names(self) -> set[str]:
        names = set()
        for t in self.terms:
            names |= free_variables(t)
        return names - set(self.variables)


def _p(text: str, variables: Sequence[str]) -> Expr:
    jets = ["u"] + [f"u{m}" for m in range(3)] + [f"u{m}{n}" for m in range(3) for n in range(m, 3)]
    return parse_expr(text, list(variables) + jets)


BURGERS = PDESpec("burgers", ("x0", "x1"), tuple(
    _p(t, ("x0", "x1")) for t in ("u0", "u*u1", "-u11")))

#: expanded divergence form of u0 - d/dx1(u^-2 u1)
NLHEAT = PDESpec("nlheat", ("x0", "x1"), tuple(
    _p(t, ("x0", "x1")) for t in ("u0", "-u^(-2)*u11", "2*u^(-3)*u1^2")))

LINHEAT = PDESpec("linheat", ("y0", "y1"), tuple(
    _p(t, ("y0", "y1")) for t in ("u0", "-u11")))

DALEMBERT = PDESpec("dalembert", ("y0", "y1", "y2"), tuple(
    _p(t, ("y0", "y1", "y2")) for t in ("u00", "-u11", "-u22")))

#: metric-weighted sum of diagonal cofactors of the Hessian, diag(1,-1,-1)
SLID = PDESpec("slid", ("x0", "x1", "x2"), tuple(
    _p(t, ("x0", "x1", "x2")) for t in
    ("u11*u22", "-u12^2", "-u00*u22", "u02^2", "-u00*u11", "u01^2")))

_REGISTRY = {s.id: s for s in (BURGERS, NLHEAT, LINHEAT, DALEMBERT, SLID)}
_ALIASES = {"heat": "linheat", "burgers": "burgers", "wave": "dalembert"}
PDE_IDS = tuple(sorted(_REGISTRY))


def get_pde(name: str) -> PDESpec:
    key = name.lower()
    key = _ALIASES.get(key, key)
    if key not in _REGISTRY:
        raise KeyError(f"unknown equation {name!r}; known: {', '.join(PDE_IDS)}")
    return _REGISTRY[key]


def jet_derivatives(spec: PDESpec, u: Expr) -> dict[str, Expr]:
    """Exact derivatives of ``u`` for every jet symbol of the equation."""
    extra = free_variables(u) - set(spec.variables)
    if extra:
        raise ValueError(f"solution depends on {sorted(extra)}, not variables of {spec.id!r}")
    out: dict[str, Expr] = {"u": u}
    firsts: dict[int, Expr] = {}
    for m, vname in enumerate(spec.variables):
        firsts[m] = differentiate(u, vname)
        out[f"u{m}"] = firsts[m]
    for m in range(len(spec.variables)):
        for n in range(m, len(spec.variables)):
            out[f"u{m}{n}"] = differentiate(firsts[m], spec.variables[n])
    return out


def residual(spec: PDESpec, u: Expr, simplified: bool = True) -> Expr:
    """Symbolic residual of ``u`` in the equation."""
    jets = jet_derivatives(spec, u)
    total = None
    for t in spec.terms:
        piece = substitute(t, jets)
        total = piece if total is None else total + piece
    return simplify(total) if simplified else total


def residual_terms(spec: PDESpec, u: Expr) -> list[Expr]:
    jets = jet_derivatives(spec, u)
    return [simplify(substitute(t, jets)) for t in spec.terms]


@dataclass
class Report:
    """Outcome of a verification; ``passed`` iff max residual <= tolerance.

    ``max_residual`` is relative: |residual| / (1 + sum of |term| magnitudes)
    at the worst sample (0 for symbolic passes).
    """

    passed: bool
    max_residual: float
    tolerance: float
    method: str  # "symbolic" | "sampled" | "finite-difference"
    samples: int = 0
    argmax: dict[str, float] = field(default_factory=dict)
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "verdict": "pass" if self.passed else "fail",
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "method": self.method,
            "samples": self.samples,
            "argmax": self.argmax,
            "detail": self.detail,
        }

    def to_json(self, indent: Optional[int] = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def default_domain(spec: PDESpec, seed: int = 0, count: int = 100) -> SampleDomain:
    """Generic positive box away from the usual singular loci."""
    return SampleDomain({v: (0.6, 1.6) for v in spec.variables}, count=count, seed=seed)


def check_solution(spec: PDESpec, u: Expr, domain: Optional[SampleDomain] = None,
                   tol: float = 1e-8, consts: Optional[Mapping[str, complex]] = None,
                   complex_mode: bool = False, try_symbolic: bool = True) -> Report:
    """Verify a candidate solution symbolically, else on sampled points."""
    terms = residual_terms(spec, u)
    if try_symbolic and is_zero(sum_terms(terms)):
        return Report(True, 0.0, tol, "symbolic")
    consts = dict(consts or {})
    needed = set()
    for t in terms:
        needed |= free_constants(t)
    needed -= set(consts) | {"i"}
    if needed:
        raise ValueError(f"unbound constants {sorted(needed)}; pass values via consts=")
    cm = complex_mode or any(("i" in free_symbols(t)) for t in terms) or any(
        isinstance(v, complex) and v.imag for v in consts.values())
    if domain is None:
        domain = default_domain(spec)
    names = sorted(domain.bounds)
    cnames = sorted(consts)
    fns = [compile_expr(t, names + cnames, complex_mode=cm) for t in terms]
    pts = domain.sample(consts)
    cols = [pts[n] for n in names]
    extra = [np.full(len(cols[0]), consts[n]) for n in cnames]
    vals = [f(*cols, *extra) for f in fns]
    res = sum(vals)
    scale = 1.0 + sum(np.abs(v) for v in vals)
    rel = np.abs(res) / scale
    finite = np.isfinite(rel)
    if not np.any(finite):
        raise ValueError("all samples hit singularities; tighten the domain/exclusions")
    rel = np.where(finite, rel, 0.0)
    k = int(np.argmax(rel))
    return Report(
        passed=bool(np.all(rel <= tol)),
        max_residual=float(rel[k]),
        tolerance=tol,
        method="sampled",
        samples=int(np.sum(finite)),
        argmax={n: float(pts[n][k]) for n in names},
    )


def sum_terms(terms: Sequence[Expr]) -> Expr:
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total


# --- exact cofactor oracle for the metric-weighted Hessian equation ---------


def slid_cofactor_form(h: Sequence[Sequence[Fraction]]) -> Fraction:
    """g_{mu nu} A^{mu nu} with metric diag(1,-1,-1): signed diagonal cofactors."""
    def cof(i, j):
        rows = [r for r in range(3) if r != i]
        cols = [c for c in range(3) if c != j]
        return (h[rows[0]][cols[0]] * h[rows[1]][cols[1]]
                - h[rows[0]][cols[1]] * h[rows[1]][cols[0]])
    return cof(0, 0) - cof(1, 1) - cof(2, 2)


def slid_expanded_form(h: Sequence[Sequence[Fraction]]) -> Fraction:
    """Expanded polynomial form of the same residual."""
    return (h[1][1] * h[2][2] - h[1][2] ** 2
            - (h[0][0] * h[2][2] - h[0][2] ** 2)
            - (h[0][0] * h[1][1] - h[0][1] ** 2))
