"""Seeded-sampling numeric equivalence oracle.

Two expressions are equivalent on a domain when ``|a - b| <= tol*(1+|a|)``
at every accepted sample.  Samples violating an exclusion rule (or hitting
numeric poles) are rejected and redrawn; if nothing survives the domain is
unusable and an error is raised.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .nodes import Expr, free_symbols
from .numeric import compile_expr

__all__ = ["ExcludeRule", "SampleDomain", "EquivReport", "equivalent", "AllSamplesRejected"]


class AllSamplesRejected(RuntimeError):
    pass


@dataclass(frozen=True)
class ExcludeRule:
    """Reject samples where ``expr`` is (nearly) zero or not positive."""

    expr: Expr
    kind: str = "nonzero"  # "nonzero" | "positive"
    margin: float = 1e-3

    def mask(self, values: np.ndarray) -> np.ndarray:
        if self.kind == "nonzero":
            return np.abs(values) > self.margin
        if self.kind == "positive":
            return values.real > self.margin
        raise ValueError(f"unknown exclusion kind {self.kind!r}")


@dataclass(frozen=True)
class SampleDomain:
    """Axis-aligned box with deterministic seeded sampling."""

    bounds: Mapping[str, tuple[float, float]]
    count: int = 100
    seed: int = 0
    exclude: tuple[ExcludeRule, ...] = ()

    def sample(self, consts: Optional[Mapping[str, complex]] = None,
               max_tries: int = 200) -> dict[str, np.ndarray]:
        """Accepted sample columns per variable (length ``count``)."""
        names = sorted(self.bounds)
        rng = np.random.default_rng(self.seed)
        rules = [(r, compile_expr(r.expr, names + sorted(consts or {}), complex_mode=False))
                 for r in self.exclude]
        cols = {n: [] for n in names}
        got = 0
        for _ in range(max_tries):
            if got >= self.count:
                break
            draw = {n: rng.uniform(lo, hi, size=self.count)
                    for n, (lo, hi) in ((n, self.bounds[n]) for n in names)}
            extra = [np.full(self.count, complex(v).real) for _, v in sorted((consts or {}).items())]
            ok = np.ones(self.count, dtype=bool)
            for rule, fn in rules:
                vals = fn(*[draw[n] for n in names], *extra)
                ok &= np.isfinite(vals) & rule.mask(vals)
            for n in names:
                cols[n].extend(draw[n][ok].tolist())
            got = min(len(cols[n]) for n in names) if names else self.count
        if got < min(self.count, 1):
            raise AllSamplesRejected("every sample was rejected by the exclusion rules")
        return {n: np.asarray(cols[n][: self.count]) for n in names}


@dataclass
class EquivReport:
    equivalent: bool
    max_rel_diff: float
    worst_point: dict[str, float] = field(default_factory=dict)
    samples: int = 0
    tol: float = 0.0

    def to_dict(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "max_rel_diff": self.max_rel_diff,
            "worst_point": self.worst_point,
            "samples": self.samples,
            "tol": self.tol,
        }


def equivalent(a: Expr, b: Expr, domain: SampleDomain, tol: float,
               consts: Optional[Mapping[str, complex]] = None,
               complex_mode: bool = False) -> tuple[bool, EquivReport]:
    """Sampled check of ``|a-b| <= tol*(1+|a|)``; reports the worst point."""
    names = sorted(domain.bounds)
    const_names = sorted(consts or {})
    for e in (a, b):
        stray = free_symbols(e) - set(names) - set(const_names) - {"i"}
        if stray:
            raise ValueError(f"unbound symbols {sorted(stray)} in equivalence check")
    cm = complex_mode or "i" in (free_symbols(a) | free_symbols(b)) or any(
        isinstance(v, complex) and v.imag for v in (consts or {}).values())
    fa = compile_expr(a, names + const_names, complex_mode=cm)
    fb = compile_expr(b, names + const_names, complex_mode=cm)
    pts = domain.sample(consts)
    cols = [pts[n] for n in names]
    extra = [np.full(len(cols[0]) if cols else domain.count, (consts or {})[n]) for n in const_names]
    va = fa(*cols, *extra)
    vb = fb(*cols, *extra)
    finite = np.isfinite(va.real) & np.isfinite(vb.real)
    if cm:
        finite &= np.isfinite(va.imag) & np.isfinite(vb.imag)
    if not np.any(finite):
        raise AllSamplesRejected("no finite samples for either expression")
    diff = np.abs(va - vb) / (1.0 + np.abs(va))
    diff = np.where(finite, diff, 0.0)
    k = int(np.argmax(diff))
    report = EquivReport(
        equivalent=bool(np.all(diff <= tol)),
        max_rel_diff=float(diff[k]),
        worst_point={n: float(pts[n][k]) for n in names},
        samples=int(np.sum(finite)),
        tol=tol,
    )
    return report.equivalent, report
