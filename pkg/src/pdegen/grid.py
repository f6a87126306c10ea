"""Sampled functions on rectangular grids and finite-difference residuals.

Second-order central stencils for first, second and mixed derivatives; the
residual is reported on the interior obtained by trimming two points per
side (margins the stencils and the mixed-derivative composition need).

Serialization: a small line-oriented CSV layout (header comments carrying
axis metadata, then row-major values one per line); see README.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .expr import Expr, compile_expr
from .pde import PDESpec, Report

__all__ = ["GridFunction", "fd_derivatives", "fd_residual", "fd_check", "GridSpec", "parse_grid_spec"]

MARGIN = 2

#: per-axis (min, max, points)
GridSpec = Mapping[str, tuple[float, float, int]]


def parse_grid_spec(text: str) -> dict[str, tuple[float, float, int]]:
    """Parse ``var:min:max:n[,var:min:max:n...]`` CLI grid descriptions."""
    out: dict[str, tuple[float, float, int]] = {}
    for part in text.split(","):
        bits = part.strip().split(":")
        if len(bits) != 4:
            raise ValueError(f"bad grid chunk {part!r}; expected var:min:max:n")
        name, lo, hi, n = bits
        out[name] = (float(lo), float(hi), int(n))
    return out


@dataclass
class GridFunction:
    """Real samples of a function on a rectangular grid (row-major values)."""

    axes: tuple[str, ...]
    bounds: tuple[tuple[float, float, int], ...]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = tuple(n for _, _, n in self.bounds)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {shape}")
        for (lo, hi, n), name in zip(self.bounds, self.axes):
            if n < 2:
                raise ValueError(f"axis {name!r} needs >= 2 points (got {n})")
            if not hi > lo:
                raise ValueError(f"axis {name!r} has empty range")

    def spacing(self, k: int) -> float:
        lo, hi, n = self.bounds[k]
        return (hi - lo) / (n - 1)

    def coords(self, k: int) -> np.ndarray:
        lo, hi, n = self.bounds[k]
        return np.linspace(lo, hi, n)

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*[self.coords(k) for k in range(len(self.axes))], indexing="ij"))

    @property
    def finite_fraction(self) -> float:
        return float(np.mean(np.isfinite(self.values)))

    @classmethod
    def from_expr(cls, e: Expr, axes: Sequence[str], grid: GridSpec,
                  consts: Optional[Mapping[str, float]] = None) -> "GridFunction":
        axes = tuple(axes)
        bounds = tuple(grid[a] for a in axes)
        cnames = sorted(consts or {})
        fn = compile_expr(e, list(axes) + cnames)
        mesh = np.meshgrid(*[np.linspace(lo, hi, n) for lo, hi, n in bounds], indexing="ij")
        extra = [np.full(mesh[0].shape, (consts or {})[n]) for n in cnames]
        return cls(axes, bounds, fn(*mesh, *extra))

    def trimmed(self, margin: int = MARGIN) -> "GridFunction":
        sl = tuple(slice(margin, -margin) for _ in self.axes)
        bounds = []
        for k, (lo, hi, n) in enumerate(self.bounds):
            h = self.spacing(k)
            bounds.append((lo + margin * h, hi - margin * h, n - 2 * margin))
        return GridFunction(self.axes, tuple(bounds), self.values[sl])

    # -- serialization --

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# gridfunction v1\n")
        for name, (lo, hi, n) in zip(self.axes, self.bounds):
            buf.write(f"# axis {name} {lo!r} {hi!r} {n}\n")
        for v in self.values.ravel():
            buf.write(f"{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        axes: list[str] = []
        bounds: list[tuple[float, float, int]] = []
        values: list[float] = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "axis":
                    axes.append(parts[1])
                    bounds.append((float(parts[2]), float(parts[3]), int(parts[4])))
                continue
            values.append(float(line))
        shape = tuple(n for _, _, n in bounds)
        arr = np.asarray(values, dtype=float).reshape(shape)
        return cls(tuple(axes), tuple(bounds), arr)

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def load(cls, path: str) -> "GridFunction":
        with open(path) as fh:
            return cls.from_csv(fh.read())


def _d1(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    out = np.full_like(v, np.nan)
    lo = [slice(None)] * v.ndim
    hi = [slice(None)] * v.ndim
    mid = [slice(None)] * v.ndim
    lo[axis], hi[axis], mid[axis] = slice(0, -2), slice(2, None), slice(1, -1)
    out[tuple(mid)] = (v[tuple(hi)] - v[tuple(lo)]) / (2.0 * h)
    return out


def _d2(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    out = np.full_like(v, np.nan)
    lo = [slice(None)] * v.ndim
    hi = [slice(None)] * v.ndim
    mid = [slice(None)] * v.ndim
    lo[axis], hi[axis], mid[axis] = slice(0, -2), slice(2, None), slice(1, -1)
    out[tuple(mid)] = (v[tuple(hi)] - 2.0 * v[tuple(mid)] + v[tuple(lo)]) / (h * h)
    return out


def fd_derivatives(g: GridFunction) -> dict[str, np.ndarray]:
    """Central-difference jet arrays on the full grid (NaN margins)."""
    dim = len(g.axes)
    out: dict[str, np.ndarray] = {"u": g.values}
    firsts = {}
    for m in range(dim):
        firsts[m] = _d1(g.values, m, g.spacing(m))
        out[f"u{m}"] = firsts[m]
    for m in range(dim):
        for n in range(m, dim):
            if m == n:
                out[f"u{m}{n}"] = _d2(g.values, m, g.spacing(m))
            else:
                out[f"u{m}{n}"] = _d1(firsts[m], n, g.spacing(n))
    return out


def _term_arrays(spec: PDESpec, g: GridFunction) -> list[np.ndarray]:
    if tuple(g.axes) != tuple(spec.variables):
        raise ValueError(f"grid axes {g.axes} do not match {spec.id!r} variables {spec.variables}")
    jets = fd_derivatives(g)
    names = list(spec.variables) + sorted(jets)
    mesh = g.meshgrid()
    cols = mesh + [jets[k] for k in sorted(jets)]
    vals = []
    for t in spec.terms:
        fn = compile_expr(t, names)
        vals.append(fn(*cols))
    return vals


def _require_fd_size(g: GridFunction) -> None:
    for (_, _, n), name in zip(g.bounds, g.axes):
        if n < 2 * MARGIN + 1:
            raise ValueError(f"axis {name!r}: need >= {2 * MARGIN + 1} points for interior residual")


def fd_residual(spec: PDESpec, g: GridFunction) -> GridFunction:
    """Residual on the interior via 2nd-order central stencils."""
    _require_fd_size(g)
    vals = _term_arrays(spec, g)
    total = sum(vals)
    return GridFunction(g.axes, g.bounds, total).trimmed()


def fd_check(spec: PDESpec, g: GridFunction, tol: float = 1e-3) -> Report:
    """Finite-difference verification with term-magnitude relative scaling."""
    _require_fd_size(g)
    vals = [GridFunction(g.axes, g.bounds, v).trimmed().values for v in _term_arrays(spec, g)]
    total = sum(vals)
    scale = 1.0 + sum(np.abs(v) for v in vals)
    rel = np.abs(total) / scale
    finite = np.isfinite(rel)
    if not np.any(finite):
        raise ValueError("no finite interior points (masked or singular everywhere)")
    worst = float(np.nanmax(np.where(finite, rel, 0.0)))
    idx = np.unravel_index(int(np.nanargmax(np.where(finite, rel, -1.0))), rel.shape)
    trimmed = GridFunction(g.axes, g.bounds, g.values).trimmed()
    argmax = {name: float(trimmed.coords(k)[idx[k]]) for k, name in enumerate(g.axes)}
    return Report(
        passed=bool(worst <= tol),
        max_residual=worst,
        tolerance=tol,
        method="finite-difference",
        samples=int(np.sum(finite)),
        argmax=argmax,
    )
