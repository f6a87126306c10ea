"""Principal-branch Lambert W by Halley iteration.

Seeds: branch-point series near -1/e, log asymptotics for large arguments,
``log1p`` otherwise.  Tolerance 1e-14, at most 50 iterations.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

__all__ = ["BRANCH_POINT", "lambert_w", "lambert_w_complex", "lambert_w_np"]

BRANCH_POINT = -math.exp(-1.0)
_TOL = 1e-14
_MAX_ITER = 50


def _seed_real(z: float) -> float:
    if z < -0.25:
        p = math.sqrt(2.0 * (math.e * z + 1.0))
        return -1.0 + p - p * p / 3.0 + 11.0 * p ** 3 / 72.0
    if z > math.e:
        lz = math.log(z)
        return lz - math.log(lz)
    return math.log1p(z) if z > -0.99 else -0.99


def _halley(z, w, is_complex: bool):
    exp = cmath.exp if is_complex else math.exp
    for _ in range(_MAX_ITER):
        ew = exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0:
            w = w + 1e-12
            continue
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w = w - step
        if abs(step) <= _TOL * (1.0 + abs(w)):
            return w
    return w


def lambert_w(z: float) -> float:
    """Real principal branch; requires z >= -1/e."""
    if z < BRANCH_POINT:
        raise ValueError(f"lambertW argument {z} below branch point -1/e")
    if z == 0.0:
        return 0.0
    return float(_halley(z, _seed_real(z), is_complex=False))


def lambert_w_complex(z: complex) -> complex:
    if z == 0:
        return 0j
    if z.imag == 0 and z.real >= BRANCH_POINT:
        return complex(lambert_w(z.real))
    w = cmath.log(z)
    if abs(z) < 1.0:
        w = z * cmath.exp(-z)
    return _halley(complex(z), w, is_complex=True)


def lambert_w_np(z: np.ndarray) -> np.ndarray:
    """Vectorised real principal branch; NaN outside the branch domain."""
    z = np.asarray(z, dtype=float)
    w = np.where(z > math.e, np.log(np.maximum(z, 1e-300)), np.log1p(np.maximum(z, -0.99)))
    near = z < -0.25
    if np.any(near):
        p = np.sqrt(np.maximum(2.0 * (math.e * z + 1.0), 0.0))
        w = np.where(near, -1.0 + p - p * p / 3.0 + 11.0 * p ** 3 / 72.0, w)
    big = z > math.e
    if np.any(big):
        lz = np.log(np.where(big, z, math.e))
        w = np.where(big, lz - np.log(lz), w)
    with np.errstate(all="ignore"):
        for _ in range(_MAX_ITER):
            ew = np.exp(w)
            f = w * ew - z
            wp1 = w + 1.0
            wp1 = np.where(wp1 == 0, 1e-12, wp1)
            step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
            w = w - step
            if np.all(np.abs(step) <= _TOL * (1.0 + np.abs(w))):
                break
    w = np.where(z < BRANCH_POINT, np.nan, w)
    return np.where(z == 0.0, 0.0, w)
