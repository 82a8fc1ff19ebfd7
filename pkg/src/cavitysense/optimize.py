"""Time-grid optimization: coarse log scan followed by golden-section refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

POINTS_PER_DECADE = 32
_INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class Optimum:
    x: float
    value: float
    bracketed: bool
    evaluations: int
    note: str = ""


def log_grid(lo: float, hi: float, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    return np.logspace(math.log10(lo), math.log10(hi), n)


def golden_section(f: Callable[[float], float], a: float, b: float, rtol: float = 1e-4,
                   max_iter: int = 200) -> tuple[float, float, int]:
    """Minimize f on [a, b] in log coordinates until the bracket is within rtol."""
    u, v = math.log(a), math.log(b)
    c = v - _INV_PHI * (v - u)
    d = u + _INV_PHI * (v - u)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    n = 2
    while math.expm1(v - u) > rtol and n < max_iter:
        if fc < fd:
            v, d, fd = d, c, fc
            c = v - _INV_PHI * (v - u)
            fc = f(math.exp(c))
        else:
            u, c, fc = c, d, fd
            d = u + _INV_PHI * (v - u)
            fd = f(math.exp(d))
        n += 1
    x = math.exp(0.5 * (u + v))
    return x, f(x), n + 1


def minimize_log(f: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-4,
                 per_decade: int = POINTS_PER_DECADE) -> Optimum:
    """Scan a log grid, bracket the smallest finite value, and refine it.

    A minimum at the grid edge is reported as monotone behavior, not as an error.
    """
    grid = log_grid(lo, hi, per_decade)
    vals = np.array([_safe(f, x) for x in grid])
    if not np.any(np.isfinite(vals)):
        raise ArithmeticError("objective not finite anywhere on the scan grid")
    i = int(np.nanargmin(np.where(np.isfinite(vals), vals, np.nan)))
    if i == 0 or i == len(grid) - 1:
        side = "decreasing" if i == len(grid) - 1 else "increasing"
        return Optimum(float(grid[i]), float(vals[i]), False, len(grid), f"monotone ({side}) on scan range")
    x, val, n = golden_section(lambda x: _safe(f, x), grid[i - 1], grid[i + 1], rtol)
    if not val <= vals[i]:
        x, val = float(grid[i]), float(vals[i])
    return Optimum(x, val, True, len(grid) + n)


def _safe(f, x):
    try:
        v = float(f(x))
    except (ArithmeticError, ValueError):
        return math.inf
    return v if math.isfinite(v) else math.inf
