"""Grid-then-refine maximization on the unit box and vectorized 1-D minimization.

Both bound modules solve ``max_theta min{terms}`` where ``theta`` is a vector
of correlations in ``[0, 1]^d`` and some terms carry an inner ``min_N``.
Objectives are passed as vectorized callables ``f(X) -> values`` with ``X`` of
shape ``(K, d)``; points outside the admissible region must evaluate to
``-inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GridSpec:
    """Search settings for the outer maximization.

    Parameters
    ----------
    resolution : int
        Grid points per correlation axis, including both endpoints.
    top_k : int
        Number of best grid points used as Nelder-Mead starts.
    xatol : float
        Simplex convergence tolerance on the parameters.
    """

    resolution: int = 41
    top_k: int = 5
    xatol: float = 1e-6
    fatol: float = 1e-12
    max_iter: int = 2000

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError(f"grid resolution must be >= 2, got {self.resolution}")
        if self.top_k < 0:
            raise ValueError("top_k must be nonnegative")


def box_grid(d: int, resolution: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, resolution)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class MaxResult:
    x: np.ndarray
    value: float
    grid_value: float
    evaluations: int


def maximize_box(func: Callable[[np.ndarray], np.ndarray], d: int, spec: GridSpec,
                 grid: np.ndarray | None = None, grid_values: np.ndarray | None = None) -> MaxResult:
    """Maximize a vectorized objective over ``[0, 1]^d``.

    The whole grid is evaluated in one call, then Nelder-Mead is started
    from the ``top_k`` distinct best points with an initial simplex the size
    of one grid cell.  The returned value is never below the best grid value.
    ``grid``/``grid_values`` may be supplied by callers that cache them.
    """
    if grid is None:
        grid = box_grid(d, spec.resolution)
    vals = func(grid) if grid_values is None else grid_values
    evals = len(grid)
    finite = np.isfinite(vals)
    if not finite.any():
        raise ValueError("objective is -inf on the whole grid")
    order = np.argsort(-np.where(finite, vals, -np.inf), kind="stable")
    best_i = int(order[0])
    best_x, best_v = grid[best_i].copy(), float(vals[best_i])
    grid_best = best_v
    h = 1.0 / (spec.resolution - 1)

    def neg(x):
        if np.any(x < 0.0) or np.any(x > 1.0):
            return math.inf
        v = float(func(x[None, :])[0])
        return -v if np.isfinite(v) else math.inf

    for i in order[: spec.top_k]:
        if not finite[i]:
            break
        x0 = grid[i]
        simplex = [x0]
        for j in range(d):
            step = np.zeros(d)
            step[j] = h if x0[j] + h <= 1.0 else -h
            simplex.append(x0 + step)
        res = minimize(neg, x0, method="Nelder-Mead",
                       options={"initial_simplex": np.array(simplex), "xatol": spec.xatol,
                                "fatol": spec.fatol, "maxiter": spec.max_iter})
        evals += res.nfev
        if np.isfinite(res.fun) and -res.fun > best_v:
            best_v, best_x = float(-res.fun), np.array(res.x)
    return MaxResult(best_x, best_v, grid_best, evals)


def default_scan(hi: float, points: int = 121) -> np.ndarray:
    """0 followed by log-spaced points up to ``hi``."""
    return np.concatenate([[0.0], np.logspace(-6.0, math.log10(hi), points - 1)])


def golden_min(func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
               batch: int, tol: float = 1e-9, scan: np.ndarray | None = None):
    """Minimize ``batch`` independent 1-D functions on ``[lo, hi]``.

    ``func`` receives an array of abscissae of shape ``(batch, m)`` and
    returns values of the same shape (row ``i`` belongs to problem ``i``).
    A coarse scan locates the basin, then golden-section narrows the
    bracket around the best scan point to width ``tol``.  Returns
    ``(argmin, min)`` arrays of shape ``(batch,)``.
    """
    if scan is None:
        scan = default_scan(hi) if lo == 0.0 else np.linspace(lo, hi, 121)
    scan = np.clip(scan, lo, hi)
    grid = np.broadcast_to(scan, (batch, len(scan)))
    vals = func(grid)
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = np.argmin(vals, axis=1)
    rows = np.arange(batch)
    best_x = scan[i].astype(float)
    best_v = vals[rows, i]
    a = scan[np.maximum(i - 1, 0)].astype(float)
    b = scan[np.minimum(i + 1, len(scan) - 1)].astype(float)
    width = float(np.max(b - a)) if batch else 0.0
    if width > tol:
        c = b - INV_PHI * (b - a)
        d = a + INV_PHI * (b - a)
        fc = func(c[:, None])[:, 0]
        fd = func(d[:, None])[:, 0]
        for _ in range(int(math.ceil(math.log(width / tol) / -math.log(INV_PHI)))):
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            d_new = np.where(left, c, a + INV_PHI * (b - a))
            c_new = np.where(left, b - INV_PHI * (b - a), d)
            fd_keep = np.where(left, fc, np.nan)
            fc_keep = np.where(left, np.nan, fd)
            c, d = c_new, d_new
            # exactly one new evaluation per problem
            x_new = np.where(left, c, d)
            f_new = func(x_new[:, None])[:, 0]
            fc = np.where(left, f_new, fc_keep)
            fd = np.where(left, fd_keep, f_new)
        x_mid = 0.5 * (a + b)
        f_mid = func(x_mid[:, None])[:, 0]
        better = f_mid < best_v
        best_x = np.where(better, x_mid, best_x)
        best_v = np.where(better, f_mid, best_v)
    return best_x, best_v


def golden_min_scalar(func_vec: Callable[[np.ndarray], np.ndarray], func: Callable[[float], float],
                      lo: float, hi: float, tol: float = 1e-9, scan: np.ndarray | None = None):
    """Single-problem variant of :func:`golden_min` with a scalar inner loop.

    ``func_vec`` evaluates the coarse scan in one call; ``func`` is the same
    function on plain floats.  Returns ``(argmin, min)``.
    """
    if scan is None:
        scan = default_scan(hi) if lo == 0.0 else np.linspace(lo, hi, 121)
    scan = np.clip(scan, lo, hi)
    vals = np.asarray(func_vec(scan), dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = int(np.argmin(vals))
    best_x, best_v = float(scan[i]), float(vals[i])
    a = float(scan[max(i - 1, 0)])
    b = float(scan[min(i + 1, len(scan) - 1)])
    if b - a <= tol:
        return best_x, best_v
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    fx = func(x)
    if fx < best_v:
        return x, fx
    return best_x, best_v
