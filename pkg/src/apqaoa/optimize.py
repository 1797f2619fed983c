"""BFGS with finite-difference gradients and exact evaluation accounting.

Every call of the objective is one charged evaluation.  A forward-difference
gradient needs ``arity + 1`` values; the base value is the one the line search
already paid for, so each gradient adds ``arity`` calls.  Setting
``reuse_base_value=False`` re-evaluates the base point instead.  A
central-difference gradient costs ``2 * arity``.

The relative-improvement stop (``f_tol``) is only tested after steps taken
with a curvature-scaled inverse Hessian; a small gain from a raw gradient
step says more about the step length than about convergence.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

Objective = Callable[[np.ndarray], float]


class ObjectiveError(RuntimeError):
    """The objective returned a non-finite value."""


@dataclass(frozen=True)
class OptimizerConfig:
    fd_step: float = 1e-6
    fd_scheme: str = "forward"
    grad_tol: float = 1e-5
    f_tol: float = 1e-8
    max_iters: int = 200
    armijo_c1: float = 1e-4
    backtrack_min: float = 0.1
    backtrack_max: float = 0.5
    max_backtracks: int = 30
    reuse_base_value: bool = True
    f_tol_needs_curvature: bool = True

    def __post_init__(self) -> None:
        for name in ("fd_step", "grad_tol", "f_tol", "armijo_c1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.fd_scheme not in ("forward", "central"):
            raise ValueError(f"unknown fd_scheme {self.fd_scheme!r}")
        if not 0 < self.backtrack_min <= self.backtrack_max < 1:
            raise ValueError("need 0 < backtrack_min <= backtrack_max < 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizationReport:
    x_star: np.ndarray
    f_star: float
    evals: int
    iterations: int
    converged: bool
    reason: str


class _Counted:
    def __init__(self, fn: Objective):
        self.fn = fn
        self.calls = 0

    def __call__(self, x: np.ndarray) -> float:
        self.calls += 1
        val = float(self.fn(x))
        if not math.isfinite(val):
            raise ObjectiveError(f"objective returned {val} at x={x.tolist()}")
        return val


def fd_gradient(fn: Objective, x: np.ndarray, fx: float | None, step: float, scheme: str = "forward") -> np.ndarray:
    """Finite-difference gradient with per-coordinate step ``step * (1 + |x_i|)``."""
    g = np.empty_like(x)
    if scheme == "forward" and fx is None:
        fx = fn(x)
    for i in range(x.size):
        h = step * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += h
        if scheme == "forward":
            g[i] = (fn(xp) - fx) / h
        else:
            xm = x.copy()
            xm[i] -= h
            g[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def minimize(objective: Objective, x0: Sequence[float], config: OptimizerConfig | None = None) -> OptimizationReport:
    cfg = config or OptimizerConfig()
    f = _Counted(objective)
    x = np.array(x0, dtype=float).reshape(-1)
    fx = f(x)
    g = fd_gradient(f, x, fx if cfg.reuse_base_value else None, cfg.fd_step, cfg.fd_scheme)
    H = np.eye(x.size)
    identity = True
    reason = "max_iters"
    converged = False
    it = 0

    while it < cfg.max_iters:
        if np.max(np.abs(g)) <= cfg.grad_tol:
            reason, converged = "grad_tol", True
            break
        d = -H @ g
        slope = float(g @ d)
        if slope >= 0:
            H, identity = np.eye(x.size), True
            d = -g
            slope = float(g @ d)

        # first step along a raw gradient is capped to unit length
        raw_step = identity
        alpha = min(1.0, 1.0 / float(np.linalg.norm(d))) if identity else 1.0
        accepted = False
        for _ in range(cfg.max_backtracks):
            x_new = x + alpha * d
            f_new = f(x_new)
            if f_new <= fx + cfg.armijo_c1 * alpha * slope:
                accepted = True
                break
            # minimiser of the quadratic through f(x), f'(x) and f(x + alpha d)
            denom = 2.0 * (f_new - fx - alpha * slope)
            trial = -slope * alpha * alpha / denom if denom > 0 else cfg.backtrack_max * alpha
            alpha = min(max(trial, cfg.backtrack_min * alpha), cfg.backtrack_max * alpha)

        if not accepted:
            if not identity:
                H, identity = np.eye(x.size), True
                continue
            reason = "line_search"
            break

        it += 1
        g_new = fd_gradient(f, x_new, f_new if cfg.reuse_base_value else None, cfg.fd_step, cfg.fd_scheme)
        s = x_new - x
        y = g_new - g
        f_old = fx
        x, fx, g = x_new, f_new, g_new

        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            if identity:
                H = np.eye(x.size) * (sy / float(y @ y))
            rho = 1.0 / sy
            Hy = H @ y
            H = H + ((sy + y @ Hy) * rho * rho) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))
            identity = False

        if not (raw_step and cfg.f_tol_needs_curvature) and f_old - fx <= cfg.f_tol * max(abs(f_old), abs(fx), 1.0):
            reason, converged = "f_tol", True
            break

    if not converged and reason == "max_iters" and np.max(np.abs(g)) <= cfg.grad_tol:
        reason, converged = "grad_tol", True
    return OptimizationReport(x, fx, f.calls, it, converged, reason)


@dataclass
class GridScan:
    thetas: np.ndarray
    rhos: np.ndarray
    values: np.ndarray
    best_index: tuple[int, int]
    best_theta: float
    best_rho: float
    best_value: float
    evals: int


def grid_scan(
    objective2d: Callable[[float, float], float],
    theta_range: tuple[float, float],
    rho_range: tuple[float, float],
    resolution: int | tuple[int, int],
    maximize: bool = True,
) -> GridScan:
    """Exhaustive evaluation on a ``theta x rho`` grid (inclusive endpoints)."""
    rt, rr = (resolution, resolution) if isinstance(resolution, int) else resolution
    if rt < 2 or rr < 2:
        raise ValueError("resolution must be >= 2 per axis")
    thetas = np.linspace(*theta_range, rt)
    rhos = np.linspace(*rho_range, rr)
    values = np.empty((rt, rr))
    for i, th in enumerate(thetas):
        for j, rh in enumerate(rhos):
            values[i, j] = objective2d(float(th), float(rh))
    flat = int(np.argmax(values) if maximize else np.argmin(values))
    i, j = np.unravel_index(flat, values.shape)
    return GridScan(thetas, rhos, values, (int(i), int(j)), float(thetas[i]), float(rhos[j]), float(values[i, j]), rt * rr)
