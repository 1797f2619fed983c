"""Parameter spaces and their maps onto per-layer ``(gamma, beta)``.

* linear ``(theta, rho)``: a two-parameter linear ramp over the full depth;
* ``(theta_d, tau_d)``: per-layer angle/intensity pairs, smooth along the
  optimal passage;
* Fourier ``(u, v)``: sine/cosine coefficients of the ramp.

The per-layer ``(theta, tau)`` form comes from a three-factor parameterization
``gamma_d = sum_{j<=d} rho_j sin(theta_j) dt_d`` (and the mirrored sum for
``beta``) once the growing factor of the partial sums is split off as
``d/(p+1)`` and ``p * rho_d * dt_d`` is merged into ``tau_d``.  Only the
collapsed form is used at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .simulator import GammaBetaParams


@dataclass(frozen=True)
class LinearSchedule:
    theta: float
    rho: float

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")


@dataclass(frozen=True)
class ThetaTauParams:
    theta: np.ndarray
    tau: np.ndarray

    def __post_init__(self) -> None:
        th = np.asarray(self.theta, dtype=float).reshape(-1)
        ta = np.asarray(self.tau, dtype=float).reshape(-1)
        if th.size < 1 or th.shape != ta.shape:
            raise ValueError("theta and tau must be non-empty and of equal length")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "tau", ta)

    @property
    def length(self) -> int:
        return int(self.theta.size)


@dataclass(frozen=True)
class FourierParams:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float).reshape(-1)
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if u.shape != v.shape:
            raise ValueError("u and v must have equal length")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def q(self) -> int:
        return int(self.u.size)


def _linear_raw(theta: float, rho: float, p: int) -> GammaBetaParams:
    d = np.arange(1, p + 1, dtype=float)
    gamma = 2.0 * np.pi * d / (p + 1) * rho * np.sin(theta)
    beta = 2.0 * np.pi * (p + 1 - d) / (p + 1) * rho * np.cos(theta)
    return GammaBetaParams(gamma, beta)


def linear_to_gamma_beta(sched: LinearSchedule, p: int) -> GammaBetaParams:
    """``gamma_d = 2 pi d/(p+1) rho sin(theta)``, ``beta_d = 2 pi (p+1-d)/(p+1) rho cos(theta)``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return _linear_raw(sched.theta, sched.rho, p)


def thetatau_to_gamma_beta(params: ThetaTauParams) -> GammaBetaParams:
    p = params.length
    d = np.arange(1, p + 1, dtype=float)
    gamma = d / (p + 1) * params.tau * np.sin(params.theta)
    beta = (p + 1 - d) / (p + 1) * params.tau * np.cos(params.theta)
    return GammaBetaParams(gamma, beta)


def gamma_beta_to_thetatau(params: GammaBetaParams) -> ThetaTauParams:
    """Inverse of :func:`thetatau_to_gamma_beta` for strictly interior layers."""
    p = params.p
    d = np.arange(1, p + 1, dtype=float)
    a = params.gamma * (p + 1) / d
    b = params.beta * (p + 1) / (p + 1 - d)
    return ThetaTauParams(np.arctan2(a, b), np.hypot(a, b))


def fourier_to_gamma_beta(params: FourierParams) -> GammaBetaParams:
    """Sine/cosine transform onto a depth-``q`` circuit, ``q = len(u)``."""
    q = params.q
    if q < 1:
        raise ValueError("need at least one Fourier coefficient")
    k = np.arange(1, q + 1, dtype=float) - 0.5
    j = np.arange(1, q + 1, dtype=float) - 0.5
    arg = np.outer(j, k) * np.pi / q
    return GammaBetaParams(np.sin(arg) @ params.u, np.cos(arg) @ params.v)


def interp_resize(vec, length: int) -> np.ndarray:
    """Resample a per-layer vector onto ``length`` layers.

    Source node ``d`` sits at ``d/(L+1)`` and target node ``d'`` at
    ``d'/(length+1)``.  Natural cubic spline for ``L >= 3``, linear for
    ``L == 2``, constant for ``L == 1``; targets outside the source span take
    the nearest end value.
    """
    v = np.asarray(vec, dtype=float).reshape(-1)
    L = v.size
    if L < 1 or length < 1:
        raise ValueError("lengths must be >= 1")
    if L == 1:
        return np.full(length, v[0])
    src = np.arange(1, L + 1, dtype=float) / (L + 1)
    dst = np.arange(1, length + 1, dtype=float) / (length + 1)
    if L == length:
        return v.copy()
    dst = np.clip(dst, src[0], src[-1])
    if L == 2:
        return np.interp(dst, src, v)
    return CubicSpline(src, v, bc_type="natural")(dst)
