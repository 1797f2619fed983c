"""Diagonal problem Hamiltonian and its normalization.

The Hamiltonian ``-sum_alpha p_alpha_bar`` has eigenvalue ``C(x) - m`` at
``|x>``.  The constant ``-m`` is dropped throughout: phases and expectations
use ``s_C * C(x)`` directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .models import MAX_VARS
from .sat import CnfFormula

DEFAULT_C0 = 3.0


@dataclass(frozen=True)
class SpectrumTable:
    n: int
    m: int
    k: int
    values: np.ndarray = field(repr=False)
    c_max: int
    c_min: int
    maximizers: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class NormalizationInfo:
    """Scales applied to ``C(x)`` (phase and expectation) and to the mixer angle."""

    mode: str
    G_E: float | None
    G_0: float | None
    c0: float
    phase_scale: float
    mixer_scale: float

    def rescaled(self, phase_factor: float, mixer_factor: float) -> "NormalizationInfo":
        return replace(
            self,
            phase_scale=self.phase_scale * phase_factor,
            mixer_scale=self.mixer_scale * mixer_factor,
        )


def build_spectrum(formula: CnfFormula) -> SpectrumTable:
    n, m = formula.n, formula.m
    if n > MAX_VARS:
        raise ValueError(f"n={n} exceeds the {MAX_VARS}-variable cap")
    if m >= 1 << 16:
        raise ValueError("clause count does not fit the 16-bit table")
    unsat = np.zeros(1 << n, dtype=np.uint16)
    cube = unsat.reshape((2,) * n)
    for clause in formula.clauses:
        cube[clause.falsifying_index(n)] += 1
    values = (m - unsat).astype(np.uint16)
    c_max = int(values.max())
    return SpectrumTable(
        n=n,
        m=m,
        k=formula.k,
        values=values,
        c_max=c_max,
        c_min=int(values.min()),
        maximizers=np.flatnonzero(values == c_max),
    )


def _check_l(n: int, l: int) -> None:
    if not 0 <= l <= n:
        raise ValueError(f"l={l} outside [0, {n}]")


def mu_kx(n: int, k: int, l: int) -> float:
    """Mean per-clause satisfaction at ``x`` under F_f, with ``l = n - d_H(x, t)``."""
    _check_l(n, l)
    q = 2**k - 1
    return (q - 1) / q + math.comb(l, k) / (q * math.comb(n, k))


def sigma2_kx(n: int, k: int, l: int) -> float:
    _check_l(n, l)
    q = 2**k - 1
    mu = mu_kx(n, k, l)
    return (1 - mu) ** 2 * mu + mu**2 * (math.comb(n, k) - math.comb(l, k)) / (q * math.comb(n, k))


def estimate_GE(n: int, k: int, m: int, c0: float = DEFAULT_C0) -> float:
    """Statistical estimate of the spectral spread of ``H_C`` for random instances."""
    if m < 1:
        raise ValueError("estimate needs m >= 1")
    q = 2**k - 1
    return m * (1.0 / q + c0 / math.sqrt(m * q))


def exact_G0(table: SpectrumTable) -> float:
    return float(table.c_max - table.c_min)


def normalize(table: SpectrumTable, mode: str = "estimated", c0: float = DEFAULT_C0) -> NormalizationInfo:
    """Normalization scales: ``s_C = 1/G`` with ``G`` estimated or exact, ``s_B = 1/(2n)``.

    ``mode="raw"`` leaves both Hamiltonians unscaled.
    """
    g0 = exact_G0(table)
    if mode == "raw":
        return NormalizationInfo("raw", None, g0, c0, 1.0, 1.0)
    if mode == "estimated":
        if table.m < 1:
            raise ValueError("cannot normalize an empty formula")
        ge = estimate_GE(table.n, table.k, table.m, c0)
        return NormalizationInfo("estimated", ge, g0, c0, 1.0 / ge, 1.0 / (2 * table.n))
    if mode == "exact":
        if g0 <= 0:
            raise ValueError("exact normalization needs c_max > c_min")
        return NormalizationInfo("exact", None, g0, c0, 1.0 / g0, 1.0 / (2 * table.n))
    raise ValueError(f"unknown normalization mode {mode!r}")
