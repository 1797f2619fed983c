"""Exact state-vector simulation of the alternating phase/mixer circuit."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .models import MAX_VARS
from .spectrum import NormalizationInfo, SpectrumTable


@numba.njit(cache=True)
def _phase_kernel(psi, values, phases):
    for i in range(psi.shape[0]):
        psi[i] *= phases[values[i]]


@numba.njit(cache=True, fastmath=True)
def _mixer_kernel(psi, n, c, s):
    # every qubit gets U = c*I - i*s*X; pairs of qubits share one pass via U(x)U
    size = psi.shape[0]
    cc = c * c
    ss = s * s
    ics = 1j * c * s
    j = 0
    while j + 1 < n:
        h = 1 << j
        h2 = h << 1
        for base in range(0, size, 4 * h):
            for i in range(base, base + h):
                a0 = psi[i]
                a1 = psi[i + h]
                a2 = psi[i + h2]
                a3 = psi[i + h + h2]
                psi[i] = cc * a0 - ics * (a1 + a2) - ss * a3
                psi[i + h] = cc * a1 - ics * (a0 + a3) - ss * a2
                psi[i + h2] = cc * a2 - ics * (a0 + a3) - ss * a1
                psi[i + h + h2] = cc * a3 - ics * (a1 + a2) - ss * a0
        j += 2
    if j < n:
        h = 1 << j
        ms = -1j * s
        for base in range(0, size, 2 * h):
            for i in range(base, base + h):
                a = psi[i]
                b = psi[i + h]
                psi[i] = c * a + ms * b
                psi[i + h] = c * b + ms * a


@numba.njit(cache=True)
def _weighted_norm(psi, values):
    total = 0.0
    for i in range(psi.shape[0]):
        z = psi[i]
        total += values[i] * (z.real * z.real + z.imag * z.imag)
    return total


class StateVector:
    """``2**n`` complex amplitudes, mutated in place by the layer operations."""

    __slots__ = ("n", "amplitudes")

    def __init__(self, n: int, amplitudes: np.ndarray):
        if amplitudes.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} amplitudes, got {amplitudes.shape}")
        self.n = n
        self.amplitudes = amplitudes

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real**2 + a.imag**2


@dataclass(frozen=True)
class GammaBetaParams:
    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gamma, dtype=float).reshape(-1)
        b = np.asarray(self.beta, dtype=float).reshape(-1)
        if g.shape != b.shape:
            raise ValueError("gamma and beta must have equal length")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "beta", b)

    @property
    def p(self) -> int:
        return int(self.gamma.size)


class EvalCounter:
    """Number of expectation evaluations charged to a run."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def tick(self, k: int = 1) -> None:
        self.count += k

    def __repr__(self) -> str:
        return f"EvalCounter({self.count})"


def init_plus(n: int) -> StateVector:
    if not 1 <= n <= MAX_VARS:
        raise ValueError(f"n={n} outside [1, {MAX_VARS}]")
    size = 1 << n
    return StateVector(n, np.full(size, 1.0 / np.sqrt(size), dtype=np.complex128))


def apply_phase(state: StateVector, table: SpectrumTable, s_C: float, gamma: float) -> StateVector:
    """``psi_x <- psi_x * exp(-i * gamma * s_C * C(x))``."""
    if table.n != state.n:
        raise ValueError("table and state disagree on n")
    levels = np.arange(table.m + 1, dtype=np.float64)
    phases = np.exp(-1j * (gamma * s_C) * levels)
    _phase_kernel(state.amplitudes, table.values, phases)
    return state


def apply_mixer(state: StateVector, s_B: float, beta: float) -> StateVector:
    """``exp(-i * beta * s_B * sum_j X_j)`` as a product of single-qubit rotations."""
    theta = beta * s_B
    _mixer_kernel(state.amplitudes, state.n, np.cos(theta), np.sin(theta))
    return state


def run_circuit(table: SpectrumTable, norm: NormalizationInfo, params: GammaBetaParams) -> StateVector:
    state = init_plus(table.n)
    for g, b in zip(params.gamma, params.beta):
        apply_phase(state, table, norm.phase_scale, float(g))
        apply_mixer(state, norm.mixer_scale, float(b))
    return state


def expectation(
    state: StateVector, table: SpectrumTable, s_C: float, counter: EvalCounter | None = None
) -> float:
    """``sum_x s_C * C(x) * |psi_x|^2``; charges one evaluation to ``counter``."""
    if table.n != state.n:
        raise ValueError("table and state disagree on n")
    if counter is not None:
        counter.tick()
    return s_C * float(_weighted_norm(state.amplitudes, table.values))


def target_probability(state: StateVector, table: SpectrumTable) -> float:
    if table.maximizers.size == 0:
        raise ValueError("table has no maximizers")
    a = state.amplitudes[table.maximizers]
    return float(np.sum(a.real**2 + a.imag**2))
