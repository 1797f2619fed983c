"""Seeded generators for the random k-SAT models F, F_s and F_f.

Stream discipline: every instance owns a ``numpy.random.Generator`` backed by
PCG64 and seeded with a 64-bit integer.  For F_f the hidden assignment is
drawn first; after that each clause draw consumes, in order, one
``choice(n, k, replace=False)`` for the variables and one ``integers(0, 2, k)``
for the signs.  Rejected draws consume the stream like accepted ones.
Per-instance seeds come from :func:`instance_seed`, a splitmix64 mix of the
base seed with the instance coordinates, so suites are reproducible
regardless of execution order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .sat import Clause, CnfFormula

MAX_VARS = 22

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def instance_seed(base_seed: int, *keys: int) -> int:
    """Fold integer keys into ``base_seed`` with splitmix64."""
    h = splitmix64(base_seed & _MASK64)
    for key in keys:
        h = splitmix64(h ^ (key & _MASK64))
    return h


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & _MASK64))


class ModelKind(str, enum.Enum):
    F = "F"
    F_S = "F_s"
    F_F = "F_f"


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    n: int
    m: int
    k: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.m < 0:
            raise ValueError("m must be non-negative")
        if self.n > MAX_VARS:
            raise ValueError(f"n={self.n} exceeds the {MAX_VARS}-variable cap")


@dataclass
class GenerationResult:
    formula: CnfFormula
    hidden_t0: int | None
    interpretations: np.ndarray = field(repr=False)

    @property
    def n_interpretations(self) -> int:
        return int(self.interpretations.size)


def sample_clause_uniform(n: int, k: int, rng: np.random.Generator) -> Clause:
    """Uniform draw from the ``2**k * C(n, k)`` clauses over ``n`` variables."""
    if k > n:
        raise ValueError(f"k={k} > n={n}")
    vars_ = rng.choice(n, size=k, replace=False) + 1
    signs = rng.integers(0, 2, size=k)
    return Clause(tuple(int(v) if s else -int(v) for v, s in zip(vars_, signs)))


def _falsified_by(clause: Clause, x: int) -> bool:
    return all(((x >> (v - 1)) & 1) == b for v, b in clause.falsifying_bits())


def draw_planted_clause(n: int, k: int, t0: int, rng: np.random.Generator) -> Clause:
    """Uniform clause among those satisfied by ``t0`` (rejection sampling)."""
    clause = sample_clause_uniform(n, k, rng)
    while _falsified_by(clause, t0):
        clause = sample_clause_uniform(n, k, rng)
    return clause


def draw_admissible_clause(alive: np.ndarray, n_alive: int, k: int, rng: np.random.Generator) -> Clause:
    """Uniform clause satisfied by at least one member of the ``(2,)*n`` mask ``alive``."""
    n = alive.ndim
    while True:
        clause = sample_clause_uniform(n, k, rng)
        if int(np.count_nonzero(alive[clause.falsifying_index(n)])) < n_alive:
            return clause


def generate(spec: ModelSpec) -> GenerationResult:
    n, m, k = spec.n, spec.m, spec.k
    rng = make_rng(spec.seed)
    # satisfying set of everything drawn so far, viewed as a (2,)*n cube
    alive = np.ones(1 << n, dtype=bool)
    cube = alive.reshape((2,) * n)
    n_alive = 1 << n
    clauses: list[Clause] = []
    hidden: int | None = None

    if spec.kind is ModelKind.F_F:
        hidden = int(rng.integers(0, 1 << n))

    for _ in range(m):
        if spec.kind is ModelKind.F:
            clause = sample_clause_uniform(n, k, rng)
        elif spec.kind is ModelKind.F_F:
            clause = draw_planted_clause(n, k, hidden, rng)
        else:
            clause = draw_admissible_clause(cube, n_alive, k, rng)
        idx = clause.falsifying_index(n)
        n_alive -= int(np.count_nonzero(cube[idx]))
        cube[idx] = False
        clauses.append(clause)

    formula = CnfFormula(n, k, tuple(clauses))
    return GenerationResult(formula, hidden, np.flatnonzero(alive))


def m_star(n: int) -> int:
    """Clause count of the hard operating point, ``round(mu_n * n)``.

    ``mu_n`` rises linearly from 5.9 at n=10 to 6.3 at n=20 and is clamped
    outside that range.
    """
    if n < 2:
        raise ValueError("m_star needs n >= 2")
    mu = min(max(5.9 + 0.04 * (n - 10), 5.9), 6.3)
    return int(math.floor(mu * n + 0.5))
