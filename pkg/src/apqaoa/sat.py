"""Exactly-k CNF formulas: representation, evaluation and DIMACS I/O.

Assignments are encoded as integers, little-endian: variable ``j`` (1-based)
is bit ``j - 1``.  The same convention indexes every length-``2**n`` table in
the package.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence


class DimacsError(ValueError):
    """Raised on malformed DIMACS input."""


@dataclass(frozen=True, order=True)
class Clause:
    """A disjunction of exactly ``k`` literals over distinct variables.

    Literals are signed integers (``+v`` for ``x_v``, ``-v`` for ``not x_v``),
    stored sorted by variable index so equal clauses compare equal.
    """

    literals: tuple[int, ...]

    def __post_init__(self) -> None:
        lits = tuple(int(l) for l in self.literals)
        if any(l == 0 for l in lits):
            raise ValueError("literal 0 is not a variable")
        vars_ = [abs(l) for l in lits]
        if len(set(vars_)) != len(vars_):
            raise ValueError(f"repeated variable in clause {lits}")
        object.__setattr__(self, "literals", tuple(sorted(lits, key=abs)))

    @classmethod
    def from_literals(cls, literals: Iterable[int]) -> "Clause":
        return cls(tuple(literals))

    @property
    def k(self) -> int:
        return len(self.literals)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(abs(l) for l in self.literals)

    def falsifying_bits(self) -> tuple[tuple[int, int], ...]:
        """``(var, bit)`` pairs of the unique pattern that falsifies the clause."""
        return tuple((abs(l), 0 if l > 0 else 1) for l in self.literals)

    def falsifying_index(self, n: int) -> tuple:
        """Index selecting the falsifying block of a ``(2,)*n`` shaped table.

        Variable ``v`` lives on axis ``n - v`` because a C-ordered reshape puts
        the least-significant bit last.
        """
        idx: list = [slice(None)] * n
        for var, bit in self.falsifying_bits():
            if var > n:
                raise ValueError(f"variable {var} out of range for n={n}")
            idx[n - var] = bit
        return tuple(idx)


@dataclass(frozen=True)
class Assignment:
    """An ``n``-bit assignment; ``value`` holds the little-endian encoding."""

    n: int
    value: int

    def __post_init__(self) -> None:
        if self.n < 0 or not 0 <= self.value < (1 << self.n):
            raise ValueError(f"assignment {self.value} does not fit in {self.n} bits")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "Assignment":
        value = 0
        for j, b in enumerate(bits):
            if b not in (0, 1, True, False):
                raise ValueError(f"bit {j} is not boolean: {b!r}")
            value |= int(b) << j
        return cls(len(bits), value)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> j) & 1 for j in range(self.n))

    def __getitem__(self, var: int) -> int:
        """Value of 1-based variable ``var``."""
        if not 1 <= var <= self.n:
            raise IndexError(f"variable {var} out of range for n={self.n}")
        return (self.value >> (var - 1)) & 1


@dataclass(frozen=True)
class CnfFormula:
    n: int
    k: int
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self) -> None:
        clauses = tuple(c if isinstance(c, Clause) else Clause.from_literals(c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.n < 1:
            raise ValueError("formula needs at least one variable")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        for c in clauses:
            if c.k != self.k:
                raise ValueError(f"clause {c.literals} has {c.k} literals, expected {self.k}")
            if max(c.variables) > self.n:
                raise ValueError(f"clause {c.literals} references a variable > n={self.n}")

    @property
    def m(self) -> int:
        return len(self.clauses)


def eval_clause(clause: Clause, x: Assignment) -> bool:
    if clause.literals and abs(clause.literals[-1]) > x.n:
        raise IndexError(f"clause mentions variable {abs(clause.literals[-1])} but n={x.n}")
    for lit in clause.literals:
        if x[abs(lit)] == (1 if lit > 0 else 0):
            return True
    return False


def count_satisfied(formula: CnfFormula, x: Assignment) -> int:
    if x.n != formula.n:
        raise ValueError(f"assignment width {x.n} != formula n={formula.n}")
    return sum(eval_clause(c, x) for c in formula.clauses)


def count_falsified(formula: CnfFormula, x: Assignment) -> int:
    return formula.m - count_satisfied(formula, x)


_K_COMMENT = re.compile(r"^c\s+k\s*=\s*(\d+)\s*$")


def parse_dimacs(text: str | bytes, k: int | None = None) -> CnfFormula:
    """Parse DIMACS CNF.

    If ``k`` is given every clause must have exactly ``k`` literals; otherwise
    ``k`` is inferred from the first clause (or a ``c k=<k>`` comment for an
    empty formula) and must be uniform.
    """
    if isinstance(text, bytes):
        text = text.decode("ascii")
    header: tuple[int, int] | None = None
    comment_k: int | None = None
    tokens: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            match = _K_COMMENT.match(line)
            if match:
                comment_k = int(match.group(1))
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise DimacsError(f"line {lineno}: duplicate header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise DimacsError(f"line {lineno}: malformed header {line!r}") from exc
            if header[0] < 1 or header[1] < 0:
                raise DimacsError(f"line {lineno}: bad header counts {line!r}")
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause before header")
        try:
            tokens.extend(int(t) for t in line.split())
        except ValueError as exc:
            raise DimacsError(f"line {lineno}: non-integer token in {line!r}") from exc
    if header is None:
        raise DimacsError("missing 'p cnf' header")
    n, m = header

    raw_clauses: list[list[int]] = []
    current: list[int] = []
    for tok in tokens:
        if tok == 0:
            raw_clauses.append(current)
            current = []
        else:
            if abs(tok) > n:
                raise DimacsError(f"literal {tok} exceeds n={n}")
            current.append(tok)
    if current:
        raise DimacsError("last clause is not 0-terminated")
    if len(raw_clauses) != m:
        raise DimacsError(f"header declares {m} clauses, found {len(raw_clauses)}")

    if k is None:
        k = len(raw_clauses[0]) if raw_clauses else comment_k
        if k is None:
            raise DimacsError("cannot infer k for an empty formula; pass k explicitly")
    clauses = []
    for lits in raw_clauses:
        if len(lits) != k:
            raise DimacsError(f"clause {lits} has {len(lits)} literals, expected {k}")
        try:
            clauses.append(Clause.from_literals(lits))
        except ValueError as exc:
            raise DimacsError(str(exc)) from exc
    try:
        return CnfFormula(n, k, tuple(clauses))
    except ValueError as exc:
        raise DimacsError(str(exc)) from exc


def write_dimacs(formula: CnfFormula, comments: Sequence[str] = ()) -> bytes:
    lines = [f"c {c}" for c in comments]
    lines.append(f"c k={formula.k}")
    lines.append(f"p cnf {formula.n} {formula.m}")
    lines.extend(" ".join(str(l) for l in c.literals) + " 0" for c in formula.clauses)
    return ("\n".join(lines) + "\n").encode("ascii")
