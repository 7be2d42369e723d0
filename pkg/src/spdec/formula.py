"""k-CNF formulas: representation, random models, simplification and counting.

Clauses are tuples of non-zero signed integers in DIMACS convention: literal
``+v`` is the variable ``v`` and ``-v`` its negation.  Variables are numbered
``1..n``.  Duplicate literals and tautologies are allowed and preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import CapExceeded, Contradiction, DomainError
from .rng import stream

Clause = tuple[int, ...]

BRUTEFORCE_CAP = 24


class Literal(NamedTuple):
    var: int
    sign: int

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        if lit == 0:
            raise DomainError("0 is not a literal")
        return cls(abs(lit), 1 if lit > 0 else -1)

    def to_int(self) -> int:
        return self.var * self.sign


@dataclass(frozen=True)
class Provenance:
    """Where a formula came from.  ``empty_removed`` counts clauses deleted as
    empty by decimation (a contradiction witness)."""

    source: str = "manual"
    model: str | None = None
    k: int | None = None
    m: int | None = None
    seed: int | None = None
    empty_removed: int = 0

    def as_dict(self) -> dict:
        return {
            "source": self.source,
            "model": self.model,
            "k": self.k,
            "m": self.m,
            "seed": self.seed,
            "empty_removed": self.empty_removed,
        }


@dataclass(frozen=True)
class CnfFormula:
    n: int
    clauses: tuple[Clause, ...]
    provenance: Provenance = field(default=Provenance(), compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise DomainError("n must be non-negative")
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        for c in clauses:
            for lit in c:
                if lit == 0 or abs(lit) > self.n:
                    raise DomainError(f"literal {lit} out of range for n={self.n}")
        object.__setattr__(self, "clauses", clauses)

    @classmethod
    def from_clauses(cls, n: int, clauses: Iterable[Iterable[int]], **prov) -> "CnfFormula":
        return cls(n, tuple(tuple(c) for c in clauses), Provenance(**prov) if prov else Provenance())

    @property
    def m(self) -> int:
        return len(self.clauses)

    def literals(self, index: int) -> list[Literal]:
        return [Literal.from_int(l) for l in self.clauses[index]]

    def variables(self) -> set[int]:
        """Variables that occur in at least one clause."""
        return {abs(l) for c in self.clauses for l in c}

    @cached_property
    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """(literals, offsets): all literals concatenated plus clause offsets."""
        lengths = np.fromiter((len(c) for c in self.clauses), dtype=np.int64, count=self.m)
        offsets = np.zeros(self.m + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        lits = np.fromiter((l for c in self.clauses for l in c), dtype=np.int64, count=int(offsets[-1]))
        return lits, offsets


@dataclass(frozen=True)
class RandomModel:
    kind: str  # "uniform" or "binomial"
    k: int
    m: float

    def __post_init__(self):
        if self.kind not in ("uniform", "binomial"):
            raise DomainError(f"unknown model {self.kind!r}")
        if self.k < 2:
            raise DomainError("k must be at least 2")
        if self.m < 0:
            raise DomainError("m must be non-negative")


@dataclass(frozen=True)
class PartialAssignment:
    order: tuple[int, ...] = ()
    values: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.order) != len(self.values):
            raise DomainError("order and values differ in length")
        if len(set(self.order)) != len(self.order):
            raise DomainError("a variable is assigned twice")
        if any(v not in (-1, 1) for v in self.values):
            raise DomainError("values must be +1 or -1")

    @classmethod
    def from_mapping(cls, values: Mapping[int, int]) -> "PartialAssignment":
        order = tuple(values)
        return cls(order, tuple(int(values[v]) for v in order))

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.order, self.values))

    def union(self, other: "PartialAssignment") -> "PartialAssignment":
        return PartialAssignment(self.order + other.order, self.values + other.values)

    def __len__(self) -> int:
        return len(self.order)


def _literal_codes_to_clauses(codes: np.ndarray) -> list[Clause]:
    var = codes // 2 + 1
    sign = np.where(codes % 2 == 0, 1, -1)
    lits = var * sign
    return [tuple(int(x) for x in row) for row in lits]


def generate(model: RandomModel, n: int, seed: int) -> CnfFormula:
    """Sample a random formula.

    ``uniform``: exactly m clauses, each a k-tuple of literals drawn i.i.d.
    uniformly from the 2n literals.  ``binomial``: a Poisson(m) number of
    i.i.d. tuples; when (2n)^k is representable the tuples are distinct.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    if n == 0 and model.m > 0:
        raise DomainError("clauses need at least one variable")
    rng = stream(seed, "generation")
    k = model.k
    if model.kind == "uniform":
        m = int(model.m)
        if m != model.m:
            raise DomainError("uniform model needs an integer m")
        codes = rng.integers(0, 2 * n, size=(m, k))
        clauses = _literal_codes_to_clauses(codes)
    else:
        total = (2 * n) ** k
        if model.m > total:
            raise DomainError("expected clause count exceeds the number of distinct clauses")
        count = int(rng.poisson(model.m))
        if total < 2**62:
            if count > total:
                count = total
            seen: dict[int, None] = {}
            while len(seen) < count:
                for c in rng.integers(0, total, size=count - len(seen)):
                    seen.setdefault(int(c), None)
            flat = np.array(list(seen), dtype=np.int64)
            codes = np.stack([(flat // (2 * n) ** j) % (2 * n) for j in range(k)], axis=1) if count else np.zeros((0, k), dtype=np.int64)
        else:
            codes = rng.integers(0, 2 * n, size=(count, k))
        clauses = _literal_codes_to_clauses(codes)
    prov = Provenance(source="generated", model=model.kind, k=k, m=model.m, seed=seed)
    return CnfFormula(n, tuple(clauses), prov)


def decimate(f: CnfFormula, pa: PartialAssignment, strict: bool = False) -> CnfFormula:
    """Substitute a partial assignment and simplify.

    Clauses with a satisfied literal are dropped, falsified literals are
    deleted, and clauses left empty are dropped and counted in the result's
    ``provenance.empty_removed``.  With ``strict`` an empty clause raises
    :class:`Contradiction` instead.
    """
    values = pa.as_dict()
    for v in values:
        if not 1 <= v <= f.n:
            raise DomainError(f"variable {v} out of range")
    if not values:
        return f
    kept: list[Clause] = []
    empty = 0
    for c in f.clauses:
        if any(values.get(abs(l)) == (1 if l > 0 else -1) for l in c):
            continue
        reduced = tuple(l for l in c if abs(l) not in values)
        if not reduced:
            if strict:
                raise Contradiction(f"clause {c} is falsified")
            empty += 1
            continue
        kept.append(reduced)
    prov = Provenance(source="decimated", k=f.provenance.k, m=f.provenance.m, seed=f.provenance.seed,
                      model=f.provenance.model, empty_removed=f.provenance.empty_removed + empty)
    return CnfFormula(f.n, tuple(kept), prov)


class Tameness(NamedTuple):
    verdict: bool
    redundant_count: int
    heavy_var_count: int


def redundant_mask(clauses: Sequence[Clause]) -> np.ndarray:
    """Clauses sharing at least two distinct variables with another clause.

    A clause that repeats a variable (duplicate literal or tautology) is
    counted as redundant as well.
    """
    owners: dict[tuple[int, int], list[int]] = {}
    mask = np.zeros(len(clauses), dtype=bool)
    for i, c in enumerate(clauses):
        vs = sorted({abs(l) for l in c})
        if len(vs) < len(c):
            mask[i] = True
        for a in range(len(vs)):
            for b in range(a + 1, len(vs)):
                owners.setdefault((vs[a], vs[b]), []).append(i)
    for members in owners.values():
        if len(members) > 1:
            mask[members] = True
    return mask


def clause_counts_per_variable(f: CnfFormula) -> np.ndarray:
    """Number of clauses each variable occurs in (index 0 is variable 1)."""
    counts = np.zeros(f.n, dtype=np.int64)
    for c in f.clauses:
        for v in {abs(l) for l in c}:
            counts[v - 1] += 1
    return counts


def is_tame(f: CnfFormula) -> Tameness:
    limit = math.log(f.n) if f.n > 0 else 0.0
    redundant = int(redundant_mask(f.clauses).sum())
    heavy = int((clause_counts_per_variable(f) > limit).sum())
    return Tameness(redundant <= limit and heavy <= limit, redundant, heavy)


def evaluate(f: CnfFormula, sigma: Sequence[int]) -> bool:
    if len(sigma) != f.n:
        raise DomainError("assignment length differs from n")
    for c in f.clauses:
        if not any(sigma[abs(l) - 1] == (1 if l > 0 else -1) for l in c):
            return False
    return True


def _assignment_bits(n: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def count_satisfying_bruteforce(f: CnfFormula, cap: int = BRUTEFORCE_CAP, chunk: int = 1 << 16) -> int:
    """Exact number of satisfying assignments by exhaustive enumeration."""
    if f.n > cap:
        raise CapExceeded(f"n={f.n} exceeds brute-force cap {cap}")
    if any(len(c) == 0 for c in f.clauses):
        return 0
    lits, offsets = f.flat
    if len(lits) == 0:
        return 1 << f.n
    cols = np.abs(lits) - 1
    want = lits > 0
    total = 0
    size = 1 << f.n
    for start in range(0, size, chunk):
        bits = _assignment_bits(f.n, start, min(size, start + chunk))
        true_lit = bits[:, cols] == want
        sat = np.logical_or.reduceat(true_lit, offsets[:-1], axis=1)
        total += int(sat.all(axis=1).sum())
    return total


class ExpectedCount(NamedTuple):
    value: float
    log2: float


def expected_sat_count(k: int, n: int, m: int | float) -> ExpectedCount:
    """2^n (1 - 2^-k)^m and its base-2 logarithm."""
    if k < 1 or n < 0 or m < 0:
        raise DomainError("parameters must be positive")
    log2 = n + m * math.log2(1.0 - 2.0 ** (-k))
    value = math.inf if log2 > 1023 else 2.0 ** log2
    if m == 0:
        value = float(2**n) if n <= 1023 else math.inf
    return ExpectedCount(value, log2)


def random_tree_formula(n: int, rng: np.random.Generator, max_width: int = 3, unit_prob: float = 0.2) -> CnfFormula:
    """Random formula whose factor graph is a tree.

    Each new clause joins one existing variable to fresh ones, so no cycles
    can form.  Unit clauses are attached with probability ``unit_prob`` per
    variable, at most one per variable.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    clauses: list[Clause] = []
    placed = 1
    while placed < n:
        anchor = int(rng.integers(1, placed + 1))
        fresh = min(int(rng.integers(1, max_width)), n - placed)
        members = [anchor] + list(range(placed + 1, placed + 1 + fresh))
        placed += fresh
        rng.shuffle(members)
        clauses.append(tuple(int(v) * int(rng.choice([-1, 1])) for v in members))
    for v in range(1, n + 1):
        if rng.random() < unit_prob:
            clauses.append((v * int(rng.choice([-1, 1])),))
    return CnfFormula(n, tuple(clauses), Provenance(source="tree"))


# ---------------------------------------------------------------- DIMACS


def to_dimacs(f: CnfFormula) -> str:
    lines = [f"p cnf {f.n} {f.m}"]
    lines.extend(" ".join(str(l) for l in c) + (" 0" if c else "0") for c in f.clauses)
    return "\n".join(lines) + "\n"


def canonical_bytes(f: CnfFormula) -> bytes:
    """Deterministic serialization used for reproducibility checks."""
    return to_dimacs(f).encode("ascii")


def from_dimacs(text: str) -> CnfFormula:
    n = m = None
    clauses: list[Clause] = []
    current: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad header: {line!r}")
            n, m = int(parts[2]), int(parts[3])
            continue
        if n is None:
            raise ValueError("clause before header")
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if n is None:
        raise ValueError("missing header")
    if current:
        clauses.append(tuple(current))
    if m is not None and len(clauses) != m:
        raise ValueError(f"header announces {m} clauses, found {len(clauses)}")
    return CnfFormula(n, tuple(clauses), Provenance(source="dimacs"))


def read_dimacs(path) -> CnfFormula:
    with open(path, encoding="ascii") as fh:
        return from_dimacs(fh.read())


def write_dimacs(f: CnfFormula, path) -> None:
    with open(path, "wb") as fh:
        fh.write(canonical_bytes(f))
