"""Covers: generalized assignments in {-1, 0, +1}^n.

A vector sigma is a cover when

1. every clause has a true literal (sign * sigma = +1) or at least two literal
   occurrences on 0-valued variables, and
2. every variable with sigma(x) != 0 has a supporting clause a in N(x): all
   occurrences of other variables y in a are false, sign(y, a) * sigma(y) = -1.

Literal occurrences are counted with multiplicity, so (x v x v y) with
x = y = 0 has three 0-literals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapExceeded, DomainError
from .factor_graph import FactorGraph
from .formula import CnfFormula
from .message_passing import IterationPolicy, iterate, sp_marginals

COVER_CAP = 16
SYMBOLS = {-1: "-", 0: "0", 1: "+"}


def _clause_ok(clause, sigma) -> bool:
    values = [(1 if l > 0 else -1) * sigma[abs(l) - 1] for l in clause]
    return any(v == 1 for v in values) or sum(v == 0 for v in values) >= 2


def _supported(f: CnfFormula, sigma, x: int) -> bool:
    for clause in f.clauses:
        if not any(abs(l) == x for l in clause):
            continue
        others = [l for l in clause if abs(l) != x]
        if all((1 if l > 0 else -1) * sigma[abs(l) - 1] == -1 for l in others):
            return True
    return False


def clause_condition(f: CnfFormula, sigma: Sequence[int]) -> bool:
    return all(_clause_ok(c, sigma) for c in f.clauses)


def support_condition(f: CnfFormula, sigma: Sequence[int]) -> bool:
    return all(_supported(f, sigma, x) for x in range(1, f.n + 1) if sigma[x - 1] != 0)


def is_cover(f: CnfFormula, sigma: Sequence[int]) -> bool:
    if len(sigma) != f.n:
        raise DomainError("sigma length differs from n")
    if any(v not in (-1, 0, 1) for v in sigma):
        raise DomainError("sigma entries must be -1, 0 or +1")
    return clause_condition(f, sigma) and support_condition(f, sigma)


@dataclass(frozen=True, eq=False)
class CoverSet:
    n: int
    covers: np.ndarray  # (count, n) int8

    @property
    def count(self) -> int:
        return len(self.covers)

    def marginals(self) -> np.ndarray:
        """(n, 3) fractions of covers with value (-1, 0, +1); NaN when empty."""
        if self.count == 0:
            return np.full((self.n, 3), np.nan)
        return np.stack([(self.covers == v).mean(axis=0) for v in (-1, 0, 1)], axis=1)

    def as_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in row) for row in self.covers}

    def to_text(self) -> str:
        return "".join("".join(SYMBOLS[int(v)] for v in row) + "\n" for row in self.covers)


def _ternary_block(n: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    digits = (codes[:, None] // (3 ** np.arange(n, dtype=np.int64))) % 3
    return (digits - 1).astype(np.int8)


def enumerate_covers(f: CnfFormula, cap: int = COVER_CAP, block: int = 3**11) -> CoverSet:
    """Exhaustive scan of {-1,0,+1}^n, vectorized over blocks of candidates."""
    if f.n > cap:
        raise CapExceeded(f"n={f.n} exceeds cover cap {cap}")
    if any(len(c) == 0 for c in f.clauses):
        return CoverSet(f.n, np.zeros((0, f.n), dtype=np.int8))
    found = []
    total = 3**f.n
    for start in range(0, total, block):
        sig = _ternary_block(f.n, start, min(total, start + block))
        cols = [sig[:, v] for v in range(f.n)]
        ok = np.ones(len(sig), dtype=bool)
        supported = [np.zeros(len(sig), dtype=bool) for _ in range(f.n)]
        for clause in f.clauses:
            lits = [cols[abs(l) - 1] if l > 0 else -cols[abs(l) - 1] for l in clause]
            has_true = np.zeros(len(sig), dtype=bool)
            zeros = np.zeros(len(sig), dtype=np.int8)
            for v in lits:
                has_true |= v == 1
                zeros += v == 0
            ok &= has_true | (zeros >= 2)
            for x in {abs(l) for l in clause}:
                support = np.ones(len(sig), dtype=bool)
                for l, v in zip(clause, lits):
                    if abs(l) != x:
                        support &= v == -1
                supported[x - 1] |= support
        for x in range(f.n):
            ok &= (cols[x] == 0) | supported[x]
        found.append(sig[ok])
    return CoverSet(f.n, np.concatenate(found))


@dataclass(frozen=True)
class CoverComparison:
    cover_count: int
    deviations: np.ndarray  # (n, 3) absolute difference of triples; NaN without covers
    max_deviation: float
    residual: float
    rounds: int
    sp_triples: np.ndarray
    cover_marginals: np.ndarray


def compare_sp_to_covers(f: CnfFormula, policy: IterationPolicy | None = None, cap: int = COVER_CAP) -> CoverComparison:
    """SP marginal triples at a numerical fixed point against cover fractions."""
    cs = enumerate_covers(f, cap)
    policy = policy or IterationPolicy(omega=1000, residual_tol=1e-12)
    g = FactorGraph.build(f)
    res = iterate(g, policy, "sp")
    sp = sp_marginals(g, res.state).triples
    cover = cs.marginals()
    dev = np.abs(sp - cover)
    max_dev = float(np.nanmax(dev)) if cs.count and f.n else (0.0 if f.n == 0 else float("nan"))
    return CoverComparison(cs.count, dev, max_dev, res.residuals[-1] if res.residuals else 0.0,
                           res.state.round, sp, cover)


def write_covers(cs: CoverSet, path) -> None:
    with open(path, "w") as fh:
        fh.write(cs.to_text())


def write_comparison_csv(rows, path) -> None:
    """Rows of (instance, variable, cover_count, dev_minus, dev_zero, dev_plus)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "var", "covers", "dev_minus", "dev_zero", "dev_plus"])
        w.writerows(rows)
