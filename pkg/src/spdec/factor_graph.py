"""Bipartite variable/clause incidence with per-edge signs.

An edge is one literal occurrence, identified by (clause index, position).
Edges are numbered in clause order, so edge ids ``clause_ptr[b]`` up to
``clause_ptr[b+1]`` belong to clause ``b``.  Variables are 1-based in the
public methods and 0-based in the ``edge_var`` array.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .formula import CnfFormula


@dataclass(frozen=True, eq=False)
class FactorGraph:
    n: int
    clause_ptr: np.ndarray
    edge_var: np.ndarray
    edge_sign: np.ndarray

    def __post_init__(self):
        for arr in (self.clause_ptr, self.edge_var, self.edge_sign):
            arr.setflags(write=False)

    # ------------------------------------------------------------ builders
    @classmethod
    def build(cls, f: CnfFormula) -> "FactorGraph":
        lits, offsets = f.flat
        return cls.from_arrays(f.n, offsets, np.abs(lits) - 1, np.sign(lits))

    @classmethod
    def from_arrays(cls, n: int, clause_ptr, edge_var, edge_sign) -> "FactorGraph":
        return cls(
            int(n),
            np.asarray(clause_ptr, dtype=np.int64).copy(),
            np.asarray(edge_var, dtype=np.int64).copy(),
            np.asarray(edge_sign, dtype=np.int8).copy(),
        )

    # ------------------------------------------------------------ sizes
    @property
    def num_clauses(self) -> int:
        return len(self.clause_ptr) - 1

    @property
    def num_edges(self) -> int:
        return len(self.edge_var)

    @cached_property
    def lengths(self) -> np.ndarray:
        out = np.diff(self.clause_ptr)
        out.setflags(write=False)
        return out

    @cached_property
    def edge_clause(self) -> np.ndarray:
        out = np.repeat(np.arange(self.num_clauses, dtype=np.int64), self.lengths)
        out.setflags(write=False)
        return out

    @cached_property
    def edge_pos(self) -> np.ndarray:
        out = np.arange(self.num_edges, dtype=np.int64) - self.clause_ptr[self.edge_clause]
        out.setflags(write=False)
        return out

    @cached_property
    def _var_csr(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.argsort(self.edge_var, kind="stable")
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.edge_var, minlength=self.n), out=ptr[1:])
        return ptr, order

    @cached_property
    def degrees(self) -> np.ndarray:
        """Number of edges at each variable (index 0 is variable 1)."""
        return np.bincount(self.edge_var, minlength=self.n)

    @cached_property
    def multiplicity(self) -> np.ndarray:
        """For each edge, how many positions of its clause carry the same variable."""
        key = self.edge_clause * max(self.n, 1) + self.edge_var
        _, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
        return counts[inverse]

    # ------------------------------------------------------------ queries
    def edge_id(self, e: int) -> tuple[int, int]:
        return int(self.edge_clause[e]), int(self.edge_pos[e])

    def edge_index(self, clause: int, pos: int) -> int:
        if not 0 <= pos < self.lengths[clause]:
            raise IndexError("position outside clause")
        return int(self.clause_ptr[clause] + pos)

    def sign(self, e: int) -> int:
        return int(self.edge_sign[e])

    def var_edges(self, x: int, zeta: int | None = None) -> list[int]:
        """Edge ids of variable ``x`` (1-based), optionally only those of sign ``zeta``."""
        ptr, order = self._var_csr
        edges = order[ptr[x - 1] : ptr[x]]
        if zeta is not None:
            edges = edges[self.edge_sign[edges] == zeta]
        return [int(e) for e in edges]

    def var_clauses(self, x: int, zeta: int | None = None) -> list[int]:
        """N(x) or N(x, zeta) as clause indices, one entry per occurrence."""
        return [int(self.edge_clause[e]) for e in self.var_edges(x, zeta)]

    def clause_edges(self, b: int) -> range:
        return range(int(self.clause_ptr[b]), int(self.clause_ptr[b + 1]))

    def clause_literals(self, b: int) -> list[tuple[int, int]]:
        """N(b) as (variable, sign) pairs in clause order."""
        return [(int(self.edge_var[e]) + 1, int(self.edge_sign[e])) for e in self.clause_edges(b)]

    def clause_length_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(int(x) for x in self.lengths).items()))

    def to_formula(self) -> CnfFormula:
        lits = (self.edge_var + 1) * self.edge_sign.astype(np.int64)
        clauses = tuple(tuple(int(l) for l in lits[self.clause_ptr[b] : self.clause_ptr[b + 1]]) for b in range(self.num_clauses))
        return CnfFormula(self.n, clauses)

    def dump(self) -> str:
        """Edge list text: clause, position, variable, sign."""
        rows = ["clause pos var sign"]
        for e in range(self.num_edges):
            b, p = self.edge_id(e)
            rows.append(f"{b} {p} {int(self.edge_var[e]) + 1} {int(self.edge_sign[e]):+d}")
        return "\n".join(rows) + "\n"


def build(f: CnfFormula) -> FactorGraph:
    return FactorGraph.build(f)
