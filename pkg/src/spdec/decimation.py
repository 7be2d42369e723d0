"""Guided decimation: assign variables one at a time from message-passing marginals.

At step t the engine runs SP (or BP) on the current simplified formula, reads
the probability of +1 for the next variable in the chosen order, draws the
value, substitutes it and simplifies.  The CoinFlip engine skips message
passing and always uses probability 1/2.  Runs never stop early; whether the
final assignment satisfies the original formula is checked at the end.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from .errors import Contradiction, DomainError, EmptyInput
from .factor_graph import FactorGraph
from .formula import CnfFormula, PartialAssignment, decimate, evaluate
from .message_passing import (
    PLUS,
    ZERO,
    IterationPolicy,
    MessageState,
    clause_update,
    default_policy,
    iterate,
    marginals,
)
from .rng import stream

ENGINES = ("sp", "bp", "coin")
ORDERS = ("natural", "perm")


@dataclass(frozen=True)
class DecimationPolicy:
    engine: str = "sp"
    order: str = "natural"
    iteration: IterationPolicy | None = None
    seed: int = 0
    warm_start: bool = False

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise DomainError(f"engine must be one of {ENGINES}")
        if self.order not in ORDERS:
            raise DomainError(f"order must be one of {ORDERS}")


@dataclass(frozen=True)
class StepRecord:
    t: int
    var: int
    p_true: float
    value: int
    empty_created: int
    clauses: int
    lengths: tuple[tuple[int, int], ...]
    rounds: int
    residual: float | None
    biased: int | None = None
    balanced: bool | None = None


@dataclass(frozen=True)
class DecimationTrace:
    n: int
    steps: tuple[StepRecord, ...]
    assignment: tuple[int, ...]
    satisfied: bool
    policy: DecimationPolicy
    trial: int = 0

    def to_jsonl(self) -> str:
        head = {"n": self.n, "trial": self.trial, "satisfied": self.satisfied,
                "engine": self.policy.engine, "order": self.policy.order, "seed": self.policy.seed}
        lines = [json.dumps({"kind": "run", **head}, sort_keys=True)]
        for s in self.steps:
            rec = asdict(s)
            rec["lengths"] = [list(p) for p in s.lengths]
            lines.append(json.dumps({"kind": "step", "trial": self.trial, **rec}, sort_keys=True))
        return "\n".join(lines) + "\n"


class _Workspace:
    """Mutable simplification state over the original edge arrays."""

    def __init__(self, f: CnfFormula):
        lits, offsets = f.flat
        self.n = f.n
        self.m = f.m
        self.var = np.abs(lits) - 1
        self.sign = np.sign(lits).astype(np.int8)
        self.clause = np.repeat(np.arange(f.m), np.diff(offsets))
        self.offsets = offsets
        self.edge_alive = np.ones(len(lits), dtype=bool)
        self.clause_alive = np.diff(offsets) > 0
        self.empty_initial = int((np.diff(offsets) == 0).sum())
        order = np.argsort(self.var, kind="stable")
        ptr = np.zeros(f.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.var, minlength=f.n), out=ptr[1:])
        self._by_var = (ptr, order)

    def graph(self) -> tuple[FactorGraph, np.ndarray]:
        """Current formula as a factor graph plus the original ids of its edges."""
        live = np.flatnonzero(self.edge_alive & self.clause_alive[self.clause])
        clause = self.clause[live]
        counts = np.bincount(clause, minlength=self.m)[self.clause_alive]
        ptr = np.zeros(len(counts) + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return FactorGraph.from_arrays(self.n, ptr, self.var[live], self.sign[live]), live

    def assign(self, x0: int, value: int) -> int:
        """Substitute variable index x0 := value; returns the number of clauses emptied."""
        ptr, order = self._by_var
        edges = order[ptr[x0] : ptr[x0 + 1]]
        edges = edges[self.edge_alive[edges] & self.clause_alive[self.clause[edges]]]
        satisfied = edges[self.sign[edges] == value]
        self.clause_alive[self.clause[satisfied]] = False
        falsified = edges[self.sign[edges] != value]
        self.edge_alive[falsified] = False
        touched = np.unique(self.clause[falsified])
        touched = touched[self.clause_alive[touched]]
        emptied = 0
        for b in touched:
            if not self.edge_alive[self.offsets[b] : self.offsets[b + 1]].any():
                self.clause_alive[b] = False
                emptied += 1
        return emptied

    def mentions(self, x0: int) -> bool:
        ptr, order = self._by_var
        edges = order[ptr[x0] : ptr[x0 + 1]]
        return bool((self.edge_alive[edges] & self.clause_alive[self.clause[edges]]).any())


def variable_order(n: int, policy: DecimationPolicy, trial: int = 0) -> np.ndarray:
    if policy.order == "natural":
        return np.arange(n)
    return stream(policy.seed, "permutation", trial).permutation(n)


def run_decimation(
    f: CnfFormula,
    policy: DecimationPolicy,
    trial: int = 0,
    balance_deltas: Sequence[float] | None = None,
    horizon: int | None = None,
    strict: bool = False,
) -> DecimationTrace:
    """One run of guided decimation.

    ``balance_deltas[t]``, when given, is the bias tolerance used to count
    biased unassigned variables before step t (message engines only).
    With ``horizon`` only that many steps run; unassigned variables are 0 in
    the assignment and the run counts as unsatisfied.  With ``strict`` the
    first emptied clause raises :class:`Contradiction` instead of being dropped.
    """
    ws = _Workspace(f)
    order = variable_order(f.n, policy, trial)
    if horizon is not None:
        if not 0 <= horizon <= f.n:
            raise DomainError("horizon must lie in 0..n")
        order = order[:horizon]
    draws = stream(policy.seed, "decimation", trial)
    iteration = policy.iteration or default_policy(f.n)
    assigned = np.zeros(f.n, dtype=bool)
    sigma = np.zeros(f.n, dtype=np.int64)
    previous: np.ndarray | None = None  # per original edge v2c, for warm starts
    steps = []
    for t, x0 in enumerate(order):
        g, live = ws.graph()
        rounds, res, biased, balanced = 0, None, None, None
        if policy.engine == "coin":
            p_true = 0.5
        else:
            init = None
            if policy.warm_start and previous is not None and len(live):
                v2c = previous[live]
                init = MessageState(v2c, clause_update(g, v2c), 0)
            result = iterate(g, iteration, policy.engine, init=init)
            rounds = result.state.round
            res = result.residuals[-1] if result.residuals else None
            marg = marginals(g, result.state, policy.engine)
            p_true = float(marg.p_true[x0])
            if policy.warm_start:
                previous = np.tile([0.5, 0.0, 0.5], (len(ws.var), 1)) if previous is None else previous
                previous[live] = result.state.v2c
            if balance_deltas is not None:
                delta = balance_deltas[t]
                free = ~assigned
                bias = np.abs(marg.triples[:, PLUS] - 0.5 * (1.0 - marg.triples[:, ZERO]))
                biased = int((bias[free] > delta).sum())
                balanced = bool(biased <= delta * (f.n - t))
        p_true = min(max(p_true, 0.0), 1.0)
        value = 1 if draws.random() < p_true else -1
        emptied = ws.assign(int(x0), value)
        if strict and emptied:
            raise Contradiction(f"step {t}: setting variable {int(x0) + 1} to {value:+d} empties {emptied} clause(s)")
        assigned[x0] = True
        sigma[x0] = value
        lengths = np.bincount(np.bincount(ws.clause[ws.edge_alive & ws.clause_alive[ws.clause]], minlength=ws.m)[ws.clause_alive])
        hist = tuple((int(L), int(c)) for L, c in enumerate(lengths) if c and L)
        steps.append(StepRecord(t, int(x0) + 1, p_true, value, emptied, int(ws.clause_alive.sum()),
                                hist, rounds, res, biased, balanced))
    assignment = tuple(int(v) for v in sigma)
    satisfied = bool(assigned.all()) and evaluate(f, assignment)
    return DecimationTrace(f.n, tuple(steps), assignment, satisfied, policy, trial)


def snapshot(f: CnfFormula, policy: DecimationPolicy, t: int, trial: int = 0) -> tuple[CnfFormula, np.ndarray]:
    """The formula after t decimation steps and the mask of unassigned variables."""
    trace = run_decimation(f, policy, trial, horizon=t)
    pa = PartialAssignment(tuple(s.var for s in trace.steps), tuple(s.value for s in trace.steps))
    active = np.array([v == 0 for v in trace.assignment], dtype=bool)
    return decimate(f, pa), active


# ------------------------------------------------------------ success


@dataclass(frozen=True)
class SuccessEstimate:
    trials: int
    successes: int
    estimate: float
    lo: float
    hi: float


def wilson(successes: int, trials: int) -> SuccessEstimate:
    if trials < 1:
        raise EmptyInput("need at least one trial")
    ci = binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return SuccessEstimate(trials, successes, successes / trials, float(ci.low), float(ci.high))


def estimate_success(f: CnfFormula, policy: DecimationPolicy, trials: int) -> SuccessEstimate:
    """Independent runs on a fixed formula; trial i uses sub-streams indexed by i."""
    if trials < 1:
        raise DomainError("trials must be at least 1")
    wins = sum(run_decimation(f, policy, trial=i).satisfied for i in range(trials))
    return wilson(wins, trials)


# ------------------------------------------------------------ per-step balance


@dataclass(frozen=True)
class StepBalance:
    t: int
    count: int
    plus: int
    frequency: float
    sigma: float
    deviation: float
    delta: float
    lo: float
    hi: float


def step_balance_stats(
    traces: Iterable[DecimationTrace],
    deltas: Sequence[float],
    balanced_only: bool = False,
) -> list[StepBalance]:
    """Empirical Pr[value = +1] at each step across runs, with a binomial
    standard error and Wilson interval.  With ``balanced_only`` a run
    contributes to step t only if it was measured balanced there."""
    traces = list(traces)
    if not traces:
        raise EmptyInput("no traces")
    n = traces[0].n
    if any(tr.n != n for tr in traces):
        raise DomainError("traces differ in n")
    out = []
    for t in range(n):
        values = [tr.steps[t].value for tr in traces if not balanced_only or tr.steps[t].balanced]
        if not values:
            continue
        count = len(values)
        plus = sum(v == 1 for v in values)
        freq = plus / count
        est = wilson(plus, count)
        out.append(StepBalance(t, count, plus, freq, float(np.sqrt(0.25 / count)), abs(freq - 0.5),
                               float(deltas[t]), est.lo, est.hi))
    return out


SUCCESS_COLUMNS = ["k", "n", "r", "engine", "order", "trials", "successes", "estimate", "lo", "hi", "seed", "config_hash"]


def write_success_csv(rows: Iterable[dict], path, extra: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUCCESS_COLUMNS + list(extra))
        w.writeheader()
        for row in rows:
            w.writerow(row)
