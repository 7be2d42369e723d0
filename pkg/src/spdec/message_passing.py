"""Survey Propagation and Belief Propagation on a factor graph.

Message layout, per edge (x, a):

* ``v2c[e] = (mu(-1), mu(0), mu(+1))`` the variable-to-clause distribution;
* ``c2v[e] = mu_{a->x}(0)``, one minus the product over the other literal
  occurrences y of a of ``mu_{y->a}(-sign(y, a))``.

A round is synchronous: new variable-to-clause messages are computed from the
previous clause-to-variable values, then clause-to-variable values are
recomputed from the new variable messages.  Both engines share the clause
update; they differ only in how a variable turns the two signed products
``pi(+1)``, ``pi(-1)`` into a distribution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .factor_graph import FactorGraph

MINUS, ZERO, PLUS = 0, 1, 2
ENGINES = ("sp", "bp")


# ----------------------------------------------------------------- psi


def psi(zeta: int, x: float, y: float) -> float:
    """Scalar psi_zeta(x, y); at x = y = 0 returns 0 for zeta = 0, else 1/2."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise DomainError(f"psi arguments must lie in [0,1], got ({x}, {y})")
    if zeta not in (-1, 0, 1):
        raise DomainError("zeta must be -1, 0 or +1")
    if x == 0.0 and y == 0.0:
        return 0.0 if zeta == 0 else 0.5
    denom = x + y - x * y
    if zeta == 0:
        return x * y / denom
    if zeta == 1:
        return (1.0 - x) * y / denom
    return (1.0 - y) * x / denom


def psi_arrays(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized psi; returns an array of shape (..., 3) ordered (-1, 0, +1)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    denom = x + y - x * y
    degenerate = denom <= 0.0
    safe = np.where(degenerate, 1.0, denom)
    out = np.empty(np.broadcast(x, y).shape + (3,))
    out[..., ZERO] = np.where(degenerate, 0.0, x * y / safe)
    out[..., PLUS] = np.where(degenerate, 0.5, (1.0 - x) * y / safe)
    out[..., MINUS] = np.where(degenerate, 0.5, (1.0 - y) * x / safe)
    return out


def psi0_diag(p):
    """psi_0(p, p) = p / (2 - p), with the value 0 at p = 0."""
    p = np.asarray(p, dtype=float)
    return p / (2.0 - p)


class PerturbationMargins(NamedTuple):
    zero_margin: float
    plus_margin: float | None
    minus_margin: float | None


def psi_perturbation_check(x1: float, x2: float, p1: float, p2: float) -> PerturbationMargins:
    """Slack in the two Lipschitz-type bounds for psi around (p1, p2).

    With e_i = |x_i - p_i|, the zero-state bound is
    |psi_0(x) - psi_0(p)| <= e_1 + e_2, and when e_i <= p_i / 2 the signed
    states satisfy |psi_z(x) - psi_z(p)| <= 2 (e_1/p_1 + e_2/p_2).  Returned
    margins are right side minus left side; the signed margins are None when
    the second bound's hypothesis fails.
    """
    for v in (x1, x2, p1, p2):
        if not 0.0 < v <= 1.0:
            raise DomainError("arguments must lie in (0, 1]")
    e1, e2 = abs(x1 - p1), abs(x2 - p2)
    zero = e1 + e2 - abs(psi(0, x1, x2) - psi(0, p1, p2))
    if e1 <= p1 / 2 and e2 <= p2 / 2:
        bound = 2.0 * (e1 / p1 + e2 / p2)
        plus = bound - abs(psi(1, x1, x2) - psi(1, p1, p2))
        minus = bound - abs(psi(-1, x1, x2) - psi(-1, p1, p2))
        return PerturbationMargins(zero, plus, minus)
    return PerturbationMargins(zero, None, None)


# ----------------------------------------------------------------- state


@dataclass(frozen=True, eq=False)
class MessageState:
    v2c: np.ndarray
    c2v: np.ndarray
    round: int = 0

    def __post_init__(self):
        self.v2c.setflags(write=False)
        self.c2v.setflags(write=False)


@dataclass(frozen=True)
class IterationPolicy:
    omega: int
    residual_tol: float = 1e-9
    schedule: str = "synchronous"

    def __post_init__(self):
        if self.omega < 0 or self.residual_tol < 0:
            raise DomainError("omega and residual_tol must be non-negative")
        if self.schedule != "synchronous":
            raise DomainError("only synchronous updates are supported")


def default_omega(n: int) -> int:
    return math.ceil(4.0 * math.log(max(n, 2)))


def default_policy(n: int) -> IterationPolicy:
    return IterationPolicy(default_omega(n), 1e-9)


# ----------------------------------------------------------------- products


def _grouped_log_product(values: np.ndarray, groups: np.ndarray, size: int):
    """Per-group (zero count, sum of logs of non-zero entries)."""
    zero = values <= 0.0
    logs = np.log(np.where(zero, 1.0, values))
    zeros = np.bincount(groups, weights=zero, minlength=size)
    sums = np.bincount(groups, weights=logs, minlength=size)
    return zero, logs, zeros, sums


def _exclusive(zero_self, log_self, zeros_group, sums_group):
    """Log-product over a group with one member removed; -inf marks an exact zero."""
    remaining = zeros_group - zero_self
    return np.where(remaining > 0, -np.inf, sums_group - np.where(zero_self, 0.0, log_self))


def clause_update(g: FactorGraph, v2c: np.ndarray) -> np.ndarray:
    """mu_{b->x}(0) = 1 - prod over other positions y of mu_{y->b}(-sign(y,b))."""
    if g.num_edges == 0:
        return np.zeros(0)
    cols = np.where(g.edge_sign > 0, MINUS, PLUS)
    falsify = v2c[np.arange(g.num_edges), cols]
    zero, logs, zeros, sums = _grouped_log_product(falsify, g.edge_clause, g.num_clauses)
    log_others = _exclusive(zero, logs, zeros[g.edge_clause], sums[g.edge_clause])
    return 1.0 - np.exp(log_others)


def signed_log_products(g: FactorGraph, c2v: np.ndarray):
    """Log of pi_{x->a}(+1), pi_{x->a}(-1) per edge (excluding the edge itself)
    and of pi_x(+1), pi_x(-1) per variable (full neighbourhood)."""
    key = 2 * g.edge_var + (g.edge_sign > 0)
    zero, logs, zeros, sums = _grouped_log_product(c2v, key, 2 * g.n)
    full_plus = np.where(zeros[1::2] > 0, -np.inf, sums[1::2])
    full_minus = np.where(zeros[0::2] > 0, -np.inf, sums[0::2])
    own = _exclusive(zero, logs, zeros[key], sums[key])
    other = np.where(g.edge_sign > 0, full_minus[g.edge_var], full_plus[g.edge_var])
    edge_plus = np.where(g.edge_sign > 0, own, other)
    edge_minus = np.where(g.edge_sign > 0, other, own)
    return edge_plus, edge_minus, full_plus, full_minus


def _bp_distribution(log_plus: np.ndarray, log_minus: np.ndarray) -> np.ndarray:
    """Two-state BP: Pr[+1] proportional to pi(-1), Pr[-1] proportional to pi(+1)."""
    out = np.zeros(np.shape(log_plus) + (3,))
    both = np.isneginf(log_plus) & np.isneginf(log_minus)
    with np.errstate(over="ignore", invalid="ignore"):
        diff = np.where(both, 0.0, log_plus - log_minus)
        p_plus = np.where(both, 0.5, 1.0 / (1.0 + np.exp(diff)))
    out[..., PLUS] = p_plus
    out[..., MINUS] = 1.0 - p_plus
    return out


def _variable_update(engine: str, log_plus, log_minus) -> np.ndarray:
    if engine == "sp":
        return psi_arrays(np.exp(log_plus), np.exp(log_minus))
    if engine == "bp":
        return _bp_distribution(log_plus, log_minus)
    raise DomainError(f"unknown engine {engine!r}")


# ----------------------------------------------------------------- rounds


def init_messages(g: FactorGraph) -> MessageState:
    v2c = np.zeros((g.num_edges, 3))
    v2c[:, MINUS] = 0.5
    v2c[:, PLUS] = 0.5
    return MessageState(v2c, clause_update(g, v2c), 0)


def _round(g: FactorGraph, s: MessageState, engine: str) -> MessageState:
    if g.num_edges == 0:
        return MessageState(np.zeros((0, 3)), np.zeros(0), s.round + 1)
    edge_plus, edge_minus, _, _ = signed_log_products(g, s.c2v)
    v2c = _variable_update(engine, edge_plus, edge_minus)
    return MessageState(v2c, clause_update(g, v2c), s.round + 1)


def sp_round(g: FactorGraph, s: MessageState) -> MessageState:
    return _round(g, s, "sp")


def bp_round(g: FactorGraph, s: MessageState) -> MessageState:
    return _round(g, s, "bp")


def residual(a: MessageState, b: MessageState) -> float:
    if a.v2c.size == 0:
        return 0.0
    return float(max(np.abs(a.v2c - b.v2c).max(), np.abs(a.c2v - b.c2v).max()))


@dataclass(frozen=True)
class IterationResult:
    state: MessageState
    residuals: tuple[float, ...]
    converged: bool = False
    history: tuple[MessageState, ...] = field(default=(), repr=False)


def iterate(
    g: FactorGraph,
    policy: IterationPolicy,
    engine: str = "sp",
    init: MessageState | None = None,
    keep_history: bool = False,
) -> IterationResult:
    """Run rounds until ``policy.omega`` rounds or a round changes no message
    by ``policy.residual_tol`` or more."""
    if engine not in ENGINES:
        raise DomainError(f"unknown engine {engine!r}")
    state = init if init is not None else init_messages(g)
    history = [state] if keep_history else []
    trace: list[float] = []
    converged = False
    while state.round < policy.omega:
        new = _round(g, state, engine)
        trace.append(residual(new, state))
        state = new
        if keep_history:
            history.append(state)
        if trace[-1] < policy.residual_tol:
            converged = True
            break
    return IterationResult(state, tuple(trace), converged, tuple(history))


# ----------------------------------------------------------------- marginals


@dataclass(frozen=True, eq=False)
class Marginals:
    """Per variable (index 0 is variable 1): distribution (-1, 0, +1),
    probability of assigning +1, and the ratio mu(+1)/(mu(+1)+mu(-1))."""

    triples: np.ndarray
    p_true: np.ndarray
    ratio: np.ndarray

    def of(self, x: int) -> tuple[tuple[float, float, float], float]:
        t = self.triples[x - 1]
        return (float(t[0]), float(t[1]), float(t[2])), float(self.p_true[x - 1])


def _full_products(g: FactorGraph, s: MessageState):
    if g.num_edges == 0:
        z = np.zeros(g.n)
        return z, z
    _, _, full_plus, full_minus = signed_log_products(g, s.c2v)
    return full_plus, full_minus


def sp_marginals(g: FactorGraph, s: MessageState) -> Marginals:
    log_plus, log_minus = _full_products(g, s)
    triples = psi_arrays(np.exp(log_plus), np.exp(log_minus))
    p_true = triples[:, PLUS] + 0.5 * triples[:, ZERO]
    signed = triples[:, PLUS] + triples[:, MINUS]
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(signed > 0, triples[:, PLUS] / np.where(signed > 0, signed, 1.0), np.nan)
    return Marginals(triples, p_true, ratio)


def sp_marginal(g: FactorGraph, s: MessageState, x: int):
    return sp_marginals(g, s).of(x)


def bp_marginals(g: FactorGraph, s: MessageState) -> Marginals:
    log_plus, log_minus = _full_products(g, s)
    triples = _bp_distribution(log_plus, log_minus)
    return Marginals(triples, triples[:, PLUS].copy(), triples[:, PLUS].copy())


def marginals(g: FactorGraph, s: MessageState, engine: str = "sp") -> Marginals:
    return sp_marginals(g, s) if engine == "sp" else bp_marginals(g, s)


# ----------------------------------------------------------------- export


def write_state_csv(g: FactorGraph, s: MessageState, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["clause", "pos", "mu_minus", "mu_zero", "mu_plus", "clause_to_var_zero"])
        for e in range(g.num_edges):
            b, p = g.edge_id(e)
            w.writerow([b, p, repr(float(s.v2c[e, MINUS])), repr(float(s.v2c[e, ZERO])),
                        repr(float(s.v2c[e, PLUS])), repr(float(s.c2v[e]))])
