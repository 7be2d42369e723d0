"""Bias measures, the typical-value recursion and bias-certificate sets.

Notation used in names:

* ``theta = 1 - t/n`` is the fraction of unassigned variables after t steps,
  ``delta_t = exp(-c * theta * k)`` the bias tolerance, ``rho = k r / 2^k``.
* ``plus_bias`` of a message is mu(+1) - (1 - mu(0)) / 2, its excess +1 mass
  over half of the non-zero mass; ``zero_bias`` is (mu(0) - psi_0(pi)) / 2,
  its excess 0 mass over the typical value.
* The typical value pi[l] follows pi[l+1] = pi(|T[l]|, pi[l]) from pi[0] = 0,
  where pi(T, p) is the product over typical clause lengths j of
  (1 - (tau(p)/2)^(j-1))^(mu_j(T)/2).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import binom

from .errors import DegenerateProduct, DomainError
from .factor_graph import FactorGraph
from .formula import redundant_mask
from .message_passing import MINUS, PLUS, ZERO, MessageState, psi0_diag, sp_marginals


# ------------------------------------------------------------ schedule


@dataclass(frozen=True)
class BiasSchedule:
    k: int
    r: float
    n: int
    c: float = 0.1

    def __post_init__(self):
        if self.k < 2:
            raise DomainError("k must be at least 2")
        if self.r <= 0 or self.n <= 0 or self.c <= 0:
            raise DomainError("r, n and c must be positive")

    @property
    def rho(self) -> float:
        return self.k * self.r / 2**self.k

    @property
    def t_hat(self) -> float:
        """Decimation horizon (1 - ln(rho)/(c^2 k)) n; may be negative."""
        return (1.0 - math.log(self.rho) / (self.c**2 * self.k)) * self.n

    def theta(self, t: int) -> float:
        return 1.0 - t / self.n

    def delta(self, t: int) -> float:
        return math.exp(-self.c * self.theta(t) * self.k)

    def deltas(self) -> np.ndarray:
        """delta_t for t = 0..n-1."""
        t = np.arange(self.n)
        return np.exp(-self.c * (1.0 - t / self.n) * self.k)

    def cumulative(self, t: int) -> float:
        """Sum of delta_s for s = 1..t."""
        s = np.arange(1, t + 1)
        return float(np.exp(-self.c * (1.0 - s / self.n) * self.k).sum())

    def comparator(self, t: int) -> float:
        """delta_t n / (c k), the asymptotic size of the cumulative sum."""
        return self.delta(t) * self.n / (self.c * self.k)

    def k1(self, t: int) -> float:
        return math.sqrt(self.c) * self.theta(t) * self.k

    def within_horizon(self, t: int) -> bool:
        return t <= self.t_hat


def schedule(k: int, r: float, n: int, c: float = 0.1) -> BiasSchedule:
    return BiasSchedule(k, r, n, c)


# ------------------------------------------------------------ typical values


def tau(p):
    """1 - psi_0(p, p) = 1 - p/(2-p)."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise DomainError("p must lie in [0, 1]")
    out = 1.0 - psi0_diag(arr)
    return float(out) if np.ndim(out) == 0 else out


def j_window(theta: float, k: int) -> range:
    """Integer clause lengths j with 0.1 theta k <= j <= 10 theta k and 1 <= j <= k."""
    lo = max(1, math.ceil(round(0.1 * theta * k, 9)))
    hi = min(math.floor(round(10.0 * theta * k, 9)), k)
    return range(lo, hi + 1)


def mu_j_le1(T_size: float, theta: float, n: int, k: int, rho: float, j: int) -> float:
    """Expected number of length-j clauses through a variable with at most one
    other member of a set of the given size."""
    if not 1 <= j <= k:
        raise DomainError("j must lie in 1..k")
    if not 0.0 < theta <= 1.0:
        raise DomainError("theta must lie in (0, 1]")
    active = theta * n
    if not 0 <= T_size <= active + 1e-9:
        raise DomainError("T_size must lie in [0, theta n]")
    frac = min(T_size / active, 1.0) if active > 0 else 0.0
    log_len = binom.logpmf(j - 1, k - 1, theta)
    log_few = binom.logcdf(1, j - 1, frac)
    return float(2.0**j * rho * np.exp(log_len + log_few))


def _window_terms(T_size: float, p: float, sched: BiasSchedule, t: int):
    theta = sched.theta(t)
    half_tau = tau(p) / 2.0
    for j in j_window(theta, sched.k):
        weight = mu_j_le1(T_size, theta, sched.n, sched.k, sched.rho, j) / 2.0
        yield weight, half_tau ** (j - 1)


def log_pi_of(T_size: float, p: float, sched: BiasSchedule, t: int) -> float:
    total = 0.0
    for weight, z in _window_terms(T_size, p, sched, t):
        if weight == 0.0:
            continue
        if z >= 1.0:
            return -math.inf
        total += weight * math.log1p(-z)
    return total


def pi_of(T_size: float, p: float, sched: BiasSchedule, t: int) -> float:
    return math.exp(log_pi_of(T_size, p, sched, t))


def Pi_of(T_size: float, p: float, sched: BiasSchedule, t: int) -> float:
    """First-order approximation of -ln pi(T, p)."""
    return float(sum(weight * z for weight, z in _window_terms(T_size, p, sched, t)))


def band(sched: BiasSchedule) -> tuple[float, float]:
    return math.exp(-2.0 * sched.rho), 2.0 * math.exp(-sched.rho)


@dataclass(frozen=True)
class TypicalValueTrace:
    pi: tuple[float, ...]
    Pi: tuple[float, ...]
    tau: tuple[float, ...]
    log_gap: tuple[float, ...]  # |Pi + ln pi| per level (nan at level 0)
    band_checked: tuple[bool, ...]
    band_violations: tuple[int, ...]


def typical_sequence(sched: BiasSchedule, t: int, T_sizes: Sequence[float] | float, L: int) -> TypicalValueTrace:
    """Iterate the typical-value recursion for L levels.

    ``T_sizes[l]`` is |T[l]| (a scalar is used at every level).  Level l+1 is
    checked against the band [exp(-2 rho), 2 exp(-rho)] whenever
    |T[l]| <= delta theta n and pi[l] <= 2 exp(-rho).
    """
    if L < 0:
        raise DomainError("L must be non-negative")
    sizes = [float(T_sizes)] * max(L, 1) if np.isscalar(T_sizes) else [float(s) for s in T_sizes]
    lo, hi = band(sched)
    limit = sched.delta(t) * sched.theta(t) * sched.n
    pis, Pis, taus, gaps, checked, bad = [0.0], [0.0], [1.0], [math.nan], [False], []
    for level in range(L):
        size = sizes[min(level, len(sizes) - 1)]
        p = pis[-1]
        lp = log_pi_of(size, p, sched, t)
        value = math.exp(lp)
        Pi = Pi_of(size, p, sched, t)
        pis.append(value)
        Pis.append(Pi)
        taus.append(tau(value))
        gaps.append(abs(Pi + lp))
        applies = size <= limit and p <= hi
        checked.append(applies)
        if applies and not lo <= value <= hi:
            bad.append(level + 1)
    return TypicalValueTrace(tuple(pis), tuple(Pis), tuple(taus), tuple(gaps), tuple(checked), tuple(bad))


# ------------------------------------------------------------ edge biases


@dataclass(frozen=True, eq=False)
class EdgeBiases:
    plus_bias: np.ndarray
    zero_bias: np.ndarray
    pi: float
    tau: float
    reconstruction_residual: float


def reconstruct_falsifying(tau_value: float, zero_bias, plus_bias, sign):
    """tau/2 - (E + sign * Delta): the message mass on the value that falsifies
    the literal, mu(-sign)."""
    return tau_value / 2.0 - (zero_bias + sign * plus_bias)


def edge_biases(g: FactorGraph, s: MessageState, pi_ell: float) -> EdgeBiases:
    mu = s.v2c
    plus = mu[:, PLUS] - 0.5 * (1.0 - mu[:, ZERO])
    zero = 0.5 * (mu[:, ZERO] - float(psi0_diag(pi_ell)))
    t = float(tau(pi_ell))
    if g.num_edges:
        sign = g.edge_sign.astype(float)
        falsifying = mu[np.arange(g.num_edges), np.where(sign > 0, MINUS, PLUS)]
        res = float(np.abs(falsifying - reconstruct_falsifying(t, zero, plus, sign)).max())
    else:
        res = 0.0
    return EdgeBiases(plus, zero, float(pi_ell), t, res)


def _active_mask(g: FactorGraph, active) -> np.ndarray:
    if active is None:
        return np.ones(g.n, dtype=bool)
    arr = np.asarray(active)
    if arr.dtype == bool:
        return arr.copy()
    mask = np.zeros(g.n, dtype=bool)
    members = np.asarray(list(active), dtype=np.int64)
    mask[members - 1] = True
    return mask


def _per_var_max(g: FactorGraph, values: np.ndarray) -> np.ndarray:
    out = np.zeros(g.n)
    if g.num_edges:
        np.maximum.at(out, g.edge_var, values)
    return out


@dataclass(frozen=True)
class BiasedSets:
    biased: frozenset[int]
    weighted: frozenset[int] = frozenset()
    balanced: bool = True
    delta: float = 0.0


def biased_variables(
    g: FactorGraph,
    s: MessageState,
    sched: BiasSchedule,
    t: int,
    mode: str = "marginal",
    pi_ell: float = 0.0,
    active=None,
) -> BiasedSets:
    """``marginal``: variables whose SP marginal has |mu(+1) - (1-mu(0))/2| > delta_t.
    ``edge``: l-biased variables (some outgoing message has |plus_bias| > 0.1 delta
    or |zero_bias| > 0.1 delta pi[l]) and l-weighted ones (|zero_bias| > 10 pi[l])."""
    if not 0 <= t < sched.n:
        raise DomainError("t must lie in 0..n-1")
    delta = sched.delta(t)
    mask = _active_mask(g, active)
    if mode == "marginal":
        tri = sp_marginals(g, s).triples
        bias = np.abs(tri[:, PLUS] - 0.5 * (1.0 - tri[:, ZERO]))
        hit = (bias > delta) & mask
        weighted = np.zeros(g.n, dtype=bool)
    elif mode == "edge":
        eb = edge_biases(g, s, pi_ell)
        max_plus = _per_var_max(g, np.abs(eb.plus_bias))
        max_zero = _per_var_max(g, np.abs(eb.zero_bias))
        hit = ((max_plus > 0.1 * delta) | (max_zero > 0.1 * delta * pi_ell)) & mask
        weighted = (max_zero > 10.0 * pi_ell) & mask
    else:
        raise DomainError("mode must be 'marginal' or 'edge'")
    biased = frozenset(int(v) + 1 for v in np.flatnonzero(hit))
    return BiasedSets(biased, frozenset(int(v) + 1 for v in np.flatnonzero(weighted)),
                      len(biased) <= delta * (sched.n - t), delta)


# ------------------------------------------------------------ neighbourhood arithmetic


class LocalCounts:
    """Per-edge quantities of a graph relative to a set T, vectorized."""

    def __init__(self, g: FactorGraph, sched: BiasSchedule, t: int):
        self.g = g
        self.theta = sched.theta(t)
        self.k = sched.k
        win = j_window(self.theta, sched.k)
        lengths = g.lengths
        self.in_window = (lengths >= win.start) & (lengths <= win.stop - 1)
        self.len_e = lengths[g.edge_clause].astype(float)
        self.k1 = sched.k1(t)
        self.key = 2 * g.edge_var + (g.edge_sign > 0)

    def counts(self, T: np.ndarray):
        """Positions of each edge's clause in T other than the edge's variable,
        and positions outside T."""
        g = self.g
        in_T = T[g.edge_var].astype(np.int64)
        per_clause = np.bincount(g.edge_clause, weights=in_T, minlength=g.num_clauses).astype(np.int64)
        others = per_clause[g.edge_clause] - g.multiplicity * in_T
        outside = g.lengths - per_clause
        return others, outside

    def signed_sum(self, values: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """(n, 2) sums over edges with the mask; column 1 is sign +1."""
        out = np.bincount(self.key, weights=np.where(mask, values, 0.0), minlength=2 * self.g.n)
        return out.reshape(self.g.n, 2)


def p_split(g: FactorGraph, s: MessageState, T: np.ndarray, sched: BiasSchedule, t: int):
    """Per edge (x, a) and sign z: the products of clause-to-variable zero
    messages over clauses b in N(x, z) other than a, split into b with at most
    one other T-member inside the length window (first array) and the rest
    (second array).  Arrays have shape (E, 2); column 1 is z = +1."""
    loc = LocalCounts(g, sched, t)
    others, _ = loc.counts(T)
    le1 = loc.in_window[g.edge_clause] & (others <= 1)
    return _excluding_own_clause(g, s.c2v, le1), _excluding_own_clause(g, s.c2v, ~le1)


def _excluding_own_clause(g: FactorGraph, c2v: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per edge (x, a) and sign z, the product of masked c2v values over edges
    of x with sign z whose clause is not a."""
    E = g.num_edges
    out = np.ones((E, 2))
    if E == 0:
        return out
    vals = np.where(mask, c2v, 1.0)
    zero = (vals <= 0.0).astype(float)
    logs = np.log(np.where(zero > 0, 1.0, vals))
    positive = (g.edge_sign > 0).astype(np.int64)
    key = 2 * g.edge_var + positive
    zeros = np.bincount(key, weights=zero, minlength=2 * g.n)
    sums = np.bincount(key, weights=logs, minlength=2 * g.n)
    # the same sums restricted to the edge's own clause
    pair = g.edge_clause * g.n + g.edge_var
    uniq, inv = np.unique(2 * pair + positive, return_inverse=True)
    own_zeros = np.bincount(inv, weights=zero, minlength=len(uniq))
    own_sums = np.bincount(inv, weights=logs, minlength=len(uniq))
    for col in (0, 1):
        query = 2 * pair + col
        pos = np.minimum(np.searchsorted(uniq, query), len(uniq) - 1)
        found = uniq[pos] == query
        group = 2 * g.edge_var + col
        remaining = zeros[group] - np.where(found, own_zeros[pos], 0.0)
        log_prod = sums[group] - np.where(found, own_sums[pos], 0.0)
        out[:, col] = np.where(remaining > 0, 0.0, np.exp(log_prod))
    return out


@dataclass(frozen=True)
class CertificateConstants:
    """Thresholds of the certificate-set predicates; defaults are the
    published values."""

    t1_rel: float = 0.01
    t2a_abs: float = 2.0 / 1000.0
    t2b_scale: float = 1e4
    t2c_scale: float = 1e4
    h1_power: int = 3
    h2_power: int = 5
    h4_abs: float = 0.01
    t3d_count: int = 100
    t3e_fraction: float = 0.75
    t4_length: float = 100.0
    biased_plus: float = 0.1
    biased_zero: float = 0.1
    weighted_zero: float = 10.0


@dataclass(frozen=True)
class LevelSets:
    level: int
    pi: float
    Pi: float
    tau: float
    B: frozenset[int]
    B_weighted: frozenset[int]
    T1: frozenset[int]
    T2: frozenset[int]
    T3: frozenset[int]
    T4: frozenset[int]  # clause indices
    H: frozenset[int]
    T: frozenset[int]
    T_prime: frozenset[int]

    @property
    def B_in_T(self) -> bool:
        return self.B <= self.T

    @property
    def Bw_in_Tp(self) -> bool:
        return self.B_weighted <= self.T_prime

    @property
    def Bw_in_B(self) -> bool:
        return self.B_weighted <= self.B

    @property
    def Tp_in_T(self) -> bool:
        return self.T_prime <= self.T


@dataclass(frozen=True)
class CertificateSets:
    levels: tuple[LevelSets, ...]
    delta: float
    theta_n: float

    def size_ok(self, level: LevelSets) -> tuple[bool, bool]:
        return len(level.T) < self.delta * self.theta_n, len(level.T_prime) < self.delta**2 * self.theta_n

    def rows(self) -> list[dict]:
        out = []
        for lv in self.levels:
            t_ok, tp_ok = self.size_ok(lv)
            out.append({
                "level": lv.level, "pi": lv.pi, "Pi": lv.Pi, "tau": lv.tau,
                "B": len(lv.B), "B_weighted": len(lv.B_weighted), "T": len(lv.T), "T_prime": len(lv.T_prime),
                "B_in_T": lv.B_in_T, "Bw_in_Tp": lv.Bw_in_Tp, "T_small": t_ok, "Tp_small": tp_ok,
            })
        return out


def _to_set(mask: np.ndarray) -> frozenset[int]:
    return frozenset(int(v) + 1 for v in np.flatnonzero(mask))


def certificate_sets(
    g: FactorGraph,
    history: Sequence[MessageState],
    sched: BiasSchedule,
    t: int,
    L: int | None = None,
    active=None,
    constants: CertificateConstants = CertificateConstants(),
) -> CertificateSets:
    """Bias sets B[l], B'[l] and certificate sets T1..T4, H, T, T' for l = 0..L.

    ``history[l]`` must be the message state after l rounds from the uniform
    initialization.  Sets are computed over the active variables V_t
    (default: all variables of ``g``).
    """
    L = len(history) - 1 if L is None else L
    if len(history) < L + 1:
        raise DomainError("history shorter than L + 1 states")
    C = constants
    n = g.n
    mask = _active_mask(g, active)
    loc = LocalCounts(g, sched, t)
    delta = sched.delta(t)
    theta = sched.theta(t)
    theta_k = theta * sched.k
    theta_n = theta * sched.n
    rho = sched.rho
    k1 = loc.k1
    E = g.num_edges
    lengths = g.lengths
    len_e = loc.len_e
    w2 = 2.0 ** (-len_e)

    redundant = redundant_mask(g.to_formula().clauses) if g.num_clauses else np.zeros(0, dtype=bool)
    bad_clause = redundant | ~loc.in_window
    bad_var = np.zeros(n, dtype=bool)
    if E:
        np.logical_or.at(bad_var, g.edge_var, bad_clause[g.edge_clause])
    all_in_window = np.ones(n, dtype=bool)
    if E:
        np.logical_and.at(all_in_window, g.edge_var, loc.in_window[g.edge_clause])
    weight_all = np.bincount(g.edge_var, weights=w2, minlength=n) if E else np.zeros(n)
    heavy_weight = delta * theta_k**C.h1_power * weight_all > 1.0

    empty = np.zeros(n, dtype=bool)
    T, Tp, H = empty.copy(), empty.copy(), empty.copy()
    T4 = np.zeros(g.num_clauses, dtype=bool)
    pi_l = 0.0
    tau_l = 1.0
    levels = []

    def bias_sets(state: MessageState, pi_value: float):
        eb = edge_biases(g, state, pi_value)
        max_plus = _per_var_max(g, np.abs(eb.plus_bias))
        max_zero = _per_var_max(g, np.abs(eb.zero_bias))
        B = ((max_plus > C.biased_plus * delta) | (max_zero > C.biased_zero * delta * pi_value)) & mask
        Bw = (max_zero > C.weighted_zero * pi_value) & mask
        return _to_set(B), _to_set(Bw)

    B0, Bw0 = bias_sets(history[0], 0.0)
    levels.append(LevelSets(0, 0.0, 0.0, 1.0, B0, Bw0, frozenset(), frozenset(), frozenset(), frozenset(),
                            frozenset(), frozenset(), frozenset()))

    for level in range(L):
        state = history[level]
        size = int(T.sum())
        lp = log_pi_of(size, pi_l, sched, t)
        pi_next = math.exp(lp)
        Pi_next = Pi_of(size, pi_l, sched, t)
        tau_next = tau(pi_next)

        others, outside = loc.counts(T)
        others_p, _ = loc.counts(Tp)
        win_e = loc.in_window[g.edge_clause] if E else np.zeros(0, dtype=bool)
        le1 = win_e & (others <= 1)
        eq1 = win_e & (others == 1)
        eq1_p = win_e & (others_p == 1)
        big_out = outside[g.edge_clause] >= k1 if E else np.zeros(0, dtype=bool)
        n1 = big_out & (others == 1)
        ngt1 = big_out & (others > 1)

        # T1: products over admissible clauses far from the typical value
        P_le1 = _excluding_own_clause(g, state.c2v, le1)
        dev = np.abs(P_le1 - pi_next).max(axis=1) if E else np.zeros(0)
        T1 = (_per_var_max(g, dev) > C.t1_rel * delta * pi_next) & mask

        # T2 and H4 use the typical weight sum over admissible clauses
        typical = loc.signed_sum((tau_l / 2.0) ** (len_e - 1.0), le1)
        gap = np.abs(Pi_next - typical)
        t2a = (gap > C.t2a_abs * delta).any(axis=1)
        t2b = ((loc.signed_sum(w2, eq1) > C.t2b_scale * rho * theta_k * delta).any(axis=1)
               | (loc.signed_sum(w2, eq1_p) > C.t2b_scale * rho * theta_k * delta**2).any(axis=1))
        t2c = (loc.signed_sum(w2, le1) > C.t2c_scale * rho).any(axis=1)
        T2 = (t2a | t2b | t2c) & mask

        many_T = loc.signed_sum(2.0 ** (others - len_e), ngt1) > delta / theta_k
        h1 = ~heavy_weight & all_in_window
        h2 = (loc.signed_sum(w2, n1) <= rho * theta_k**C.h2_power * delta).all(axis=1) & ~many_T.any(axis=1)
        thin = np.bincount(g.edge_var, weights=(outside[g.edge_clause] <= k1), minlength=n) if E else np.zeros(n)
        h3 = thin <= 1
        h4 = (gap <= C.h4_abs * delta).all(axis=1)
        H_next = h1 & h2 & h3 & h4 & mask

        # T3 uses the harmless set and T4 of the previous level
        in_T4 = np.bincount(g.edge_var, weights=T4[g.edge_clause], minlength=n) if E else np.zeros(n)
        harmless_pos = np.bincount(g.edge_clause, weights=H[g.edge_var], minlength=g.num_clauses) if E else np.zeros(0)
        weak_clause = harmless_pos < C.t3e_fraction * lengths
        in_weak = np.zeros(n, dtype=bool)
        if E:
            np.logical_or.at(in_weak, g.edge_var, weak_clause[g.edge_clause])
        T3 = (bad_var | heavy_weight | many_T.any(axis=1) | (in_T4 > C.t3d_count) | in_weak) & mask

        T4_next = (lengths >= C.t4_length * k1) & (outside <= k1) & ~T4
        touched = np.zeros(n, dtype=bool)
        if E:
            np.logical_or.at(touched, g.edge_var, T4_next[g.edge_clause])

        T_next = (T1 | T2 | T3 | touched) & mask
        Tp_next = (T1 | T2) & mask
        B, Bw = bias_sets(history[level + 1], pi_next)
        levels.append(LevelSets(level + 1, pi_next, Pi_next, tau_next, B, Bw, _to_set(T1), _to_set(T2),
                                _to_set(T3), frozenset(int(b) for b in np.flatnonzero(T4_next)),
                                _to_set(H_next), _to_set(T_next), _to_set(Tp_next)))
        T, Tp, H, T4 = T_next, Tp_next, H_next, T4_next
        pi_l, tau_l = pi_next, tau_next
    return CertificateSets(tuple(levels), delta, theta_n)


def write_levels_csv(cs: CertificateSets, path, extra: dict | None = None) -> None:
    rows = cs.rows()
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) + list(extra))
        w.writeheader()
        for row in rows:
            w.writerow({**row, **extra})


# ------------------------------------------------------------ linearization


@dataclass(frozen=True)
class Linearization:
    sigma: float
    alpha: float
    beta: float
    L: float
    ln_P: float
    residual: float


def linearization(
    g: FactorGraph,
    s: MessageState,
    sched: BiasSchedule,
    t: int,
    T,
    x: int,
    a: int,
    zeta: int,
    pi_ell: float,
) -> Linearization:
    """Split -ln of the admissible product for the message x -> a into a
    typical part (sigma) and first-order bias terms (alpha from plus biases,
    beta from zero biases), all summed over the admissible clauses b in
    N(x, zeta) other than a.  ``T`` is a boolean mask or iterable of variables."""
    Tmask = np.zeros(g.n, dtype=bool) if T is None else _active_mask(g, T)
    loc = LocalCounts(g, sched, t)
    others, _ = loc.counts(Tmask)
    eb = edge_biases(g, s, pi_ell)
    ratio = eb.tau / 2.0  # (2/tau)^(-1)
    sigma = alpha = beta = ln_P = 0.0
    for e in g.var_edges(x, zeta):
        b = int(g.edge_clause[e])
        if b == a or not loc.in_window[b] or others[e] > 1:
            continue
        if s.c2v[e] <= 0.0:
            raise DegenerateProduct(f"clause {b} sends a zero message to variable {x}")
        ln_P += math.log(s.c2v[e])
        weight = ratio ** (int(g.lengths[b]) - 1)
        sigma += weight
        for f_ in g.clause_edges(b):
            if int(g.edge_var[f_]) == x - 1:
                continue
            alpha += weight * int(g.edge_sign[f_]) * float(eb.plus_bias[f_])
            beta += weight * float(eb.zero_bias[f_])
    total = sigma + alpha + beta
    return Linearization(sigma, alpha, beta, total, ln_P, abs(total + ln_P))
