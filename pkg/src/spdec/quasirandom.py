"""Neighbourhood classes, the signed operator Lambda, cut norms and Q0..Q5 audits.

Q2, Q3 and Q4 quantify over all small sets T of active variables (and over p
or z).  They are checked exactly by enumerating every admissible T when that
fits the budget; otherwise the report is a sampled audit that tries
adversarial T (small sets, clause-seeded sets, greedy growth, random sets of
the largest allowed size).  A sampled "pass" means no violation was found.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy import sparse

from .bias import BiasSchedule, LocalCounts, Pi_of, band, tau
from .errors import BudgetExceeded, CapExceeded, DomainError
from .factor_graph import FactorGraph
from .formula import is_tame
from .rng import stream

PROPERTIES = ("Q0", "Q1", "Q2", "Q3", "Q4", "Q5")
EXACT_CUT_CAP = 22
DEFAULT_BUDGET = 5000


# ------------------------------------------------------------ neighbourhoods


@dataclass(frozen=True)
class NeighborhoodClasses:
    """Clause indices (one entry per occurrence of x with the given sign)."""

    window: tuple[int, ...]
    at_most_one: tuple[int, ...]
    none_in_T: tuple[int, ...]
    one_in_T: tuple[int, ...]
    long_one: tuple[int, ...]
    long_many: tuple[int, ...]
    k1: float


def _mask(n: int, T) -> np.ndarray:
    if T is None:
        return np.zeros(n, dtype=bool)
    if isinstance(T, np.ndarray) and T.dtype == bool:
        return T
    out = np.zeros(n, dtype=bool)
    members = np.fromiter((int(v) - 1 for v in T), dtype=np.int64)
    out[members] = True
    return out


def classify(g: FactorGraph, x: int, T, zeta: int, sched: BiasSchedule, t: int) -> NeighborhoodClasses:
    """Split N(x, zeta) by clause length and the number of other T-members.

    ``window`` keeps clauses with 0.1 theta k <= length <= 10 theta k; the next
    three refine it by having at most one, zero or exactly one member of T
    other than x.  ``long_one``/``long_many`` range over all of N(x, zeta) and
    keep clauses with at least k1 positions outside T and exactly one, or more
    than one, other T-member.
    """
    loc = LocalCounts(g, sched, t)
    others, outside = loc.counts(_mask(g.n, T))
    groups: dict[str, list[int]] = {name: [] for name in ("w", "le1", "0", "1", "l1", "lm")}
    for e in g.var_edges(x, zeta):
        b = int(g.edge_clause[e])
        o = int(others[e])
        if loc.in_window[b]:
            groups["w"].append(b)
            if o <= 1:
                groups["le1"].append(b)
                groups["0" if o == 0 else "1"].append(b)
        if outside[b] >= loc.k1:
            if o == 1:
                groups["l1"].append(b)
            elif o > 1:
                groups["lm"].append(b)
    return NeighborhoodClasses(*(tuple(groups[k]) for k in ("w", "le1", "0", "1", "l1", "lm")), k1=loc.k1)


# ------------------------------------------------------------ Lambda and cut norms


@dataclass(frozen=True, eq=False)
class SignedOperator:
    matrix: sparse.csr_array
    variables: np.ndarray  # 1-based variable of each row/column

    @property
    def dim(self) -> int:
        return len(self.variables)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def to_text(self) -> str:
        coo = self.matrix.tocoo()
        rows = [f"{self.variables[i]} {self.variables[j]} {float(v)!r}" for i, j, v in zip(coo.row, coo.col, coo.data) if v != 0]
        return "\n".join(["row col value", *rows]) + "\n"


def build_lambda(g: FactorGraph, T, p: float, zeta: int, sched: BiasSchedule, t: int, active=None) -> SignedOperator:
    """Operator over the active variables with entry (x, y) summing
    (2/tau(p))^(-|b|) sign(y, b) over admissible clauses b in N(x, zeta) with at
    most one other T-member, and over occurrences of y != x in b."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    act = _active(g, active)
    variables = np.flatnonzero(act) + 1
    index = np.full(g.n, -1, dtype=np.int64)
    index[act] = np.arange(len(variables))
    loc = LocalCounts(g, sched, t)
    others, _ = loc.counts(_mask(g.n, T))
    E = g.num_edges
    rows_out: np.ndarray = np.zeros(0, dtype=np.int64)
    cols_out = rows_out
    vals_out: np.ndarray = np.zeros(0)
    if E:
        source = np.flatnonzero((g.edge_sign == zeta) & loc.in_window[g.edge_clause] & (others <= 1) & act[g.edge_var])
        lens = g.lengths[g.edge_clause[source]]
        src = np.repeat(source, lens)
        starts = g.clause_ptr[g.edge_clause[source]]
        offsets = np.arange(len(src)) - np.repeat(np.cumsum(lens) - lens, lens)
        dst = np.repeat(starts, lens) + offsets
        keep = (g.edge_var[dst] != g.edge_var[src]) & act[g.edge_var[dst]]
        src, dst = src[keep], dst[keep]
        half_tau = tau(p) / 2.0
        weight = half_tau ** g.lengths[g.edge_clause[src]].astype(float)
        rows_out = index[g.edge_var[src]]
        cols_out = index[g.edge_var[dst]]
        vals_out = weight * g.edge_sign[dst]
    dim = len(variables)
    matrix = sparse.coo_array((vals_out, (rows_out, cols_out)), shape=(dim, dim)).tocsr()
    matrix.sum_duplicates()
    return SignedOperator(matrix, variables)


@dataclass(frozen=True)
class CutNorm:
    mode: str
    lo: float
    hi: float

    @property
    def value(self) -> float | None:
        return self.lo if self.mode == "exact" else None


def _as_dense(M) -> np.ndarray:
    if isinstance(M, SignedOperator):
        return M.dense()
    if sparse.issparse(M):
        return M.toarray()
    return np.asarray(M, dtype=float)


def _sign_vectors(dim: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(dim, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(float)


def _exact_cut(M: np.ndarray, block: int = 1 << 15) -> float:
    dim = M.shape[1]
    if dim == 0:
        return 0.0
    best = 0.0
    # z and -z give the same value, so fix the last coordinate to +1
    total = 1 << (dim - 1)
    for start in range(0, total, block):
        Z = _sign_vectors(dim - 1, start, min(total, start + block))
        Z = np.hstack([Z, np.ones((len(Z), 1))])
        best = max(best, float(np.abs(Z @ M.T).sum(axis=1).max()))
    return best


def _local_search_cut(M: sparse.csc_array, rng: np.random.Generator, restarts: int, sweeps: int = 5) -> float:
    """Coordinate ascent on ||M z||_1 over sign vectors, flipping one sign at a time."""
    dim = M.shape[1]
    best = 0.0
    for _ in range(restarts):
        z = rng.choice([-1.0, 1.0], size=dim)
        image = M @ z
        value = float(np.abs(image).sum())
        for _ in range(sweeps):
            improved = False
            for j in range(dim):
                lo, hi = M.indptr[j], M.indptr[j + 1]
                if lo == hi:
                    continue
                rows = M.indices[lo:hi]
                step = -2.0 * z[j] * M.data[lo:hi]
                gain = float(np.abs(image[rows] + step).sum() - np.abs(image[rows]).sum())
                if gain > 1e-15:
                    image[rows] += step
                    z[j] = -z[j]
                    value += gain
                    improved = True
            if not improved:
                break
        best = max(best, value)
    return best


def cut_norm(M, mode: str = "exact", seed: int = 0, restarts: int = 8) -> CutNorm:
    """Max of ||M z||_1 over sign vectors z (the infinity-to-one norm).

    ``exact`` enumerates sign vectors (dimension at most 22).  ``bound``
    returns a lower bound from local search over sign vectors and an upper
    bound equal to the sum of absolute entries."""
    if mode == "exact":
        A = _as_dense(M)
        dim = A.shape[1] if A.ndim == 2 else 0
        if dim > EXACT_CUT_CAP:
            raise CapExceeded(f"dimension {dim} exceeds exact cut-norm cap {EXACT_CUT_CAP}")
        value = _exact_cut(A)
        return CutNorm("exact", value, value)
    if mode != "bound":
        raise DomainError("mode must be 'exact' or 'bound'")
    S = M.matrix if isinstance(M, SignedOperator) else M
    S = sparse.csc_array(S) if sparse.issparse(S) else sparse.csc_array(np.atleast_2d(np.asarray(S, dtype=float)))
    upper = float(np.abs(S.data).sum())
    if S.shape[1] == 0 or upper == 0.0:
        return CutNorm("bound", 0.0, upper)
    lower = _local_search_cut(S, stream(seed, "sampling", 0), restarts)
    return CutNorm("bound", min(lower, upper), upper)


def disjoint_bilinear_max(M) -> float:
    """max |<M 1_A, 1_B>| over disjoint index sets A and B, exhaustively."""
    A = _as_dense(M)
    dim = A.shape[1] if A.ndim == 2 else 0
    if dim > EXACT_CUT_CAP:
        raise CapExceeded(f"dimension {dim} exceeds cap {EXACT_CUT_CAP}")
    if dim == 0:
        return 0.0
    subsets = ((np.arange(1 << dim)[:, None] >> np.arange(dim)) & 1).astype(float)
    images = subsets @ A.T  # row s holds M 1_A for subset s
    free = 1.0 - subsets
    positive = (np.clip(images, 0, None) * free).sum(axis=1)
    negative = (np.clip(-images, 0, None) * free).sum(axis=1)
    return float(np.maximum(positive, negative).max())


def fact10_holds(M) -> tuple[bool, float, float]:
    """(cut norm <= 24 * disjoint bilinear max, cut norm, that max)."""
    value = cut_norm(M, "exact").lo
    rhs = disjoint_bilinear_max(M)
    return value <= 24.0 * rhs + 1e-9, value, rhs


# ------------------------------------------------------------ reports


@dataclass
class QEntry:
    name: str
    verdict: str  # pass | fail | inconclusive
    mode: str  # exact | exhaustive | sampled
    sets_checked: int = 0
    witness: dict | None = None
    counts: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass
class QuasirandomReport:
    entries: dict[str, QEntry]
    delta: float
    t: int
    c: float
    within_horizon: bool

    def to_json(self) -> str:
        body = {
            "delta": self.delta, "t": self.t, "c": self.c, "within_horizon": self.within_horizon,
            "properties": {k: asdict(v) for k, v in self.entries.items()},
        }
        return json.dumps(body, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.ndarray, frozenset, set, tuple)):
        return [_jsonable(v) for v in obj] if not isinstance(obj, np.ndarray) else obj.tolist()
    return obj


def _active(g: FactorGraph, active) -> np.ndarray:
    """V_t; by default the variables that occur in the formula."""
    if active is None:
        return g.degrees > 0
    return _mask(g.n, active).copy()


def default_p_grid(sched: BiasSchedule) -> tuple[float, ...]:
    lo, hi = band(sched)
    grid = {10.0**e for e in (-4, -3, -2, -1.5, -1, -0.5)} | {1.0, lo, min(hi, 1.0)}
    return tuple(sorted(p for p in grid if 0.0 < p <= 1.0))


class _Context:
    """Shared per-formula quantities for the Q audits."""

    def __init__(self, g: FactorGraph, sched: BiasSchedule, t: int, active):
        self.g = g
        self.sched = sched
        self.t = t
        self.active = _active(g, active)
        self.members = np.flatnonzero(self.active)
        self.loc = LocalCounts(g, sched, t)
        self.delta = sched.delta(t)
        self.theta = sched.theta(t)
        self.theta_k = self.theta * sched.k
        self.theta_n = self.theta * sched.n
        self.w2 = 2.0 ** (-self.loc.len_e)
        self.win_e = self.loc.in_window[g.edge_clause] if g.num_edges else np.zeros(0, dtype=bool)


# Each evaluator returns (violating variables or a violation flag, a score for
# greedy search, details for the witness).

def _q2_eval(ctx: _Context, T: np.ndarray, p_grid) -> tuple[int, float, dict]:
    size = int(T.sum())
    s = max(ctx.delta**5, size / ctx.theta_n)
    others, _ = ctx.loc.counts(T)
    le1 = ctx.win_e & (others <= 1)
    eq1 = ctx.win_e & (others == 1)
    heavy_one = (ctx.loc.signed_sum(ctx.w2, eq1) > 1e4 * ctx.sched.rho * ctx.theta_k * s).any(axis=1)
    heavy_all = (ctx.loc.signed_sum(ctx.w2, le1) > 1e4 * ctx.sched.rho).any(axis=1)
    base = heavy_one | heavy_all
    worst, worst_p = -1, None
    for p in p_grid:
        typical = ctx.loc.signed_sum((tau(p) / 2.0) ** (ctx.loc.len_e - 1.0), le1)
        Pi = Pi_of(size, p, ctx.sched, ctx.t)
        bad = (np.abs(Pi - typical) > 2.0 * ctx.delta / 1000.0).any(axis=1) | base
        count = int((bad & ctx.active).sum())
        if count > worst:
            worst, worst_p = count, p
    return worst, float(worst), {"p": worst_p, "s": s}


def _q3_eval(ctx: _Context, T: np.ndarray, _grid) -> tuple[int, float, dict]:
    others, outside = ctx.loc.counts(T)
    g = ctx.g
    many = (outside[g.edge_clause] >= ctx.loc.k1) & (others > 1) if g.num_edges else np.zeros(0, dtype=bool)
    sums = ctx.loc.signed_sum(2.0 ** (others - ctx.loc.len_e), many)
    bad = (sums > ctx.delta / ctx.theta_k).any(axis=1) & ctx.active
    return int(bad.sum()), float(sums.max()) if sums.size else 0.0, {}


def _q4_eval(ctx: _Context, T: np.ndarray, _grid) -> tuple[int, float, dict]:
    g = ctx.g
    size = int(T.sum())
    if g.num_clauses == 0:
        return 0, -math.inf, {}
    in_T = np.bincount(g.edge_clause, weights=T[g.edge_var], minlength=g.num_clauses)
    lengths = g.lengths.astype(float)
    ratio = np.divide(in_T, lengths, out=np.zeros_like(in_T), where=lengths > 0)
    order = np.argsort(-ratio, kind="stable")
    ratio_sorted = ratio[order]
    cum = np.cumsum(lengths[order])
    # the left side is constant between consecutive ratios and the right side
    # falls with z, so the breakpoints are the only candidates
    last = np.r_[ratio_sorted[1:] != ratio_sorted[:-1], True]
    cand = last & (ratio_sorted >= 0.01) & (ratio_sorted <= 1.0)
    if not cand.any():
        return 0, -math.inf, {}
    z = ratio_sorted[cand]
    slack = cum[cand] - (1.01 / z * size + 1e-4 * ctx.delta * ctx.theta_n)
    i = int(np.argmax(slack))
    return int((slack > 0).any()), float(slack[i]), {"z": float(z[i])}


@dataclass(frozen=True)
class _QSpec:
    name: str
    max_fraction: float  # |T| <= max_fraction * delta * theta n
    evaluate: Callable
    threshold: Callable[[_Context], float]  # violation when count exceeds this


_SPECS = {
    "Q2": _QSpec("Q2", 10.0, _q2_eval, lambda c: 1e-3 * c.delta**2 * c.theta_n),
    "Q3": _QSpec("Q3", 1.0, _q3_eval, lambda c: 1e-4 * c.delta * c.theta_n),
    "Q4": _QSpec("Q4", 100.0, _q4_eval, lambda c: 0.0),
}


def _max_size(ctx: _Context, fraction: float) -> int:
    return min(int(math.floor(fraction * ctx.delta * ctx.theta_n + 1e-9)), len(ctx.members))


def _exhaustive_sets(ctx: _Context, max_size: int) -> Iterator[np.ndarray]:
    for size in range(max_size + 1):
        for combo in itertools.combinations(ctx.members, size):
            T = np.zeros(ctx.g.n, dtype=bool)
            T[list(combo)] = True
            yield T


def _count_sets(universe: int, max_size: int) -> int:
    return sum(math.comb(universe, s) for s in range(max_size + 1))


def _sampled_sets(ctx: _Context, max_size: int, budget: int, rng: np.random.Generator, score) -> Iterator[np.ndarray]:
    g, members = ctx.g, ctx.members
    n_act = len(members)

    def of(vars_) -> np.ndarray:
        T = np.zeros(g.n, dtype=bool)
        T[np.asarray(list(vars_), dtype=np.int64)] = True
        return T

    yield of([])
    small = [c for s in (1, 2) if s <= max_size for c in itertools.combinations(members, s)]
    if len(small) > budget // 4:
        pick = rng.choice(len(small), size=budget // 4, replace=False)
        small = [small[i] for i in sorted(pick)]
    for combo in small:
        yield of(combo)
    # variable sets of clauses and of overlapping clause pairs
    clause_order = rng.permutation(g.num_clauses)[: budget // 4]
    for b in clause_order:
        vars_b = {int(v) for v in g.edge_var[g.clause_edges(int(b))] if ctx.active[v]}
        if 0 < len(vars_b) <= max_size:
            yield of(vars_b)
        x = next(iter(vars_b), None)
        if x is None:
            continue
        partners = g.var_clauses(x + 1)
        other = int(partners[rng.integers(len(partners))])
        union = vars_b | {int(v) for v in g.edge_var[g.clause_edges(other)] if ctx.active[v]}
        if len(union) <= max_size:
            yield of(union)
    # greedy growth along shared clauses
    for _ in range(4):
        if n_act == 0 or max_size == 0:
            break
        current = {int(members[rng.integers(n_act)])}
        while len(current) < max_size:
            frontier = {int(v) for x in current for b in g.var_clauses(x + 1)
                        for v in g.edge_var[g.clause_edges(b)] if ctx.active[v]} - current
            if not frontier:
                frontier = set(int(v) for v in members) - current
            options = sorted(frontier)
            if len(options) > 32:
                options = [options[i] for i in rng.choice(len(options), 32, replace=False)]
            best = max(options, key=lambda v: score(of(current | {v})))
            current.add(best)
            yield of(current)
    # random sets of extremal sizes
    for size in {max_size, max(max_size // 2, 1)}:
        if 0 < size <= n_act:
            for _ in range(4):
                yield of(rng.choice(members, size=size, replace=False))


def _audit(ctx: _Context, spec: _QSpec, mode: str, budget: int, seed: int, p_grid) -> QEntry:
    max_size = _max_size(ctx, spec.max_fraction)
    threshold = spec.threshold(ctx)
    total = _count_sets(len(ctx.members), max_size)
    if mode == "auto":
        mode = "exhaustive" if total <= budget else "sampled"
    params = {"delta": ctx.delta, "t": ctx.t, "c": ctx.sched.c, "max_size": max_size,
              "threshold": threshold, "budget": budget}
    if spec.name == "Q2":
        params["p_grid"] = list(p_grid)
    if mode == "exhaustive":
        if total > budget:
            raise BudgetExceeded(f"{spec.name}: {total} sets exceed budget {budget}")
        candidates = _exhaustive_sets(ctx, max_size)
    elif mode == "sampled":
        rng = stream(seed, "sampling", PROPERTIES.index(spec.name))
        candidates = _sampled_sets(ctx, max_size, budget, rng, lambda T: spec.evaluate(ctx, T, p_grid)[1])
    else:
        raise DomainError("mode must be auto, exhaustive or sampled")
    checked = 0
    worst = 0
    for T in candidates:
        if mode == "sampled" and checked >= budget:
            break
        checked += 1
        count, _, detail = spec.evaluate(ctx, T, p_grid)
        worst = max(worst, count)
        if count > threshold:
            witness = {"T": [int(v) + 1 for v in np.flatnonzero(T)], "violations": count, **detail}
            return QEntry(spec.name, "fail", mode, checked, witness, {"worst": count}, params)
    return QEntry(spec.name, "pass", mode, checked, None, {"worst": worst}, params)


def _q0(ctx: _Context) -> QEntry:
    tame = is_tame(ctx.g.to_formula())
    limit = math.log(ctx.g.n) if ctx.g.n > 0 else 0.0
    return QEntry("Q0", "pass" if tame.verdict else "fail", "exact", 0, None,
                  {"redundant": tame.redundant_count, "heavy": tame.heavy_var_count}, {"limit": limit})


def _q1(ctx: _Context) -> QEntry:
    g = ctx.g
    outside_window = np.zeros(g.n, dtype=bool)
    if g.num_edges:
        np.logical_or.at(outside_window, g.edge_var, ~ctx.loc.in_window[g.edge_clause])
    weights = ctx.loc.signed_sum(ctx.w2, np.ones(g.num_edges, dtype=bool))
    heavy = ((ctx.theta_k**3 * ctx.delta * weights) > 1.0).any(axis=1) & ctx.active
    n_out = int((outside_window & ctx.active).sum())
    n_heavy = int(heavy.sum())
    first_ok = n_out <= 10 * ctx.delta * ctx.theta_n
    second_ok = n_heavy <= 1e-4 * ctx.delta * ctx.theta_n
    witness = None
    if not (first_ok and second_ok):
        witness = {"outside_window": [int(v) + 1 for v in np.flatnonzero(outside_window & ctx.active)][:50],
                   "heavy": [int(v) + 1 for v in np.flatnonzero(heavy)][:50]}
    return QEntry("Q1", "pass" if first_ok and second_ok else "fail", "exact", 0, witness,
                  {"outside_window": n_out, "heavy": n_heavy}, {"delta": ctx.delta})


def _q5(ctx: _Context, mode: str, budget: int, seed: int, p_grid) -> QEntry:
    max_size = _max_size(ctx, 10.0)
    bound = ctx.delta**4 * ctx.theta_n
    per_set = 2 * len(p_grid)
    total = _count_sets(len(ctx.members), max_size) * per_set
    if mode == "auto":
        mode = "exhaustive" if total <= budget else "sampled"
    if mode == "exhaustive":
        if total > budget:
            raise BudgetExceeded(f"Q5: {total} operators exceed budget {budget}")
        sets: Iterable[np.ndarray] = _exhaustive_sets(ctx, max_size)
    elif mode == "sampled":
        rng = stream(seed, "sampling", PROPERTIES.index("Q5"))
        sets = _sampled_sets(ctx, max_size, max(budget // per_set, 1), rng, lambda T: float(T.sum()))
    else:
        raise DomainError("mode must be auto, exhaustive or sampled")
    exact = len(ctx.members) <= EXACT_CUT_CAP
    params = {"delta": ctx.delta, "bound": bound, "max_size": max_size, "p_grid": list(p_grid),
              "norm": "exact" if exact else "bound", "budget": budget}
    checked, worst_lo, undecided = 0, 0.0, None
    for T in sets:
        if checked >= budget:
            break
        for p in p_grid:
            for zeta in (-1, 1):
                checked += 1
                op = build_lambda(ctx.g, T, p, zeta, ctx.sched, ctx.t, ctx.active)
                norm = cut_norm(op, "exact" if exact else "bound", seed=seed)
                worst_lo = max(worst_lo, norm.lo)
                where = {"T": [int(v) + 1 for v in np.flatnonzero(T)], "p": p, "zeta": zeta,
                         "lo": norm.lo, "hi": norm.hi}
                if norm.lo > bound:
                    return QEntry("Q5", "fail", mode, checked, where, {"worst_lower": worst_lo}, params)
                if norm.hi > bound and undecided is None:
                    undecided = where
    verdict = "pass" if undecided is None else "inconclusive"
    return QEntry("Q5", verdict, mode, checked, undecided, {"worst_lower": worst_lo}, params)


def check_q(
    g: FactorGraph,
    which: str,
    sched: BiasSchedule,
    t: int,
    budget: int = DEFAULT_BUDGET,
    mode: str = "auto",
    seed: int = 0,
    active=None,
    p_grid: Iterable[float] | None = None,
) -> QEntry:
    """Audit one property.  ``mode`` is auto, exhaustive or sampled; Q0 and
    Q1 are always exact."""
    if which not in PROPERTIES:
        raise DomainError(f"unknown property {which!r}")
    ctx = _Context(g, sched, t, active)
    grid = tuple(p_grid) if p_grid is not None else default_p_grid(sched)
    if which == "Q0":
        return _q0(ctx)
    if which == "Q1":
        return _q1(ctx)
    if which == "Q5":
        return _q5(ctx, mode, budget, seed, grid)
    return _audit(ctx, _SPECS[which], mode, budget, seed, grid)


def check_all(
    g: FactorGraph,
    sched: BiasSchedule,
    t: int,
    budget: int = DEFAULT_BUDGET,
    mode: str = "auto",
    seed: int = 0,
    active=None,
    which: Iterable[str] = PROPERTIES,
) -> QuasirandomReport:
    entries = {q: check_q(g, q, sched, t, budget, mode, seed, active) for q in which}
    return QuasirandomReport(entries, sched.delta(t), t, sched.c, sched.within_horizon(t))
