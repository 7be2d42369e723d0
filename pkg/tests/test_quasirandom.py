import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import formula, formulas

from spdec.bias import j_window, schedule, tau
from spdec.errors import BudgetExceeded, CapExceeded, DomainError
from spdec.factor_graph import build
from spdec.formula import RandomModel, generate
from spdec.quasirandom import (
    PROPERTIES,
    build_lambda,
    check_all,
    check_q,
    classify,
    cut_norm,
    default_p_grid,
    disjoint_bilinear_max,
    fact10_holds,
)


# ------------------------------------------------------------ oracles


def classes_oracle(f, x, T, zeta, sched, t):
    """Walks the clause tuples directly; one entry per occurrence of x with sign zeta."""
    win = j_window(sched.theta(t), sched.k)
    k1 = math.sqrt(sched.c) * sched.theta(t) * sched.k
    out = {name: [] for name in ("window", "at_most_one", "none_in_T", "one_in_T", "long_one", "long_many")}
    for b, clause in enumerate(f.clauses):
        for lit in clause:
            if lit != zeta * x:
                continue
            others = sum(1 for l2 in clause if abs(l2) != x and abs(l2) in T)
            outside = sum(1 for l2 in clause if abs(l2) not in T)
            if len(clause) in win:
                out["window"].append(b)
                if others <= 1:
                    out["at_most_one"].append(b)
                    out["none_in_T" if others == 0 else "one_in_T"].append(b)
            if outside >= k1:
                if others == 1:
                    out["long_one"].append(b)
                elif others > 1:
                    out["long_many"].append(b)
    return out


def lambda_oracle(f, T, p, zeta, sched, t):
    win = j_window(sched.theta(t), sched.k)
    half = tau(p) / 2
    entries = {}
    for b, clause in enumerate(f.clauses):
        if len(clause) not in win:
            continue
        for lit in clause:
            if (lit > 0) != (zeta > 0):
                continue
            x = abs(lit)
            if sum(1 for l2 in clause if abs(l2) != x and abs(l2) in T) > 1:
                continue
            for l2 in clause:
                y = abs(l2)
                if y == x:
                    continue
                entries[(x, y)] = entries.get((x, y), 0.0) + half ** len(clause) * (1 if l2 > 0 else -1)
    return entries


def cut_oracle(M):
    dim = M.shape[1]
    return max((float(np.abs(M @ np.array(z)).sum()) for z in itertools.product((-1, 1), repeat=dim)), default=0.0)


def bilinear_oracle(M):
    dim = M.shape[0]
    best = 0.0
    for labels in itertools.product((0, 1, 2), repeat=dim):
        A = np.array([l == 1 for l in labels], dtype=float)
        B = np.array([l == 2 for l in labels], dtype=float)
        best = max(best, abs(float(B @ M @ A)))
    return best


def zero_diagonal(draw_rng, dim):
    M = draw_rng.normal(size=(dim, dim)) * (draw_rng.random((dim, dim)) < 0.5)
    np.fill_diagonal(M, 0.0)
    return M


# ------------------------------------------------------------ classify


def test_classify_empty_T():
    f = generate(RandomModel("uniform", 3, 20), 8, 2)
    g = build(f)
    sched = schedule(3, 2.5, 8)
    for x in range(1, 9):
        for zeta in (-1, 1):
            cl = classify(g, x, set(), zeta, sched, 0)
            assert cl.one_in_T == () and cl.long_many == ()
            assert cl.at_most_one == cl.window == cl.none_in_T


def test_clause_with_two_T_members_is_long_many():
    # theta k = 10 gives k1 = sqrt(0.01) * 10 = 1 < 3 positions outside T
    f = formula(6, (1, 2, 3, 4, 5))
    sched = schedule(10, 1.0, 6, c=0.01)
    cl = classify(build(f), 1, {2, 3}, 1, sched, 0)
    assert cl.long_many == (0,)
    assert cl.at_most_one == ()


def test_short_clause_outside_window():
    sched = schedule(40, 1.0, 3)  # window starts at 4
    cl = classify(build(formula(3, (1, 2, 3))), 1, set(), 1, sched, 0)
    assert cl.window == ()


@settings(max_examples=80, deadline=None)
@given(formulas(max_n=7, max_m=10, max_width=5), st.integers(2, 12), st.floats(0.01, 0.5), st.data())
def test_classify_matches_oracle_and_partitions(f, k, c, data):
    g = build(f)
    sched = schedule(k, 2.0, f.n, c)
    x = data.draw(st.integers(1, f.n))
    T = set(data.draw(st.lists(st.integers(1, f.n), unique=True)))
    zeta = data.draw(st.sampled_from([-1, 1]))
    cl = classify(g, x, T, zeta, sched, 0)
    ref = classes_oracle(f, x, T, zeta, sched, 0)
    for name, members in ref.items():
        assert sorted(getattr(cl, name)) == sorted(members)
    assert sorted(cl.none_in_T + cl.one_in_T) == sorted(cl.at_most_one)
    assert not set(cl.none_in_T) & set(cl.one_in_T)


# ------------------------------------------------------------ Lambda


def test_lambda_hand_example():
    f = formula(3, (1, -2, 3))
    op = build_lambda(build(f), set(), 0.0, 1, schedule(3, 1.0, 3), 0)
    dense = op.dense()
    assert op.variables.tolist() == [1, 2, 3]
    assert dense[0].tolist() == [0.0, -0.125, 0.125]
    assert np.all(np.diag(dense) == 0)


def test_lambda_empty_formula():
    op = build_lambda(build(formula(4)), set(), 0.5, 1, schedule(3, 1.0, 4), 0, active=[1, 2, 3, 4])
    assert op.dim == 4 and op.matrix.nnz == 0


def test_lambda_p_domain():
    with pytest.raises(DomainError):
        build_lambda(build(formula(2, (1, 2))), set(), 1.5, 1, schedule(3, 1.0, 2), 0)


@settings(max_examples=80, deadline=None)
@given(formulas(max_n=7, max_m=10, max_width=4, min_width=2), st.floats(0.0, 1.0), st.sampled_from([-1, 1]), st.data())
def test_lambda_matches_oracle(f, p, zeta, data):
    sched = schedule(4, 2.0, f.n)
    T = set(data.draw(st.lists(st.integers(1, f.n), unique=True)))
    op = build_lambda(build(f), T, p, zeta, sched, 0, active=range(1, f.n + 1))
    dense = op.dense()
    ref = lambda_oracle(f, T, p, zeta, sched, 0)
    expected = np.zeros((f.n, f.n))
    for (x, y), v in ref.items():
        expected[x - 1, y - 1] = v
    assert np.allclose(dense, expected, atol=1e-15)
    assert np.all(np.diag(dense) == 0)


def test_lambda_text_export():
    op = build_lambda(build(formula(2, (1, -2))), set(), 0.0, 1, schedule(2, 1.0, 2), 0)
    assert op.to_text().splitlines() == ["row col value", "1 2 -0.25"]


# ------------------------------------------------------------ cut norm


def test_cut_norm_examples():
    assert cut_norm(np.zeros((3, 3))).lo == 0.0
    assert cut_norm(np.array([[0.0, 1.0], [-1.0, 0.0]])).value == 2.0


def test_cut_norm_cap_and_mode():
    with pytest.raises(CapExceeded):
        cut_norm(np.zeros((23, 23)))
    with pytest.raises(DomainError):
        cut_norm(np.zeros((2, 2)), mode="sdp")


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_exact_cut_matches_oracle_and_bound_brackets_it(dim, seed):
    M = zero_diagonal(np.random.default_rng(seed), dim)
    exact = cut_norm(M).value
    assert exact == pytest.approx(cut_oracle(M), abs=1e-12)
    b = cut_norm(M, "bound", seed=seed)
    assert b.lo <= exact + 1e-12 <= b.hi + 2e-12
    assert b.hi == pytest.approx(np.abs(M).sum())


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_disjoint_bilinear_matches_oracle(dim, seed):
    M = zero_diagonal(np.random.default_rng(seed), dim)
    assert disjoint_bilinear_max(M) == pytest.approx(bilinear_oracle(M), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(0, 10_000))
def test_fact10_inequality(dim, seed):
    ok, value, rhs = fact10_holds(zero_diagonal(np.random.default_rng(seed), dim))
    assert ok and value <= 24 * rhs + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_cut_norm_dominated_by_absolute_sum(dim, seed):
    rng = np.random.default_rng(seed)
    M = zero_diagonal(rng, dim)
    bigger = np.abs(M) * (1 + rng.random((dim, dim)))
    assert cut_norm(M).value <= np.abs(bigger).sum() + 1e-12


# ------------------------------------------------------------ Q audits


def test_empty_formula_passes_everything():
    g = build(formula(10))
    report = check_all(g, schedule(3, 1.0, 10), 0)
    assert all(report.entries[q].verdict == "pass" for q in PROPERTIES)


def test_identical_clauses_fail_q0():
    n = 50
    g = build(formula(n, *[(1, 2, 3)] * 5))  # 5 > ln 50
    entry = check_q(g, "Q0", schedule(3, 1.0, n), 0)
    assert entry.verdict == "fail" and entry.counts["redundant"] == 5


def test_q1_counts_match_direct_computation():
    f = generate(RandomModel("uniform", 3, 40), 12, 7)
    sched = schedule(3, 40 / 12, 12)
    entry = check_q(build(f), "Q1", sched, 0)
    # every clause has length 3, inside the window [1, 3]
    assert entry.counts["outside_window"] == 0
    theta_k, delta = 3.0, sched.delta(0)
    weights = {}
    for clause in f.clauses:
        for lit in clause:
            key = (abs(lit), lit > 0)
            weights[key] = weights.get(key, 0.0) + 2.0**-3
    heavy = {x for (x, _), w in weights.items() if theta_k**3 * delta * w > 1}
    assert entry.counts["heavy"] == len(heavy)


def test_exhaustive_budget_exceeded():
    g = build(generate(RandomModel("uniform", 3, 40), 12, 7))
    with pytest.raises(BudgetExceeded):
        check_q(g, "Q2", schedule(3, 40 / 12, 12, c=0.01), 0, budget=3, mode="exhaustive")


def test_unknown_property_and_mode():
    g = build(formula(3, (1, 2, 3)))
    with pytest.raises(DomainError):
        check_q(g, "Q9", schedule(3, 1.0, 3), 0)
    with pytest.raises(DomainError):
        check_q(g, "Q3", schedule(3, 1.0, 3), 0, mode="guess")


def q4_oracle(f, T, delta, theta_n):
    """Scan z over every clause ratio and a fine grid."""
    ratios = [sum(1 for l in c if abs(l) in T) / len(c) for c in f.clauses]
    grid = set(np.linspace(0.01, 1.0, 400).tolist()) | {r for r in ratios if 0.01 <= r <= 1}
    for z in grid:
        lhs = sum(len(c) for c, r in zip(f.clauses, ratios) if r >= z)
        if lhs > 1.01 / z * len(T) + 1e-4 * delta * theta_n:
            return True
    return False


@settings(max_examples=30, deadline=None)
@given(formulas(max_n=7, max_m=8, max_width=3, min_width=1))
def test_q4_exhaustive_matches_oracle(f):
    sched = schedule(3, 2.0, f.n)
    g = build(f)
    entry = check_q(g, "Q4", sched, 0, budget=10**6, mode="exhaustive")
    delta, theta_n = sched.delta(0), float(f.n)
    max_size = min(int(math.floor(100 * delta * theta_n + 1e-9)), int((g.degrees > 0).sum()))
    occurring = [x for x in range(1, f.n + 1) if g.degrees[x - 1] > 0]
    violated = any(q4_oracle(f, set(T), delta, theta_n)
                   for s in range(max_size + 1) for T in itertools.combinations(occurring, s))
    assert (entry.verdict == "fail") == violated


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["Q2", "Q3", "Q4"]), st.floats(1.0, 5.0))
def test_sampled_never_contradicts_exhaustive(seed, which, r):
    n = 9
    g = build(generate(RandomModel("uniform", 3, int(r * n)), n, seed))
    sched = schedule(3, r, n, c=0.3)
    full = check_q(g, which, sched, 0, budget=10**6, mode="exhaustive")
    sampled = check_q(g, which, sched, 0, budget=200, mode="sampled", seed=seed)
    if sampled.verdict == "fail":
        assert full.verdict == "fail"
    if full.verdict == "pass":
        assert sampled.verdict == "pass"


def test_report_json_and_reproducibility():
    g = build(generate(RandomModel("uniform", 3, 30), 10, 3))
    sched = schedule(3, 3.0, 10)
    a = check_all(g, sched, 0, budget=50, mode="sampled", seed=4)
    b = check_all(g, sched, 0, budget=50, mode="sampled", seed=4)
    assert a.to_json() == b.to_json()
    body = json.loads(a.to_json())
    assert set(body["properties"]) == set(PROPERTIES)
    assert body["properties"]["Q2"]["mode"] == "sampled"
    assert body["c"] == 0.1


def test_default_p_grid_includes_band():
    sched = schedule(7, 30.0, 100)
    grid = default_p_grid(sched)
    assert all(0 < p <= 1 for p in grid)
    assert math.exp(-2 * sched.rho) in grid and 1.0 in grid
