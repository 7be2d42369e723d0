import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import formula, formulas

from spdec.bias import (
    BiasSchedule,
    CertificateConstants,
    LocalCounts,
    Pi_of,
    band,
    biased_variables,
    certificate_sets,
    edge_biases,
    j_window,
    linearization,
    log_pi_of,
    mu_j_le1,
    p_split,
    pi_of,
    reconstruct_falsifying,
    schedule,
    tau,
    typical_sequence,
    write_levels_csv,
)
from spdec.errors import DegenerateProduct, DomainError
from spdec.factor_graph import build
from spdec.formula import RandomModel, generate
from spdec.message_passing import (
    MINUS,
    PLUS,
    IterationPolicy,
    MessageState,
    clause_update,
    init_messages,
    iterate,
    psi,
)


# ------------------------------------------------------------ independent oracles


def mu_oracle(T_size, theta, n, k, rho, j):
    frac = T_size / (theta * n)
    length = math.comb(k - 1, j - 1) * theta ** (j - 1) * (1 - theta) ** (k - j)
    few = (1 - frac) ** (j - 1) + ((j - 1) * frac * (1 - frac) ** (j - 2) if j >= 2 else 0.0)
    return 2**j * rho * length * few


def log_pi_oracle(T_size, p, k, r, n, c, t):
    theta = 1 - t / n
    rho = k * r / 2**k
    half_tau = (1 - p / (2 - p)) / 2
    lo = max(1, math.ceil(0.1 * theta * k - 1e-9))
    hi = min(k, math.floor(10 * theta * k + 1e-9))
    total = 0.0
    for j in range(lo, hi + 1):
        weight = mu_oracle(T_size, theta, n, k, rho, j) / 2
        if weight:
            if half_tau ** (j - 1) >= 1:
                return -math.inf
            total += weight * math.log(1 - half_tau ** (j - 1))
    return total


def state_from(v2c, g):
    """A message state with the given variable messages and consistent clause messages."""
    v2c = np.array(v2c, dtype=float).reshape(g.num_edges, 3)
    return MessageState(v2c, clause_update(g, v2c), 0)


# ------------------------------------------------------------ schedule


def test_schedule_rejects_bad_inputs():
    for args in [(1, 1.0, 10), (3, 0.0, 10), (3, 1.0, 0), (3, 1.0, 10, 0.0), (3, -1.0, 10)]:
        with pytest.raises(DomainError):
            schedule(*args)


def test_schedule_start_values():
    s = schedule(5, 3.0, 100, 0.2)
    assert s.theta(0) == 1.0
    assert s.delta(0) == pytest.approx(math.exp(-0.2 * 5))
    assert s.cumulative(0) == 0.0


def test_rho_example():
    s = BiasSchedule(10, 2**10 * math.log(10) / 10, 50)
    assert s.rho == pytest.approx(math.log(10), abs=1e-12)
    assert s.rho == pytest.approx(2.302585, abs=1e-6)


def test_t_hat_formula():
    s = schedule(10, 2**10 * math.e / 10, 1000, 0.5)
    # rho = e, so ln(rho) = 1
    assert s.t_hat == pytest.approx((1 - 1 / (0.25 * 10)) * 1000)
    assert s.within_horizon(600) and not s.within_horizon(601)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.floats(0.1, 50), st.integers(1, 400), st.floats(0.01, 1.0))
def test_schedule_invariants(k, r, n, c):
    s = schedule(k, r, n, c)
    deltas = s.deltas()
    assert np.all((deltas > 0) & (deltas <= 1))
    cum = [s.cumulative(t) for t in range(n)]
    assert all(b >= a for a, b in zip(cum, cum[1:]))
    assert s.t_hat <= n or s.rho < 1


def test_cumulative_matches_comparator_late():
    # ck = 20 so the sum over s <= t is dominated by its last ~n/(ck) terms
    s = schedule(200, 1.0, 100_000, 0.1)
    ratios = [s.cumulative(t) / s.comparator(t) for t in (5_000, 20_000, 50_000, 90_000)]
    assert all(b >= a - 1e-12 for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1.0) < 2e-3


# ------------------------------------------------------------ typical values


def test_tau_endpoints_and_domain():
    assert tau(0.0) == 1.0
    assert tau(1.0) == 0.0
    with pytest.raises(DomainError):
        tau(1.5)


def test_tau_matches_psi_zero():
    grid = np.linspace(0, 1, 101)
    assert np.allclose(tau(grid), [1 - psi(0, p, p) for p in grid], atol=1e-14)


def test_j_window():
    assert list(j_window(1.0, 3)) == [1, 2, 3]
    assert list(j_window(1.0, 20)) == list(range(2, 21))
    # 0.1 * 0.7 * 10 is 0.7 up to rounding noise
    assert list(j_window(0.7, 10)) == list(range(1, 11))
    assert list(j_window(0.5, 40)) == list(range(2, 41))


def test_mu_examples():
    rho = 1.7
    assert sum(mu_j_le1(0, 1.0, 100, 6, rho, j) for j in range(1, 7)) == pytest.approx(2**6 * rho)
    assert mu_j_le1(0, 1.0, 100, 6, rho, 6) == pytest.approx(2**6 * rho)
    assert mu_j_le1(0, 0.5, 100, 4, rho, 2) == pytest.approx(4 * rho * 3 / 8)


def test_mu_domain():
    with pytest.raises(DomainError):
        mu_j_le1(0, 1.0, 10, 3, 1.0, 4)
    with pytest.raises(DomainError):
        mu_j_le1(11, 1.0, 10, 3, 1.0, 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 14), st.floats(0.05, 1.0), st.floats(0.0, 1.0), st.data())
def test_mu_matches_closed_form(k, theta, frac, data):
    j = data.draw(st.integers(1, k))
    n = 1000
    got = mu_j_le1(frac * theta * n, theta, n, k, 1.3, j)
    assert got == pytest.approx(mu_oracle(frac * theta * n, theta, n, k, 1.3, j), rel=1e-9, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 12), st.floats(1.0, 40.0), st.integers(0, 90), st.floats(0.0, 1.0), st.floats(0.0, 0.2))
def test_log_pi_matches_direct_product(k, r, t, p, frac):
    n, c = 100, 0.1
    s = schedule(k, r, n, c)
    size = frac * s.theta(t) * n
    expected = log_pi_oracle(size, p, k, r, n, c, t)
    got = log_pi_of(size, p, s, t)
    if math.isinf(expected):
        assert got == -math.inf
    else:
        assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert Pi_of(size, p, s, t) >= 0.0


def test_pi_first_order_gap_small_when_terms_small():
    s = schedule(10, 2**10 * 1.0 / 10, 1000)
    gap = abs(Pi_of(0, 0.0, s, 0) + log_pi_of(0, 0.0, s, 0))
    assert gap < 1e-3


def test_typical_sequence_start_and_first_step():
    s = schedule(8, 40.0, 500)
    tr = typical_sequence(s, 0, 0.0, 0)
    assert (tr.pi, tr.tau) == ((0.0,), (1.0,))
    tr = typical_sequence(s, 0, 0.0, 3)
    assert tr.pi[1] == pytest.approx(pi_of(0, 0.0, s, 0))
    assert tr.pi[2] == pytest.approx(pi_of(0, tr.pi[1], s, 0))
    assert tr.tau[2] == pytest.approx(tau(tr.pi[2]))
    assert all(0 <= v <= 1 for v in tr.pi + tr.tau)


def test_typical_sequence_flags_band_violations():
    s = schedule(8, 40.0, 500)
    lo, hi = band(s)
    tr = typical_sequence(s, 0, 0.0, 4)
    for level in range(1, 5):
        outside = not lo <= tr.pi[level] <= hi
        assert (level in tr.band_violations) == (tr.band_checked[level] and outside)


def test_typical_sequence_rejects_negative_depth():
    with pytest.raises(DomainError):
        typical_sequence(schedule(3, 1.0, 10), 0, 0.0, -1)


# ------------------------------------------------------------ edge biases


def test_uniform_messages_have_no_bias():
    g = build(generate(RandomModel("uniform", 3, 30), 12, 1))
    eb = edge_biases(g, init_messages(g), 0.0)
    assert np.allclose(eb.plus_bias, 0) and np.allclose(eb.zero_bias, 0)


def test_all_zero_message_bias():
    g = build(formula(2, (1, 2)))
    eb = edge_biases(g, state_from([[0, 1, 0], [0, 1, 0]], g), 0.0)
    assert np.allclose(eb.plus_bias, 0.0)
    assert np.allclose(eb.zero_bias, 0.5)


triples = st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)).filter(lambda v: sum(v) > 1e-6)


@settings(max_examples=200, deadline=None)
@given(triples, st.floats(0, 1), st.sampled_from([-1, 1]))
def test_reconstruction_identity(raw, pi_value, sign):
    mu = np.array(raw) / sum(raw)
    g = build(formula(1, (sign,)))
    eb = edge_biases(g, state_from([mu], g), pi_value)
    falsifying = mu[MINUS] if sign > 0 else mu[PLUS]
    assert eb.reconstruction_residual <= 1e-12
    got = reconstruct_falsifying(eb.tau, eb.zero_bias[0], eb.plus_bias[0], sign)
    assert got == pytest.approx(falsifying, abs=1e-12)


def test_literal_form_of_identity_fails_with_plus_bias():
    # mu(+1) itself differs from tau/2 - (E + Delta) as soon as Delta is nonzero
    g = build(formula(1, (1,)))
    mu = np.array([0.1, 0.2, 0.7])
    eb = edge_biases(g, state_from([mu], g), 0.0)
    assert abs(eb.plus_bias[0]) > 0
    assert abs(mu[PLUS] - reconstruct_falsifying(eb.tau, eb.zero_bias[0], eb.plus_bias[0], 1)) > 0.1


# ------------------------------------------------------------ biased variables


def test_uniform_state_is_balanced():
    g = build(generate(RandomModel("uniform", 3, 30), 12, 1))
    s = schedule(3, 2.5, 12)
    for mode in ("marginal", "edge"):
        res = biased_variables(g, init_messages(g), s, 0, mode=mode)
        assert res.biased == frozenset() and res.balanced


def test_unit_clauses_bias_every_variable():
    g = build(formula(4, (1,), (2,), (3,), (4,)))
    res = iterate(g, IterationPolicy(20, 1e-12))
    out = biased_variables(g, res.state, schedule(2, 1.0, 4, 0.5), 0)
    assert out.biased == {1, 2, 3, 4}
    assert not out.balanced


def test_biased_variables_domain():
    g = build(formula(2, (1, 2)))
    with pytest.raises(DomainError):
        biased_variables(g, init_messages(g), schedule(2, 1.0, 2), 2)
    with pytest.raises(DomainError):
        biased_variables(g, init_messages(g), schedule(2, 1.0, 2), 0, mode="other")


# ------------------------------------------------------------ products


def brute_split(f, c2v_by_edge, T, sched, t):
    g = build(f)
    win = j_window(sched.theta(t), sched.k)
    le1 = np.ones((g.num_edges, 2))
    gt1 = np.ones((g.num_edges, 2))
    for e in range(g.num_edges):
        x = int(g.edge_var[e]) + 1
        a = int(g.edge_clause[e])
        for col, z in ((0, -1), (1, 1)):
            for e2 in range(g.num_edges):
                b = int(g.edge_clause[e2])
                if b == a or int(g.edge_var[e2]) + 1 != x or int(g.edge_sign[e2]) != z:
                    continue
                clause = f.clauses[b]
                others = sum(1 for lit in clause if abs(lit) != x and T[abs(lit) - 1])
                if len(clause) in win and others <= 1:
                    le1[e, col] *= c2v_by_edge[e2]
                else:
                    gt1[e, col] *= c2v_by_edge[e2]
    return le1, gt1


@settings(max_examples=60, deadline=None)
@given(formulas(max_n=6, max_m=10, max_width=4), st.data())
def test_p_split_matches_brute_force(f, data):
    g = build(f)
    sched = schedule(4, 3.0, f.n)
    T = np.array(data.draw(st.lists(st.booleans(), min_size=f.n, max_size=f.n)))
    state = iterate(g, IterationPolicy(data.draw(st.integers(0, 3)), 0.0)).state
    le1, gt1 = p_split(g, state, T, sched, 0)
    ref_le1, ref_gt1 = brute_split(f, state.c2v, T, sched, 0)
    assert np.allclose(le1, ref_le1, atol=1e-12)
    assert np.allclose(gt1, ref_gt1, atol=1e-12)


def test_local_counts_exclude_own_variable():
    g = build(formula(3, (1, 2, 3), (1, 1, 2)))
    others, outside = LocalCounts(g, schedule(3, 1.0, 3), 0).counts(np.array([True, True, False]))
    assert others.tolist() == [1, 1, 2, 1, 1, 2]
    assert outside.tolist() == [1, 0]


# ------------------------------------------------------------ certificate sets


def test_level_zero_sets_are_empty():
    g = build(generate(RandomModel("uniform", 3, 40), 15, 3))
    hist = iterate(g, IterationPolicy(3, 0.0), keep_history=True).history
    cs = certificate_sets(g, hist, schedule(3, 40 / 15, 15), 0)
    lv = cs.levels[0]
    assert lv.T == lv.T_prime == lv.H == lv.T1 == frozenset()
    assert len(cs.levels) == 4


def test_clause_free_formula_has_no_bias():
    g = build(formula(5))
    hist = iterate(g, IterationPolicy(3, 0.0), keep_history=True).history
    cs = certificate_sets(g, hist, schedule(3, 1.0, 5), 0)
    assert all(lv.B == frozenset() and lv.B_in_T for lv in cs.levels)


def test_history_too_short():
    g = build(formula(2, (1, 2)))
    with pytest.raises(DomainError):
        certificate_sets(g, [init_messages(g)], schedule(2, 1.0, 2), 0, L=2)


@settings(max_examples=30, deadline=None)
@given(formulas(max_n=8, max_m=14, max_width=4, min_width=2), st.integers(1, 4))
def test_set_inclusions_hold(f, rounds):
    g = build(f)
    hist = iterate(g, IterationPolicy(rounds, 0.0), keep_history=True).history
    cs = certificate_sets(g, hist, schedule(4, 3.0, f.n), 0)
    for lv in cs.levels:
        assert lv.Tp_in_T and lv.Bw_in_B
        assert lv.T1 | lv.T2 == lv.T_prime


def test_constants_are_overridable():
    g = build(generate(RandomModel("uniform", 3, 40), 15, 3))
    hist = iterate(g, IterationPolicy(3, 0.0), keep_history=True).history
    sched = schedule(3, 40 / 15, 15)
    strict = certificate_sets(g, hist, sched, 0, constants=CertificateConstants(t2c_scale=0.0))
    # a zero scale puts every variable with an admissible clause into T2
    assert len(strict.levels[1].T2) > 0


def test_levels_csv(tmp_path):
    g = build(formula(3, (1, 2, 3)))
    hist = iterate(g, IterationPolicy(2, 0.0), keep_history=True).history
    cs = certificate_sets(g, hist, schedule(3, 1.0, 3), 0)
    path = tmp_path / "levels.csv"
    write_levels_csv(cs, path, {"seed": 4})
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:2] == ["level", "pi"] and lines[0].endswith("seed")
    assert len(lines) == 4


# ------------------------------------------------------------ linearization


def two_clause_graph():
    return build(formula(4, (1, 2, 3), (1, -2, 4)))


def test_linearization_sigma_hand_value():
    g = two_clause_graph()
    state = iterate(g, IterationPolicy(1, 0.0)).state
    sched = schedule(3, 1.0, 4)
    for pi_value in (0.0, 0.3):
        lin = linearization(g, state, sched, 0, None, 1, 0, 1, pi_value)
        assert lin.sigma == pytest.approx((2 / tau(pi_value)) ** -2)
        edge = g.edge_index(1, 0)
        assert lin.ln_P == pytest.approx(math.log(state.c2v[edge]))
        assert lin.residual == pytest.approx(abs(lin.L + lin.ln_P))


def test_linearization_uniform_is_pure_sigma():
    g = two_clause_graph()
    lin = linearization(g, init_messages(g), schedule(3, 1.0, 4), 0, None, 1, 0, 1, 0.0)
    assert lin.alpha == 0.0 and lin.beta == 0.0
    assert lin.L == lin.sigma == pytest.approx(0.25)


def test_linearization_skips_clauses_with_two_T_members():
    g = two_clause_graph()
    lin = linearization(g, init_messages(g), schedule(3, 1.0, 4), 0, {2, 4}, 1, 0, 1, 0.0)
    assert lin.sigma == 0.0 and lin.ln_P == 0.0


def test_linearization_degenerate_product():
    g = build(formula(2, (1, 2), (1, 2)))
    # x2 sits on its falsifying value in both clauses, so both clauses send 0 to x1
    v2c = [[0, 0, 1], [1, 0, 0], [0, 0, 1], [1, 0, 0]]
    s = state_from(v2c, g)
    zero_edges = [e for e in range(g.num_edges) if s.c2v[e] == 0.0 and g.edge_var[e] == 0]
    assert zero_edges
    b = int(g.edge_clause[zero_edges[0]])
    with pytest.raises(DegenerateProduct):
        linearization(g, s, schedule(2, 1.0, 2), 0, None, 1, 1 - b, 1, 0.0)
