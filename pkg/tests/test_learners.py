import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matolo.adversaries import ADVERSARIES, make_adversary
from matolo.learners import (
    KINDS,
    LearnerConfig,
    advance,
    default_eta,
    faml_direction,
    ftl_direction,
    ftpl_direction,
    ftrl_direction,
    gbpa_decomposition_check,
    gbpa_terms,
    init_state,
    preconditioner,
    regret_of_run,
    run,
    shampoo_step,
    trace_potential_check,
    trace_potential_sides,
)


def phi(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def svd_polar(A):
    U, _, Vt = np.linalg.svd(A, full_matrices=False)
    return U @ Vt


def nuc(A):
    return float(np.linalg.svd(A, compute_uv=False).sum())


def eig_power(A, p):
    w, V = np.linalg.eigh(A)
    return (V * np.clip(w, 0, None) ** p) @ V.T


def unit_gaussian_stream(rng, T, m, n):
    g = rng.standard_normal((T, m, n))
    return g / np.linalg.norm(g, 2, axis=(1, 2))[:, None, None]


# preconditioner ------------------------------------------------------------


def test_preconditioner_examples():
    cfg = LearnerConfig("faml")
    np.testing.assert_allclose(preconditioner(init_state(3, 4, cfg), 1.0), np.eye(3), atol=1e-15)
    st1 = init_state(1, 1, cfg)
    st1.M = np.array([[3.0]])
    assert preconditioner(st1, 1.0)[0, 0] == pytest.approx(2.0)


def test_preconditioner_squares_back_under_discount():
    rng = np.random.default_rng(0)
    st1 = init_state(4, 5, LearnerConfig("faml"))
    C = rng.standard_normal((4, 4))
    st1.M = C @ C.T
    L = preconditioner(st1, 1.0, discount=0.9)
    np.testing.assert_allclose(L @ L, np.eye(4) / 0.81 + st1.M, atol=1e-9)


# advance -------------------------------------------------------------------


@pytest.mark.parametrize("kind", KINDS)
def test_first_action_is_zero(kind):
    cfg = LearnerConfig(kind, mc_samples=16)
    state = init_state(2, 4, cfg)
    np.testing.assert_array_equal(state.action, 0.0)
    _, state = advance(cfg, state, np.random.default_rng(1).standard_normal((2, 4)) / 4)
    assert state.record.inst_loss == 0.0


def test_ftl_second_action_is_negative_polar():
    G1 = np.random.default_rng(2).standard_normal((3, 4)) / 4
    X2, _ = advance(LearnerConfig("ftl", D=2.0), init_state(3, 4, LearnerConfig("ftl")), G1)
    np.testing.assert_allclose(X2, -2.0 * svd_polar(G1), atol=1e-12)


def test_faml_scalar_step():
    cfg = LearnerConfig("faml")
    X2, _ = advance(cfg, init_state(1, 1, cfg), np.array([[1.0]]))
    assert X2[0, 0] == pytest.approx(-1.0 / math.sqrt(3.0), abs=1e-12)


def test_advance_recurrences_and_shape_check():
    rng = np.random.default_rng(3)
    cfg = LearnerConfig("faml", discount=0.8)
    state = init_state(2, 3, cfg)
    gs = rng.standard_normal((4, 2, 3)) / 6
    for g in gs:
        _, state = advance(cfg, state, g)
    S = sum(0.8 ** (3 - i) * gs[i] for i in range(4))
    M = sum(0.64 ** (3 - i) * gs[i] @ gs[i].T for i in range(4))
    np.testing.assert_allclose(state.S, S, atol=1e-14)
    np.testing.assert_allclose(state.M, M, atol=1e-14)
    assert state.record.bound == math.inf
    with pytest.raises(ValueError):
        advance(cfg, state, np.ones((3, 2)))


def test_regret_record_identity():
    rng = np.random.default_rng(4)
    _, records, _ = run(LearnerConfig("faml"), unit_gaussian_stream(rng, 20, 2, 3))
    for r in records:
        assert r.regret == pytest.approx(r.cum_loss - r.comparator_value, abs=1e-12)


def test_gradient_bound_violation_warns_and_continues():
    cfg = LearnerConfig("faml", G=0.5)
    state = init_state(1, 2, cfg)
    with pytest.warns(RuntimeWarning, match="exceeds G"):
        _, state = advance(cfg, state, np.array([[1.0, 0.0]]))
    assert not state.bound_valid
    assert state.record.bound == math.inf
    auto = LearnerConfig("faml", G=0.5, auto_G=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, s2 = advance(auto, init_state(1, 2, auto), np.array([[2.0, 0.0]]))
    assert s2.G_eff == pytest.approx(2.0)


def test_config_validation():
    with pytest.raises(ValueError):
        LearnerConfig("adagrad")
    with pytest.raises(ValueError):
        LearnerConfig("faml", D=0.0)
    with pytest.raises(ValueError):
        LearnerConfig("faml", discount=1.5)
    with pytest.raises(ValueError):
        LearnerConfig("faml", faml_method="qr")


def test_default_eta():
    assert default_eta("faml", 2, 5) == 1.0
    assert default_eta("ftrl", 2, 5) == pytest.approx(1 / math.sqrt(2))
    assert default_eta("ftpl", 2, 6) == pytest.approx(math.sqrt((math.sqrt(2) + math.sqrt(6)) * math.sqrt(3)))
    assert default_eta("shampoo", 2, 6, D=3.0) == pytest.approx(3.0 * math.sqrt(2))
    with pytest.warns(RuntimeWarning, match="n >= m \\+ 2"):
        default_eta("ftpl", 2, 3)


# FAML ----------------------------------------------------------------------


def test_faml_direction_zero_and_paths():
    assert not np.any(faml_direction(np.zeros((2, 3)), np.eye(2), 1.0, 1.0)[0])
    rng = np.random.default_rng(5)
    for _ in range(10):
        S = rng.standard_normal((3, 5)) * 3
        C = rng.standard_normal((3, 3))
        M = C @ C.T
        eig, _ = faml_direction(S, M, 1.5, 0.7, eta=1.3, discount=0.9, method="eigh")
        aug, _ = faml_direction(S, M, 1.5, 0.7, eta=1.3, discount=0.9, method="augmented_ns")
        cns, _ = faml_direction(S, M, 1.5, 0.7, eta=1.3, discount=0.9, method="coupled_ns")
        np.testing.assert_allclose(aug, eig, atol=1e-7)
        np.testing.assert_allclose(cns, eig, atol=1e-7)
        ref = -1.3 * 1.5 * eig_power(1.69 * S @ S.T + 0.49 / 0.81 * np.eye(3) + M, -0.5) @ S
        np.testing.assert_allclose(eig, ref, atol=1e-10)


# FTPL ----------------------------------------------------------------------


def test_ftpl_zero_cumulative_gradient_averages_out():
    k = 100_000
    X = ftpl_direction(np.zeros((1, 1)), np.zeros((1, 1)), 1.0, 1.0, 1.0, k=k, seed=0)
    assert abs(X[0, 0]) <= 3.0 / math.sqrt(k)


@pytest.mark.parametrize("s,l", [(0.7, 1.3), (-0.4, 0.6), (2.0, 1.0)])
def test_ftpl_scalar_cdf_oracle(s, l):
    k = 100_000
    # L = chol(G^2 + M) = l with G = 0.5
    M = np.array([[l * l - 0.25]])
    X = ftpl_direction(np.array([[s]]), M, 1.0, 0.5, 1.0, k=k, seed=3)
    assert X[0, 0] == pytest.approx(-(2 * phi(s / l) - 1), abs=4.0 / math.sqrt(k))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), k=st.integers(1, 40), D=st.floats(0.1, 10.0))
def test_ftpl_feasible_for_any_k(seed, k, D):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((2, 5))
    C = rng.standard_normal((2, 2))
    X = ftpl_direction(S, C @ C.T, D, 1.0, 1.7, k=k, seed=seed)
    assert np.linalg.norm(X, 2) <= D * (1 + 1e-12)


def test_ftpl_deterministic_in_seed():
    S = np.random.default_rng(6).standard_normal((2, 6))
    a = ftpl_direction(S, np.eye(2), 1.0, 1.0, 2.0, k=64, seed=(9, 1))
    b = ftpl_direction(S, np.eye(2), 1.0, 1.0, 2.0, k=64, seed=(9, 1))
    np.testing.assert_array_equal(a, b)


# FTRL ----------------------------------------------------------------------


def test_ftrl_examples():
    S = np.random.default_rng(7).standard_normal((2, 3))
    X, _ = ftrl_direction(S, np.zeros((2, 2)), 2.0, 1.0)
    np.testing.assert_allclose(X, -2.0 * svd_polar(S), atol=1e-12)
    X, _ = ftrl_direction(np.array([[1.0]]), np.array([[2.0]]), 1.0, 1.0)
    assert X[0, 0] == pytest.approx(-0.5, abs=1e-9)


def test_ftrl_grid_search_oracle():
    # 1 x 2: the unit ball is a disc; minimise over a polar grid
    s = np.array([0.8, -0.3])
    l, eta = 1.4, 0.9
    r = np.linspace(0.0, 1.0, 1001)[:, None]
    th = np.linspace(0.0, 2 * np.pi, 2001)[None, :]
    x1, x2 = r * np.cos(th), r * np.sin(th)
    obj = s[0] * x1 + s[1] * x2 + (l / (2 * eta)) * (x1**2 + x2**2)
    i = np.unravel_index(np.argmin(obj), obj.shape)
    grid = np.array([x1[i], x2[i]])
    X, _ = ftrl_direction(s[None, :], np.array([[l]]), 1.0, eta)
    np.testing.assert_allclose(X[0], grid, atol=1e-3)


# Shampoo -------------------------------------------------------------------


def test_shampoo_inactive_projection_matches_closed_form():
    rng = np.random.default_rng(8)
    m, n = 3, 4
    A = rng.standard_normal((m, m))
    B = rng.standard_normal((n, n))
    M = A @ A.T + np.eye(m)
    N = B @ B.T + np.eye(n)
    X_t = 0.1 * rng.standard_normal((m, n))
    G = 0.05 * rng.standard_normal((m, n))
    eta = 0.3
    X, _ = shampoo_step("full", X_t, G, M, N, D=1.0, eta=eta)
    L, R = eig_power(M, 0.25), eig_power(N, 0.25)
    ref = X_t - eta * np.linalg.solve(L, G) @ np.linalg.inv(R)
    assert np.linalg.norm(ref, 2) < 1.0
    np.testing.assert_allclose(X, ref, atol=1e-9)
    X1, _ = shampoo_step("one_sided", X_t, G, M, N, D=1.0, eta=eta)
    np.testing.assert_allclose(X1, X_t - eta * np.linalg.solve(eig_power(M, 0.5), G), atol=1e-9)


def test_shampoo_clips_to_radius():
    X, _ = shampoo_step("one_sided", np.array([[0.9]]), np.array([[-50.0]]), np.array([[1.0]]), None, 1.0, 1.0)
    assert X[0, 0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        shampoo_step("half", np.zeros((1, 1)), np.ones((1, 1)), np.eye(1), np.eye(1), 1.0, 1.0)


@pytest.mark.parametrize("kind", ["one_sided_shampoo", "shampoo"])
def test_shampoo_regret_within_bound(kind):
    grads = make_adversary("gaussian", 3, 5, 80, seed=2)
    _, records, _ = run(LearnerConfig(kind), grads)
    assert records[-1].regret <= records[-1].bound
    assert min(r.feas_margin for r in records) >= 0


# regret accounting ---------------------------------------------------------


def test_regret_of_run_trivial_cases():
    _, recs, _ = run(LearnerConfig("faml"), np.zeros((5, 2, 3)))
    assert regret_of_run(recs, 1.0) == 0.0
    G1 = np.random.default_rng(9).standard_normal((2, 3)) / 3
    _, recs, _ = run(LearnerConfig("ftl", D=1.5), G1[None])
    assert regret_of_run(recs, 1.5) == pytest.approx(1.5 * nuc(G1))
    with pytest.raises(ValueError):
        regret_of_run([], 1.0)


def test_faml_regret_bound_random_run():
    rng = np.random.default_rng(10)
    grads = unit_gaussian_stream(rng, 50, 3, 6)
    _, recs, state = run(LearnerConfig("faml"), grads)
    tr = np.trace(eig_power(state.M, 0.5))
    assert regret_of_run(recs, 1.0) <= 2 * (tr + 3)


def test_ftl_linear_regret_faml_sublinear():
    grads = make_adversary("signflip", 1, 1, 400)
    _, ftl, _ = run(LearnerConfig("ftl"), grads)
    _, faml, _ = run(LearnerConfig("faml"), grads)
    assert regret_of_run(ftl, 1.0) >= 0.4 * 400
    assert regret_of_run(faml, 1.0) <= 2 * (math.sqrt(400) + 1)


def test_transposed_problem_same_regret():
    rng = np.random.default_rng(11)
    grads = unit_gaussian_stream(rng, 15, 5, 2)
    for kind in ("faml", "ftl", "ftrl"):
        acts, recs, state = run(LearnerConfig(kind), grads)
        assert state.transposed
        assert acts.shape == grads.shape
        _, recs_t, _ = run(LearnerConfig(kind), np.swapaxes(grads, 1, 2))
        assert regret_of_run(recs, 1.0) == pytest.approx(regret_of_run(recs_t, 1.0), abs=1e-9)


@pytest.mark.parametrize("kind", ["ftl", "ftpl", "faml"])
def test_scale_invariance_of_actions(kind):
    rng = np.random.default_rng(12)
    grads = unit_gaussian_stream(rng, 12, 2, 5)
    c = 7.5
    a, _, _ = run(LearnerConfig(kind, G=1.0, mc_samples=32), grads)
    b, _, _ = run(LearnerConfig(kind, G=c, mc_samples=32), c * grads)
    np.testing.assert_allclose(a, b, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    kind=st.sampled_from(KINDS),
    adversary=st.sampled_from(sorted(ADVERSARIES)),
    m=st.integers(1, 3),
    n=st.integers(1, 4),
    seed=st.integers(0, 1000),
    D=st.floats(0.2, 5.0),
)
def test_feasibility_every_round(kind, adversary, m, n, seed, D):
    grads = make_adversary(adversary, m, n, 12, G=1.0, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        acts, recs, _ = run(LearnerConfig(kind, D=D, mc_samples=16, seed=seed), grads)
    assert np.linalg.norm(acts, 2, axis=(1, 2)).max() <= D * (1 + 1e-8)
    assert min(r.feas_margin for r in recs) >= 0


# decomposition identity ----------------------------------------------------


def test_gbpa_single_round():
    G1 = np.random.default_rng(13).standard_normal((2, 3))[None] / 6
    assert gbpa_decomposition_check(G1, LearnerConfig("faml")) <= 1e-10


def test_gbpa_faml_and_ftrl_runs():
    rng = np.random.default_rng(14)
    grads = unit_gaussian_stream(rng, 20, 3, 5)
    terms = gbpa_terms(grads, LearnerConfig("faml"))
    assert abs(terms["regret"] - terms["rhs"]) <= 1e-6 * (1 + abs(terms["regret"]))
    assert terms["bregman"] >= 0 and terms["underestimation"] <= 0
    assert gbpa_decomposition_check(grads[:10], LearnerConfig("ftrl")) <= 1e-5


def test_gbpa_rejects_unsupported():
    with pytest.raises(ValueError):
        gbpa_decomposition_check(np.ones((2, 1, 1)), LearnerConfig("ftl"))
    with pytest.raises(ValueError):
        gbpa_decomposition_check(np.ones((2, 1, 1)), LearnerConfig("faml", discount=0.9))


# trace potential -----------------------------------------------------------


def test_trace_potential_single_step():
    G1 = np.random.default_rng(15).standard_normal((2, 4))
    lhs, rhs = trace_potential_sides(G1[None])
    assert lhs == pytest.approx(nuc(G1), rel=1e-10)
    assert rhs == pytest.approx(2 * nuc(G1), rel=1e-10)


def test_trace_potential_random_and_rank_one():
    rng = np.random.default_rng(16)
    assert trace_potential_check(rng.standard_normal((100, 4, 7)))
    u, v = rng.standard_normal(3), rng.standard_normal(5)
    assert trace_potential_check(np.repeat(np.outer(u, v)[None], 30, axis=0))


# adversaries ---------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(ADVERSARIES))
def test_adversaries_respect_bound_and_seed(name):
    a = make_adversary(name, 3, 4, 60, G=2.0, seed=5)
    assert a.shape == (60, 3, 4)
    assert np.linalg.norm(a, 2, axis=(1, 2)).max() <= 2.0 * (1 + 1e-12)
    np.testing.assert_array_equal(a, make_adversary(name, 3, 4, 60, G=2.0, seed=5))


def test_adversary_validation():
    with pytest.raises(ValueError):
        make_adversary("chaos", 1, 1, 1)
    with pytest.raises(ValueError):
        make_adversary("gaussian", 0, 1, 1)


def test_ftl_direction_rank_deficient_and_zero():
    assert not np.any(ftl_direction(np.zeros((2, 3)), 1.0))
    S = np.outer([1.0, 2.0], [0.0, 1.0, 1.0])
    X = ftl_direction(S, 1.0)
    assert np.sum(S * X) == pytest.approx(-nuc(S))
    assert np.linalg.norm(X, 2) <= 1 + 1e-12
    np.testing.assert_allclose(ftl_direction(S + np.eye(2, 3), 1.0, polar="ns"),
                               -svd_polar(S + np.eye(2, 3)), atol=1e-10)
