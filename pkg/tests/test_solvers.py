import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from duonet.config import SolverConfig
from duonet.errors import BatchOverflow, ConfigError, NonFiniteIterate
from duonet.experiments import eps_sweep, run_trials, success_fraction
from duonet.graph import apply_sqrtW, build_graph
from duonet.oracles import QuadraticOracle, primal_argmax_blocks
from duonet.problems import default_centers, quadratic_consensus
from duonet.solver_det import predict_iterations_det, solve_deterministic
from duonet.solver_stoch import (batch_size, next_alpha, predict_iterations_stoch,
                                 solve_stochastic)

# c_N that gives >= 80% success on the path-3 Gaussian fixture (eps 0.05, delta 0.05);
# 4 gives 50/50, 2 gives 0/50
CALIBRATED_C_N = 4.0
CALIBRATED_C_R = 1.0


def test_default_centers():
    np.testing.assert_array_equal(default_centers(3, 1)[:, 0], [0, 3, 6])
    np.testing.assert_array_equal(default_centers(2, 3), [[0, 0, 0], [3, -3, 3]])


def test_fixture_closed_forms(p3_quadratic, p3_gaussian):
    P = p3_quadratic
    np.testing.assert_allclose(P.x_star, 3.0)
    assert P.F_star == 9.0 and P.M_F_sq == 18.0 and P.L_psi == pytest.approx(3.0)
    np.testing.assert_allclose(apply_sqrtW(P.sqrt_w, P.y_star), P.y_bar_star, atol=1e-12)
    assert p3_gaussian.R_y == pytest.approx(6.0)


# deterministic method

def test_single_node_one_step():
    g = build_graph("complete", 1)
    o = [QuadraticOracle([2.0, -1.0])]
    res = solve_deterministic(g, o, 1, L_psi=1.0)
    np.testing.assert_allclose(res.x_N, [[2.0, -1.0]], atol=1e-10)
    assert abs(res.trace[-1].gap) <= 1e-10
    with pytest.raises(ValueError):
        solve_deterministic(g, o, 1)


def test_det_consensus_and_counts(p3_quadratic):
    P = p3_quadratic
    res = solve_deterministic(P.graph, P.oracles, 400)
    assert res.state.comm_rounds == 400 and res.trace[-1].cum_comm_rounds == 400
    # the N=200 consensus target is first met around N=320, where R_y / A_N < 1e-3
    assert np.abs(res.x_N - 3.0).max() <= 1e-3
    assert res.trace[-1].consensus_residual <= 1e-3
    assert res.trace[199].consensus_residual == pytest.approx(P.R_y / res.trace[199].A_k,
                                                               rel=0.05)
    assert [r.k for r in res.trace] == list(range(1, 401))


def test_det_ergodic_residual_identity(p3_quadratic):
    # W x^N = -zeta_bar^N / A_N, so the residual decays like 1/A_N
    P = p3_quadratic
    for N in (50, 200, 400):
        res = solve_deterministic(P.graph, P.oracles, N)
        lhs = P.graph.laplacian @ res.x_N
        np.testing.assert_allclose(lhs, -res.state.zeta_bar / res.state.A_k, atol=1e-12)


def test_det_gap_halving(p3_quadratic):
    P = p3_quadratic
    g200 = solve_deterministic(P.graph, P.oracles, 200).trace[-1].gap
    g400 = solve_deterministic(P.graph, P.oracles, 400).trace[-1].gap
    assert abs(g400) <= abs(g200) / 3


def test_det_weak_duality_along_trace(p3_gaussian):
    # gap >= F(x) - F* >= -R_y ||sqrt(W) x||
    P = p3_gaussian
    res = solve_deterministic(P.graph, P.oracles, 300)
    for r in res.trace:
        assert r.gap >= -P.R_y * r.consensus_residual - 1e-10


def test_det_residual_decreases_after_burn_in(p3_quadratic):
    P = p3_quadratic
    res = solve_deterministic(P.graph, P.oracles, 300)
    tail = np.array([r.consensus_residual for r in res.trace[20:]])
    assert np.all(np.diff(tail) <= 1e-15)


def test_det_state_structure(p3_gaussian):
    P = p3_gaussian
    states = []
    L = P.L_psi
    solve_deterministic(P.graph, P.oracles, 30, callback=states.append)
    zetas = [np.zeros((3, 2))] + [s.zeta_bar for s in states]
    A = 0.0
    for k, s in enumerate(states):
        assert s.alpha_k == (k + 2) / (4 * L)
        assert s.A_k == A + s.alpha_k
        # lam_bar^{k+1} combines zeta_bar^k and y_bar^k; y_bar^k is the
        # alpha-weighted average of the zeta_bar history
        y_prev = states[k - 1].y_bar if k else np.zeros((3, 2))
        np.testing.assert_allclose(s.lam_bar, (s.alpha_k * zetas[k] + A * y_prev) / s.A_k,
                                   atol=1e-12)
        avg = sum(t.alpha_k * zetas[j + 1] for j, t in enumerate(states[:k + 1])) / s.A_k
        np.testing.assert_allclose(s.y_bar, avg, atol=1e-10)
        A = s.A_k


def test_det_bad_L_raises(p3_quadratic):
    P = p3_quadratic
    with pytest.raises(NonFiniteIterate):
        solve_deterministic(P.graph, P.oracles, 2000, L_psi=1e-3)


def test_predict_iterations():
    assert predict_iterations_det(10.0, 1.0, 1.0, 1.0) == 10
    assert predict_iterations_det(math.sqrt(50), 2.0, 4.0, 1.0) == 10
    assert predict_iterations_det(1.0, 1.0, 1.0, 1e-2) == 10
    # halving eps scales 30 sqrt(200) = 424.26 by sqrt(2), to exactly 600
    assert predict_iterations_det(30.0, 1.0, 2.0, 1e-2) == 425
    assert predict_iterations_det(30.0, 1.0, 2.0, 5e-3) == 600
    assert predict_iterations_stoch(900.0, 1.0, 2.0, 1e-2, 3.0) == \
        predict_iterations_det(30.0, 1.0, 2.0, 1e-2, 3.0)
    assert predict_iterations_stoch(100.0, 1.0, 4.0, 1.0) == 2 * predict_iterations_stoch(
        100.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        predict_iterations_det(0.0, 1.0, 1.0, 1.0)


def test_predicted_det_horizon_reaches_eps(p3_quadratic):
    P = p3_quadratic
    eps = 1e-2
    N = predict_iterations_det(math.sqrt(P.M_F_sq), 1.0, P.graph.chi, eps, 4.0)
    last = solve_deterministic(P.graph, P.oracles, N).trace[-1]
    assert last.gap <= eps
    assert last.consensus_residual <= eps / P.R_y * 10


# stochastic method

def test_next_alpha_examples():
    assert next_alpha(0.0, 3.0) == pytest.approx(1 / 6)
    assert next_alpha(0.0, 0.5) == 1.0


@given(st.floats(1e-3, 1e3))
def test_alpha_recurrence_property(L):
    A = 0.0
    for k in range(300):
        a = next_alpha(A, L)
        assert abs(2 * L * a * a - a - A) <= 1e-12 * max(1.0, 2 * L * a * a)
        assert a <= (k + 2) / (2 * L) * (1 + 1e-12)
        A += a
    assert A >= 300 ** 2 / (8 * L)


def test_batch_size_examples():
    assert batch_size(123.0, 0.0, 10, 0.1, 1e-9) == 1
    # sigma^2 alpha ln(N/delta) / eps = 7.2
    N, delta = 100, 0.05
    alpha = 7.2 * 0.5 / (2.0 * math.log(N / delta))
    assert batch_size(alpha, 2.0, N, delta, 0.5) == 8
    assert batch_size(1e-9, 1.0, 100, 0.05, 1.0) == 1
    assert batch_size(1e-9, 1.0, 100, 0.05, 1.0, c_r=2.5) == 3


def test_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(eps=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(eps=0.1, delta=0.25)
    with pytest.raises(ConfigError):
        SolverConfig(eps=0.1, sigma_x_sq=-1)
    with pytest.raises(ConfigError):
        SolverConfig(eps=0.1, c_r=0)
    assert SolverConfig(eps=0.1).replace(seed=4).seed == 4


def test_zero_noise_matches_deterministic_reference(p3):
    oracles = [QuadraticOracle(b, sigma_x_sq=0.0) for b in default_centers(3, 2)]
    s = p3.sqrt_laplacian()
    states = []
    cfg = SolverConfig(eps=0.1, N_override=50)
    solve_stochastic(p3, oracles, cfg, callback=states.append)
    L = p3.lambda_max
    z = y = np.zeros((3, 2))
    A = 0.0
    for st_ in states:
        a = (1.0 + math.sqrt(1.0 + 8.0 * L * A)) / (4.0 * L)
        lam = (a * z + A * y) / (A + a)
        z = z - a * apply_sqrtW(s, primal_argmax_blocks(oracles, apply_sqrtW(s, lam)))
        y = (a * z + A * y) / (A + a)
        A = A + a
        assert st_.r_k == 1
        assert st_.lam.tobytes() == lam.tobytes()
        assert st_.zeta.tobytes() == z.tobytes()
        assert st_.y.tobytes() == y.tobytes()


def test_stoch_state_invariants(p3_gaussian):
    P = p3_gaussian
    states = []
    cfg = SolverConfig(eps=0.1, N_override=60, seed=2)
    res = solve_stochastic(P.graph, P.oracles, cfg, callback=states.append)
    L = res.L_psi
    A = 0.0
    prev_zeta = prev_y = np.zeros((3, 2))
    for s in states:
        assert abs(2 * L * s.alpha_k ** 2 - s.alpha_k - A) <= 1e-12 * s.A_k
        assert s.A_k == A + s.alpha_k
        tau = s.alpha_k / s.A_k
        assert 0 < tau <= 1
        np.testing.assert_allclose(s.lam, prev_y + tau * (prev_zeta - prev_y), atol=1e-10)
        np.testing.assert_allclose(s.y, prev_y + tau * (s.zeta - prev_y), atol=1e-10)
        A, prev_zeta, prev_y = s.A_k, s.zeta, s.y
    assert A == pytest.approx(sum(s.alpha_k for s in states), rel=1e-9)
    assert res.total_oracle_calls == sum(s.r_k for s in states) * 3
    assert res.comm_rounds == 60


def test_stoch_errors_and_warning(p3_gaussian):
    P = p3_gaussian
    with pytest.raises(BatchOverflow):
        solve_stochastic(P.graph, P.oracles, SolverConfig(eps=1e-6, N_override=10, batch_cap=10))
    with pytest.raises(ConfigError):
        solve_stochastic(P.graph, P.oracles, SolverConfig(eps=0.1))
    with pytest.warns(RuntimeWarning, match="ln"):
        solve_stochastic(P.graph, P.oracles, SolverConfig(eps=0.1, delta=0.2, N_override=2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_stochastic(P.graph, P.oracles, SolverConfig(eps=0.1, N_override=5))


def test_trace_gap_uses_duality_without_F_star(p3_gaussian):
    P = p3_gaussian
    cfg = SolverConfig(eps=0.1, N_override=40)
    with_f = solve_stochastic(P.graph, P.oracles, cfg, F_star=P.F_star).trace[-1]
    without = solve_stochastic(P.graph, P.oracles, cfg).trace[-1]
    assert without.gap >= with_f.gap - P.R_y * with_f.consensus_residual


@pytest.mark.slow
def test_bounded_iterates(p3_gaussian):
    P = p3_gaussian
    cfg = SolverConfig(eps=0.05, c_N=CALIBRATED_C_N, c_r=CALIBRATED_C_R, M_F_sq=P.M_F_sq)
    out = run_trials(P.graph, P.oracles, cfg, P.F_star, P.R_y, y_star=P.y_star, trials=50)
    assert np.mean([t.max_radius_ratio <= 10 for t in out]) >= 0.95


def test_trials_sorted_and_parallel_equal(p3_gaussian):
    P = p3_gaussian
    cfg = SolverConfig(eps=0.1, N_override=20, seed=100)
    serial = run_trials(P.graph, P.oracles, cfg, P.F_star, P.R_y, trials=4)
    parallel = run_trials(P.graph, P.oracles, cfg, P.F_star, P.R_y, trials=4, workers=2)
    assert serial == parallel
    assert [t.seed for t in serial] == [100, 101, 102, 103]
    assert 0.0 <= success_fraction(serial) <= 1.0


def test_eps_sweep_rows(p3_gaussian):
    P = p3_gaussian
    rows = eps_sweep(P.graph, P.oracles, SolverConfig(eps=1.0, M_F_sq=P.M_F_sq), [1.0, 0.5],
                     F_star=P.F_star)
    assert rows[0][2] < rows[1][2] and rows[0][1] < rows[1][1]


def test_backends_give_identical_traces(p3_gaussian):
    from duonet import kernels
    from duonet.diagnostics import trace_to_ndjson
    if "compiled" not in kernels.available_backends():
        pytest.skip("extension not built")
    P = p3_gaussian
    cfg = SolverConfig(eps=0.1, N_override=30, seed=3)
    out = {}
    for name in ("compiled", "python"):
        prev = kernels.use_backend(name)
        try:
            out[name] = trace_to_ndjson(solve_stochastic(P.graph, P.oracles, cfg).trace)
        finally:
            kernels.use_backend(prev)
    assert out["compiled"] == out["python"]
