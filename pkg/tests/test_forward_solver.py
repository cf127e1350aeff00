import numpy as np
import pytest
from numpy.testing import assert_allclose

from lqgid import (
    GameSpec,
    NashPolicy,
    check_existence,
    closed_loop,
    expected_cost,
    rollout,
    solve_nash,
)
from lqgid.forward_solver import COND_LIMIT, ExistenceError
from tests.conftest import draw_solvable_game


def test_scalar_game_frozen_values(scalar_game):
    policy, value, report = solve_nash(scalar_game)
    # Phi = R + B'QB = 2; K = Phi^-1 B'QA = 0.5
    assert_allclose(report.phi[0], [[2.0]])
    assert_allclose(policy.gains[0][0], [[0.5]])
    assert_allclose(policy.offsets[0][0], [0.0])
    # x0 = 1 deterministic: u = -0.5, x1 = 0.5, J = 0.25 + 0.25
    assert_allclose(expected_cost(scalar_game, policy), [0.5])


def test_two_player_scalar_frozen_values(two_player_scalar_game):
    policy, value, report = solve_nash(two_player_scalar_game)
    assert_allclose(report.phi[0], [[2.0, 1.0], [1.0, 2.0]])
    assert_allclose(policy.gains[0][0], [[1.0 / 3.0]])
    assert_allclose(policy.gains[1][0], [[1.0 / 3.0]])
    assert_allclose(value.closed_loop[0], [[1.0 / 3.0]])


def test_terminal_conditions(family50):
    # P_T and zeta_T are exactly the last stage cost, no recursion applied
    for game, policy, value, report in family50[:10]:
        T = game.horizon
        for i in range(game.num_players):
            assert_allclose(value.value_quadratic[i][T], game.cost_Q[i][T - 1])
            assert_allclose(value.value_linear[i][T], game.cost_l[i][T - 1])


def test_value_matrices_symmetric(family50):
    for game, policy, value, report in family50[:10]:
        for i in range(game.num_players):
            for t in range(game.horizon + 1):
                P = value.value_quadratic[i][t]
                assert_allclose(P, P.T, atol=1e-10)


def test_stationarity_residuals_small(family50):
    # substituting the returned policy back into the coupled gain equations
    for game, policy, value, report in family50[:10]:
        N, n_u = game.num_players, game.n_u
        for t in range(game.horizon):
            stacked_K = np.vstack([policy.gains[i][t] for i in range(N)])
            stacked_a = np.concatenate([policy.offsets[i][t] for i in range(N)])
            rhs_K = np.vstack(
                [
                    game.dynamics_B[i][t].T
                    @ value.value_quadratic[i][t + 1]
                    @ game.dynamics_A[t]
                    for i in range(N)
                ]
            )
            rhs_a = np.concatenate(
                [
                    game.dynamics_B[i][t].T @ value.value_linear[i][t + 1]
                    for i in range(N)
                ]
            )
            phi = report.phi[t]
            assert np.abs(phi @ stacked_K - rhs_K).max() < 1e-9
            assert np.abs(phi @ stacked_a - rhs_a).max() < 1e-9


def test_check_existence_matches_solve_report(family50):
    game, policy, value, report = family50[0]
    again = check_existence(game, value)
    assert again.exists_unique == report.exists_unique
    for t in range(game.horizon):
        assert_allclose(again.phi[t], report.phi[t])
        assert again.invertible[t] == report.invertible[t]


def test_closed_loop_matches_value(family50):
    game, policy, value, report = family50[1]
    cl = closed_loop(game, policy)
    for t, (F, inv, cond) in enumerate(cl):
        assert_allclose(F, value.closed_loop[t])
        assert inv == value.cl_invertible[t]


def test_existence_error_names_timestep():
    # two players sharing one input channel with negligible control costs:
    # Phi ~ [[P, P], [P, P]] singular
    eps = 1e-14
    game = GameSpec(
        num_players=2,
        horizon=1,
        state_dims=(1, 0),
        input_dim=1,
        dynamics_A=[np.eye(1)],
        dynamics_B=[[np.eye(1)], [np.eye(1)]],
        cost_Q=[[np.eye(1)], [np.eye(1)]],
        cost_l=[[np.zeros(1)], [np.zeros(1)]],
        cost_R=[[eps * np.eye(1)], [eps * np.eye(1)]],
        init_mean=np.zeros(1),
        init_cov=np.zeros((1, 1)),
        process_cov=[np.zeros((1, 1))],
    )
    with pytest.raises(ExistenceError, match="t=0") as exc:
        solve_nash(game)
    assert exc.value.condition > COND_LIMIT


def test_nash_deviation_sample(family50):
    # no player gains from a unilateral perturbation of its own policy
    rng = np.random.default_rng(99)
    for game, policy, value, report in family50[:8]:
        base = expected_cost(game, policy)
        for i in range(game.num_players):
            for scale in (1e-3, 1e-1):
                gains = [list(per) for per in policy.gains]
                offsets = [list(per) for per in policy.offsets]
                for t in range(game.horizon):
                    gains[i][t] = gains[i][t] + scale * rng.standard_normal(
                        gains[i][t].shape
                    )
                    offsets[i][t] = offsets[i][t] + scale * rng.standard_normal(
                        offsets[i][t].shape
                    )
                perturbed = NashPolicy(
                    gains=tuple(tuple(per) for per in gains),
                    offsets=tuple(tuple(per) for per in offsets),
                )
                deviated = expected_cost(game, perturbed)
                assert deviated[i] - base[i] >= -1e-9


def test_expected_cost_matches_monte_carlo():
    rng = np.random.default_rng(5)
    game, policy, value, report = draw_solvable_game(
        rng, num_players=2, state_dim=2, horizon=3
    )
    exact = expected_cost(game, policy)
    batch = rollout(game, policy, 40000, base_seed=11)
    mc = np.zeros(game.num_players)
    for t in range(game.horizon):
        X1 = batch.states[t + 1]
        for i in range(game.num_players):
            U = batch.inputs[i][t]
            Q, l, R = game.cost_Q[i][t], game.cost_l[i][t], game.cost_R[i][t]
            mc[i] += np.einsum("js,jk,ks->", X1, Q, X1) / batch.num_samples
            mc[i] += 2.0 * (l @ X1.mean(axis=1))
            mc[i] += np.einsum("js,jk,ks->", U, R, U) / batch.num_samples
    assert_allclose(mc, exact, rtol=0.05, atol=0.02)


def test_cost_scale_invariance(family50):
    # jointly scaling one player's (Q, l, R) leaves every policy unchanged
    from lqgid import with_costs

    game, policy, value, report = family50[2]
    c = 3.7
    Q = [list(per) for per in game.cost_Q]
    l = [list(per) for per in game.cost_l]
    R = [list(per) for per in game.cost_R]
    Q[0] = [c * q for q in Q[0]]
    l[0] = [c * v for v in l[0]]
    R[0] = [c * r for r in R[0]]
    scaled_policy, _, _ = solve_nash(with_costs(game, Q, l, R))
    for i in range(game.num_players):
        for t in range(game.horizon):
            assert_allclose(scaled_policy.gains[i][t], policy.gains[i][t], atol=1e-9)
            assert_allclose(
                scaled_policy.offsets[i][t], policy.offsets[i][t], atol=1e-9
            )


def test_symmetric_players_get_identical_policies(two_player_scalar_game):
    policy, _, _ = solve_nash(two_player_scalar_game)
    assert_allclose(policy.gains[0][0], policy.gains[1][0])
    assert_allclose(policy.offsets[0][0], policy.offsets[1][0])


def test_expected_cost_rejects_incompatible_policy(scalar_game):
    bad = NashPolicy(gains=((np.zeros((1, 2)),),), offsets=((np.zeros(1),),))
    with pytest.raises(ValueError, match="incompatible"):
        expected_cost(scalar_game, bad)
