import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lqgid import (
    GameSpec,
    TrajectoryBatch,
    empirical_gram,
    estimate_policy,
    policy_gap,
    rollout,
    sample_complexity,
    solve_nash,
)
from lqgid.policy_estimator import EstimationError
from tests.conftest import draw_solvable_game


def scalar_dims_game(horizon=1):
    return GameSpec(
        num_players=1,
        horizon=horizon,
        state_dims=(1,),
        input_dim=1,
        dynamics_A=[np.eye(1)] * horizon,
        dynamics_B=[[np.eye(1)] * horizon],
        cost_Q=[[np.eye(1)] * horizon],
        cost_l=[[np.zeros(1)] * horizon],
        cost_R=[[np.eye(1)] * horizon],
        init_mean=np.zeros(1),
        init_cov=np.eye(1),
        process_cov=[np.eye(1)] * horizon,
    )


def test_two_point_exact_recovery():
    # states {0, 1} and inputs {-alpha, -K-alpha} pin down (K, alpha) = (0.5, 0.2)
    batch = TrajectoryBatch(
        num_samples=2,
        states=(np.array([[0.0, 1.0]]), np.array([[0.0, 0.0]])),
        inputs=((np.array([[-0.2, -0.7]]),),),
        obs_noise_sigma=0.0,
        base_seed=0,
    )
    policy = estimate_policy(batch, scalar_dims_game())
    assert_allclose(policy.gains[0][0], [[0.5]], atol=1e-10)
    assert_allclose(policy.offsets[0][0], [0.2], atol=1e-10)


def test_noiseless_batch_recovers_policy_exactly():
    rng = np.random.default_rng(3)
    game, policy, value, report = draw_solvable_game(
        rng, num_players=2, state_dim=3, horizon=4
    )
    batch = rollout(game, policy, game.n_x + 1, base_seed=21)
    est = estimate_policy(batch, game)
    assert policy_gap(est, policy)["fro"] < 1e-8


def test_single_sample_rank_error():
    batch = TrajectoryBatch(
        num_samples=1,
        states=(np.array([[1.0]]), np.array([[0.0]])),
        inputs=((np.array([[0.0]]),),),
        obs_noise_sigma=0.0,
        base_seed=0,
    )
    with pytest.raises(EstimationError, match="t=0.*rank 1 < 2"):
        estimate_policy(batch, scalar_dims_game())


def test_identical_states_rank_error():
    batch = TrajectoryBatch(
        num_samples=5,
        states=(np.ones((1, 5)), np.zeros((1, 5))),
        inputs=((np.zeros((1, 5)),),),
        obs_noise_sigma=0.0,
        base_seed=0,
    )
    with pytest.raises(EstimationError, match="rank-deficient"):
        estimate_policy(batch, scalar_dims_game())


def test_horizon_mismatch_error():
    batch = TrajectoryBatch(
        num_samples=2,
        states=(np.zeros((1, 2)), np.zeros((1, 2))),
        inputs=((np.zeros((1, 2)),),),
        obs_noise_sigma=0.0,
        base_seed=0,
    )
    with pytest.raises(EstimationError, match="horizon"):
        estimate_policy(batch, scalar_dims_game(horizon=3))


def test_empirical_gram_single_zero_sample():
    batch = TrajectoryBatch(
        num_samples=1,
        states=(np.zeros((1, 1)), np.zeros((1, 1))),
        inputs=((np.zeros((1, 1)),),),
        obs_noise_sigma=0.0,
        base_seed=0,
    )
    psi, sig_max, sig_min, p = empirical_gram(batch, 0)
    assert_allclose(psi, [[0.0, 0.0], [0.0, 1.0]])
    assert sig_max == 1.0
    assert sig_min == 0.0
    assert p == 1


def test_empirical_gram_standardized_states():
    rng = np.random.default_rng(12)
    n = 100000
    states = rng.standard_normal((1, n))
    batch = TrajectoryBatch(
        num_samples=n,
        states=(states, np.zeros((1, n))),
        inputs=((np.zeros((1, n)),),),
        obs_noise_sigma=0.0,
        base_seed=0,
    )
    psi, sig_max, sig_min, p = empirical_gram(batch, 0)
    assert p == 2
    assert 0.95 <= sig_min <= 1.05
    assert 0.95 <= sig_max <= 1.05


def test_sample_complexity_frozen_value():
    report = sample_complexity(
        1.0, 1.0, 2, accuracy=0.1, confidence=0.1, subgaussian_param=0.1,
        regressor_bound=1.0,
    )
    # N1 = 8*0.01/(0.01*1)*ln20 ~ 23.97, N_rand = (4/3)*7*3*ln20 ~ 83.88
    assert_allclose(report.N1, 8.0 * 0.01 / 0.01 * math.log(20.0))
    assert_allclose(report.N_rand, (4.0 / 3.0) * 7.0 * 3.0 * math.log(20.0))
    assert report.n_required == 84


def test_sample_complexity_accuracy_limit():
    report = sample_complexity(
        1.0, 1.0, 2, accuracy=1e9, confidence=0.1, subgaussian_param=0.1
    )
    assert report.N1 < 1e-12
    assert report.n_required == math.ceil(report.N_rand)


def test_sample_complexity_alpha_quadruples_noise_term():
    a = sample_complexity(1.0, 1.0, 2, accuracy=0.1, confidence=0.1,
                          subgaussian_param=0.1, regressor_bound=1.0)
    b = sample_complexity(1.0, 1.0, 2, accuracy=0.1, confidence=0.1,
                          subgaussian_param=0.1, regressor_bound=2.0)
    assert b.N1 == 4.0 * a.N1


def test_sample_complexity_input_validation():
    with pytest.raises(EstimationError, match="degenerate regressor"):
        sample_complexity(1.0, 0.0, 2, accuracy=0.1, confidence=0.1,
                          subgaussian_param=0.1)
    with pytest.raises(EstimationError, match="confidence"):
        sample_complexity(1.0, 1.0, 2, accuracy=0.1, confidence=1.5,
                          subgaussian_param=0.1)
    with pytest.raises(EstimationError, match="accuracy"):
        sample_complexity(1.0, 1.0, 2, accuracy=0.0, confidence=0.1,
                          subgaussian_param=0.1)


def test_estimation_error_shrinks_with_n():
    rng = np.random.default_rng(6)
    game, policy, value, report = draw_solvable_game(
        rng, num_players=1, state_dim=2, horizon=3
    )
    sizes = (50, 200, 1000, 5000)
    medians = []
    for n in sizes:
        errs = []
        for rep in range(20):
            batch = rollout(game, policy, n, base_seed=1000 * rep + n,
                            obs_noise_sigma=0.05)
            est = estimate_policy(batch, game)
            errs.append(policy_gap(est, policy)["fro"])
        medians.append(np.median(errs))
    for small, large in zip(medians[1:], medians[:-1]):
        assert small <= large


def test_policy_gap_on_identical_policies(scalar_game):
    policy, _, _ = solve_nash(scalar_game)
    gap = policy_gap(policy, policy)
    assert gap == {"fro": 0.0, "spectral": 0.0}
