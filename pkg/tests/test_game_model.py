import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from lqgid import (
    GameSpec,
    GameValidationError,
    NashPolicy,
    TrajectoryBatch,
    game_from_dict,
    game_to_dict,
    load_game,
    load_policy,
    save_game,
    save_policy,
    validate_policy,
    with_costs,
)
from tests.conftest import draw_game


def minimal_cfg(**overrides):
    cfg = {
        "num_players": 1,
        "horizon": 2,
        "state_dims": [2],
        "input_dim": 1,
        "A": np.eye(2).tolist(),
        "B": [[[1.0], [0.0]]],
        "Q": [np.eye(2).tolist()],
        "l": [[0.0, 0.0]],
        "R": [[[1.0]]],
        "mu0": [0.0, 0.0],
        "chi0": np.eye(2).tolist(),
        "Sigma": np.zeros((2, 2)).tolist(),
    }
    cfg.update(overrides)
    return cfg


def test_broadcast_constant_entries_over_time():
    game = game_from_dict(minimal_cfg())
    assert len(game.dynamics_A) == 2
    assert_array_equal(game.dynamics_A[0], game.dynamics_A[1])
    assert len(game.cost_Q[0]) == 2


def test_per_t_entries_pass_through():
    A_seq = [np.eye(2).tolist(), (2 * np.eye(2)).tolist()]
    game = game_from_dict(minimal_cfg(A=A_seq))
    assert game.dynamics_A[1][0, 0] == 2.0


def test_wrong_timestep_count_names_field():
    A_seq = [np.eye(2).tolist()] * 3
    with pytest.raises(GameValidationError, match="A: got 3 timesteps, expected 2"):
        game_from_dict(minimal_cfg(A=A_seq))


def test_unknown_and_missing_keys():
    with pytest.raises(GameValidationError, match="unknown keys.*bogus"):
        game_from_dict(minimal_cfg(bogus=1))
    cfg = minimal_cfg()
    del cfg["R"]
    with pytest.raises(GameValidationError, match="missing keys.*R"):
        game_from_dict(cfg)


def test_wrong_shape_names_player_and_time():
    bad_q = [[[1.0]]]  # 1x1 instead of 2x2
    with pytest.raises(GameValidationError, match=r"Q\[player 1\]"):
        game_from_dict(minimal_cfg(Q=[bad_q[0]]))


def test_nondiagonal_R_rejected():
    with pytest.raises(GameValidationError, match="diagonal"):
        game_from_dict(
            minimal_cfg(
                input_dim=2,
                B=[[[1.0, 0.0], [0.0, 1.0]]],
                R=[[[1.0, 0.3], [0.3, 1.0]]],
            )
        )


def test_nonpositive_R_rejected():
    with pytest.raises(GameValidationError, match="positive"):
        game_from_dict(minimal_cfg(R=[[[0.0]]]))


def test_indefinite_chi0_rejected():
    with pytest.raises(GameValidationError, match="chi0"):
        game_from_dict(minimal_cfg(chi0=[[-1.0, 0.0], [0.0, 1.0]]))


def test_state_dims_zero_entries_allowed():
    # a player may have no state of its own; only the total matters
    game = game_from_dict(
        minimal_cfg(
            num_players=2,
            state_dims=[2, 0],
            B=[[[1.0], [0.0]], [[0.0], [1.0]]],
            Q=[np.eye(2).tolist()] * 2,
            l=[[0.0, 0.0]] * 2,
            R=[[[1.0]]] * 2,
        )
    )
    assert game.n_x == 2


def test_state_dims_zero_total_rejected():
    with pytest.raises(GameValidationError, match="positive total"):
        game_from_dict(minimal_cfg(state_dims=[0]))


def test_arrays_are_frozen():
    game = game_from_dict(minimal_cfg())
    with pytest.raises(ValueError):
        game.dynamics_A[0][0, 0] = 5.0


def test_theta_dim():
    game = game_from_dict(minimal_cfg())
    assert game.theta_dim == 4 + 2 + 1 + 1


def test_asymmetric_Q_warns():
    q = [[1.0, 0.5], [0.0, 1.0]]
    with pytest.warns(UserWarning, match="asymmetric"):
        game_from_dict(minimal_cfg(Q=[q]))


def test_json_round_trip_is_byte_stable(tmp_path):
    rng = np.random.default_rng(7)
    game = draw_game(rng)
    p1 = tmp_path / "g1.json"
    p2 = tmp_path / "g2.json"
    save_game(game, p1)
    save_game(load_game(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()
    # and the dict form is exact
    again = game_from_dict(game_to_dict(game))
    for t in range(game.horizon):
        assert_array_equal(again.dynamics_A[t], game.dynamics_A[t])


def test_policy_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    game = draw_game(rng, num_players=2)
    from lqgid import solve_nash

    policy, _, _ = solve_nash(game)
    path = tmp_path / "pol.json"
    save_policy(policy, path)
    back = load_policy(path)
    for i in range(2):
        for t in range(game.horizon):
            assert_array_equal(back.gains[i][t], policy.gains[i][t])
            assert_array_equal(back.offsets[i][t], policy.offsets[i][t])


def test_load_game_rejects_non_object(tmp_path):
    path = tmp_path / "arr.json"
    path.write_text("[1, 2]")
    with pytest.raises(GameValidationError, match="must be an object"):
        load_game(path)


def test_load_game_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(GameValidationError, match="not valid JSON"):
        load_game(path)


def test_validate_policy_reports_shape_issues():
    game = game_from_dict(minimal_cfg())
    bad = NashPolicy(
        gains=((np.zeros((1, 3)),) * 2,),  # n_x mismatch
        offsets=((np.zeros(1),) * 2,),
    )
    issues = validate_policy(game, bad)
    assert issues and any("gain" in s or "shape" in s for s in issues)


def test_validate_policy_horizon_mismatch():
    game = game_from_dict(minimal_cfg())
    short = NashPolicy(gains=((np.zeros((1, 2)),),), offsets=((np.zeros(1),),))
    assert validate_policy(game, short)


def test_with_costs_swaps_costs_only():
    game = game_from_dict(minimal_cfg())
    newQ = [[2.0 * np.eye(2)] * 2]
    newl = [[np.ones(2)] * 2]
    newR = [[3.0 * np.eye(1)] * 2]
    swapped = with_costs(game, newQ, newl, newR)
    assert swapped.cost_Q[0][0][0, 0] == 2.0
    assert swapped.cost_R[0][1][0, 0] == 3.0
    assert_array_equal(swapped.dynamics_A[0], game.dynamics_A[0])
    assert_array_equal(swapped.init_mean, game.init_mean)


def test_trajectory_batch_validates_columns():
    with pytest.raises(GameValidationError, match="columns"):
        TrajectoryBatch(
            num_samples=3,
            states=(np.zeros((2, 2)),),
            inputs=(),
            obs_noise_sigma=0.0,
            base_seed=0,
        )


def test_game_to_dict_is_json_serializable():
    game = game_from_dict(minimal_cfg())
    json.dumps(game_to_dict(game))
