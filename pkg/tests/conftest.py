"""Shared fixtures: small random game families used across the suite."""

import numpy as np
import pytest

from lqgid import GameSpec, solve_nash
from lqgid.forward_solver import ExistenceError

_criterion_lines: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """One pass/fail line per acceptance criterion, echoed in the summary."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    _criterion_lines.append(line)
    print(line, flush=True)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)


def draw_game(rng, num_players=None, state_dim=None, horizon=None):
    """One random game with generic (non-canonical) dynamics.

    Dimensions default to uniform draws over the small-family ranges
    (N <= 3, n_x <= 4, T <= 10). Costs keep Q and R diagonal positive and
    l sign-free so every game is identifiable under the default policy.
    """
    N = int(num_players if num_players is not None else rng.integers(1, 4))
    n_x = int(state_dim if state_dim is not None else rng.integers(max(1, N - 1), 5))
    T = int(horizon if horizon is not None else rng.integers(1, 11))
    n_u = int(rng.integers(1, 3))

    A = [np.eye(n_x) + 0.1 * rng.standard_normal((n_x, n_x)) for _ in range(T)]
    B = [[0.5 * rng.standard_normal((n_x, n_u)) for _ in range(T)] for _ in range(N)]
    Q = [[np.diag(rng.uniform(0.1, 2.0, n_x)) for _ in range(T)] for _ in range(N)]
    l = [[0.5 * rng.standard_normal(n_x) for _ in range(T)] for _ in range(N)]
    R = [[np.diag(rng.uniform(0.1, 2.0, n_u)) for _ in range(T)] for _ in range(N)]

    dims = [0] * N
    dims[0] = n_x
    if N > 1 and n_x >= N:
        dims = [1] * N
        dims[0] += n_x - N

    return GameSpec(
        num_players=N,
        horizon=T,
        state_dims=tuple(dims),
        input_dim=n_u,
        dynamics_A=A,
        dynamics_B=B,
        cost_Q=Q,
        cost_l=l,
        cost_R=R,
        init_mean=rng.standard_normal(n_x),
        init_cov=0.1 * np.eye(n_x),
        process_cov=[0.01 * np.eye(n_x)] * T,
    )


def draw_solvable_game(rng, **dims):
    """Redraw until the equilibrium exists (cheap: failures are rare)."""
    for _ in range(20):
        game = draw_game(rng, **dims)
        try:
            policy, value, report = solve_nash(game)
        except ExistenceError:
            continue
        return game, policy, value, report
    raise AssertionError("could not draw a solvable game in 20 tries")


@pytest.fixture(scope="session")
def family50():
    """50 solved random games for the family-quantified properties."""
    rng = np.random.default_rng(20240814)
    return [draw_solvable_game(rng) for _ in range(50)]


@pytest.fixture()
def scalar_game():
    """Deterministic single-player scalar game with K_0 = 0.5, J = 0.5."""
    return GameSpec(
        num_players=1,
        horizon=1,
        state_dims=(1,),
        input_dim=1,
        dynamics_A=[np.eye(1)],
        dynamics_B=[[np.eye(1)]],
        cost_Q=[[np.eye(1)]],
        cost_l=[[np.zeros(1)]],
        cost_R=[[np.eye(1)]],
        init_mean=np.ones(1),
        init_cov=np.zeros((1, 1)),
        process_cov=[np.zeros((1, 1))],
    )


@pytest.fixture()
def two_player_scalar_game():
    """Symmetric two-player scalar game: K^i = 1/3, Phi = [[2,1],[1,2]]."""
    return GameSpec(
        num_players=2,
        horizon=1,
        state_dims=(1, 0),
        input_dim=1,
        dynamics_A=[np.eye(1)],
        dynamics_B=[[np.eye(1)], [np.eye(1)]],
        cost_Q=[[np.eye(1)], [np.eye(1)]],
        cost_l=[[np.zeros(1)], [np.zeros(1)]],
        cost_R=[[np.eye(1)], [np.eye(1)]],
        init_mean=np.ones(1),
        init_cov=np.zeros((1, 1)),
        process_cov=[np.zeros((1, 1))],
    )
