"""Feedback Nash equilibria of LQG games via coupled backward recursions.

At each timestep the N players' gain equations

    (R^i_t + B^i' P^i_{t+1} B^i) K^i_t + B^i' P^i_{t+1} sum_{j!=i} B^j K^j_t
        = B^i' P^i_{t+1} A_t

are coupled only through the stacked unknown (K^1; ...; K^N), so all gains
(and, with a second right-hand side, all offsets) come out of one linear
solve with the (N n_u x N n_u) matrix Phi_t whose invertibility is exactly
the existence/uniqueness condition for the equilibrium. Solving the stacked
system directly (rather than fixed-point iterating the per-player
equations) makes failure diagnosable: a singular Phi_t names the timestep
where no unique equilibrium exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game_model import GameSpec, NashPolicy, ValueRecursion, validate_policy

COND_LIMIT = 1e12


class ExistenceError(RuntimeError):
    """No unique feedback Nash equilibrium: Phi_t numerically singular."""

    def __init__(self, t: int, condition: float):
        super().__init__(
            f"existence failure at t={t}: Phi condition number {condition:.3e} "
            f"exceeds {COND_LIMIT:.0e}"
        )
        self.t = t
        self.condition = condition


@dataclass(frozen=True)
class ExistenceReport:
    """Per-timestep invertibility of the stacked coupling matrix Phi_t."""

    phi: tuple[np.ndarray, ...]
    condition: tuple[float, ...]
    invertible: tuple[bool, ...]

    @property
    def exists_unique(self) -> bool:
        return all(self.invertible)


def _cond(mat: np.ndarray) -> float:
    c = np.linalg.cond(mat)
    return float(c) if np.isfinite(c) else float("inf")


def _assemble_phi(game: GameSpec, P_next: list[np.ndarray], t: int) -> np.ndarray:
    """Phi_t: diagonal blocks R^i + B^i'P^i B^i, off-diagonal B^i'P^i B^j."""
    N, n_u = game.num_players, game.n_u
    phi = np.empty((N * n_u, N * n_u))
    for i in range(N):
        BiP = game.dynamics_B[i][t].T @ P_next[i]
        for j in range(N):
            block = BiP @ game.dynamics_B[j][t]
            if i == j:
                block = block + game.cost_R[i][t]
            phi[i * n_u:(i + 1) * n_u, j * n_u:(j + 1) * n_u] = block
    return phi


def _require_compatible(game: GameSpec, policy: NashPolicy) -> None:
    issues = validate_policy(game, policy)
    if issues:
        raise ValueError("policy incompatible with game: " + "; ".join(issues))


def solve_nash(game: GameSpec) -> tuple[NashPolicy, ValueRecursion, ExistenceReport]:
    """Solve the coupled backward recursions for all players.

    Returns the equilibrium policy, the value recursion (P_t, zeta_t for
    t = 0..T plus closed-loop matrices F_t), and the existence report with
    per-t condition numbers of Phi_t.

    Raises
    ------
    ExistenceError
        If some Phi_t has condition number above 1e12 (no unique
        equilibrium at that timestep).
    """
    N, T, n_x, n_u = game.num_players, game.horizon, game.n_x, game.n_u
    P = [[None] * (T + 1) for _ in range(N)]
    zeta = [[None] * (T + 1) for _ in range(N)]
    for i in range(N):
        P[i][T] = game.cost_Q[i][T - 1]
        zeta[i][T] = game.cost_l[i][T - 1]

    gains = [[None] * T for _ in range(N)]
    offsets = [[None] * T for _ in range(N)]
    F_seq = [None] * T
    phis, conds, flags = [None] * T, [None] * T, [None] * T

    for t in reversed(range(T)):
        P_next = [P[i][t + 1] for i in range(N)]
        phi = _assemble_phi(game, P_next, t)
        c = _cond(phi)
        phis[t], conds[t] = phi, c
        flags[t] = bool(c < COND_LIMIT)
        if not flags[t]:
            raise ExistenceError(t, c)

        A = game.dynamics_A[t]
        rhs = np.empty((N * n_u, n_x + 1))
        for i in range(N):
            BiP = game.dynamics_B[i][t].T @ P_next[i]
            rhs[i * n_u:(i + 1) * n_u, :n_x] = BiP @ A
            rhs[i * n_u:(i + 1) * n_u, n_x] = game.dynamics_B[i][t].T @ zeta[i][t + 1]
        sol = np.linalg.solve(phi, rhs)
        for i in range(N):
            gains[i][t] = sol[i * n_u:(i + 1) * n_u, :n_x]
            offsets[i][t] = sol[i * n_u:(i + 1) * n_u, n_x]

        F = A - sum(game.dynamics_B[j][t] @ gains[j][t] for j in range(N))
        F_seq[t] = F
        drift = sum(game.dynamics_B[j][t] @ offsets[j][t] for j in range(N))
        for i in range(N):
            K, al, R = gains[i][t], offsets[i][t], game.cost_R[i][t]
            Pn, zn = P_next[i], zeta[i][t + 1]
            P[i][t] = F.T @ Pn @ F + K.T @ R @ K
            zeta[i][t] = F.T @ (zn - Pn @ drift) + K.T @ (R @ al)
            if t >= 1:
                P[i][t] = P[i][t] + game.cost_Q[i][t - 1]
                zeta[i][t] = zeta[i][t] + game.cost_l[i][t - 1]

    policy = NashPolicy(gains=tuple(map(tuple, gains)), offsets=tuple(map(tuple, offsets)))
    cl = [(f, _cond(f)) for f in F_seq]
    value = ValueRecursion(
        value_quadratic=tuple(tuple(P[i]) for i in range(N)),
        value_linear=tuple(tuple(zeta[i]) for i in range(N)),
        closed_loop=tuple(F_seq),
        cl_invertible=tuple(bool(c < COND_LIMIT) for _, c in cl),
        cl_condition=tuple(c for _, c in cl),
    )
    report = ExistenceReport(phi=tuple(phis), condition=tuple(conds), invertible=tuple(flags))
    return policy, value, report


def check_existence(game: GameSpec, value: ValueRecursion) -> ExistenceReport:
    """Assemble Phi_t from an existing value recursion and flag invertibility."""
    T = game.horizon
    phis, conds, flags = [], [], []
    for t in range(T):
        P_next = [value.value_quadratic[i][t + 1] for i in range(game.num_players)]
        phi = _assemble_phi(game, P_next, t)
        c = _cond(phi)
        phis.append(phi)
        conds.append(c)
        flags.append(bool(c < COND_LIMIT))
    return ExistenceReport(phi=tuple(phis), condition=tuple(conds), invertible=tuple(flags))


def closed_loop(
    game: GameSpec, policy: NashPolicy
) -> list[tuple[np.ndarray, bool, float]]:
    """F_t = A_t - sum_j B_t^j K_t^j with (matrix, invertible, condition) per t."""
    _require_compatible(game, policy)
    out = []
    for t in range(game.horizon):
        F = game.dynamics_A[t] - sum(
            game.dynamics_B[j][t] @ policy.gains[j][t] for j in range(game.num_players)
        )
        c = _cond(F)
        out.append((F, bool(c < COND_LIMIT), c))
    return out


def expected_cost(game: GameSpec, policy: NashPolicy) -> np.ndarray:
    """Exact per-player expected cost of running ``policy`` on ``game``.

    Propagates the state mean and covariance through the affine closed loop
    and evaluates the stage costs x'Qx + 2l'x + u'Ru in closed form
    (quadratic-form trace identities), so the result is deterministic and
    exact for the Gaussian system. Works for any compatible policy, not
    just equilibria.
    """
    _require_compatible(game, policy)
    N, T = game.num_players, game.horizon
    m = game.init_mean
    S = game.init_cov
    cost = np.zeros(N)
    for t in range(T):
        F = game.dynamics_A[t] - sum(
            game.dynamics_B[j][t] @ policy.gains[j][t] for j in range(N)
        )
        drift = sum(game.dynamics_B[j][t] @ policy.offsets[j][t] for j in range(N))
        for i in range(N):
            K, al, R = policy.gains[i][t], policy.offsets[i][t], game.cost_R[i][t]
            u_mean = -(K @ m) - al
            cost[i] += u_mean @ R @ u_mean + np.trace(K.T @ R @ K @ S)
        m = F @ m - drift
        S = F @ S @ F.T + game.process_cov[t]
        for i in range(N):
            Q, l = game.cost_Q[i][t], game.cost_l[i][t]
            cost[i] += m @ Q @ m + np.trace(Q @ S) + 2.0 * (l @ m)
    return cost
