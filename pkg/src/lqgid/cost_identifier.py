"""Inverse problem: recover stage costs from a Nash feedback policy.

Given the dynamics, the noise model, and affine feedback policies for all
players, a single backward sweep identifies cost parameters
theta_t^i = (vec Q_t^i, l_t^i, vec R_{t-1}^i, 1) whose induced equilibrium
reproduces the observed gains and offsets. Each step solves one constrained
least-squares problem per player (the stationarity conditions of the
forward recursion, linear in theta) and then propagates value-function
terms built from the costs identified so far, so later steps condition on
earlier answers rather than on ground truth.

The identified costs are a representative of an equivalence class: any
theta in the null space of the stacked stationarity system induces the
same policy, so individual entries need not match the generating costs
even when the round-tripped policy does to machine precision.

Column-stacked (Fortran-order) vec throughout, matching linalg.vec.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cls_solver import CLSProblem, solve_cls
from .forward_solver import COND_LIMIT, ExistenceError, solve_nash
from .game_model import GameSpec, IdentificationResult, NashPolicy, validate_policy, with_costs
from .linalg import sym_gap, unvec, vec
from .simulator import expected_trajectory


class IdentificationError(RuntimeError):
    """Identification cannot proceed (singular closed loop, CLS failure)."""


def _check_compatible(game: GameSpec, policy: NashPolicy) -> None:
    issues = validate_policy(game, policy)
    if issues:
        raise ValueError("policy incompatible with game: " + "; ".join(issues))


def build_terms(
    game: GameSpec, policy: NashPolicy, t: int
) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Closed-loop and regressor terms at step t.

    Returns (F_t, S_t per player, E_t per player) where
    F_t = A_t - sum_j B_t^j K_t^j, S_t^i = F_t' (x) B_t^i' and
    E_t^i = K_t^i F_t^{-1} (sum_j B_t^j alpha_t^j) + alpha_t^i. The inverse
    of F_t is applied as a linear solve. Raises IdentificationError when
    F_t is numerically singular, since every later step conditions on it.
    """
    _check_compatible(game, policy)
    if not 0 <= t < game.horizon:
        raise ValueError(f"t must be in [0, {game.horizon - 1}], got {t}")
    A = game.dynamics_A[t]
    F = A - sum(
        game.dynamics_B[i][t] @ policy.gains[i][t] for i in range(game.num_players)
    )
    cond = np.linalg.cond(F)
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        raise IdentificationError(
            f"closed-loop matrix singular at t={t} (condition {cond:.3e}); "
            "identification requires an invertible closed loop at every step"
        )
    drift = sum(
        game.dynamics_B[i][t] @ policy.offsets[i][t] for i in range(game.num_players)
    )
    f_inv_drift = np.linalg.solve(F, drift)
    S = [np.kron(F.T, game.dynamics_B[i][t].T) for i in range(game.num_players)]
    E = [
        policy.gains[i][t] @ f_inv_drift + policy.offsets[i][t]
        for i in range(game.num_players)
    ]
    return F, S, E


def assemble_M(
    S: np.ndarray,
    E: np.ndarray,
    B: np.ndarray,
    K: np.ndarray,
    alpha: np.ndarray,
    delta_bar: np.ndarray,
    omega_bar: np.ndarray,
) -> np.ndarray:
    """Stationarity system for one (player, time) pair.

    Rows stacked as
        [ S      0    -K' (x) I    S @ delta_bar ]
        [ 0      B'   -E' (x) I    B' @ omega_bar ]
    acting on theta = (vec Q, l, vec R, 1); shape (n_u n_x + n_u, L).
    alpha participates only through E and is accepted for dimension
    checking.
    """
    n_x, n_u = B.shape
    if K.shape != (n_u, n_x):
        raise ValueError(f"gain shape {K.shape}, expected {(n_u, n_x)}")
    if np.shape(alpha) != (n_u,) or np.shape(E) != (n_u,):
        raise ValueError(f"offset/E shape {np.shape(alpha)}/{np.shape(E)}, expected ({n_u},)")
    if S.shape != (n_u * n_x, n_x * n_x):
        raise ValueError(f"S shape {S.shape}, expected {(n_u * n_x, n_x * n_x)}")
    if np.shape(delta_bar) != (n_x * n_x,) or np.shape(omega_bar) != (n_x,):
        raise ValueError("recursion term shapes inconsistent with B")
    top = np.hstack(
        [
            S,
            np.zeros((n_u * n_x, n_x)),
            -np.kron(K.T, np.eye(n_u)),
            (S @ delta_bar)[:, None],
        ]
    )
    bottom = np.hstack(
        [
            np.zeros((n_u, n_x * n_x)),
            B.T,
            -np.kron(np.asarray(E)[None, :], np.eye(n_u)),
            (B.T @ omega_bar)[:, None],
        ]
    )
    return np.vstack([top, bottom])


def recursion_step(
    F: np.ndarray,
    K_i: np.ndarray,
    alpha_i: np.ndarray,
    B_all: list[np.ndarray],
    alpha_all: list[np.ndarray],
    R_i: np.ndarray,
    P_next: np.ndarray,
    zeta_next: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Backward update of the carried value terms.

    delta_bar = vec(F' P_next F + K_i' R_i K_i)
    omega_bar = F' (zeta_next - P_next sum_j B_j alpha_j) + K_i' R_i alpha_i
    """
    drift = sum(B @ a for B, a in zip(B_all, alpha_all))
    delta_bar = vec(F.T @ P_next @ F + K_i.T @ R_i @ K_i)
    omega_bar = F.T @ (zeta_next - P_next @ drift) + K_i.T @ (R_i @ alpha_i)
    return delta_bar, omega_bar


def _theta_layout(n_x: int, n_u: int, strict_positivity: bool):
    """Column bookkeeping after structurally removing R off-diagonals.

    Returns (keep: full-theta columns retained, constrained: reduced-space
    indices bounded below by tau, full-theta R diagonal positions).
    """
    q_cols = list(range(n_x * n_x))
    l_cols = list(range(n_x * n_x, n_x * n_x + n_x))
    r_start = n_x * n_x + n_x
    r_diag_full = [r_start + j * (n_u + 1) for j in range(n_u)]
    keep = q_cols + l_cols + r_diag_full + [r_start + n_u * n_u]
    q_diag_red = [j * (n_x + 1) for j in range(n_x)]
    r_diag_red = [n_x * n_x + n_x + j for j in range(n_u)]
    if strict_positivity:
        constrained = list(range(len(keep) - 1))
    else:
        constrained = q_diag_red + r_diag_red
    return keep, constrained, r_diag_full


def identify_costs(
    game: GameSpec,
    policy: NashPolicy,
    tau: float = 1e-3,
    strict_positivity: bool = False,
) -> IdentificationResult:
    """Backward sweep recovering stage costs that rationalize the policy.

    Only the dynamics and noise fields of ``game`` are consulted; its cost
    fields are ignored. Per step t = T..1, each player's stationarity
    system is assembled from the policy and the carried (delta_bar,
    omega_bar), reduced by removing the structurally-zero R off-diagonal
    columns, and solved as a constrained least-squares problem with the
    diagonal entries of Q and R bounded below by tau (all retained
    unknowns when strict_positivity is set). The value terms are then
    updated with the *identified* costs before moving to t-1.
    """
    _check_compatible(game, policy)
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    N, T = game.num_players, game.horizon
    n_x, n_u = game.n_x, game.n_u
    keep, constrained, r_diag_full = _theta_layout(n_x, n_u, strict_positivity)
    L = game.theta_dim

    theta = [[None] * T for _ in range(N)]
    residuals = [[0.0] * T for _ in range(N)]
    active_sets = [[()] * T for _ in range(N)]
    systems = [[None] * T for _ in range(N)]
    delta_hist = [[None] * T for _ in range(N)]
    omega_hist = [[None] * T for _ in range(N)]
    q_hat = [[None] * T for _ in range(N)]
    l_hat = [[None] * T for _ in range(N)]
    r_hat = [[None] * T for _ in range(N)]
    asymmetry = [[0.0] * T for _ in range(N)]
    degenerate: list[tuple[int, int]] = []

    delta_bar = [np.zeros(n_x * n_x) for _ in range(N)]
    omega_bar = [np.zeros(n_x) for _ in range(N)]
    P = [None] * N
    zeta = [None] * N

    for t in range(T, 0, -1):
        k = t - 1
        F, S, E = build_terms(game, policy, k)
        for i in range(N):
            B = game.dynamics_B[i][k]
            if not np.any(B):
                degenerate.append((i + 1, t))
            M = assemble_M(
                S[i], E[i], B, policy.gains[i][k], policy.offsets[i][k],
                delta_bar[i], omega_bar[i],
            )
            problem = CLSProblem(M[:, keep], tuple(constrained), tau)
            sol = solve_cls(problem)
            if sol.status != "optimal":
                raise IdentificationError(
                    f"constrained least squares failed for player {i + 1} at t={t} "
                    f"(status {sol.status} after {sol.iterations} iterations)"
                )
            full = np.zeros(L)
            full[keep] = sol.theta
            theta[i][k] = full
            residuals[i][k] = sol.residual
            active_sets[i][k] = tuple(keep[j] for j in sol.active)
            systems[i][k] = M
            delta_hist[i][k] = delta_bar[i].copy()
            omega_hist[i][k] = omega_bar[i].copy()

            Q_raw = unvec(full[: n_x * n_x], (n_x, n_x))
            asymmetry[i][k] = sym_gap(Q_raw)
            q_hat[i][k] = 0.5 * (Q_raw + Q_raw.T)
            l_hat[i][k] = full[n_x * n_x : n_x * n_x + n_x].copy()
            r_hat[i][k] = np.diag(full[r_diag_full])

            P[i] = unvec(delta_bar[i], (n_x, n_x)) + q_hat[i][k]
            zeta[i] = omega_bar[i] + l_hat[i][k]
        if t > 1:
            B_all = [game.dynamics_B[j][k] for j in range(N)]
            alpha_all = [policy.offsets[j][k] for j in range(N)]
            for i in range(N):
                delta_bar[i], omega_bar[i] = recursion_step(
                    F, policy.gains[i][k], policy.offsets[i][k],
                    B_all, alpha_all, r_hat[i][k], P[i], zeta[i],
                )

    if degenerate:
        pairs = ", ".join(f"(player {i}, t={t})" for i, t in sorted(degenerate))
        warnings.warn(
            f"zero input matrix leaves costs unidentifiable at {pairs}; "
            "their entries sit at the constraint/min-norm defaults",
            RuntimeWarning,
            stacklevel=2,
        )

    def freeze(rows):
        return tuple(tuple(r) for r in rows)

    return IdentificationResult(
        theta=freeze(theta),
        residuals=freeze(residuals),
        active_sets=freeze(active_sets),
        systems=freeze(systems),
        delta_bar=freeze(delta_hist),
        omega_bar=freeze(omega_hist),
        tau=float(tau),
        strict_positivity=bool(strict_positivity),
        identified_Q=freeze(q_hat),
        identified_l=freeze(l_hat),
        identified_R=freeze(r_hat),
        asymmetry=freeze(asymmetry),
        degenerate=tuple(sorted(degenerate)),
    )


@dataclass(frozen=True)
class RoundTripReport:
    """Policy and trajectory deviations after re-solving identified costs.

    k_err[i][k], alpha_err[i][k] are Frobenius / Euclidean gaps per
    (player, step); x_err[t] covers t = 0..T (entry 0 is always 0 since
    both trajectories start at the same mean); u_err[i][k] are input-mean
    gaps. Summary means/stds aggregate over (i, t) for policies and inputs
    and over t = 1..T for states. When the identified game has no
    equilibrium every error is math.inf and existence_failed is set.
    """

    k_err: np.ndarray
    alpha_err: np.ndarray
    x_err: np.ndarray
    u_err: np.ndarray
    mean_k: float
    std_k: float
    mean_alpha: float
    std_alpha: float
    mean_x: float
    std_x: float
    mean_u: float
    std_u: float
    existence_failed: bool


def verify_roundtrip(
    game: GameSpec, identified: IdentificationResult, reference_policy: NashPolicy
) -> RoundTripReport:
    """Re-solve the game under identified costs and compare to the reference.

    Uses the dynamics/noise of ``game`` with the identified Q, l, R. The
    reference policy supplies the K, alpha, and expected-trajectory
    baselines. An existence failure of the identified game is reported via
    infinity sentinels rather than an exception.
    """
    return roundtrip_costs(
        game,
        identified.identified_Q,
        identified.identified_l,
        identified.identified_R,
        reference_policy,
    )


def roundtrip_costs(
    game: GameSpec, cost_Q, cost_l, cost_R, reference_policy: NashPolicy
) -> RoundTripReport:
    """verify_roundtrip on bare cost arrays (the CLI path from a costs file)."""
    _check_compatible(game, reference_policy)
    N, T = game.num_players, game.horizon
    rebuilt = with_costs(game, cost_Q, cost_l, cost_R)
    try:
        policy2, _, _ = solve_nash(rebuilt)
    except ExistenceError:
        inf_nt = np.full((N, T), np.inf)
        return RoundTripReport(
            k_err=inf_nt, alpha_err=inf_nt.copy(),
            x_err=np.full(T + 1, np.inf), u_err=inf_nt.copy(),
            mean_k=np.inf, std_k=np.inf, mean_alpha=np.inf, std_alpha=np.inf,
            mean_x=np.inf, std_x=np.inf, mean_u=np.inf, std_u=np.inf,
            existence_failed=True,
        )

    k_err = np.zeros((N, T))
    alpha_err = np.zeros((N, T))
    for i in range(N):
        for k in range(T):
            k_err[i, k] = np.linalg.norm(
                policy2.gains[i][k] - reference_policy.gains[i][k]
            )
            alpha_err[i, k] = np.linalg.norm(
                policy2.offsets[i][k] - reference_policy.offsets[i][k]
            )
    states_ref, inputs_ref = expected_trajectory(game, reference_policy)
    states_new, inputs_new = expected_trajectory(rebuilt, policy2)
    x_err = np.array(
        [np.linalg.norm(states_new[t] - states_ref[t]) for t in range(T + 1)]
    )
    u_err = np.array(
        [
            [np.linalg.norm(inputs_new[i][k] - inputs_ref[i][k]) for k in range(T)]
            for i in range(N)
        ]
    )
    return RoundTripReport(
        k_err=k_err, alpha_err=alpha_err, x_err=x_err, u_err=u_err,
        mean_k=float(k_err.mean()), std_k=float(k_err.std()),
        mean_alpha=float(alpha_err.mean()), std_alpha=float(alpha_err.std()),
        mean_x=float(x_err[1:].mean()), std_x=float(x_err[1:].std()),
        mean_u=float(u_err.mean()), std_u=float(u_err.std()),
        existence_failed=False,
    )
