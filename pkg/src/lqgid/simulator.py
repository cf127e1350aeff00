"""Monte Carlo demonstration batches and noise-free expected trajectories.

Reproducibility contract: sample s of a batch is generated from the RNG
stream seeded by (base_seed, s), so batches are bitwise identical across
reruns and independent of any generation order or parallelism. Within one
sample's stream, the initial-state and process-noise draws all happen
before any input-observation-noise draws; turning observation noise on or
off therefore never changes the state sequence.
"""

from __future__ import annotations

import csv

import numpy as np

from .game_model import GameSpec, NashPolicy, TrajectoryBatch, validate_policy
from .linalg import psd_sqrt


class SimulationError(RuntimeError):
    pass


def _sample_rng(base_seed: int, s: int) -> np.random.Generator:
    return np.random.default_rng([int(base_seed), int(s)])


def rollout(
    game: GameSpec,
    policy: NashPolicy,
    n: int,
    base_seed: int,
    obs_noise_sigma: float = 0.0,
) -> TrajectoryBatch:
    """Simulate ``n`` trajectories of ``game`` under ``policy``.

    The dynamics are always driven by the true inputs -K x - alpha; the
    recorded inputs in the returned batch additionally carry isotropic
    Gaussian observation noise of scale ``obs_noise_sigma`` (drawn
    independently per sample, timestep, and player). States are recorded
    exactly.
    """
    issues = validate_policy(game, policy)
    if issues:
        raise ValueError("policy incompatible with game: " + "; ".join(issues))
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    sigma = float(obs_noise_sigma)
    if sigma < 0:
        raise ValueError(f"obs_noise_sigma must be >= 0, got {sigma}")

    N, T, n_x, n_u = game.num_players, game.horizon, game.n_x, game.n_u
    try:
        init_sqrt = psd_sqrt(game.init_cov)
    except ValueError as exc:
        raise SimulationError(f"chi0: {exc}") from exc
    proc_sqrt = []
    for t in range(T):
        try:
            proc_sqrt.append(psd_sqrt(game.process_cov[t]))
        except ValueError as exc:
            raise SimulationError(f"Sigma[t={t}]: {exc}") from exc

    # Per-sample draws (sequential for determinism); dynamics vectorized
    # across samples afterwards.
    Z0 = np.empty((n_x, n))
    W = np.empty((T, n_x, n))
    V = np.empty((T, N, n_u, n)) if sigma > 0 else None
    for s in range(n):
        rng = _sample_rng(base_seed, s)
        draws = rng.standard_normal((T + 1) * n_x)
        Z0[:, s] = draws[:n_x]
        W[:, :, s] = draws[n_x:].reshape(T, n_x)
        if sigma > 0:
            V[:, :, :, s] = rng.standard_normal(T * N * n_u).reshape(T, N, n_u)

    states = [game.init_mean[:, None] + init_sqrt @ Z0]
    inputs = [[None] * T for _ in range(N)]
    for t in range(T):
        X = states[t]
        nxt = game.dynamics_A[t] @ X + proc_sqrt[t] @ W[t]
        for i in range(N):
            u_true = -(policy.gains[i][t] @ X) - policy.offsets[i][t][:, None]
            nxt += game.dynamics_B[i][t] @ u_true
            inputs[i][t] = u_true + sigma * V[t, i] if sigma > 0 else u_true
        states.append(nxt)

    return TrajectoryBatch(
        num_samples=n,
        states=tuple(states),
        inputs=tuple(tuple(per) for per in inputs),
        obs_noise_sigma=sigma,
        base_seed=int(base_seed),
    )


def expected_trajectory(
    game: GameSpec, policy: NashPolicy
) -> tuple[list[np.ndarray], list[list[np.ndarray]]]:
    """Deterministic rollout from mu0 with all noise set to zero.

    Returns (states, inputs): states[t] for t = 0..T, inputs[i][t] for
    t = 0..T-1.
    """
    issues = validate_policy(game, policy)
    if issues:
        raise ValueError("policy incompatible with game: " + "; ".join(issues))
    x = game.init_mean
    states = [x]
    inputs: list[list[np.ndarray]] = [[] for _ in range(game.num_players)]
    for t in range(game.horizon):
        nxt = game.dynamics_A[t] @ x
        for i in range(game.num_players):
            u = -(policy.gains[i][t] @ x) - policy.offsets[i][t]
            inputs[i].append(u)
            nxt = nxt + game.dynamics_B[i][t] @ u
        states.append(nxt)
        x = nxt
    return states, inputs


# --- CSV layout -------------------------------------------------------------
#
# Columns: sample,t,kind,player,dim,value. kind is "state" (t = 0..T, player
# empty) or "input" (t = 0..T-1, player 1..N). Rows are sample-major so a
# batch can be streamed one demonstration at a time.

CSV_HEADER = ["sample", "t", "kind", "player", "dim", "value"]


def save_trajectories(batch: TrajectoryBatch, path) -> None:
    T = batch.horizon
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in range(batch.num_samples):
            for t in range(T + 1):
                col = batch.states[t][:, s]
                for d in range(col.shape[0]):
                    writer.writerow([s, t, "state", "", d, repr(float(col[d]))])
            for t in range(T):
                for i, per in enumerate(batch.inputs):
                    col = per[t][:, s]
                    for d in range(col.shape[0]):
                        writer.writerow([s, t, "input", i + 1, d, repr(float(col[d]))])


def load_trajectories(path, obs_noise_sigma: float = 0.0, base_seed: int = 0) -> TrajectoryBatch:
    """Rebuild a TrajectoryBatch from the documented CSV layout.

    The CSV does not carry generation metadata; pass obs_noise_sigma and
    base_seed if they are known and worth preserving.
    """
    state_rows: dict[tuple[int, int, int], float] = {}
    input_rows: dict[tuple[int, int, int, int], float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise SimulationError(f"{path}: expected header {CSV_HEADER}, got {header}")
        for row in reader:
            s, t, kind, player, dim, value = row
            if kind == "state":
                state_rows[(int(s), int(t), int(dim))] = float(value)
            elif kind == "input":
                input_rows[(int(s), int(t), int(player)), int(dim)] = float(value)
            else:
                raise SimulationError(f"{path}: unknown kind {kind!r}")
    if not state_rows:
        raise SimulationError(f"{path}: no state rows")
    n = max(k[0] for k in state_rows) + 1
    T = max(k[1] for k in state_rows)
    n_x = max(k[2] for k in state_rows) + 1
    players = sorted({k[0][2] for k in input_rows})
    N = max(players) if players else 0
    n_u = max((k[1] for k in input_rows), default=-1) + 1

    states = []
    for t in range(T + 1):
        X = np.empty((n_x, n))
        for s in range(n):
            for d in range(n_x):
                X[d, s] = state_rows[(s, t, d)]
        states.append(X)
    inputs = []
    for i in range(1, N + 1):
        per = []
        for t in range(T):
            U = np.empty((n_u, n))
            for s in range(n):
                for d in range(n_u):
                    U[d, s] = input_rows[(s, t, i), d]
            per.append(U)
        inputs.append(tuple(per))
    return TrajectoryBatch(
        num_samples=n,
        states=tuple(states),
        inputs=tuple(inputs),
        obs_noise_sigma=obs_noise_sigma,
        base_seed=base_seed,
    )
