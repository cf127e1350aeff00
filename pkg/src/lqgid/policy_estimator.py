"""Affine-policy estimation from demonstration batches, plus the
sample-complexity bound that predicts how many demonstrations the
regression needs.

Per (player, timestep) the estimate solves

    min_{K, alpha} || [K, alpha] [X_t; 1'] + U_t^i ||_F^2,

i.e. an ordinary least-squares fit of the recorded inputs against the
augmented states. The design matrix [X_t; 1'] is shared by all players at
a fixed t, so its factorization is computed once and reused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game_model import GameSpec, NashPolicy, TrajectoryBatch

RANK_RTOL = 1e-10


class EstimationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SampleComplexityReport:
    """Evaluated sample-size bound for one regression problem.

    N1 covers the observation-noise term, N_rand the regressor-randomness
    term; n_required = ceil of their max. sigma_max/sigma_min/p describe
    the regressor Gram matrix (gram_matrix is attached when the report was
    computed from data, None when evaluated from bare scalars).
    confidence is the failure probability inside the logarithms;
    subgaussian_param is the scale of the input observation noise.
    """

    sigma_max: float
    sigma_min: float
    p: int
    regressor_bound: float
    subgaussian_param: float
    confidence: float
    accuracy: float
    N1: float
    N_rand: float
    n_required: int
    gram_matrix: np.ndarray | None = None


def empirical_gram(batch: TrajectoryBatch, t: int) -> tuple[np.ndarray, float, float, int]:
    """Gram matrix of the augmented regressor at time t.

    Returns (Psi, sigma_max, sigma_min, p) where Psi = (1/n) Z Z' for
    Z = [X_t; 1'] and p is the numerical rank (eigenvalues above
    1e-10 * sigma_max).
    """
    X = batch.states[t]
    n = X.shape[1]
    Z = np.vstack([X, np.ones((1, n))])
    psi = (Z @ Z.T) / n
    w = np.linalg.eigvalsh(0.5 * (psi + psi.T))
    sigma_max = float(w[-1])
    sigma_min = float(max(w[0], 0.0))
    p = int(np.sum(w > RANK_RTOL * max(sigma_max, 0.0))) if sigma_max > 0 else 0
    return psi, sigma_max, sigma_min, p


def estimate_policy(batch: TrajectoryBatch, game: GameSpec) -> NashPolicy:
    """Least-squares policy estimate from a demonstration batch.

    Requires the augmented regressor [X_t; 1'] to have full row rank
    (n_x + 1) at every t; with fewer than n_x + 1 samples, or degenerate
    states, the affine map is underdetermined and an EstimationError names
    the offending timestep and the achieved rank.
    """
    T, n_x = game.horizon, game.n_x
    if batch.horizon != T:
        raise EstimationError(f"batch horizon {batch.horizon} != game horizon {T}")
    n = batch.num_samples
    gains = [[None] * T for _ in range(game.num_players)]
    offsets = [[None] * T for _ in range(game.num_players)]
    for t in range(T):
        Z = np.vstack([batch.states[t], np.ones((1, n))])
        u_svd, s, vt = np.linalg.svd(Z, full_matrices=False)
        rank = int(np.sum(s > RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
        if rank < n_x + 1:
            raise EstimationError(
                f"rank-deficient regressor at t={t}: rank {rank} < {n_x + 1} "
                f"(need at least n_x + 1 linearly independent augmented samples)"
            )
        # One pseudoinverse shared by every player at this t.
        z_pinv = (vt.T / s) @ u_svd.T
        for i in range(game.num_players):
            W = -(batch.inputs[i][t] @ z_pinv)
            gains[i][t] = W[:, :n_x]
            offsets[i][t] = W[:, n_x]
    return NashPolicy(gains=tuple(map(tuple, gains)), offsets=tuple(map(tuple, offsets)))


def sample_complexity(
    sigma_max: float,
    sigma_min: float,
    p: int,
    accuracy: float,
    confidence: float,
    subgaussian_param: float,
    regressor_bound: float = 1.0,
    gram_matrix: np.ndarray | None = None,
) -> SampleComplexityReport:
    """Evaluate the sample-size bound n(accuracy, confidence).

    N1     = 8 a^2 d_noise^2 / (accuracy^2 sigma_min^2) * log(p / confidence)
    N_rand = (4/3) (6 sigma_max + sigma_min)(p a^2 + sigma_max) / sigma_min^2
             * log(p / confidence)

    with a = regressor_bound and d_noise = subgaussian_param. The noise
    scale and the confidence level play distinct roles (quadratic numerator
    versus logarithm) and are therefore separate parameters. The log factor
    carries the union bound over the p retained regressor directions.
    """
    if sigma_min <= 0:
        raise EstimationError("degenerate regressor distribution (sigma_min <= 0)")
    if not (0 < confidence < 1):
        raise EstimationError(f"confidence must be in (0, 1), got {confidence}")
    if accuracy <= 0:
        raise EstimationError(f"accuracy must be > 0, got {accuracy}")
    if p < 1:
        raise EstimationError(f"rank p must be >= 1, got {p}")
    log_term = math.log(p / confidence)
    a2 = regressor_bound ** 2
    N1 = 8.0 * a2 * subgaussian_param ** 2 / (accuracy ** 2 * sigma_min ** 2) * log_term
    N_rand = (
        (4.0 / 3.0)
        * (6.0 * sigma_max + sigma_min)
        * (p * a2 + sigma_max)
        / sigma_min ** 2
        * log_term
    )
    return SampleComplexityReport(
        sigma_max=float(sigma_max),
        sigma_min=float(sigma_min),
        p=int(p),
        regressor_bound=float(regressor_bound),
        subgaussian_param=float(subgaussian_param),
        confidence=float(confidence),
        accuracy=float(accuracy),
        N1=N1,
        N_rand=N_rand,
        n_required=max(1, math.ceil(max(N1, N_rand))),
        gram_matrix=gram_matrix,
    )


def policy_gap(a: NashPolicy, b: NashPolicy) -> dict[str, float]:
    """Worst-case per-(player, t) distance between two policies.

    Measures ||[K, alpha]_a - [K, alpha]_b|| on the stacked (n_u, n_x+1)
    blocks and reports both Frobenius and spectral norms (the bound's norm
    is not pinned down; callers that need one scalar use 'fro').
    """
    fro = spec = 0.0
    for ka, aa, kb, ab in zip(a.gains, a.offsets, b.gains, b.offsets):
        for t in range(len(ka)):
            diff = np.hstack([ka[t] - kb[t], (aa[t] - ab[t])[:, None]])
            fro = max(fro, float(np.linalg.norm(diff)))
            spec = max(spec, float(np.linalg.norm(diff, 2)))
    return {"fro": fro, "spectral": spec}
