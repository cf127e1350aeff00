"""Data model for finite-horizon linear-quadratic Gaussian (LQG) games.

Conventions used by every module in this package:

* Dynamics: ``x_{t+1} = A_t x_t + sum_i B_t^i u_t^i + w_t`` for
  ``t = 0..T-1``, with ``x_0 ~ N(mu0, chi0)`` and ``w_t ~ N(0, Sigma_t)``.
* Player ``i`` minimizes the expected cost

      J^i = E[ sum_{t=0}^{T-1}  x_{t+1}' Q_{t+1}^i x_{t+1}
                               + 2 l_{t+1}^i' x_{t+1}
                               + u_t^i' R_t^i u_t^i ].

  The linear state weight enters with a factor of two; this is the gradient
  convention under which the value recursion has quadratic part ``P_t`` and
  linear part ``zeta_t`` with terminal values exactly ``Q_T`` and ``l_T``
  and no stray halves anywhere. A tracking term ``||x - g||^2`` is encoded
  as ``Q = I, l = -g``. There is no stage cost on ``x_0``.
* Storage offset: ``cost_Q[i][k]`` and ``cost_l[i][k]`` weight the state
  ``x_{k+1}`` (k = 0..T-1) while ``cost_R[i][k]`` weights the input
  ``u_k``. Functions document time indices in these terms.
* Players are numbered 1..N in messages and CSV output, 0-based in arrays.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass

import numpy as np

_SYM_TOL = 1e-10
_EIG_TOL = -1e-10


class GameValidationError(ValueError):
    """Raised when a game config or spec violates the documented schema.

    The message always starts with the offending field path, for example
    ``cost_R[player 2][t=3]: R must be diagonal``.
    """


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


def _check_finite(arr: np.ndarray, path: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise GameValidationError(f"{path}: non-finite entries")
    return arr


def _check_shape(arr: np.ndarray, shape: tuple[int, ...], path: str) -> None:
    if arr.shape != shape:
        raise GameValidationError(f"{path}: expected shape {shape}, got {arr.shape}")


def _check_cov(mat: np.ndarray, path: str) -> None:
    sym_dev = float(np.abs(mat - mat.T).max(initial=0.0))
    if sym_dev > _SYM_TOL:
        raise GameValidationError(f"{path}: not symmetric (max deviation {sym_dev:.3e})")
    w = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    if w.min(initial=0.0) < _EIG_TOL:
        raise GameValidationError(f"{path}: not PSD (min eigenvalue {w.min():.3e})")


@dataclass(frozen=True)
class GameSpec:
    """Complete description of one LQG game.

    Parameters
    ----------
    num_players : int
        N >= 1.
    horizon : int
        T >= 1 timesteps.
    state_dims : tuple of int
        Per-player state dimensions; the joint state dimension is their sum.
        Zero entries are legal (a player may act on a state owned entirely
        by others); only the total enters the mathematics.
    input_dim : int
        Common per-player input dimension.
    dynamics_A : tuple of T arrays (n_x, n_x)
        A_t for t = 0..T-1.
    dynamics_B : per player, tuple of T arrays (n_x, n_u)
        B_t^i for t = 0..T-1.
    cost_Q : per player, tuple of T arrays (n_x, n_x)
        cost_Q[i][k] weights x_{k+1}.
    cost_l : per player, tuple of T vectors (n_x,)
        cost_l[i][k] weights x_{k+1} (with the factor-2 convention above).
    cost_R : per player, tuple of T arrays (n_u, n_u)
        cost_R[i][k] weights u_k; must be diagonal with positive diagonal.
    init_mean, init_cov : (n_x,) vector and (n_x, n_x) PSD matrix
        Distribution of x_0.
    process_cov : tuple of T arrays (n_x, n_x)
        Sigma_t, PSD.

    All arrays are copied and made read-only; instances are immutable and
    safe to share across threads.
    """

    num_players: int
    horizon: int
    state_dims: tuple[int, ...]
    input_dim: int
    dynamics_A: tuple[np.ndarray, ...]
    dynamics_B: tuple[tuple[np.ndarray, ...], ...]
    cost_Q: tuple[tuple[np.ndarray, ...], ...]
    cost_l: tuple[tuple[np.ndarray, ...], ...]
    cost_R: tuple[tuple[np.ndarray, ...], ...]
    init_mean: np.ndarray
    init_cov: np.ndarray
    process_cov: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        N, T = self.num_players, self.horizon
        if N < 1:
            raise GameValidationError(f"num_players: must be >= 1, got {N}")
        if T < 1:
            raise GameValidationError(f"horizon: must be >= 1, got {T}")
        dims = tuple(int(d) for d in self.state_dims)
        if len(dims) != N or any(d < 0 for d in dims) or sum(dims) < 1:
            raise GameValidationError(
                f"state_dims: need {N} nonnegative per-player dimensions with a "
                f"positive total, got {self.state_dims}"
            )
        object.__setattr__(self, "state_dims", dims)
        n_x = sum(dims)
        n_u = int(self.input_dim)
        if n_u < 1:
            raise GameValidationError(f"input_dim: must be >= 1, got {self.input_dim}")
        object.__setattr__(self, "input_dim", n_u)

        def seq(name, raw, shape):
            if len(raw) != T:
                raise GameValidationError(f"{name}: expected {T} entries, got {len(raw)}")
            out = []
            for t, entry in enumerate(raw):
                arr = _freeze(entry)
                path = f"{name}[t={t}]"
                _check_shape(arr, shape, path)
                _check_finite(arr, path)
                out.append(arr)
            return tuple(out)

        def per_player(name, raw, shape):
            if len(raw) != N:
                raise GameValidationError(f"{name}: expected {N} players, got {len(raw)}")
            return tuple(
                seq(f"{name}[player {i + 1}]", raw[i], shape) for i in range(N)
            )

        object.__setattr__(self, "dynamics_A", seq("dynamics_A", self.dynamics_A, (n_x, n_x)))
        object.__setattr__(self, "dynamics_B", per_player("dynamics_B", self.dynamics_B, (n_x, n_u)))
        object.__setattr__(self, "cost_Q", per_player("cost_Q", self.cost_Q, (n_x, n_x)))
        object.__setattr__(self, "cost_l", per_player("cost_l", self.cost_l, (n_x,)))
        object.__setattr__(self, "cost_R", per_player("cost_R", self.cost_R, (n_u, n_u)))

        mean = _freeze(self.init_mean)
        _check_shape(mean, (n_x,), "mu0")
        _check_finite(mean, "mu0")
        object.__setattr__(self, "init_mean", mean)
        cov = _freeze(self.init_cov)
        _check_shape(cov, (n_x, n_x), "chi0")
        _check_finite(cov, "chi0")
        _check_cov(cov, "chi0")
        object.__setattr__(self, "init_cov", cov)
        object.__setattr__(self, "process_cov", seq("Sigma", self.process_cov, (n_x, n_x)))
        for t, sig in enumerate(self.process_cov):
            _check_cov(sig, f"Sigma[t={t}]")

        for i in range(N):
            for t in range(T):
                R = self.cost_R[i][t]
                off = R - np.diag(np.diag(R))
                if np.any(off != 0.0):
                    raise GameValidationError(
                        f"cost_R[player {i + 1}][t={t}]: R must be diagonal"
                    )
                if np.any(np.diag(R) <= 0.0):
                    raise GameValidationError(
                        f"cost_R[player {i + 1}][t={t}]: diagonal must be strictly positive"
                    )
                gap = np.abs(self.cost_Q[i][t] - self.cost_Q[i][t].T).max(initial=0.0)
                if gap > _SYM_TOL:
                    warnings.warn(
                        f"cost_Q[player {i + 1}][t={t}] is asymmetric "
                        f"(max deviation {gap:.3e}); only the symmetric part affects the cost",
                        stacklevel=2,
                    )

    @property
    def n_x(self) -> int:
        return sum(self.state_dims)

    @property
    def n_u(self) -> int:
        return self.input_dim

    @property
    def theta_dim(self) -> int:
        """Length of the stacked cost-parameter vector (vec Q, l, vec R, 1)."""
        n_x, n_u = self.n_x, self.n_u
        return n_x * n_x + n_x + n_u * n_u + 1


@dataclass(frozen=True)
class NashPolicy:
    """Affine feedback policies u_t^i = -K_t^i x_t - alpha_t^i.

    gains[i][t] is (n_u, n_x); offsets[i][t] is (n_u,). Entries are copied
    and frozen. Structural compatibility with a specific game is checked by
    :func:`validate_policy`, not here.
    """

    gains: tuple[tuple[np.ndarray, ...], ...]
    offsets: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self) -> None:
        if len(self.gains) != len(self.offsets):
            raise GameValidationError(
                f"policy: {len(self.gains)} gain rows vs {len(self.offsets)} offset rows"
            )
        gains, offsets = [], []
        for i, (ks, als) in enumerate(zip(self.gains, self.offsets)):
            if len(ks) != len(als):
                raise GameValidationError(
                    f"policy[player {i + 1}]: {len(ks)} gains vs {len(als)} offsets"
                )
            gains.append(tuple(_freeze(k) for k in ks))
            offsets.append(tuple(_freeze(a) for a in als))
        object.__setattr__(self, "gains", tuple(gains))
        object.__setattr__(self, "offsets", tuple(offsets))

    @property
    def num_players(self) -> int:
        return len(self.gains)

    @property
    def horizon(self) -> int:
        return len(self.gains[0]) if self.gains else 0


@dataclass(frozen=True)
class ValueRecursion:
    """Backward value parameters of a solved game.

    value_quadratic[i][t] = P_t^i for t = 0..T and value_linear[i][t] =
    zeta_t^i, with P_T = Q_T and zeta_T = l_T exactly; the t = 0 entries are
    the pure cost-to-go (no stage term on x_0). closed_loop[t] = F_t =
    A_t - sum_j B_t^j K_t^j, with per-t invertibility flags and condition
    numbers for the downstream invertibility assumption.
    """

    value_quadratic: tuple[tuple[np.ndarray, ...], ...]
    value_linear: tuple[tuple[np.ndarray, ...], ...]
    closed_loop: tuple[np.ndarray, ...]
    cl_invertible: tuple[bool, ...]
    cl_condition: tuple[float, ...]


@dataclass(frozen=True)
class TrajectoryBatch:
    """n sampled trajectories under one policy.

    states[t] is (n_x, n) for t = 0..T; inputs[i][t] is (n_u, n) for
    t = 0..T-1 and holds the *recorded* inputs (true input plus observation
    noise of scale obs_noise_sigma). base_seed is the seed the batch was
    generated from; sample s always uses the stream derived from
    (base_seed, s).
    """

    num_samples: int
    states: tuple[np.ndarray, ...]
    inputs: tuple[tuple[np.ndarray, ...], ...]
    obs_noise_sigma: float
    base_seed: int

    def __post_init__(self) -> None:
        n = self.num_samples
        if n < 1:
            raise GameValidationError(f"num_samples: must be >= 1, got {n}")
        states = tuple(_freeze(x) for x in self.states)
        inputs = tuple(tuple(_freeze(u) for u in per) for per in self.inputs)
        for t, x in enumerate(states):
            if x.shape[1] != n:
                raise GameValidationError(f"states[t={t}]: {x.shape[1]} columns, expected {n}")
            _check_finite(x, f"states[t={t}]")
        for i, per in enumerate(inputs):
            for t, u in enumerate(per):
                if u.shape[1] != n:
                    raise GameValidationError(
                        f"inputs[player {i + 1}][t={t}]: {u.shape[1]} columns, expected {n}"
                    )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)

    @property
    def horizon(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True)
class IdentificationResult:
    """Output of the backward cost-identification sweep.

    All per-time containers are indexed by k = t-1 for t = 1..T (same offset
    as GameSpec cost storage). theta[i][k] has length L = n_x^2+n_x+n_u^2+1
    and is partitioned as (vec Q_t, l_t, vec R_{t-1}, 1); structurally
    removed entries (off-diagonal R) are present as exact zeros. residuals
    holds ||M theta||^2, active_sets the 0-based theta indices held at tau,
    systems the assembled M matrices, and delta_bar / omega_bar the
    recursion terms the systems were built with. identified_Q is
    symmetrized; asymmetry[i][k] records the Frobenius norm of the discarded
    skew part. degenerate lists (player, t) pairs whose input matrix was
    identically zero (their R entries sit at the constraint/min-norm
    defaults).
    """

    theta: tuple[tuple[np.ndarray, ...], ...]
    residuals: tuple[tuple[float, ...], ...]
    active_sets: tuple[tuple[tuple[int, ...], ...], ...]
    systems: tuple[tuple[np.ndarray, ...], ...]
    delta_bar: tuple[tuple[np.ndarray, ...], ...]
    omega_bar: tuple[tuple[np.ndarray, ...], ...]
    tau: float
    strict_positivity: bool
    identified_Q: tuple[tuple[np.ndarray, ...], ...]
    identified_l: tuple[tuple[np.ndarray, ...], ...]
    identified_R: tuple[tuple[np.ndarray, ...], ...]
    asymmetry: tuple[tuple[float, ...], ...]
    degenerate: tuple[tuple[int, int], ...]

    @property
    def max_residual(self) -> float:
        return max((r for per in self.residuals for r in per), default=0.0)


def validate_policy(game: GameSpec, policy: NashPolicy) -> list[str]:
    """Return structural violations of ``policy`` against ``game``.

    Empty list means compatible. Messages are 1-based in the player index,
    e.g. ``"player 1, t=0: gain shape (2, 2), expected (1, 2)"``.
    """
    issues: list[str] = []
    if policy.num_players != game.num_players:
        issues.append(
            f"policy has {policy.num_players} players, game has {game.num_players}"
        )
    shape = (game.n_u, game.n_x)
    for i, (ks, als) in enumerate(zip(policy.gains, policy.offsets)):
        if len(ks) != game.horizon:
            issues.append(
                f"player {i + 1}: {len(ks)} policy steps, game horizon is {game.horizon}"
            )
        for t, k in enumerate(ks):
            if k.shape != shape:
                issues.append(f"player {i + 1}, t={t}: gain shape {k.shape}, expected {shape}")
            elif not np.all(np.isfinite(k)):
                issues.append(f"player {i + 1}, t={t}: non-finite gain")
        for t, a in enumerate(als):
            if a.shape != (game.n_u,):
                issues.append(
                    f"player {i + 1}, t={t}: offset shape {a.shape}, expected {(game.n_u,)}"
                )
            elif not np.all(np.isfinite(a)):
                issues.append(f"player {i + 1}, t={t}: non-finite offset")
    return issues


# --- JSON (de)serialization -------------------------------------------------

def _expand(raw, per_step_ndim: int, horizon: int, path: str) -> list:
    """Broadcast a constant entry across t, or pass through a per-t list."""
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise GameValidationError(f"{path}: ragged or non-numeric entries ({exc})") from exc
    if arr.ndim == per_step_ndim:
        return [arr] * horizon
    if arr.ndim == per_step_ndim + 1:
        if arr.shape[0] != horizon:
            raise GameValidationError(
                f"{path}: got {arr.shape[0]} timesteps, expected {horizon}"
            )
        return list(arr)
    raise GameValidationError(
        f"{path}: expected a constant ({per_step_ndim}-d) or per-t ({per_step_ndim + 1}-d) array"
    )


def game_from_dict(cfg: dict) -> GameSpec:
    """Build a validated GameSpec from a config dictionary.

    Schema keys: num_players, horizon, state_dims, input_dim, A, B, Q, l, R,
    mu0, chi0, Sigma. A, Sigma, and each per-player B/Q/l/R entry may be
    given once (constant over time) or as a length-T array. An optional
    "description" string is ignored.
    """
    known = {
        "num_players", "horizon", "state_dims", "input_dim", "A", "B", "Q",
        "l", "R", "mu0", "chi0", "Sigma", "description",
    }
    extra = set(cfg) - known
    if extra:
        raise GameValidationError(f"config: unknown keys {sorted(extra)}")
    missing = known - {"description"} - set(cfg)
    if missing:
        raise GameValidationError(f"config: missing keys {sorted(missing)}")

    try:
        N = int(cfg["num_players"])
        T = int(cfg["horizon"])
    except (TypeError, ValueError) as exc:
        raise GameValidationError(f"config: non-integer num_players/horizon ({exc})") from exc

    def per_player(key, per_step_ndim):
        raw = cfg[key]
        if not isinstance(raw, (list, tuple)) or len(raw) != N:
            raise GameValidationError(f"{key}: expected one entry per player ({N})")
        return [
            _expand(raw[i], per_step_ndim, T, f"{key}[player {i + 1}]") for i in range(N)
        ]

    return GameSpec(
        num_players=N,
        horizon=T,
        state_dims=tuple(int(d) for d in cfg["state_dims"]),
        input_dim=int(cfg["input_dim"]),
        dynamics_A=_expand(cfg["A"], 2, T, "A"),
        dynamics_B=per_player("B", 2),
        cost_Q=per_player("Q", 2),
        cost_l=per_player("l", 1),
        cost_R=per_player("R", 2),
        init_mean=np.asarray(cfg["mu0"], dtype=float),
        init_cov=np.asarray(cfg["chi0"], dtype=float),
        process_cov=_expand(cfg["Sigma"], 2, T, "Sigma"),
    )


def game_to_dict(game: GameSpec) -> dict:
    """Config dictionary for ``game`` in the fully expanded per-t form."""
    return {
        "num_players": game.num_players,
        "horizon": game.horizon,
        "state_dims": list(game.state_dims),
        "input_dim": game.input_dim,
        "A": [a.tolist() for a in game.dynamics_A],
        "B": [[b.tolist() for b in per] for per in game.dynamics_B],
        "Q": [[q.tolist() for q in per] for per in game.cost_Q],
        "l": [[v.tolist() for v in per] for per in game.cost_l],
        "R": [[r.tolist() for r in per] for per in game.cost_R],
        "mu0": game.init_mean.tolist(),
        "chi0": game.init_cov.tolist(),
        "Sigma": [s.tolist() for s in game.process_cov],
    }


def load_game(path) -> GameSpec:
    """Load and validate a game config JSON file."""
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise GameValidationError(f"{path}: top-level JSON value must be an object")
    return game_from_dict(cfg)


def save_game(game: GameSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(game_to_dict(game), fh, indent=2, sort_keys=True)
        fh.write("\n")


def policy_from_dict(payload: dict) -> NashPolicy:
    if not isinstance(payload, dict) or "K" not in payload or "alpha" not in payload:
        raise GameValidationError('policy: expected JSON object with "K" and "alpha"')
    gains = [[np.asarray(k, dtype=float) for k in per] for per in payload["K"]]
    offsets = [[np.asarray(a, dtype=float) for a in per] for per in payload["alpha"]]
    return NashPolicy(gains=tuple(map(tuple, gains)), offsets=tuple(map(tuple, offsets)))


def policy_to_dict(policy: NashPolicy) -> dict:
    return {
        "K": [[k.tolist() for k in per] for per in policy.gains],
        "alpha": [[a.tolist() for a in per] for per in policy.offsets],
    }


def load_policy(path) -> NashPolicy:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameValidationError(f"{path}: not valid JSON ({exc})") from exc
    return policy_from_dict(payload)


def save_policy(policy: NashPolicy, path) -> None:
    with open(path, "w") as fh:
        json.dump(policy_to_dict(policy), fh, indent=2, sort_keys=True)
        fh.write("\n")


def with_costs(
    game: GameSpec,
    cost_Q,
    cost_l,
    cost_R,
) -> GameSpec:
    """A copy of ``game`` with the cost tensors replaced (dynamics/noise kept)."""
    return dataclasses.replace(game, cost_Q=cost_Q, cost_l=cost_l, cost_R=cost_R)
