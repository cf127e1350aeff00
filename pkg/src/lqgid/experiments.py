"""Reproducible end-to-end studies and the CSV artifacts they emit.

Three runners cover the standard protocols:

* run_randomized_study: many random games, identification from the exact
  equilibrium policy, per-episode residual/deviation rows plus expected
  trajectories (true vs recovered).
* run_sample_sweep: one game, demonstrations of increasing batch size,
  policy estimation, identification, round-trip errors per repetition.
* run_scenario: the sweep protocol on a fixed scenario game, aggregated
  into a summary table (mean and standard deviation per batch size)
  plus expected-trajectory series for plotting.

Everything is a pure function of (config, seed): per-episode RNG streams
are derived from (base_seed, episode index), so reruns produce
byte-identical CSVs regardless of execution order. Floats are written with
repr, which round-trips exactly.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .cost_identifier import (
    IdentificationError,
    identify_costs,
    verify_roundtrip,
)
from .forward_solver import ExistenceError, solve_nash
from .game_model import GameSpec, with_costs
from .policy_estimator import EstimationError, estimate_policy, policy_gap
from .simulator import expected_trajectory, rollout

_KINDS = ("randomized", "scenario", "sweep")


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs shared by the study runners; see module docstring.

    samples must be ascending. The generator ranges apply to random_game:
    diagonal Q and R entries are uniform on q_range / r_range and the
    linear-term weights rho1, rho2 uniform on rho_range.
    """

    kind: str = "randomized"
    episodes: int = 100
    samples: tuple[int, ...] = (20, 100)
    repetitions: int = 10
    base_seed: int = 7
    obs_noise_sigma: float = 0.01
    tau: float = 1e-3
    out_dir: str = "."
    q_range: tuple[float, float] = (0.1, 2.0)
    r_range: tuple[float, float] = (0.1, 2.0)
    rho_range: tuple[float, float] = (0.1, 1.0)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.episodes < 1 or self.repetitions < 1:
            raise ValueError("episodes and repetitions must be >= 1")
        samples = tuple(int(n) for n in self.samples)
        if any(n < 1 for n in samples) or list(samples) != sorted(samples):
            raise ValueError(f"samples must be ascending positive ints, got {self.samples}")
        object.__setattr__(self, "samples", samples)
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.obs_noise_sigma < 0:
            raise ValueError(f"obs_noise_sigma must be >= 0, got {self.obs_noise_sigma}")
        for name in ("q_range", "r_range", "rho_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name}: need 0 < low <= high, got ({lo}, {hi})")


def _difference_basis(n_x: int) -> tuple[np.ndarray, np.ndarray]:
    """First two signed-difference directions, truncated to dimension n_x."""
    v1 = np.zeros(n_x)
    v1[0] = 1.0
    if n_x > 1:
        v1[1] = -1.0
    v2 = np.zeros(n_x)
    if n_x > 1:
        v2[1] = 1.0
    if n_x > 2:
        v2[2] = -1.0
    return v1, v2


def random_game(
    rng: np.random.Generator,
    num_players: int = 3,
    state_dim: int = 3,
    horizon: int = 20,
    q_range: tuple[float, float] = (0.1, 2.0),
    r_range: tuple[float, float] = (0.1, 2.0),
    rho_range: tuple[float, float] = (0.1, 1.0),
) -> GameSpec:
    """Canonical random game: identity dynamics, one input channel each.

    A_t = I, B_t^i = e_i (so state_dim >= num_players), per-(player, t)
    diagonal Q and R with uniform positive entries, and linear terms
    l = rho1 v1 + rho2 v2 built from signed-difference directions with
    uniform positive weights. mu0 ~ N(0, I), chi0 = I, Sigma_t = 0.01 I.
    Draw order is fixed (Q, l weights, R per player-major loop, then mu0),
    so a given generator state always yields the same game.
    """
    if state_dim < num_players:
        raise ValueError(
            f"canonical layout needs state_dim >= num_players, got {state_dim} < {num_players}"
        )
    N, T, n_x = num_players, horizon, state_dim
    v1, v2 = _difference_basis(n_x)
    eye = np.eye(n_x)
    A = [eye] * T
    B = [[eye[:, [i]] for _ in range(T)] for i in range(N)]
    Q, l, R = [], [], []
    for _ in range(N):
        Qi, li, Ri = [], [], []
        for _ in range(T):
            Qi.append(np.diag(rng.uniform(*q_range, size=n_x)))
            rho1, rho2 = rng.uniform(*rho_range, size=2)
            li.append(rho1 * v1 + rho2 * v2)
            Ri.append(np.diag(rng.uniform(*r_range, size=1)))
        Q.append(Qi)
        l.append(li)
        R.append(Ri)
    mu0 = rng.standard_normal(n_x)
    dims = [1] * N
    dims[0] += n_x - N
    return GameSpec(
        num_players=N,
        horizon=T,
        state_dims=tuple(dims),
        input_dim=1,
        dynamics_A=A,
        dynamics_B=B,
        cost_Q=Q,
        cost_l=l,
        cost_R=R,
        init_mean=mu0,
        init_cov=eye,
        process_cov=[0.01 * eye] * T,
    )


def make_intersection_game(horizon: int = 20, dt: float = 0.25) -> GameSpec:
    """Bundled scenario: three planar double-integrator vehicles crossing.

    Inspired by a driving-style interaction study, not any published
    parameter set. Vehicle 1 travels west-to-east, vehicle 2 south-to-
    north, vehicle 3 east-to-west on a laterally offset lane. Each player
    tracks its own goal with a position weight that ramps up over the
    horizon, damps velocity toward the average speed needed, and carries a
    pairwise separation term that peaks mid-horizon (a soft repulsion
    encoded as negative curvature on relative positions, which couples the
    players' costs and makes the equilibrium genuinely interactive).
    """
    T = horizon
    n_per, n_u, N = 4, 2, 3
    n_x = N * n_per
    a_block = np.array(
        [[1, 0, dt, 0], [0, 1, 0, dt], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float
    )
    b_block = np.array(
        [[dt * dt / 2, 0], [0, dt * dt / 2], [dt, 0], [0, dt]], dtype=float
    )
    A = np.zeros((n_x, n_x))
    for i in range(N):
        A[i * n_per : (i + 1) * n_per, i * n_per : (i + 1) * n_per] = a_block
    B = []
    for i in range(N):
        Bi = np.zeros((n_x, n_u))
        Bi[i * n_per : (i + 1) * n_per, :] = b_block
        B.append(Bi)

    starts = np.array([[-2.0, 0.0], [0.0, -2.0], [2.0, 0.4]])
    goals = np.array([[2.0, 0.0], [0.0, 2.0], [-2.0, 0.4]])
    goal_vel = (goals - starts) / (T * dt)

    q_vel = 0.2
    r_weight = 0.4
    sep_peak = 0.12

    def pos_weight(t: int) -> float:
        return 0.5 + 1.5 * (t / T) ** 2

    def sep_weight(t: int) -> float:
        return sep_peak * math.exp(-(((t - T / 2) / (0.15 * T)) ** 2))

    def pos_slice(i: int) -> slice:
        return slice(i * n_per, i * n_per + 2)

    Q = [[] for _ in range(N)]
    l = [[] for _ in range(N)]
    R = [[] for _ in range(N)]
    for i in range(N):
        for k in range(T):
            t = k + 1  # cost_Q[i][k] weights x_{k+1}
            Qt = np.zeros((n_x, n_x))
            qp = pos_weight(t)
            Qt[pos_slice(i), pos_slice(i)] = qp * np.eye(2)
            Qt[i * n_per + 2 : (i + 1) * n_per, i * n_per + 2 : (i + 1) * n_per] = (
                q_vel * np.eye(2)
            )
            w = sep_weight(t)
            for j in range(N):
                if j == i:
                    continue
                Qt[pos_slice(i), pos_slice(i)] -= w * np.eye(2)
                Qt[pos_slice(j), pos_slice(j)] -= w * np.eye(2)
                Qt[pos_slice(i), pos_slice(j)] += w * np.eye(2)
                Qt[pos_slice(j), pos_slice(i)] += w * np.eye(2)
            lt = np.zeros(n_x)
            lt[pos_slice(i)] = -qp * goals[i]
            lt[i * n_per + 2 : (i + 1) * n_per] = -q_vel * goal_vel[i]
            Q[i].append(Qt)
            l[i].append(lt)
            R[i].append(r_weight * np.eye(n_u))

    mu0 = np.zeros(n_x)
    for i in range(N):
        mu0[i * n_per : i * n_per + 2] = starts[i]
        mu0[i * n_per + 2 : (i + 1) * n_per] = goal_vel[i]
    return GameSpec(
        num_players=N,
        horizon=T,
        state_dims=(n_per,) * N,
        input_dim=n_u,
        dynamics_A=[A] * T,
        dynamics_B=[[B[i]] * T for i in range(N)],
        cost_Q=Q,
        cost_l=l,
        cost_R=R,
        init_mean=mu0,
        init_cov=0.01 * np.eye(n_x),
        process_cov=[0.0025 * np.eye(n_x)] * T,
    )


def _subseed(base_seed: int, *parts: int) -> int:
    """Deterministic child seed for one (n, rep) cell."""
    seq = np.random.SeedSequence([int(base_seed), *[int(p) for p in parts]])
    return int(seq.generate_state(1, np.uint64)[0])


def _write_csv(path: str, header: list[str], rows: list[tuple]) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(float(v)) if isinstance(v, float) else v for v in row]
            )


def _trajectory_rows(states, inputs) -> list[tuple]:
    """Rows (t, kind, player, dim, value); player blank for states."""
    rows = []
    for t, x in enumerate(states):
        for dim, val in enumerate(x):
            rows.append((t, "state", "", dim, float(val)))
    for i, per_player in enumerate(inputs):
        for t, u in enumerate(per_player):
            for dim, val in enumerate(u):
                rows.append((t, "input", i + 1, dim, float(val)))
    return rows


@dataclass(frozen=True)
class StudySummary:
    episodes: int
    failures: tuple[tuple[int, str], ...]
    residuals_path: str
    trajectories_path: str
    max_residual: float
    max_policy_err: float
    max_state_err: float
    max_input_err: float


def run_randomized_study(cfg: ExperimentConfig) -> StudySummary:
    """Random games, identification from exact policies, per-episode rows.

    Writes residuals.csv (episode,max_residual,policy_err,state_err,
    input_err) and trajectories.csv (episode,t,kind,series,player,dim,
    value with series true/recovered) under cfg.out_dir. Games whose
    equilibrium does not exist are redrawn up to 10 times; episodes that
    still fail are excluded from the CSVs and reported in failures.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    res_rows: list[tuple] = []
    traj_rows: list[tuple] = []
    failures: list[tuple[int, str]] = []
    maxima = {"res": 0.0, "pol": 0.0, "sta": 0.0, "inp": 0.0}
    for ep in range(cfg.episodes):
        rng = np.random.default_rng([cfg.base_seed, ep])
        game = policy = None
        for _ in range(11):
            candidate = random_game(
                rng,
                q_range=cfg.q_range,
                r_range=cfg.r_range,
                rho_range=cfg.rho_range,
            )
            try:
                policy, _, _ = solve_nash(candidate)
            except ExistenceError:
                continue
            game = candidate
            break
        if game is None:
            failures.append((ep, "no equilibrium after 10 redraws"))
            continue
        try:
            ident = identify_costs(game, policy, tau=cfg.tau)
        except IdentificationError as exc:
            failures.append((ep, str(exc)))
            continue
        report = verify_roundtrip(game, ident, policy)
        if report.existence_failed:
            failures.append((ep, "identified game has no equilibrium"))
            continue
        policy_err = float(max(report.k_err.max(), report.alpha_err.max()))
        state_err = float(report.x_err.max())
        input_err = float(report.u_err.max())
        res_rows.append(
            (ep, float(ident.max_residual), policy_err, state_err, input_err)
        )
        maxima["res"] = max(maxima["res"], ident.max_residual)
        maxima["pol"] = max(maxima["pol"], policy_err)
        maxima["sta"] = max(maxima["sta"], state_err)
        maxima["inp"] = max(maxima["inp"], input_err)

        states, inputs = expected_trajectory(game, policy)
        rebuilt = with_costs(
            game, ident.identified_Q, ident.identified_l, ident.identified_R
        )
        policy2, _, _ = solve_nash(rebuilt)
        states2, inputs2 = expected_trajectory(rebuilt, policy2)
        for series, (st, inp) in (("true", (states, inputs)), ("recovered", (states2, inputs2))):
            for t, kind, player, dim, val in _trajectory_rows(st, inp):
                traj_rows.append((ep, t, kind, series, player, dim, val))

    res_path = os.path.join(cfg.out_dir, "residuals.csv")
    traj_path = os.path.join(cfg.out_dir, "trajectories.csv")
    _write_csv(
        res_path,
        ["episode", "max_residual", "policy_err", "state_err", "input_err"],
        res_rows,
    )
    _write_csv(
        traj_path,
        ["episode", "t", "kind", "series", "player", "dim", "value"],
        traj_rows,
    )
    return StudySummary(
        episodes=cfg.episodes,
        failures=tuple(failures),
        residuals_path=res_path,
        trajectories_path=traj_path,
        max_residual=maxima["res"],
        max_policy_err=maxima["pol"],
        max_state_err=maxima["sta"],
        max_input_err=maxima["inp"],
    )


def _identification_metrics(game, policy_for_ident, reference_policy, tau):
    """(theta_err_proxy, mean_k, mean_alpha, mean_x, mean_u) vs reference.

    theta_err_proxy is the worst per-(player, t) policy gap after the
    round trip; identified costs themselves are non-unique, so the
    re-solved policy is the comparable object.
    """
    ident = identify_costs(game, policy_for_ident, tau=tau)
    report = verify_roundtrip(game, ident, reference_policy)
    proxy = float(max(report.k_err.max(), report.alpha_err.max()))
    return (
        proxy,
        report.mean_k,
        report.mean_alpha,
        report.mean_x,
        report.mean_u,
        ident,
        report,
    )


@dataclass(frozen=True)
class SweepResult:
    path: str
    rows: tuple[tuple, ...]
    failures: tuple[tuple[int, int, str], ...]


SWEEP_HEADER = [
    "n", "rep", "policy_err", "theta_err_proxy", "k_err", "alpha_err", "x_err", "u_err",
]


def run_sample_sweep(
    cfg: ExperimentConfig,
    game: GameSpec | None = None,
    out_path: str | None = None,
) -> SweepResult:
    """Estimation + identification error versus demonstration count.

    Row n=0, rep=0 is the exact-policy baseline (no estimation). For each
    n in cfg.samples and each repetition, n trajectories are simulated
    with observation noise cfg.obs_noise_sigma, the policy is re-estimated,
    costs identified from the estimate, and all errors measured against
    the true policy. Failed repetitions (rank-deficient regressors at
    small n, existence failures downstream) keep their row with inf
    sentinels and are listed in failures.
    """
    if game is None:
        game = random_game(np.random.default_rng([cfg.base_seed, 1000003]))
    if out_path is None:
        os.makedirs(cfg.out_dir, exist_ok=True)
        out_path = os.path.join(cfg.out_dir, "sweep.csv")
    policy, _, _ = solve_nash(game)
    rows: list[tuple] = []
    failures: list[tuple[int, int, str]] = []

    proxy, mk, ma, mx, mu, _, _ = _identification_metrics(game, policy, policy, cfg.tau)
    rows.append((0, 0, 0.0, proxy, mk, ma, mx, mu))

    inf = float("inf")
    for n in cfg.samples:
        for rep in range(cfg.repetitions):
            seed = _subseed(cfg.base_seed, n, rep)
            batch = rollout(game, policy, n, seed, cfg.obs_noise_sigma)
            try:
                estimated = estimate_policy(batch, game)
            except EstimationError as exc:
                failures.append((n, rep, str(exc)))
                rows.append((n, rep, inf, inf, inf, inf, inf, inf))
                continue
            policy_err = policy_gap(estimated, policy)["fro"]
            try:
                proxy, mk, ma, mx, mu, _, report = _identification_metrics(
                    game, estimated, policy, cfg.tau
                )
            except IdentificationError as exc:
                failures.append((n, rep, str(exc)))
                rows.append((n, rep, policy_err, inf, inf, inf, inf, inf))
                continue
            if report.existence_failed:
                failures.append((n, rep, "identified game has no equilibrium"))
            rows.append((n, rep, policy_err, proxy, mk, ma, mx, mu))

    _write_csv(out_path, SWEEP_HEADER, rows)
    return SweepResult(path=out_path, rows=tuple(rows), failures=tuple(failures))


@dataclass(frozen=True)
class ScenarioResult:
    summary_path: str
    trajectories_path: str
    metrics: dict = field(repr=False)
    failures: tuple[tuple[int, int, str], ...] = ()

    def median_metrics(self) -> dict:
        """Per-row medians of (K, alpha, x, u) across repetitions."""
        return {
            label: np.median(np.asarray(vals), axis=0) for label, vals in self.metrics.items()
        }


def run_scenario(
    cfg: ExperimentConfig,
    game: GameSpec,
    out_path: str | None = None,
) -> ScenarioResult:
    """Summary-table protocol on a fixed scenario game.

    Runs the exact-policy baseline and, per n in cfg.samples, repeated
    estimate-identify-verify cycles. Writes the summary table (one row per
    source: exact, then each n ascending; mean and std of the four error
    metrics across repetitions) and a trajectory CSV with series true,
    exact, and n=<n> (repetition 0) for plotting. metrics maps the row
    label to the (reps, 4) array behind it.
    """
    if out_path is None:
        os.makedirs(cfg.out_dir, exist_ok=True)
        out_path = os.path.join(cfg.out_dir, "table1.csv")
    policy, _, _ = solve_nash(game)
    failures: list[tuple[int, int, str]] = []
    metrics: dict = {}
    traj_rows: list[tuple] = []

    def series_rows(series: str, st, inp) -> list[tuple]:
        return [(series, t, kind, player, dim, val)
                for t, kind, player, dim, val in _trajectory_rows(st, inp)]

    states, inputs = expected_trajectory(game, policy)
    traj_rows += series_rows("true", states, inputs)

    def recovered_rows(ident, series: str) -> list[tuple]:
        rebuilt = with_costs(
            game, ident.identified_Q, ident.identified_l, ident.identified_R
        )
        try:
            pol2, _, _ = solve_nash(rebuilt)
        except ExistenceError:
            return []
        st, inp = expected_trajectory(rebuilt, pol2)
        return series_rows(series, st, inp)

    proxy, mk, ma, mx, mu, ident, _ = _identification_metrics(
        game, policy, policy, cfg.tau
    )
    metrics["exact"] = [(mk, ma, mx, mu)]
    traj_rows += recovered_rows(ident, "exact")

    inf = float("inf")
    for n in cfg.samples:
        per_rep = []
        for rep in range(cfg.repetitions):
            seed = _subseed(cfg.base_seed, n, rep)
            batch = rollout(game, policy, n, seed, cfg.obs_noise_sigma)
            try:
                estimated = estimate_policy(batch, game)
                proxy, mk, ma, mx, mu, ident, report = _identification_metrics(
                    game, estimated, policy, cfg.tau
                )
            except (EstimationError, IdentificationError) as exc:
                failures.append((n, rep, str(exc)))
                per_rep.append((inf, inf, inf, inf))
                continue
            if report.existence_failed:
                failures.append((n, rep, "identified game has no equilibrium"))
            per_rep.append((mk, ma, mx, mu))
            if rep == 0:
                traj_rows += recovered_rows(ident, f"n={n}")
        metrics[f"n={n}"] = per_rep

    rows: list[tuple] = []
    for label in ["exact"] + [f"n={n}" for n in cfg.samples]:
        arr = np.asarray(metrics[label], dtype=float)
        mean = arr.mean(axis=0)
        std = arr.std(axis=0)
        rows.append(
            (
                label,
                float(mean[0]), float(std[0]), float(mean[1]), float(std[1]),
                float(mean[2]), float(std[2]), float(mean[3]), float(std[3]),
            )
        )
    _write_csv(
        out_path,
        [
            "row",
            "mean_K", "std_K", "mean_alpha", "std_alpha",
            "mean_x", "std_x", "mean_u", "std_u",
        ],
        rows,
    )
    root, _ = os.path.splitext(out_path)
    traj_path = root + "_trajectories.csv"
    _write_csv(
        traj_path,
        ["series", "t", "kind", "player", "dim", "value"],
        traj_rows,
    )
    return ScenarioResult(
        summary_path=out_path,
        trajectories_path=traj_path,
        metrics={k: np.asarray(v, dtype=float) for k, v in metrics.items()},
        failures=tuple(failures),
    )
