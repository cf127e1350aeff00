"""Command-line entry points.

Subcommands mirror the library layers: solve / simulate / estimate /
identify / verify operate on single games, while example / sweep /
scenario run the batch studies. All outputs are deterministic functions of
the inputs and seeds; rerunning a command reproduces its files byte for
byte. Exit status is 0 on success and 2 on any failure (bad inputs,
missing equilibrium, failed episodes).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .cost_identifier import (
    IdentificationError,
    identify_costs,
    roundtrip_costs,
)
from .forward_solver import COND_LIMIT, ExistenceError, solve_nash
from .game_model import (
    GameValidationError,
    load_game,
    load_policy,
    save_policy,
)
from .policy_estimator import (
    EstimationError,
    empirical_gram,
    estimate_policy,
    sample_complexity,
)
from .simulator import SimulationError, load_trajectories, rollout, save_trajectories
from .experiments import (
    ExperimentConfig,
    make_intersection_game,
    run_randomized_study,
    run_sample_sweep,
    run_scenario,
)

_USER_ERRORS = (
    GameValidationError,
    ExistenceError,
    IdentificationError,
    EstimationError,
    SimulationError,
    ValueError,
    OSError,
    json.JSONDecodeError,
)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_solve(args) -> int:
    game = load_game(args.game)
    policy, value, report = solve_nash(game)
    save_policy(policy, args.out)
    print(f"wrote {args.out}")
    if args.value:
        payload = {
            "P": [[p.tolist() for p in per] for per in value.value_quadratic],
            "zeta": [[z.tolist() for z in per] for per in value.value_linear],
            "F": [f.tolist() for f in value.closed_loop],
            "closed_loop_invertible": list(value.cl_invertible),
            "closed_loop_condition": list(value.cl_condition),
        }
        _write_json(args.value, payload)
        print(f"wrote {args.value}")
    if args.report:
        payload = {
            "exists_unique": report.exists_unique,
            "invertible": list(report.invertible),
            "condition": list(report.condition),
            "condition_limit": COND_LIMIT,
        }
        _write_json(args.report, payload)
        print(f"wrote {args.report}")
    return 0


def _cmd_simulate(args) -> int:
    game = load_game(args.game)
    policy = load_policy(args.policy)
    batch = rollout(game, policy, args.samples, args.seed, args.obs_noise)
    save_trajectories(batch, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    game = load_game(args.dims)
    batch = load_trajectories(args.traj)
    policy = estimate_policy(batch, game)
    save_policy(policy, args.out)
    print(f"wrote {args.out}")
    if args.complexity_report:
        sig_max, sig_min, p = 0.0, np.inf, 1
        for t in range(batch.horizon):
            _, smax, smin, pt = empirical_gram(batch, t)
            sig_max = max(sig_max, smax)
            sig_min = min(sig_min, smin)
            p = max(p, pt)
        report = sample_complexity(
            sig_max,
            sig_min,
            p,
            accuracy=args.eps,
            confidence=args.delta,
            subgaussian_param=args.delta,
            regressor_bound=args.alpha_bound,
        )
        payload = {
            "sigma_max": report.sigma_max,
            "sigma_min": report.sigma_min,
            "p": report.p,
            "regressor_bound": report.regressor_bound,
            "subgaussian_param": report.subgaussian_param,
            "confidence": report.confidence,
            "accuracy": report.accuracy,
            "N1": report.N1,
            "N_rand": report.N_rand,
            "n_required": report.n_required,
            "n_available": batch.num_samples,
        }
        _write_json(args.complexity_report, payload)
        print(f"wrote {args.complexity_report}")
    return 0


def _cmd_identify(args) -> int:
    game = load_game(args.game)
    policy = load_policy(args.policy)
    result = identify_costs(
        game, policy, tau=args.tau, strict_positivity=args.strict_positivity
    )
    payload = {
        "tau": result.tau,
        "strict_positivity": result.strict_positivity,
        "Q": [[q.tolist() for q in per] for per in result.identified_Q],
        "l": [[v.tolist() for v in per] for per in result.identified_l],
        "R": [[r.tolist() for r in per] for per in result.identified_R],
        "residuals": [list(per) for per in result.residuals],
        "active_sets": [[list(a) for a in per] for per in result.active_sets],
        "asymmetry": [list(per) for per in result.asymmetry],
        "degenerate": [list(pair) for pair in result.degenerate],
    }
    _write_json(args.out, payload)
    print(f"wrote {args.out}")
    if args.residuals:
        with open(args.residuals, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["player", "t", "residual", "active_set_size"])
            for i, per in enumerate(result.residuals):
                for k, res in enumerate(per):
                    writer.writerow(
                        [i + 1, k, repr(float(res)), len(result.active_sets[i][k])]
                    )
        print(f"wrote {args.residuals}")
    return 0


def _cmd_verify(args) -> int:
    game = load_game(args.game)
    reference = load_policy(args.ref_policy)
    with open(args.costs) as fh:
        costs = json.load(fh)
    for key in ("Q", "l", "R"):
        if key not in costs:
            raise ValueError(f"costs file {args.costs}: missing key {key!r}")
    report = roundtrip_costs(game, costs["Q"], costs["l"], costs["R"], reference)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["player", "t", "k_err", "alpha_err"])
        for i in range(game.num_players):
            for k in range(game.horizon):
                writer.writerow(
                    [i + 1, k, repr(float(report.k_err[i, k])), repr(float(report.alpha_err[i, k]))]
                )
        writer.writerow(["mean_K", "", repr(report.mean_k), repr(report.std_k)])
        writer.writerow(["mean_alpha", "", repr(report.mean_alpha), repr(report.std_alpha)])
        writer.writerow(["mean_x", "", repr(report.mean_x), repr(report.std_x)])
        writer.writerow(["mean_u", "", repr(report.mean_u), repr(report.std_u)])
    print(f"wrote {args.out}")
    return 0


def _parse_samples(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ValueError(f"--samples must be comma-separated ints, got {text!r}") from exc


def _report_failures(failures) -> int:
    for failure in failures:
        print(f"failure: {failure}", file=sys.stderr)
    return 2 if failures else 0


def _cmd_example(args) -> int:
    cfg = ExperimentConfig(
        kind="randomized",
        episodes=args.episodes,
        base_seed=args.seed,
        tau=args.tau,
        out_dir=args.out_dir,
    )
    summary = run_randomized_study(cfg)
    print(f"wrote {summary.residuals_path}")
    print(f"wrote {summary.trajectories_path}")
    print(
        f"episodes={summary.episodes} failures={len(summary.failures)} "
        f"max_residual={summary.max_residual:.3e} max_policy_err={summary.max_policy_err:.3e}"
    )
    return _report_failures(summary.failures)


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig(
        kind="sweep",
        samples=_parse_samples(args.samples),
        repetitions=args.reps,
        base_seed=args.seed,
        obs_noise_sigma=args.obs_noise,
        tau=args.tau,
    )
    game = load_game(args.game) if args.game else None
    result = run_sample_sweep(cfg, game, out_path=args.out)
    print(f"wrote {result.path}")
    return _report_failures(result.failures)


def _cmd_scenario(args) -> int:
    cfg = ExperimentConfig(
        kind="scenario",
        samples=_parse_samples(args.samples),
        repetitions=args.reps,
        base_seed=args.seed,
        obs_noise_sigma=args.obs_noise,
        tau=args.tau,
    )
    game = load_game(args.game) if args.game else make_intersection_game()
    result = run_scenario(cfg, game, out_path=args.out)
    print(f"wrote {result.summary_path}")
    print(f"wrote {result.trajectories_path}")
    return _report_failures(result.failures)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqgid",
        description="Solve, simulate, and identify finite-horizon LQG games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute the feedback Nash equilibrium")
    p.add_argument("--game", required=True)
    p.add_argument("--out", required=True, help="policy JSON output")
    p.add_argument("--value", help="optional value-recursion JSON output")
    p.add_argument("--report", help="optional existence-report JSON output")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="sample closed-loop trajectories")
    p.add_argument("--game", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--obs-noise", type=float, default=0.0)
    p.add_argument("--out", required=True, help="trajectory CSV output")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="regress a policy from trajectories")
    p.add_argument("--traj", required=True)
    p.add_argument("--dims", required=True, help="game JSON supplying dimensions")
    p.add_argument("--out", required=True, help="estimated policy JSON output")
    p.add_argument("--complexity-report", help="optional sample-size report JSON")
    p.add_argument("--eps", type=float, default=0.1, help="target accuracy")
    p.add_argument("--delta", type=float, default=0.1, help="confidence / noise scale")
    p.add_argument("--alpha-bound", type=float, default=1.0, help="regressor bound")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("identify", help="recover costs from a policy")
    p.add_argument("--game", required=True, help="game JSON (costs ignored)")
    p.add_argument("--policy", required=True)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--strict-positivity", action="store_true")
    p.add_argument("--out", required=True, help="identified-costs JSON output")
    p.add_argument("--residuals", help="optional residual CSV output")
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("verify", help="round-trip identified costs")
    p.add_argument("--game", required=True)
    p.add_argument("--costs", required=True, help="identified-costs JSON")
    p.add_argument("--ref-policy", required=True)
    p.add_argument("--out", required=True, help="metrics CSV output")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("example", help="run a bundled study")
    p.add_argument("study", choices=["randomized"])
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=_cmd_example)

    p = sub.add_parser("sweep", help="error versus demonstration count")
    p.add_argument("--game", help="game JSON (omit for a seeded random game)")
    p.add_argument("--samples", default="20,100", help="comma-separated batch sizes")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--obs-noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--out", required=True, help="sweep CSV output")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("scenario", help="summary table on a scenario game")
    p.add_argument("--game", help="scenario game JSON (default: bundled intersection)")
    p.add_argument("--samples", default="20,100")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--obs-noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--out", required=True, help="summary CSV output")
    p.set_defaults(func=_cmd_scenario)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
