"""Finite-horizon LQG games: forward Nash solutions and inverse cost
identification.

The public surface re-exported here is the supported API; module-level
helpers not listed in __all__ may change without notice.
"""

from .cls_solver import CLSProblem, CLSSolution, kkt_report, solve_cls, solve_cls_oracle
from .cost_identifier import (
    IdentificationError,
    RoundTripReport,
    assemble_M,
    build_terms,
    identify_costs,
    recursion_step,
    roundtrip_costs,
    verify_roundtrip,
)
from .experiments import (
    ExperimentConfig,
    ScenarioResult,
    StudySummary,
    SweepResult,
    make_intersection_game,
    random_game,
    run_randomized_study,
    run_sample_sweep,
    run_scenario,
)
from .forward_solver import (
    ExistenceError,
    ExistenceReport,
    check_existence,
    closed_loop,
    expected_cost,
    solve_nash,
)
from .game_model import (
    GameSpec,
    GameValidationError,
    IdentificationResult,
    NashPolicy,
    TrajectoryBatch,
    ValueRecursion,
    game_from_dict,
    game_to_dict,
    load_game,
    load_policy,
    policy_from_dict,
    policy_to_dict,
    save_game,
    save_policy,
    validate_policy,
    with_costs,
)
from .policy_estimator import (
    EstimationError,
    SampleComplexityReport,
    empirical_gram,
    estimate_policy,
    policy_gap,
    sample_complexity,
)
from .simulator import (
    SimulationError,
    expected_trajectory,
    load_trajectories,
    rollout,
    save_trajectories,
)

__all__ = [
    "CLSProblem",
    "CLSSolution",
    "EstimationError",
    "ExistenceError",
    "ExistenceReport",
    "ExperimentConfig",
    "GameSpec",
    "GameValidationError",
    "IdentificationError",
    "IdentificationResult",
    "NashPolicy",
    "RoundTripReport",
    "SampleComplexityReport",
    "ScenarioResult",
    "SimulationError",
    "StudySummary",
    "SweepResult",
    "TrajectoryBatch",
    "ValueRecursion",
    "assemble_M",
    "build_terms",
    "check_existence",
    "closed_loop",
    "empirical_gram",
    "estimate_policy",
    "expected_cost",
    "expected_trajectory",
    "game_from_dict",
    "game_to_dict",
    "identify_costs",
    "kkt_report",
    "load_game",
    "load_policy",
    "load_trajectories",
    "make_intersection_game",
    "policy_from_dict",
    "policy_gap",
    "policy_to_dict",
    "random_game",
    "recursion_step",
    "rollout",
    "roundtrip_costs",
    "run_randomized_study",
    "run_sample_sweep",
    "run_scenario",
    "sample_complexity",
    "save_game",
    "save_policy",
    "save_trajectories",
    "solve_cls",
    "solve_cls_oracle",
    "solve_nash",
    "validate_policy",
    "verify_roundtrip",
    "with_costs",
]

__version__ = "0.1.0"
