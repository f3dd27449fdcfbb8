"""Permutation-equivariant transmission planning (C++ core via pybind11)."""

from ._permnet import (
    ConfigError,
    DimensionError,
    NetworkConfig,
    PlanSolution,
    Scenario,
    TrainConfig,
    TrainState,
    TrainingDiverged,
    avg_rate,
    edf_schedule,
    evaluate_gap,
    generate_scenarios,
    load_checkpoint,
    pathloss_db,
    predict_plan,
    repair_plan,
    save_checkpoint,
    solve_plan,
    train,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "NetworkConfig",
    "PlanSolution",
    "Scenario",
    "TrainConfig",
    "TrainState",
    "TrainingDiverged",
    "avg_rate",
    "edf_schedule",
    "evaluate_gap",
    "generate_scenarios",
    "load_checkpoint",
    "pathloss_db",
    "predict_plan",
    "repair_plan",
    "save_checkpoint",
    "solve_plan",
    "train",
]
