"""Figure rendering for LQG game experiment CSV artifacts."""

from .plots import (
    KINDS,
    RESIDUAL_COLUMNS,
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    PlotJob,
    PlottingError,
    build_figure,
    render,
)

__all__ = [
    "KINDS",
    "RESIDUAL_COLUMNS",
    "SWEEP_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "PlotJob",
    "PlottingError",
    "build_figure",
    "render",
]
