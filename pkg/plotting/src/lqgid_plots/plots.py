"""Render experiment CSV files into figures.

Every number on a figure is read verbatim from the source CSV; nothing is
aggregated or recomputed here, so any plotted point can be found again in
the file. The module is read-only and stateless: it consumes the CSV
artifacts written by the solver package but never imports it.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "lqgid-plots"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KINDS = ("residuals", "trajectories", "sweep", "table")

RESIDUAL_COLUMNS = ("max_residual", "policy_err", "state_err", "input_err")
TRAJECTORY_COLUMNS = ("series", "t", "kind", "player", "dim", "value")
SWEEP_COLUMNS = (
    "policy_err", "theta_err_proxy", "k_err", "alpha_err", "x_err", "u_err",
)


class PlottingError(RuntimeError):
    """Unusable input: missing file, empty CSV, or missing columns."""


@dataclass(frozen=True)
class PlotJob:
    """One figure: a source CSV, a figure kind, and an output image path.

    log_scale None means the kind's default (log for residuals and sweep,
    linear for the others). Label and title overrides are optional.
    """

    source: str
    kind: str
    out_path: str
    title: str | None = None
    x_label: str | None = None
    y_label: str | None = None
    log_scale: bool | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not os.path.isfile(self.source):
            raise PlottingError(f"input file not found: {self.source}")


def _read_rows(path: str) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames
        if fields is None:
            raise PlottingError(f"empty input: {path}")
        rows = list(reader)
    if not rows:
        raise PlottingError(f"empty input: {path} has a header but no data rows")
    return list(fields), rows


def _require_columns(fields: list[str], needed: tuple[str, ...], path: str) -> None:
    missing = sorted(set(needed) - set(fields))
    if missing:
        raise PlottingError(f"{path}: missing columns {missing}")


def _residuals_figure(job: PlotJob):
    fields, rows = _read_rows(job.source)
    _require_columns(fields, ("episode",) + RESIDUAL_COLUMNS, job.source)
    episodes = [float(r["episode"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for column in RESIDUAL_COLUMNS:
        ax.scatter(episodes, [float(r[column]) for r in rows], s=18, label=column)
    if job.log_scale is not False:
        ax.set_yscale("log")
    ax.set_xlabel(job.x_label or "episode")
    ax.set_ylabel(job.y_label or "error")
    ax.set_title(job.title or "identification errors per episode")
    ax.grid(alpha=0.3)
    ax.legend()
    return fig


def _series_paths(state_rows: list[dict], planar: bool):
    """Per-series plot data: (x, y) pairs ordered by t, verbatim values."""
    labels = []
    for row in state_rows:
        if row["series"] not in labels:
            labels.append(row["series"])
    paths = {}
    for label in labels:
        values = {
            (int(r["t"]), int(r["dim"])): float(r["value"])
            for r in state_rows
            if r["series"] == label
        }
        ts = sorted({t for t, _ in values})
        if planar:
            paths[label] = (
                [values[(t, 0)] for t in ts],
                [values[(t, 1)] for t in ts],
            )
        else:
            paths[label] = ([float(t) for t in ts], [values[(t, 0)] for t in ts])
    return labels, paths


def _trajectories_figure(job: PlotJob):
    fields, rows = _read_rows(job.source)
    _require_columns(fields, TRAJECTORY_COLUMNS, job.source)
    if "episode" in fields:
        first = min(int(r["episode"]) for r in rows)
        rows = [r for r in rows if int(r["episode"]) == first]
    state_rows = [r for r in rows if r["kind"] == "state"]
    if not state_rows:
        raise PlottingError(f"{job.source}: no state rows to plot")
    planar = {int(r["dim"]) for r in state_rows} >= {0, 1}
    labels, paths = _series_paths(state_rows, planar)

    panels = [label for label in labels if label != "true"]
    if len(labels) <= 2 or not panels:
        fig, ax = plt.subplots(figsize=(6.0, 5.0))
        for label in labels:
            x, y = paths[label]
            ax.plot(x, y, marker="o", markersize=3, label=label)
        axes = [ax]
    else:
        # one panel per recovered series, each against the true path
        fig, axes = plt.subplots(
            1, len(panels), figsize=(4.0 * len(panels), 4.0),
            sharex=True, sharey=True, squeeze=False,
        )
        axes = list(axes[0])
        for ax, label in zip(axes, panels):
            if "true" in paths:
                x, y = paths["true"]
                ax.plot(x, y, color="0.6", linestyle="--", label="true")
            x, y = paths[label]
            ax.plot(x, y, marker="o", markersize=3, label=label)
            ax.set_title(label)
    for ax in axes:
        ax.set_xlabel(job.x_label or ("x" if planar else "t"))
        ax.set_ylabel(job.y_label or ("y" if planar else "state"))
        if job.log_scale is True:
            ax.set_yscale("log")
        ax.grid(alpha=0.3)
        ax.legend()
    if job.title:
        fig.suptitle(job.title)
    return fig


def _sweep_figure(job: PlotJob):
    fields, rows = _read_rows(job.source)
    _require_columns(fields, ("n", "rep") + SWEEP_COLUMNS, job.source)
    # n=0 is the exact-policy baseline, not a sample count
    rows = [r for r in rows if int(r["n"]) > 0]
    if not rows:
        raise PlottingError(f"{job.source}: no finite-sample rows to plot")
    ns = [float(r["n"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for column in SWEEP_COLUMNS:
        ax.scatter(ns, [float(r[column]) for r in rows], s=20, label=column)
    if job.log_scale is not False:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(job.x_label or "demonstrations n")
    ax.set_ylabel(job.y_label or "error")
    ax.set_title(job.title or "error versus demonstration count")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    return fig


def _table_figure(job: PlotJob):
    fields, rows = _read_rows(job.source)
    _require_columns(fields, ("row",), job.source)
    fig, ax = plt.subplots(
        figsize=(1.6 + 1.15 * len(fields), 1.0 + 0.45 * len(rows))
    )
    ax.axis("off")
    cell_text = [[row[column] for column in fields] for row in rows]
    table = ax.table(cellText=cell_text, colLabels=fields, loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(9)
    table.scale(1.0, 1.4)
    if job.title:
        ax.set_title(job.title)
    return fig


_BUILDERS = {
    "residuals": _residuals_figure,
    "trajectories": _trajectories_figure,
    "sweep": _sweep_figure,
    "table": _table_figure,
}


def build_figure(job: PlotJob):
    """The matplotlib Figure for a job, without writing it anywhere."""
    return _BUILDERS[job.kind](job)


def render(job: PlotJob) -> str:
    """Write the job's figure to job.out_path and return that path."""
    ext = os.path.splitext(job.out_path)[1].lower()
    if ext not in (".png", ".svg"):
        raise ValueError(f"out_path must end in .png or .svg, got {job.out_path!r}")
    fig = build_figure(job)
    try:
        # SVG date metadata would defeat byte-identical reruns
        kwargs = {"metadata": {"Date": None}} if ext == ".svg" else {}
        fig.savefig(job.out_path, dpi=150, **kwargs)
    finally:
        plt.close(fig)
    return job.out_path
