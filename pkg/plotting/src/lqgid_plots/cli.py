"""Command-line wrapper: render one CSV to one image, exit 0 or 2."""

from __future__ import annotations

import argparse
import sys

from .plots import PlotJob, PlottingError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqgid-plots",
        description="Render LQG game experiment CSVs into figures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plot", help="render an experiment CSV to an image")
    p.add_argument(
        "--kind", required=True, choices=["residuals", "trajectories", "sweep"]
    )
    p.add_argument("--in", dest="source", required=True, help="input CSV")
    p.add_argument("--out", required=True, help="output image (.png or .svg)")
    p.add_argument("--title")
    p.add_argument("--x-label")
    p.add_argument("--y-label")
    p.add_argument("--log-scale", choices=["on", "off"])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    log_scale = {"on": True, "off": False, None: None}[args.log_scale]
    try:
        job = PlotJob(
            source=args.source,
            kind=args.kind,
            out_path=args.out,
            title=args.title,
            x_label=args.x_label,
            y_label=args.y_label,
            log_scale=log_scale,
        )
        render(job)
    except (PlottingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
