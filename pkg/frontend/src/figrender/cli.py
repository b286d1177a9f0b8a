"""Command-line wrapper: read sweep CSVs, write figure panels."""

from __future__ import annotations

import argparse
import sys

from .renderer import PLOTTABLE_COLUMNS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figrender", description=__doc__)
    parser.add_argument(
        "--input", action="append", required=True, help="sweep CSV (repeatable)"
    )
    parser.add_argument(
        "--panel",
        action="append",
        required=True,
        choices=PLOTTABLE_COLUMNS,
        help="column to plot (repeatable)",
    )
    parser.add_argument(
        "--overlay",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="draw the analytic fidelity overlay",
    )
    parser.add_argument("--out", required=True, help="output image path (or stem)")
    parser.add_argument("--format", choices=("svg", "png"), default="svg")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            inputs=tuple(args.input),
            panels=tuple(args.panel),
            out=args.out,
            overlay=args.overlay,
            format=args.format,
        )
        result = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for panel in result.panels:
        print(f"wrote {panel.image_path} ({len(panel.series)} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
