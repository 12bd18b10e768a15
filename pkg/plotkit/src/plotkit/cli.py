"""mfplot: render benchmark trace CSVs as figures.

Exit codes: 0 success, 2 bad arguments or schema violation, 3 I/O error.
"""
import argparse
import sys
from pathlib import Path

from .render import PlotSpec, render
from .traces import SchemaError, Y_COLUMNS


def _parse_input(arg):
    """Split 'path.csv:label' into its parts; the label defaults to the stem."""
    path, sep, label = arg.rpartition(":")
    if not sep or not path:
        path, label = arg, Path(arg).stem
    elif not label:
        label = Path(path).stem
    return path, label


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mfplot",
        description="Plot solver trace CSVs (one curve per file).",
    )
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="trace.csv[:label]",
        help="trace file with an optional curve label (repeatable)",
    )
    parser.add_argument("--y", choices=Y_COLUMNS, default="error")
    parser.add_argument(
        "--logy", action=argparse.BooleanOptionalAction, default=True
    )
    parser.add_argument("--title", default="")
    parser.add_argument("--out", required=True, metavar="fig.png")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(
            inputs=tuple(_parse_input(arg) for arg in args.inputs),
            out=args.out,
            y=args.y,
            logy=args.logy,
            title=args.title,
        )
    except ValueError as exc:
        print(f"mfplot: {exc}", file=sys.stderr)
        return 2
    try:
        out = render(spec)
    except SchemaError as exc:
        print(f"mfplot: schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mfplot: i/o error: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
