"""Command line wrapper: hypershell-report --in RUNDIR --out OUTDIR."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, ReportSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hypershell-report",
        description="render static figures and an index page from analyzed run outputs",
    )
    parser.add_argument("--in", dest="input_dir", required=True, help="analyzed run directory")
    parser.add_argument("--out", dest="output_dir", required=True, help="figure output directory")
    parser.add_argument(
        "--figures",
        default=",".join(FIGURES),
        help=f"comma-separated selection from {', '.join(FIGURES)} (empty = index only)",
    )
    args = parser.parse_args(argv)
    figures = tuple(f for f in args.figures.split(",") if f)
    try:
        spec = ReportSpec(input_dir=args.input_dir, output_dir=args.output_dir, figures=figures)
        written = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(written)} files to {args.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
