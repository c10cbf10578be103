"""Small command-line surface: sweep CSV in, vector figure out."""

from __future__ import annotations

import argparse
import sys

from .figures import plot_cb_occupancy, plot_delay_vs_load
from .sweeps import EmptySelectionError, SweepFormatError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lbcplot", description="Render figures from lbcsim sweep CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [("delay", "mean delay vs input load (log axis)"),
                            ("cb", "mean crosspoint occupancy vs load")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="csv_path", required=True, help="sweep CSV")
        p.add_argument("--out", required=True,
                       help="output image path, or a directory to derive the "
                            "name from the scenario id")
        p.add_argument("--pattern", default=None, help="keep only this pattern")
        p.add_argument("--switch", default=None, help="keep only this switch")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    plot = plot_delay_vs_load if args.command == "delay" else plot_cb_occupancy
    try:
        path = plot(args.csv_path, args.out, pattern=args.pattern,
                    switch=args.switch)
    except (SweepFormatError, EmptySelectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
