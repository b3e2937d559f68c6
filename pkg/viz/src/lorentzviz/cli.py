"""Command-line entry point: lorentzviz --kind KIND --out IMG input.csv ...

Exit codes: 0 success, 1 bad arguments or schema mismatch.
"""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError
from .render import KINDS, PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lorentzviz",
        description="Render lorentzgas CSV artifacts to figures.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("inputs", nargs="+", help="input CSV file(s)")
    args = parser.parse_args(argv)
    try:
        spec = PlotSpec(kind=args.kind, inputs=tuple(args.inputs),
                        output=args.out)
        path = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
