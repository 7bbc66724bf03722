"""`ppplot <kind> --in <csv> --out <img>`: render experiment CSVs as figures."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import PlotJob, render
from .schemas import KINDS, SchemaError


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ppplot", description=__doc__)
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--in", dest="inputs", required=True,
                    help="input CSV (timeseries-delta accepts main,baseline)")
    ap.add_argument("--out", required=True, help="output image (.png or .svg)")
    ap.add_argument("--cycle", type=int, help="control cycle for pressure-profile")
    args = ap.parse_args(argv)

    options = {}
    if args.cycle is not None:
        options["cycle"] = args.cycle
    job = PlotJob(
        kind=args.kind,
        inputs=tuple(Path(p) for p in args.inputs.split(",")),
        out=Path(args.out),
        options=options,
    )
    try:
        out = render(job)
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
