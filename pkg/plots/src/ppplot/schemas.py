"""CSV schema validation for the figure kinds."""

from __future__ import annotations

import csv
from pathlib import Path


class SchemaError(Exception):
    """Input CSV does not match the schema required by the figure kind."""


REQUIRED_COLUMNS = {
    "sweep": {"controller", "sensitivity", "hop", "tts_mean_h"},
    "heatmap": {"tau_hours", "alpha_upper", "improvement_pct"},
    "robustness": {"controller", "perturb_alpha", "tts_mean_h", "tts_std_h",
                   "tts_min_h", "tts_max_h"},
    "importance": {"link_id", "hop_distance", "importance", "x0", "y0", "x1", "y1"},
    "pressure-profile": {"cycle", "feeder_id", "hop", "pressure"},
    "timeseries-delta": {"time_s", "completed", "mean_density"},
}

KINDS = tuple(sorted(REQUIRED_COLUMNS))


def load_rows(path, kind: str) -> list[dict]:
    """Read and validate a CSV for the given figure kind.

    Raises SchemaError naming the missing column, or complaining about an
    empty table, before any output is produced.
    """
    if kind not in REQUIRED_COLUMNS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = set(reader.fieldnames or ())
        missing = sorted(REQUIRED_COLUMNS[kind] - header)
        if missing:
            raise SchemaError(f"{path.name}: missing column {missing[0]!r} for kind {kind!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path.name}: no data rows")
    return rows


def floats(rows: list[dict], column: str) -> list[float]:
    try:
        return [float(r[column]) for r in rows]
    except ValueError as e:
        raise SchemaError(f"column {column!r} holds a non-numeric value: {e}") from None
