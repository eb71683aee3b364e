"""CSV output with round-trippable float formatting."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["fmt", "write_csv"]


def fmt(x) -> str:
    """Format a number with 17 significant digits (``nan`` for NaN)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, columns: dict) -> Path:
    """Write equal-length columns to ``path`` with a header row."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = {c.shape[0] for c in cols}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])
    return path
