"""CSV/JSON readers for the simulator's output schemas.

Readers return plain dicts of numpy arrays keyed by column name and raise
``MissingColumns`` naming exactly which expected columns are absent.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class MissingColumns(ValueError):
    def __init__(self, path, missing):
        self.missing = list(missing)
        super().__init__(f"{path}: missing columns {', '.join(self.missing)}")


def read_csv(path, required=()):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    missing = [c for c in required if c not in header]
    if missing:
        raise MissingColumns(path, missing)
    cols = {}
    arr = np.asarray(rows, dtype=object)
    for i, name in enumerate(header):
        col = arr[:, i] if len(rows) else np.empty(0, object)
        try:
            cols[name] = col.astype(float)
        except (ValueError, TypeError):
            cols[name] = col.astype(str)
    return cols


def read_summary(run_dir):
    with open(Path(run_dir) / "summary.json", encoding="utf-8") as fh:
        return json.load(fh)


def find_runs(run_dirs):
    """Expand run directories: each must hold a summary.json."""
    out = []
    for d in run_dirs:
        d = Path(d)
        if (d / "summary.json").exists():
            out.append(d)
        else:
            out.extend(sorted(p.parent for p in d.glob("*/summary.json")))
    return out
