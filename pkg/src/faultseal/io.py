"""Output writers: legacy VTK snapshots, RFC-4180 CSV traces, JSON
summaries, and a small TOML emitter for config round-trips.

All floating point values are serialized with up to 17 significant digits
(shortest lossless representation via repr).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .mesh import StructuredGrid

TIMESERIES_HEADER = ["t_s", "probe_id", "p_w", "p_n", "s_n", "sigma_xx",
                     "sigma_yy", "sigma_xy", "phi", "margin"]
EVENTS_HEADER = ["time_s", "case", "cell", "zone", "tau", "sigma_n_eff",
                 "margin", "slip_m", "area_m2", "moment_nm", "magnitude"]


def format_float(x: float) -> str:
    """Shortest representation that round-trips the double exactly."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_vtk(path, grid: StructuredGrid, cell_data=None, point_data=None,
              title="faultseal snapshot"):
    """Legacy ASCII VTK (version 3.0) with quad cells.

    ``cell_data``/``point_data`` map names to arrays; vectors are written
    as 3-component fields with zero z.
    """
    cell_data = cell_data or {}
    point_data = point_data or {}
    verts = grid.vert_coords()
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {grid.n_verts} double",
    ]
    for x, y in verts:
        lines.append(f"{format_float(x)} {format_float(y)} 0.0")
    lines.append(f"CELLS {grid.n_cells} {grid.n_cells * 5}")
    for vs in grid.cell_verts:
        lines.append("4 " + " ".join(str(int(v)) for v in vs))
    lines.append(f"CELL_TYPES {grid.n_cells}")
    lines.extend(["9"] * grid.n_cells)

    if cell_data:
        lines.append(f"CELL_DATA {grid.n_cells}")
        for name, arr in cell_data.items():
            arr = np.asarray(arr)
            if arr.ndim == 1:
                dtype = "int" if np.issubdtype(arr.dtype, np.integer) else "double"
                lines.append(f"SCALARS {name} {dtype} 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(format_float(v) for v in arr)
            else:
                lines.append(f"VECTORS {name} double")
                for row in arr:
                    z = row[2] if len(row) > 2 else 0.0
                    lines.append(f"{format_float(row[0])} {format_float(row[1])} "
                                 f"{format_float(z)}")
    if point_data:
        lines.append(f"POINT_DATA {grid.n_verts}")
        for name, arr in point_data.items():
            arr = np.asarray(arr)
            if arr.ndim == 1:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(format_float(v) for v in arr)
            else:
                lines.append(f"VECTORS {name} double")
                for row in arr:
                    z = row[2] if len(row) > 2 else 0.0
                    lines.append(f"{format_float(row[0])} {format_float(row[1])} "
                                 f"{format_float(z)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


class CsvWriter:
    """Append-only RFC-4180 writer with a fixed header."""

    def __init__(self, path, header):
        self.path = Path(path)
        self.header = list(header)
        with open(self.path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow(self.header)

    def append(self, rows):
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            for row in rows:
                w.writerow([format_float(v) if isinstance(v, float)
                            else v for v in row])


def write_summary(path, summary: dict):
    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not JSON serializable: {type(o)}")

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")


# ---------------------------------------------------------------------------
# TOML emission (restricted dialect: tables, scalars, homogeneous lists)
# ---------------------------------------------------------------------------

def _toml_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isinf(x) or math.isnan(x):
            raise ValueError("non-finite floats are not valid TOML")
        out = repr(x)
        return out if any(c in out for c in ".eE") else out + ".0"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)} to TOML")


def dump_toml(doc: dict) -> str:
    """Serialize a nested dict of tables/scalars to TOML text."""
    lines = []

    def emit(table: dict, prefix: str):
        scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
        subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
        if prefix and (scalars or not subtables):
            lines.append(f"[{prefix}]")
        for k, v in scalars.items():
            lines.append(f"{k} = {_toml_scalar(v)}")
        if scalars:
            lines.append("")
        for k, v in subtables.items():
            emit(v, f"{prefix}.{k}" if prefix else k)

    emit(doc, "")
    return "\n".join(lines).rstrip() + "\n"
