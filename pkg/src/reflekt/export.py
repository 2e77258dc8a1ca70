"""CSV dumps for external plotting (no rendering happens here)."""

from __future__ import annotations

import numpy as np

from .recovery import SWEEP_HEADER, TRACE_HEADER, SolverTrace, rows_to_csv

ORBIT_HEADER = ("x", "y", "orbit_index")


def orbit_rows(orbits):
    """Rows ``x, y, orbit_index`` for a list of 2D orbits."""
    rows = []
    for i, pts in enumerate(orbits):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != 2:
            raise ValueError("orbit dumps are for 2D groups")
        rows.extend({"x": float(a), "y": float(b), "orbit_index": i} for a, b in pts)
    return rows


def plot_data_csv(data) -> str:
    """CSV text for a solver trace, a sweep table or a list of 2D orbits."""
    if isinstance(data, SolverTrace):
        return rows_to_csv(data.rows(), TRACE_HEADER)
    if isinstance(data, list) and data and isinstance(data[0], dict):
        return rows_to_csv(data, SWEEP_HEADER)
    return rows_to_csv(orbit_rows(data), ORBIT_HEADER)


def emit_plot_data(data, path) -> str:
    text = plot_data_csv(data)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return str(path)
