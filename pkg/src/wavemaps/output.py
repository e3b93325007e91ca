"""Plain-text writers and readers for series, snapshots and search logs."""

from __future__ import annotations

import csv
import math
import re
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticSeries, StaticFit, energy_density
from .grid import RadialGrid
from .state import FieldState

SERIES_HEADER = ("t", "chi_prime_origin", "energy", "delta")
LADDER_HEADER = ("n", "t_blow", "max_chi_prime", "max_abs_delta")
PROBE_HEADER = ("A", "classification", "t_blow_or_tmax", "n")
BISECT_HEADER = ("A_lo", "A_hi", "iterations", "n", "complete")

_SNAP_HEADER = re.compile(r"#\s*t=(\S+)\s+n=(\d+)\s+rmax=(\S+)")


def fmt(x) -> str:
    """Shortest round-tripping repr; NaN and None become an empty field."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_series(path, series: DiagnosticSeries) -> Path:
    return write_rows(path, SERIES_HEADER, series.rows())


def read_series(path) -> dict[str, np.ndarray]:
    header, rows = read_rows(path)
    cols = list(zip(*rows)) if rows else [()] * len(header)
    return {
        name: np.array([float(v) if v else math.nan for v in col])
        for name, col in zip(header, cols)
    }


def write_snapshot(path, state: FieldState, k: int = 1) -> Path:
    """Header ``# t=.. n=.. rmax=..`` then ``r chi pi rho`` per node."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g = state.grid
    rho = energy_density(state, k).values
    data = np.column_stack([g.r, state.chi.values, state.pi.values, rho])
    header = f"t={state.t!r} n={g.n} rmax={g.r_max!r}"
    np.savetxt(path, data, fmt="%.17e", header=header, comments="# ")
    return path


def read_snapshot(path) -> FieldState:
    path = Path(path)
    with path.open() as fh:
        m = _SNAP_HEADER.match(fh.readline().strip())
    if m is None:
        raise ValueError(f"{path}: missing '# t=.. n=.. rmax=..' header")
    t, n, r_max = float(m.group(1)), int(m.group(2)), float(m.group(3))
    data = np.loadtxt(path, comments="#", ndmin=2)
    grid = RadialGrid(r_max, n)
    return FieldState.from_arrays(grid, t, data[:, 1], data[:, 2])


def write_fit(path, fit: StaticFit) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(fit.record() + "\n")
    return path


def read_fit(path) -> StaticFit:
    lam, sign, residual, lo, hi = Path(path).read_text().split()
    return StaticFit(float(lam), int(sign), float(residual), (float(lo), float(hi)))
