"""Serialization: masks as ASCII PGM, fields and ledgers as CSV, optional PNG heatmaps.

Floats are written with 17 significant digits so that reading a file back
gives the same doubles.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError

# column schema of the per-step ledger file; tests pin it
LEDGER_COLUMNS = ("i", "t", "elastic", "dissipated", "work", "eb_residual", "gs_margin", "front_stat")
TRAJECTORY_COLUMNS = ("t", "front", "elastic", "dissipated", "work", "residual")
STABILITY_COLUMNS = ("ident", "kind", "margin", "growth", "passed")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else format(float(v), ".17g")
    return str(v)


def write_rows(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_rows(path):
    """Header and float rows of a CSV written by :func:`write_rows`."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        rows = [tuple(float(v) for v in row) for row in r]
    return header, rows


def write_ledger_csv(path, trace):
    return write_rows(path, LEDGER_COLUMNS, (e.row() for e in trace.ledger))


def write_audit_csv(path, report):
    from .audit import StepAudit

    return write_rows(path, StepAudit.COLUMNS, (s.row() for s in report.steps))


def write_stability_csv(path, report):
    rows = ((m.ident, m.kind, m.margin, m.growth, m.passed) for m in report.margins)
    return write_rows(path, STABILITY_COLUMNS, rows)


def write_trajectory_csv(path, series):
    return write_rows(path, TRAJECTORY_COLUMNS, series.rows())


def write_field_csv(path, field):
    a = np.atleast_2d(np.asarray(field, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for row in a:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_field_csv(path, shape=None):
    a = np.loadtxt(path, delimiter=",", ndmin=2)
    if shape is not None:
        if a.size != int(np.prod(shape)):
            raise ConfigError(f"{path}: expected {shape} values, found {a.shape}")
        a = a.reshape(shape)
    return a


def write_mask_pgm(path, mask):
    """Plain PGM: one image row per first-axis index, 1 for nodes in the set."""
    a = np.atleast_2d(mask.indicator).astype(int)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write(f"P2\n{a.shape[1]} {a.shape[0]}\n1\n")
        for row in a:
            fh.write(" ".join(str(v) for v in row) + "\n")
    return path


def read_pgm(path):
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise ConfigError(f"{path}: not a plain (P2) PGM file")
    try:
        cols, rows, maxval = (int(t) for t in tokens[1:4])
        data = np.array([int(t) for t in tokens[4:]])
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed PGM") from exc
    if data.size != cols * rows or maxval < 1:
        raise ConfigError(f"{path}: expected {cols}x{rows} pixels, found {data.size}")
    return data.reshape(rows, cols), maxval


def read_mask_pgm(path, grid):
    """Nodes with a nonzero pixel; the image must match the grid shape."""
    data, _ = read_pgm(path)
    want = grid.shape if grid.dim == 2 else (1, grid.shape[0])
    if data.shape != want:
        raise ConfigError(f"{path}: image is {data.shape}, grid needs {want}")
    return grid.mask(data.reshape(grid.shape) > 0)


def save_png(path, field, grid=None, title=None):
    """Heatmap of a field; needs matplotlib, which is an optional dependency."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ImportError("PNG output needs matplotlib (pip install artifact[plot])") from exc
    a = np.asarray(field, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    if a.ndim == 1:
        x = grid.coords[0] if grid is not None else np.arange(a.size)
        ax.plot(x, a)
    else:
        if grid is not None:
            a = np.where(grid.active, a, np.nan)
        im = ax.imshow(a.T, origin="lower")
        fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)
