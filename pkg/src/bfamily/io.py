"""Delimited output files and run manifests.

All numeric output goes through ``repr``-exact ``%.17g`` formatting so that
an identical run produces byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

FLOAT_FMT = "%.17g"
CONTOUR_HEADER = "# t_min t_max x_min x_max rows cols"


def fmt_float(x) -> str:
    return FLOAT_FMT % float(x)


def _atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256sum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# snapshots ---------------------------------------------------------------------

def write_snapshots_csv(path, series, x_stride: int = 1) -> Path:
    """Long-format ``t,x,u`` rows, streamed one snapshot at a time."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x = series.grid.x[::x_stride]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u"])
        for t, f in zip(series.times, series.fields):
            ts = fmt_float(t)
            u = f.values[::x_stride]
            w.writerows((ts, fmt_float(xi), fmt_float(ui)) for xi, ui in zip(x, u))
    return path


def read_snapshots_csv(path):
    """Return ``(times, x, U)`` with ``U[i, j] = u(times[i], x[j])``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    x = data[data[:, 0] == times[0], 1]
    return times, x, data[:, 2].reshape(times.size, x.size)


def write_contour_matrix(path, times, x, values) -> Path:
    """Whitespace-delimited matrix (rows = t, cols = x) with a one-line header."""
    values = np.asarray(values, dtype=float)
    rows, cols = values.shape
    if rows != len(times) or cols != len(x):
        raise ValueError("matrix shape does not match the time and space axes")
    lines = [CONTOUR_HEADER,
             " ".join(fmt_float(v) for v in (times[0], times[-1], x[0], x[-1])) + f" {rows} {cols}"]
    lines.extend(" ".join(fmt_float(v) for v in row) for row in values)
    _atomic_write_text(path, "\n".join(lines) + "\n")
    return Path(path)


def read_contour_matrix(path):
    """Return ``(extent, values)`` with ``extent = (t_min, t_max, x_min, x_max)``."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CONTOUR_HEADER:
            raise ValueError(f"not a contour matrix file: {path}")
        meta = fh.readline().split()
        values = np.loadtxt(fh, ndmin=2)
    extent = tuple(float(v) for v in meta[:4])
    rows, cols = int(meta[4]), int(meta[5])
    if values.shape != (rows, cols):
        raise ValueError(f"expected {rows}x{cols} values, found {values.shape}")
    return extent, values


# spectra, branches, band scans ----------------------------------------------------

def write_rows(path, header: Iterable[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        w.writerows(rows)
    return path


def write_spectrum_csv(path, result) -> Path:
    # sort for a stable row order independent of LAPACK's output ordering
    ev = np.asarray(result.eigenvalues)
    order = np.lexsort((ev.imag, -ev.real))
    return write_rows(path, ["re", "im"], ((fmt_float(z.real), fmt_float(z.imag)) for z in ev[order]))


def read_spectrum_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0] + 1j * data[:, 1]


def write_branch_csv(path, branch) -> Path:
    rows = ((fmt_float(p.param), fmt_float(p.norm_squared), fmt_float(p.max_u), fmt_float(p.residual))
            for p in branch.points)
    return write_rows(path, ["param", "norm", "max_u", "residual"], rows)


def write_branch_profiles(directory, branch, every: int = 1) -> list:
    """One ``x,u`` file per retained branch point."""
    directory = Path(directory)
    paths = []
    for i, p in enumerate(branch.points[::every]):
        x = p.solution.grid.x
        paths.append(write_rows(directory / f"profile_{i:04d}.csv", ["x", "u"],
                                 ((fmt_float(a), fmt_float(b)) for a, b in zip(x, p.solution.values))))
    return paths


@dataclass(frozen=True)
class BandScanRow:
    lam: complex
    space: str
    member: bool
    residual: Optional[float]


def write_band_scan_csv(path, rows) -> Path:
    def fmt(r: BandScanRow):
        res = "" if r.residual is None else fmt_float(r.residual)
        return (fmt_float(r.lam.real), fmt_float(r.lam.imag), r.space, str(bool(r.member)).lower(), res)

    return write_rows(path, ["re_lambda", "im_lambda", "space", "member", "residual"],
                       (fmt(r) for r in rows))


# manifests -----------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "value") and type(obj).__module__.startswith("bfamily"):
        return obj.value
    return obj


def write_json(path, payload: dict) -> Path:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    _atomic_write_text(path, text)
    return Path(path)


@dataclass
class RunManifest:
    """Record of one CLI run; written once, atomically, when the run ends."""

    kind: str
    config: dict
    version: str
    status: str
    wall_clock: float = 0.0
    results: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    figure: Optional[str] = None

    def register(self, path) -> None:
        path = Path(path)
        self.outputs[path.name] = sha256sum(path)

    def write(self, directory) -> Path:
        return write_json(Path(directory) / "manifest.json", asdict(self))
