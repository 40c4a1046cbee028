"""CSV grid format and JSON report emission.

Grid CSV: header ``x,y,re,im,mask``, one row per grid point, row-major
over y then x (y is the outer loop, x sweeps fastest), 17 significant
digits so round-trips are exact. Real-valued fields are written with
im = 0. Reports are JSON with sorted keys; the ``generated_at`` field is
the only non-deterministic entry.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .grids import ComplexGridField, GridSpec

CSV_HEADER = "x,y,re,im,mask"


def write_field_csv(path, field: ComplexGridField) -> None:
    spec = field.spec
    xs, ys = spec.xs(), spec.ys()
    lines = [CSV_HEADER]
    for j in range(spec.ny):
        for i in range(spec.nx):
            v = field.values[i, j]
            lines.append(
                f"{xs[i]:.17g},{ys[j]:.17g},{v.real:.17g},{v.imag:.17g},"
                f"{1 if field.mask[i, j] else 0}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_real_csv(path, spec: GridSpec, values: np.ndarray,
                   mask: np.ndarray | None = None) -> None:
    field = ComplexGridField(spec, np.asarray(values, dtype=np.complex128),
                             mask)
    write_field_csv(path, field)


def read_field_csv(path) -> ComplexGridField:
    raw = Path(path).read_text().strip().splitlines()
    if not raw or raw[0].strip() != CSV_HEADER:
        raise ValueError(f"{path}: expected header {CSV_HEADER!r}")
    data = np.loadtxt(raw[1:], delimiter=",", ndmin=2)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = xs.size, ys.size
    if nx * ny != data.shape[0]:
        raise ValueError(f"{path}: rows do not tile a rectangular grid")
    spec = GridSpec(float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1]),
                    nx, ny)
    hx, hy = np.diff(xs), np.diff(ys)
    if (nx > 1 and np.max(np.abs(hx - hx[0])) > 1e-9 * max(1.0, abs(xs[-1]))) or \
       (ny > 1 and np.max(np.abs(hy - hy[0])) > 1e-9 * max(1.0, abs(ys[-1]))):
        raise ValueError(f"{path}: grid is not uniform")
    values = np.empty((nx, ny), dtype=np.complex128)
    mask = np.empty((nx, ny), dtype=bool)
    ix = np.searchsorted(xs, data[:, 0])
    iy = np.searchsorted(ys, data[:, 1])
    values[ix, iy] = data[:, 2] + 1j * data[:, 3]
    mask[ix, iy] = data[:, 4] > 0.5
    return ComplexGridField(spec, values, mask)


def write_report_json(path, payload: dict, timestamp: bool = True) -> None:
    doc = dict(payload)
    if timestamp:
        doc["generated_at"] = datetime.now(timezone.utc).isoformat()
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True,
                                     default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")
