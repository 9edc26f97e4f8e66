"""Reading and writing phase-space fields.

CSV layout::

    # meta: hbar=0.1, t=0.5, method=aga, grid=-4.0,4.0,-4.0,4.0,101,101
    q,p,re,im
    -4,-4,1.2345678901234567e-05,...

Values use 17 significant digits, which round-trips every double.  The
binary twin starts with the same meta line followed by little-endian
float64 records ``(q, p, re, im)``.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .core import ComplexField, GridSpec
from .errors import ValidationError

META_RE = re.compile(
    r"^# meta: hbar=(?P<hbar>[^,]+), t=(?P<t>[^,]+), method=(?P<method>[^,]+), grid=(?P<grid>.+)$"
)


def meta_line(field):
    g = field.grid
    grid = ",".join(repr(float(v)) for v in (g.qmin, g.qmax, g.pmin, g.pmax)) + f",{g.nq},{g.np}"
    return f"# meta: hbar={field.hbar!r}, t={field.time!r}, method={field.method}, grid={grid}"


def parse_meta(line):
    m = META_RE.match(line.strip())
    if not m:
        raise ValidationError(f"malformed field header: {line.strip()!r}")
    parts = m.group("grid").split(",")
    if len(parts) != 6:
        raise ValidationError("grid entry needs qmin,qmax,pmin,pmax,nq,np")
    grid = GridSpec(*map(float, parts[:4]), int(parts[4]), int(parts[5]))
    return float(m.group("hbar")), float(m.group("t")), m.group("method"), grid


def _records(field):
    Q, P = field.grid.mesh()
    v = field.values
    return np.stack([Q.ravel(), P.ravel(), v.real.ravel(), v.imag.ravel()], axis=1)


def write_field_csv(path, field):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = _records(field)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(meta_line(field) + "\n")
        fh.write("q,p,re,im\n")
        np.savetxt(fh, rows, fmt="%.17g", delimiter=",")
    return path


def read_field_csv(path):
    with open(path, encoding="ascii") as fh:
        hbar, t, method, grid = parse_meta(fh.readline())
        header = fh.readline().strip()
        if header != "q,p,re,im":
            raise ValidationError(f"unexpected column header {header!r}")
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    return _from_rows(rows, hbar, t, method, grid)


def write_field_binary(path, field):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write((meta_line(field) + "\n").encode("ascii"))
        fh.write(_records(field).astype("<f8").tobytes())
    return path


def read_field_binary(path):
    raw = Path(path).read_bytes()
    cut = raw.index(b"\n")
    hbar, t, method, grid = parse_meta(raw[:cut].decode("ascii"))
    rows = np.frombuffer(raw[cut + 1 :], dtype="<f8").reshape(-1, 4)
    return _from_rows(rows, hbar, t, method, grid)


def _from_rows(rows, hbar, t, method, grid):
    if rows.shape != (grid.nq * grid.np, 4):
        raise ValidationError(f"expected {grid.nq * grid.np} rows of 4 columns, got {rows.shape}")
    values = (rows[:, 2] + 1j * rows[:, 3]).reshape(grid.shape)
    return ComplexField(grid, values, hbar, t, method)
