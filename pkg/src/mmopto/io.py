"""CSV and JSON emission and schema-checked CSV ingestion.

Numbers are written with ``repr`` so files round-trip exactly and the
same inputs always produce byte-identical outputs.  No timestamps or
host information are recorded.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .errors import ParseError

# documented CSV schemas: name -> (required columns, optional columns)
SCHEMAS = {
    "spectrum": (("z_nm", "delta_hz", "reflectance"), ()),
    "spring": (("delta_hz", "dom_hz", "dgam_hz"), ("z_nm",)),
    "psd": (("omega_hz", "psd"), ()),
    "drift": (("delta_hz", "t_s", "fm_hz"), ()),
    "dynamics": (("delta_hz", "dom_hz", "dgam_hz"), ("dom_err_hz", "dgam_err_hz")),
}


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, rows, comment=None):
    """Write a header row plus ``rows`` (iterable of sequences).

    ``comment`` becomes a leading ``# ...`` line (used for the config
    hash); :func:`read_csv` skips such lines.
    """
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _plain(obj):
    # numpy scalars/arrays and non-finite floats into strict JSON values
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def read_csv(path, schema):
    """Read a CSV file and check it against one of :data:`SCHEMAS`.

    Returns a dict of column name -> float array (optional columns only
    when present).  Raises :class:`ParseError` naming the file, column and
    row of the first problem.
    """
    required, optional = SCHEMAS[schema]
    name = os.path.basename(str(path))
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as err:
        raise ParseError(f"{name}: cannot read file ({err.strerror})") from None
    # keep file line numbers for messages; skip blank and comment lines
    rows = [(n, r) for n, r in enumerate(rows, start=1)
            if any(cell.strip() for cell in r) and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ParseError(f"{name}: file is empty (expected header {','.join(required)})")
    header = [h.strip() for h in rows[0][1]]
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"{name}: missing column(s) {missing}; header is {header}")
    unknown = [c for c in header if c not in required and c not in optional]
    if unknown:
        raise ParseError(f"{name}: unexpected column(s) {unknown}")
    if len(rows) < 2:
        raise ParseError(f"{name}: no data rows")
    cols = {c: [] for c in header}
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise ParseError(f"{name}: line {lineno} has {len(row)} fields, expected {len(header)}")
        for c, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{name}: line {lineno}, column {c!r}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"{name}: line {lineno}, column {c!r}: non-finite value")
            cols[c].append(v)
    return {c: np.asarray(v) for c, v in cols.items()}


def grid_from_columns(cols, name="grid"):
    """Rebuild a (z, Δ) reflectance grid from long-format columns.

    Rows must cover the full Cartesian product of the distinct z and Δ
    values exactly once.
    """
    z_u = np.unique(cols["z_nm"])
    d_u = np.unique(cols["delta_hz"])
    if len(cols["z_nm"]) != len(z_u) * len(d_u):
        raise ParseError(
            f"{name}: {len(cols['z_nm'])} rows do not form a full grid of "
            f"{len(z_u)} z values x {len(d_u)} detunings"
        )
    iz = np.searchsorted(z_u, cols["z_nm"])
    idel = np.searchsorted(d_u, cols["delta_hz"])
    refl = np.full((len(z_u), len(d_u)), np.nan)
    refl[iz, idel] = cols["reflectance"]
    if np.isnan(refl).any():
        raise ParseError(f"{name}: duplicate (z_nm, delta_hz) rows")
    return z_u, d_u, refl
