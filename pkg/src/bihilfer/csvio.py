"""Versioned CSV files for solutions and coefficients.

Every file starts with the line ``# bihilfer-csv v1`` followed by a header
row. Reals are written with 17 significant digits so that reading a file
back reproduces the stored doubles exactly.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from bihilfer.spectral import GridField, SpectralCoefficients

MAGIC = "# bihilfer-csv v1"
SOLUTION_COLUMNS = ("x", "t", "weighted_u", "weight_exponent", "tail_bound")
COEFFICIENT_COLUMNS = ("n", "lambda_n", "psi_n", "Delta_n", "tau_n", "nu_n", "phi_n", "F_n")


class SchemaError(ValueError):
    """A CSV file does not match the expected layout."""


def _write(path: Path, columns, table: np.ndarray, fmt) -> None:
    buf = io.StringIO()
    buf.write(MAGIC + "\n")
    buf.write(",".join(columns) + "\n")
    np.savetxt(buf, table, fmt=fmt, delimiter=",")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_solution(path, fld: GridField) -> None:
    nx, nt = fld.values.shape
    X = np.repeat(fld.x_grid, nt)
    Tt = np.tile(fld.t_grid, nx)
    E = np.tile(fld.weight_exponents, nx)
    prof = fld.tail_profile if fld.tail_profile is not None else np.full(nt, fld.tail_bound)
    B = np.tile(prof, nx)
    _write(path, SOLUTION_COLUMNS, np.column_stack([X, Tt, fld.values.ravel(), E, B]), "%.17g")


def write_coefficients(path, c: SpectralCoefficients) -> None:
    table = np.column_stack([c.n, c.lambda_n, c.psi_n, c.Delta_n, c.tau_n, c.nu_n, c.phi_n, c.F_n])
    _write(path, COEFFICIENT_COLUMNS, table, ["%d"] + ["%.17g"] * 7)


def _read(path, columns) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read: {exc.strerror}") from None
    lines = text.splitlines()
    if len(lines) < 2 or lines[0].strip() != MAGIC:
        raise SchemaError(f"{path}: missing '{MAGIC}' header line")
    if tuple(c.strip() for c in lines[1].split(",")) != tuple(columns):
        raise SchemaError(f"{path}: expected columns {','.join(columns)}, got {lines[1]!r}")
    try:
        data = np.loadtxt(io.StringIO("\n".join(lines[2:])), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if data.shape[1] != len(columns):
        raise SchemaError(f"{path}: rows must have {len(columns)} fields")
    return data


def read_solution(path) -> GridField:
    """Rebuild a :class:`GridField` from a solution file."""
    data = _read(path, SOLUTION_COLUMNS)
    x = np.unique(data[:, 0])
    t = np.unique(data[:, 1])
    if x.size * t.size != data.shape[0]:
        raise SchemaError(f"{path}: samples do not form a full (x, t) grid")
    X = data[:, 0].reshape(x.size, t.size)
    Tt = data[:, 1].reshape(x.size, t.size)
    if not (np.all(X == x[:, None]) and np.all(Tt == t[None, :])):
        raise SchemaError(f"{path}: rows are not ordered by x, then t")
    E = data[:, 3].reshape(x.size, t.size)
    pos, neg = E[:, t > 0], E[:, t < 0]
    if pos.size == 0 or neg.size == 0 or np.ptp(pos) or np.ptp(neg):
        raise SchemaError(f"{path}: weight exponent must be constant on each half-domain")
    prof = data[:, 4].reshape(x.size, t.size)[0]
    return GridField(
        x_grid=x, t_grid=t, values=data[:, 2].reshape(x.size, t.size),
        exponent_pos=float(pos[0, 0]), exponent_neg=float(neg[0, 0]),
        tail_bound=float(np.max(prof)), tail_profile=prof,
    )


def read_coefficients(path) -> dict[str, np.ndarray]:
    data = _read(path, COEFFICIENT_COLUMNS)
    return {c: data[:, k] for k, c in enumerate(COEFFICIENT_COLUMNS)}
