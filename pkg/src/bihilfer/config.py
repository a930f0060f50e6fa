"""Run configuration files.

The format is a flat INI dialect: ``[section]`` headers, ``key = value``
lines and ``#`` comments. It is parsed by hand rather than with
:mod:`configparser` so that every diagnostic can name the line and field
it came from.

Data functions are expression strings (see :mod:`bihilfer.expr`) or
``table:PATH`` references to comma-separated tables, resolved relative to
the configuration file: ``x,value`` rows for ``psi`` and ``x,t,value``
rows on a rectangular grid for ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from bihilfer.expr import ExpressionError, compile_expression
from bihilfer.fode import CauchyData
from bihilfer.frac_ops import OrderTriple, SampledFunction, graded_grid
from bihilfer.spectral import ProblemSpec
from bihilfer.verify import Tolerances

SECTIONS = {
    "problem": {"l", "T", "alpha1", "beta1", "mu1", "alpha2", "beta2", "mu2", "psi", "f", "n_max", "tol", "seed"},
    "grid": {"nx", "nt", "nt_forcing"},
    "output": {"dir"},
    "tolerances": {"pde", "conditions", "conjugation"},
    "cauchy": {"T", "lambda", "xi0", "xi1", "g", "alpha", "beta", "mu", "n", "tol"},
}


class ConfigError(ValueError):
    def __init__(self, path: str, line: int | None, fieldname: str | None, message: str) -> None:
        loc = f"{path}:{line}" if line else path
        what = f" field '{fieldname}':" if fieldname else ""
        super().__init__(f"{loc}:{what} {message}")
        self.line = line
        self.field = fieldname


@dataclass
class RawConfig:
    path: str
    entries: dict[tuple[str, str], tuple[str, int]] = field(default_factory=dict)

    def has(self, section: str, key: str) -> bool:
        return (section, key) in self.entries

    def error(self, section: str, key: str, message: str) -> ConfigError:
        _, line = self.entries.get((section, key), ("", None))
        return ConfigError(self.path, line, f"{section}.{key}", message)

    def get(self, section: str, key: str, default=None) -> str:
        if (section, key) not in self.entries:
            if default is None:
                raise ConfigError(self.path, None, f"{section}.{key}", "missing required value")
            return default
        return self.entries[(section, key)][0]

    def real(self, section: str, key: str, default: float | None = None) -> float:
        text = self.get(section, key, None if default is None else repr(default))
        try:
            v = float(text)
        except ValueError:
            raise self.error(section, key, f"expected a real number, got {text!r}") from None
        if not np.isfinite(v):
            raise self.error(section, key, f"must be finite, got {text!r}")
        return v

    def integer(self, section: str, key: str, default: int | None = None, minimum: int = 1) -> int:
        text = self.get(section, key, None if default is None else str(default))
        try:
            v = int(text)
        except ValueError:
            raise self.error(section, key, f"expected an integer, got {text!r}") from None
        if v < minimum:
            raise self.error(section, key, f"must be >= {minimum}, got {v}")
        return v


def read_config(path: str | Path) -> RawConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), None, None, f"cannot read: {exc.strerror}") from None
    cfg = RawConfig(str(path))
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(cfg.path, lineno, None, f"malformed section header {s!r}")
            section = s[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(cfg.path, lineno, None, f"unknown section [{section}]")
            continue
        if "=" not in s:
            raise ConfigError(cfg.path, lineno, None, f"expected 'key = value', got {s!r}")
        if section is None:
            raise ConfigError(cfg.path, lineno, None, "value outside of any section")
        key, value = (p.strip() for p in s.split("=", 1))
        if key not in SECTIONS[section]:
            raise ConfigError(cfg.path, lineno, f"{section}.{key}", "unknown field")
        if (section, key) in cfg.entries:
            raise ConfigError(cfg.path, lineno, f"{section}.{key}", "duplicate field")
        cfg.entries[(section, key)] = (value, lineno)
    return cfg


def _orders(cfg: RawConfig, section: str, keys: tuple[str, str, str], i: int) -> OrderTriple:
    a, b, m = (cfg.real(section, k) for k in keys)
    for k, v in zip(keys[:2], (a, b)):
        if not (i - 1 < v < i):
            raise cfg.error(section, k, f"must lie in ({i - 1}, {i}), got {v}")
    if not (0.0 <= m <= 1.0):
        raise cfg.error(section, keys[2], f"must lie in [0, 1], got {m}")
    return OrderTriple(a, b, m, i)


def _table(cfg: RawConfig, section: str, key: str, ref: str, ncols: int) -> np.ndarray:
    p = Path(ref)
    if not p.is_absolute():
        p = Path(cfg.path).parent / p
    try:
        data = np.loadtxt(p, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise cfg.error(section, key, f"cannot read table {str(p)!r}: {exc}") from None
    if data.shape[1] != ncols:
        raise cfg.error(section, key, f"table {str(p)!r} must have {ncols} columns")
    return data


def _psi(cfg: RawConfig, l: float):
    text = cfg.get("problem", "psi")
    if text.startswith("table:"):
        data = _table(cfg, "problem", "psi", text[6:].strip(), 2)
        order = np.argsort(data[:, 0])
        xs, vs = data[order, 0], data[order, 1]
        return lambda x: np.interp(np.asarray(x, dtype=np.float64), xs, vs)
    try:
        f = compile_expression(text, ("x",), l=l)
        f(np.array([0.0, l]))
    except ExpressionError as exc:
        raise cfg.error("problem", "psi", str(exc)) from None
    return f


def _forcing(cfg: RawConfig, l: float):
    if not cfg.has("problem", "f"):
        return None
    text = cfg.get("problem", "f")
    if text.startswith("table:"):
        data = _table(cfg, "problem", "f", text[6:].strip(), 3)
        xs, ts = np.unique(data[:, 0]), np.unique(data[:, 1])
        if xs.size * ts.size != data.shape[0]:
            raise cfg.error("problem", "f", "table is not a full rectangular (x, t) grid")
        grid = np.full((xs.size, ts.size), np.nan)
        grid[np.searchsorted(xs, data[:, 0]), np.searchsorted(ts, data[:, 1])] = data[:, 2]
        interp = RegularGridInterpolator((xs, ts), grid, method="linear")

        def f(x, t):
            x, t = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
            return interp(np.stack([x.ravel(), t.ravel()], axis=-1)).reshape(x.shape)

        return f
    try:
        f = compile_expression(text, ("x", "t"), l=l)
        f(np.array([0.0]), np.array([0.0]))
    except ExpressionError as exc:
        raise cfg.error("problem", "f", str(exc)) from None
    return f


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    nx: int
    nt: int
    output: str
    tolerances: Tolerances
    seed: int


def problem_config(cfg: RawConfig, n_max: int | None = None, tol: float | None = None) -> RunConfig:
    """Build the problem of the ``[problem]`` / ``[grid]`` / ``[tolerances]`` sections."""
    l = cfg.real("problem", "l")
    T = cfg.real("problem", "T")
    for k, v in (("l", l), ("T", T)):
        if v <= 0:
            raise cfg.error("problem", k, f"must be positive, got {v}")
    o1 = _orders(cfg, "problem", ("alpha1", "beta1", "mu1"), 1)
    o2 = _orders(cfg, "problem", ("alpha2", "beta2", "mu2"), 2)
    psi = _psi(cfg, l)
    f = _forcing(cfg, l)
    n_max = n_max if n_max is not None else cfg.integer("problem", "n_max", 64)
    tol = tol if tol is not None else cfg.real("problem", "tol", 1e-6)
    if tol <= 0:
        raise cfg.error("problem", "tol", f"must be positive, got {tol}")
    nx = cfg.integer("grid", "nx", 101, minimum=5)
    nt = cfg.integer("grid", "nt", 256, minimum=8)
    ntf = cfg.integer("grid", "nt_forcing", 1024, minimum=16)
    d = Tolerances()
    tols = Tolerances(
        pde=cfg.real("tolerances", "pde", d.pde),
        nonlocal_=cfg.real("tolerances", "conditions", d.nonlocal_),
        conjugation=cfg.real("tolerances", "conjugation", d.conjugation),
    )
    try:
        spec = ProblemSpec(l=l, T=T, orders1=o1, orders2=o2, psi=psi, f=f, n_max=n_max,
                           tol=tol, nt=nt, nt_forcing=ntf)
    except ValueError as exc:
        key = "f" if "f must" in str(exc) else "psi" if "psi" in str(exc) else "n_max"
        raise cfg.error("problem", key, str(exc)) from None
    return RunConfig(spec, nx, nt, cfg.get("output", "dir", "out"), tols,
                     cfg.integer("problem", "seed", 0, minimum=0))


@dataclass(frozen=True)
class CauchyConfig:
    data: CauchyData
    n: int
    tol: float
    output: str


def cauchy_config(cfg: RawConfig) -> CauchyConfig:
    """Build the right-sided Cauchy problem of the ``[cauchy]`` section."""
    T = cfg.real("cauchy", "T", 1.0)
    if T <= 0:
        raise cfg.error("cauchy", "T", f"must be positive, got {T}")
    o = _orders(cfg, "cauchy", ("alpha", "beta", "mu"), 2)
    n = cfg.integer("cauchy", "n", 2048, minimum=8)
    try:
        g = compile_expression(cfg.get("cauchy", "g", "0"), ("t",))
    except ExpressionError as exc:
        raise cfg.error("cauchy", "g", str(exc)) from None
    t = -graded_grid(T, n)[::-1]
    data = CauchyData(
        lam=cfg.real("cauchy", "lambda"),
        xi0=cfg.real("cauchy", "xi0", 0.0),
        xi1=cfg.real("cauchy", "xi1", 0.0),
        forcing=SampledFunction(t, g(t)),
        orders=o,
    )
    tol = cfg.real("cauchy", "tol", 1e-4)
    return CauchyConfig(data, n, tol, cfg.get("output", "dir", "out"))
