r"""Spectral solution of the mixed diffusion-wave problem

.. math::

    D^{(\alpha_1, \beta_1)\mu_1}_{0+} u - u_{xx} = f \quad (t > 0), \qquad
    D^{(\alpha_2, \beta_2)\mu_2}_{0-} u - u_{xx} = f \quad (t < 0),

on :math:`0 < x < l`, :math:`|t| < T`, with homogeneous Dirichlet conditions,
the non-local condition :math:`u(x, -T) = u(x, T) + \psi(x)` and conjugation
of the weighted traces across :math:`t = 0`.

Expanding in :math:`\sin(\sqrt{\lambda_n} x)`, :math:`\lambda_n = (n\pi/l)^2`,
every mode reduces to a left-sided and a right-sided fractional Cauchy
problem coupled through :math:`\tau_n = \varphi_n` and
:math:`\nu_n = -\lambda_n \tau_n / \Gamma(\delta_1)`; the non-local condition
then fixes :math:`\tau_n = (\psi_n + F_n) / \Delta_n`.

Solution samples are stored weighted: :math:`t^{1-\gamma_1} u` for
:math:`t > 0` and :math:`(-t)^{2-\gamma_2} u` for :math:`t < 0`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from bihilfer.fode import ml_convolution
from bihilfer.frac_ops import OrderTriple, SampledFunction, fd_weights
from bihilfer.special_functions import (
    MLParams,
    ml_eval,
    ml_fit_envelope,
    rgamma,
    sinpi,
)

#: Quadrature points per wavelength of the finest resolved sine mode.
POINTS_PER_WAVELENGTH = 12
#: Relative threshold on :math:`|\Delta_n|` below which a mode is singular.
SINGULAR_THRESHOLD = 1.0e-10
#: Largest truncation reached by automatic escalation.
N_MAX_LIMIT = 1024
#: Modes beyond ``n_max`` whose bounds are computed explicitly, as a multiple.
TAIL_FACTOR = 4


class SingularModeError(ArithmeticError):
    """A retained mode has a (numerically) vanishing determinant."""

    def __init__(self, mode: int, delta: float, limit: float) -> None:
        super().__init__(
            f"mode n={mode} has |Delta_n| = {abs(delta):.3e}, below "
            f"{SINGULAR_THRESHOLD:.0e} x asymptotic limit {limit:.6g}"
        )
        self.mode = mode
        self.delta = delta


class TailTooLargeError(ArithmeticError):
    """The truncation remainder bound exceeds the tolerance."""

    def __init__(self, tail_bound: float, tol: float, n_max: int) -> None:
        super().__init__(
            f"tail bound {tail_bound:.3e} exceeds tol {tol:.1e} at n_max={n_max}; "
            "raise n_max"
        )
        self.tail_bound = tail_bound


class ResolutionError(ValueError):
    """The coefficient quadrature cannot resolve the requested modes."""


def _zero_forcing(x, t):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape)


@dataclass(frozen=True)
class ProblemSpec:
    """Geometry, orders, data and discretization settings of the problem."""

    l: float
    T: float
    orders1: OrderTriple
    orders2: OrderTriple
    psi: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    n_max: int = 64
    tol: float = 1.0e-6
    #: graded intervals per time half-domain
    nt: int = 256
    #: grading exponent of the time grid
    grading: float = 2.0
    #: geometric refinement levels (ratio 1/2) below the first graded node
    levels: int = 20
    #: uniform cells per time half-domain for the forcing convolutions
    nt_forcing: int = 1024
    escalate: bool = True

    def __post_init__(self) -> None:
        if not (self.l > 0 and self.T > 0):
            raise ValueError("l and T must be positive")
        if self.orders1.side_order_i != 1:
            raise ValueError("orders1 must have side_order_i = 1")
        if self.orders2.side_order_i != 2:
            raise ValueError("orders2 must have side_order_i = 2")
        if self.n_max < 1 or self.nt < 8 or self.tol <= 0:
            raise ValueError("n_max >= 1, nt >= 8 and tol > 0 are required")
        ends = np.asarray(self.psi(np.array([0.0, self.l])), dtype=np.float64)
        if np.max(np.abs(ends)) > 1e-12:
            raise ValueError(f"psi must vanish at x = 0 and x = l, got {ends}")
        if self.f is not None:
            ts = np.linspace(-self.T, self.T, 33)
            fe = np.concatenate([
                np.asarray(self.f(np.zeros_like(ts), ts), dtype=np.float64).ravel(),
                np.asarray(self.f(np.full_like(ts, self.l), ts), dtype=np.float64).ravel(),
            ])
            if np.max(np.abs(fe)) > 1e-12:
                raise ValueError("f must vanish at x = 0 and x = l")

    @property
    def forcing(self) -> Callable:
        return self.f if self.f is not None else _zero_forcing

    def with_n_max(self, n_max: int) -> "ProblemSpec":
        from dataclasses import replace

        return replace(self, n_max=n_max)


@dataclass(frozen=True)
class SpectralCoefficients:
    """Per-mode quantities for modes ``n = 1 .. n_max`` (arrays indexed ``n - 1``)."""

    n: np.ndarray
    lambda_n: np.ndarray
    psi_n: np.ndarray
    F_n: np.ndarray
    Delta_n: np.ndarray
    tau_n: np.ndarray
    nu_n: np.ndarray
    phi_n: np.ndarray
    #: forcing coefficients on a uniform grid of [-T, T]; column ``n - 1``
    f_n: SampledFunction | None = None
    #: explicit bounds on the modes beyond ``n_max`` (see :func:`tail_terms`)
    tail: "TailTerms | None" = field(default=None, repr=False)

    @property
    def n_max(self) -> int:
        return int(self.n.size)


@dataclass(frozen=True)
class GridField:
    r"""Weighted solution samples ``values[i, j]`` at ``(x_grid[i], t_grid[j])``.

    ``t_grid`` is ascending and excludes 0. Columns with :math:`t > 0` hold
    :math:`t^{1-\gamma_1} u`, columns with :math:`t < 0` hold
    :math:`(-t)^{2-\gamma_2} u`.
    """

    x_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    exponent_pos: float
    exponent_neg: float
    tail_bound: float = 0.0
    #: per-column truncation bound
    tail_profile: np.ndarray | None = None
    raw_available: bool = True

    def __post_init__(self) -> None:
        if np.any(self.t_grid == 0):
            raise ValueError("t_grid must exclude 0")
        if np.any(np.diff(self.t_grid) <= 0) or np.any(np.diff(self.x_grid) <= 0):
            raise ValueError("grids must be strictly increasing")
        if self.values.shape != (self.x_grid.size, self.t_grid.size):
            raise ValueError("values shape does not match the grids")

    @property
    def weight_exponents(self) -> np.ndarray:
        return np.where(self.t_grid > 0, self.exponent_pos, self.exponent_neg)

    def raw(self) -> np.ndarray:
        """Unweighted :math:`u(x, t)`."""
        w = np.abs(self.t_grid) ** (-self.weight_exponents)
        return self.values * w[None, :]

    def half(self, positive: bool) -> tuple[np.ndarray, np.ndarray]:
        """``(|t|, values)`` of one half-domain, ascending in ``|t|``."""
        if positive:
            m = self.t_grid > 0
            return self.t_grid[m], self.values[:, m]
        m = self.t_grid < 0
        return -self.t_grid[m][::-1], self.values[:, m][:, ::-1]


# {{{ grids and quadrature


def half_time_grid(T: float, nt: int, grading: float = 2.0, levels: int = 20) -> np.ndarray:
    """Positive time nodes: graded nodes plus geometric refinement toward 0."""
    graded = T * (np.arange(1, nt + 1) / nt) ** grading
    geo = graded[0] * 0.5 ** np.arange(levels, 0, -1)
    return np.concatenate([geo, graded])


def solver_time_grid(spec: ProblemSpec) -> np.ndarray:
    """Ascending time grid on :math:`[-T, T] \\setminus \\{0\\}`."""
    s = half_time_grid(spec.T, spec.nt, spec.grading, spec.levels)
    return np.concatenate([-s[::-1], s])


@lru_cache(maxsize=8)
def _gauss_panels(n_panels: int, order: int = 8):
    x, w = roots_legendre(order)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * (x[None, :] + 1.0) + a).ravel()
    weights = (0.5 * (b - a) * w[None, :]).ravel()
    return nodes, weights


def _quadrature(l: float, n_modes: int, n_quad: int | None = None):
    need = POINTS_PER_WAVELENGTH * n_modes // 2
    n_quad = n_quad or max(256, 2 * need)
    if n_quad < need:
        raise ResolutionError(
            f"{n_quad} quadrature points cannot resolve mode {n_modes}; need {need}"
        )
    panels = -(-n_quad // 8)
    u, w = _gauss_panels(panels)
    return l * u, l * w


def sine_basis(x, n_modes: int, l: float) -> np.ndarray:
    """Matrix ``sin(n pi x / l)`` of shape ``(len(x), n_modes)``; exact zeros at walls."""
    x = np.asarray(x, dtype=np.float64)
    n = np.arange(1, n_modes + 1)
    return sinpi(np.outer(x / l, n))


def _transform(x: np.ndarray, w: np.ndarray, gx: np.ndarray, n_modes: int, l: float,
               block: int = 256) -> np.ndarray:
    """``(2/l) sum_q w_q g(x_q, .) sin(n pi x_q / l)``, blocked over modes."""
    gw = (w * gx.T).T
    out = np.empty((n_modes,) + gx.shape[1:])
    for lo in range(0, n_modes, block):
        hi = min(n_modes, lo + block)
        n = np.arange(lo + 1, hi + 1)
        out[lo:hi] = sinpi(np.outer(n, x / l)) @ gw
    return (2.0 / l) * out


def sine_coefficients(g, l: float, n_max: int, n_quad: int | None = None) -> np.ndarray:
    r""":math:`(2/l) \int_0^l g(x) \sin(n \pi x / l)\, dx` for ``n = 1 .. n_max``."""
    x, w = _quadrature(l, n_max, n_quad)
    gx = np.asarray(g(x), dtype=np.float64)
    return _transform(x, w, gx, n_max, l)


def forcing_coefficients(f, spec: ProblemSpec, n_modes: int | None = None,
                         t=None) -> SampledFunction:
    r"""Sine coefficients :math:`f_n(t)`, by default on a uniform grid of :math:`[-T, T]`.

    Returns a two-dimensional :class:`SampledFunction` whose column ``n - 1``
    holds :math:`f_n`.
    """
    n_modes = n_modes or spec.n_max
    if t is None:
        t = np.linspace(-spec.T, spec.T, 2 * spec.nt_forcing + 1)
    x, w = _quadrature(spec.l, n_modes)
    fn = np.empty((t.size, n_modes))
    for lo in range(0, t.size, 256):
        tb = t[lo : lo + 256]
        fx = np.asarray(f(x[:, None], tb[None, :]), dtype=np.float64)
        fx = np.broadcast_to(fx, (x.size, tb.size))
        fn[lo : lo + 256] = _transform(x, w, fx, n_modes, spec.l).T
    return SampledFunction(t, fn)


def _half_forcing(fn: SampledFunction, col: int, positive: bool) -> SampledFunction:
    t = fn.grid
    m = t.size // 2
    if positive:
        return SampledFunction(t[m:], fn.values[m:, col])
    return SampledFunction(t[: m + 1], fn.values[: m + 1, col])


# }}}


# {{{ per-mode formulas


def _eigenvalue(n, l: float):
    return (np.asarray(n, dtype=np.float64) * math.pi / l) ** 2


def determinant(n: int, spec: ProblemSpec) -> float:
    r""":math:`\Delta_n` of the mode-``n`` conjugation system."""
    return float(_determinants(np.atleast_1d(n), spec)[0])


def _determinants(n: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    o1, o2 = spec.orders1, spec.orders2
    g1, d1, g2, d2 = o1.gamma, o1.delta, o2.gamma, o2.delta
    T = spec.T
    lam = _eigenvalue(n, spec.l)
    z2 = -lam * T**d2
    z1 = -lam * T**d1
    return (
        T ** (g2 - 2.0) * ml_eval(MLParams(d2, g2 - 1.0), z2)
        + lam * T ** (g2 - 1.0) * rgamma(d1) * ml_eval(MLParams(d2, g2), z2)
        - T ** (g1 - 1.0) * ml_eval(MLParams(d1, g1), z1)
    )


def determinant_limit(spec: ProblemSpec) -> float:
    r"""Limit of :math:`\Delta_n` as :math:`n \to \infty`.

    Zero when :math:`\gamma_2 = \delta_2` (that is :math:`\mu_2 = 0` or
    :math:`\alpha_2 = \beta_2`); the determinant then decays and no positive
    lower bound exists.
    """
    o1, o2 = spec.orders1, spec.orders2
    return spec.T ** (o2.gamma - o2.delta - 1.0) * rgamma(o1.delta) * rgamma(o2.gamma - o2.delta)


def forcing_functional(n: int, spec: ProblemSpec, fn: SampledFunction | None = None) -> float:
    r""":math:`F_n`, the difference of the two forcing convolutions at :math:`\pm T`."""
    if spec.f is None:
        return 0.0
    fn = fn if fn is not None else forcing_coefficients(spec.f, spec, n)
    return _forcing_functional(n, spec, fn)


def _forcing_functional(n: int, spec: ProblemSpec, fn: SampledFunction) -> float:
    lam = float(_eigenvalue(n, spec.l))
    col = n - 1
    pos = _half_forcing(fn, col, True)
    neg = _half_forcing(fn, col, False)
    c1 = ml_convolution(pos, -lam, spec.orders1.delta, targets=np.array([spec.T]))[0]
    c2 = ml_convolution(neg, -lam, spec.orders2.delta, targets=np.array([-spec.T]))[0]
    return float(c1 - c2)


def forward_psi_coefficients(tau: np.ndarray, spec: ProblemSpec, F_n: np.ndarray | None = None) -> np.ndarray:
    r"""Forward map :math:`\psi_n = \tau_n \Delta_n - F_n` of the non-local condition."""
    tau = np.asarray(tau, dtype=np.float64)
    n = np.arange(1, tau.size + 1)
    F = np.zeros_like(tau) if F_n is None else np.asarray(F_n)
    return tau * _determinants(n, spec) - F


# }}}


# {{{ solve


def _active_modes(fn: SampledFunction) -> np.ndarray:
    """Modes whose forcing rises above the round-off level of the largest one."""
    amp = np.max(np.abs(fn.values), axis=0)
    return amp > 1.0e-14 * np.max(amp, initial=0.0)


def solve_coefficients(spec: ProblemSpec, psi_n: np.ndarray | None = None) -> SpectralCoefficients:
    r"""Coefficients :math:`\tau_n = \varphi_n = (\psi_n + F_n)/\Delta_n` and
    :math:`\nu_n = -\lambda_n \tau_n / \Gamma(\delta_1)` for ``n <= n_max``.

    :arg psi_n: optional precomputed sine coefficients of :math:`\psi`.
    :raises SingularModeError: for the first mode with a vanishing determinant.
    """
    nm = spec.n_max
    n = np.arange(1, nm + 1)
    lam = _eigenvalue(n, spec.l)
    if psi_n is None:
        psi_n = sine_coefficients(spec.psi, spec.l, nm)
    psi_n = np.asarray(psi_n, dtype=np.float64)[:nm]
    delta = _determinants(n, spec)
    limit = determinant_limit(spec)
    # a zero limit (gamma2 = delta2) gives no scale; use the retained modes
    scale = abs(limit) if limit != 0 else float(np.max(np.abs(delta)))
    bad = np.nonzero(np.abs(delta) < SINGULAR_THRESHOLD * scale)[0]
    if bad.size:
        raise SingularModeError(int(n[bad[0]]), float(delta[bad[0]]), limit)

    fn = None
    F = np.zeros(nm)
    if spec.f is not None:
        fn = forcing_coefficients(spec.f, spec, nm)
        for k in np.nonzero(_active_modes(fn))[0]:
            F[k] = _forcing_functional(int(k + 1), spec, fn)

    tau = (psi_n + F) / delta
    nu = -lam * tau * rgamma(spec.orders1.delta)
    return SpectralCoefficients(
        n=n, lambda_n=lam, psi_n=psi_n, F_n=F, Delta_n=delta,
        tau_n=tau, nu_n=nu, phi_n=tau.copy(), f_n=fn,
    )


# }}}


# {{{ truncation tail


@dataclass(frozen=True)
class TailTerms:
    """Bounds on the weighted magnitude of individual modes beyond ``n_max``."""

    n: np.ndarray
    #: (modes, columns) bounds on the positive and negative half grids
    bounds: np.ndarray
    #: estimated remainder beyond the explicitly bounded modes
    remainder: float


@lru_cache(maxsize=64)
def _envelope(alpha: float, beta: float) -> float:
    z = -np.concatenate([[0.0], np.logspace(-3, 8, 441)])
    return ml_fit_envelope(MLParams(alpha, beta), z).constant_M


def _sup_ratio(lam: np.ndarray, p: float, d: float, smax: float) -> np.ndarray:
    r""":math:`\sup_{0 < s \le s_{max}} s^p / (1 + \lambda s^d)` for ``0 <= p <= d``."""
    if p == 0:
        return np.ones_like(lam)
    if p >= d:
        return smax**p / (1.0 + lam * smax**d)
    s_star = (p / ((d - p) * lam)) ** (1.0 / d)
    s = np.minimum(s_star, smax)
    return s**p / (1.0 + lam * s**d)


def _mode_bounds(spec: ProblemSpec, n: np.ndarray, tau_abs: np.ndarray, fsup: np.ndarray, s_pos, s_neg) -> np.ndarray:
    """Per-column bounds of the weighted mode magnitude (columns: -s_neg rev, s_pos)."""
    o1, o2 = spec.orders1, spec.orders2
    g1, d1, g2, d2 = o1.gamma, o1.delta, o2.gamma, o2.delta
    lam = _eigenvalue(n, spec.l)[:, None]
    m11 = _envelope(d1, g1)
    m1f = _envelope(d1, d1)
    m20 = _envelope(d2, g2 - 1.0)
    m21 = _envelope(d2, g2)
    m2f = _envelope(d2, d2)
    tau = tau_abs[:, None]
    fs = fsup[:, None]
    sp, sn = s_pos[None, :], s_neg[None, :]
    # forcing parts: |int r^{d-1} E_{d,d}(-lam r^d) f| <= M sup|f| log(1 + lam s^d) / (lam d)
    pos = tau * m11 / (1.0 + lam * sp**d1)
    pos = pos + sp ** (1.0 - g1) * fs * m1f * np.log1p(lam * sp**d1) / (lam * d1)
    nu = lam * tau * rgamma(d1)
    neg = tau * m20 / (1.0 + lam * sn**d2) + nu * m21 * sn / (1.0 + lam * sn**d2)
    neg = neg + sn ** (2.0 - g2) * fs * m2f * np.log1p(lam * sn**d2) / (lam * d2)
    return np.hstack([neg[:, ::-1], pos])


def _denoise(c: np.ndarray, rel: float = 1.0e-14) -> np.ndarray:
    """Zero coefficients at the quadrature round-off level."""
    c = np.asarray(c, dtype=np.float64)
    floor = rel * (np.max(np.abs(c)) if c.size else 0.0)
    return np.where(np.abs(c) > floor, c, 0.0)


def tail_terms(spec: ProblemSpec, c: SpectralCoefficients, s_pos, s_neg) -> TailTerms:
    """Explicit bounds for modes ``n_max < n <= TAIL_FACTOR n_max`` plus a
    power-law estimate of the remainder beyond."""
    nm = c.n_max
    n_hi = TAIL_FACTOR * nm
    n = np.arange(nm + 1, n_hi + 1)
    psi_all = sine_coefficients(spec.psi, spec.l, n_hi)
    psi = _denoise(psi_all)[nm:]
    delta = _determinants(n, spec)
    lam = _eigenvalue(n, spec.l)
    o1, o2 = spec.orders1, spec.orders2
    if spec.f is not None:
        # sup over a coarse time sample; the explicit modes use the full grid
        ts = np.linspace(-spec.T, spec.T, 65)
        fn = forcing_coefficients(spec.f, spec, n_hi, t=ts)
        fsup = _denoise(np.max(np.abs(fn.values), axis=0))[nm:]
        T = spec.T
        fbound = fsup * (
            _envelope(o1.delta, o1.delta) * np.log1p(lam * T**o1.delta) / (lam * o1.delta)
            + _envelope(o2.delta, o2.delta) * np.log1p(lam * T**o2.delta) / (lam * o2.delta)
        )
    else:
        fsup = np.zeros(n.size)
        fbound = 0.0
    tau_abs = (np.abs(psi) + fbound) / np.abs(delta)
    bounds = _mode_bounds(spec, n, tau_abs, fsup, s_pos, s_neg)

    # power-law fit of the column maxima over the upper half of the explicit range
    peak = np.max(bounds, axis=1)
    half = n.size // 2
    nn, pk = n[half:], peak[half:]
    remainder = 0.0
    mask = pk > 0
    if np.count_nonzero(mask) >= 2:
        slope, icpt = np.polyfit(np.log(nn[mask]), np.log(pk[mask]), 1)
        p = -slope
        if p > 1.05:
            remainder = float(np.exp(icpt) * n_hi ** (1.0 - p) / (p - 1.0))
        else:
            remainder = math.inf
    elif np.any(mask):
        remainder = math.inf
    return TailTerms(n=n, bounds=bounds, remainder=remainder)


# }}}


# {{{ assembly


def _neumaier_rows(terms_by_mode):
    """Compensated sum of an iterable of equally shaped arrays."""
    total = None
    comp = None
    for term in terms_by_mode:
        if total is None:
            total = term.copy()
            comp = np.zeros_like(term)
            continue
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
    return total + comp


def mode_profiles(c: SpectralCoefficients, spec: ProblemSpec, s_pos, s_neg) -> tuple[np.ndarray, np.ndarray]:
    """Weighted time profiles of every mode on both half grids.

    Returns arrays of shape ``(n_max, len(s))``; ``s_neg`` holds ``|t|``.
    """
    o1, o2 = spec.orders1, spec.orders2
    g1, d1, g2, d2 = o1.gamma, o1.delta, o2.gamma, o2.delta
    nm = c.n_max
    pos = np.zeros((nm, s_pos.size))
    neg = np.zeros((nm, s_neg.size))
    active = _active_modes(c.f_n) if c.f_n is not None else None
    for k in range(nm):
        lam = c.lambda_n[k]
        if c.tau_n[k] != 0:
            pos[k] = c.tau_n[k] * ml_eval(MLParams(d1, g1), -lam * s_pos**d1)
            z = -lam * s_neg**d2
            neg[k] = c.phi_n[k] * ml_eval(MLParams(d2, g2 - 1.0), z)
            neg[k] -= c.nu_n[k] * s_neg * ml_eval(MLParams(d2, g2), z)
        if c.f_n is not None and active[k]:
            fp = _half_forcing(c.f_n, k, True)
            fm = _half_forcing(c.f_n, k, False)
            pos[k] += s_pos ** (1.0 - g1) * ml_convolution(fp, -lam, d1, targets=s_pos)
            neg[k] += s_neg ** (2.0 - g2) * ml_convolution(fm, -lam, d2, targets=-s_neg)
    return pos, neg


def assemble_solution(c: SpectralCoefficients, spec: ProblemSpec, x_grid, t_grid=None,
                      check_tail: bool = True) -> GridField:
    """Weighted solution samples on ``x_grid x t_grid`` with a truncation bound.

    :raises TailTooLargeError: if *check_tail* and the bound exceeds ``spec.tol``.
    """
    x = np.asarray(x_grid, dtype=np.float64)
    t = solver_time_grid(spec) if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    if np.any(t == 0):
        raise ValueError("t_grid must exclude 0")
    s_pos = t[t > 0]
    s_neg = -t[t < 0][::-1]
    pos, neg = mode_profiles(c, spec, s_pos, s_neg)
    prof = np.hstack([neg[:, ::-1], pos])
    B = sine_basis(x, c.n_max, spec.l)
    # descending n with compensated accumulation
    values = _neumaier_rows(
        np.outer(B[:, k], prof[k]) for k in range(c.n_max - 1, -1, -1)
    )

    tail = c.tail if c.tail is not None else tail_terms(spec, c, s_pos, s_neg)
    profile = np.sum(tail.bounds, axis=0) + tail.remainder
    bound = float(np.max(profile)) if profile.size else 0.0
    if check_tail and bound > spec.tol:
        raise TailTooLargeError(bound, spec.tol, c.n_max)
    return GridField(
        x_grid=x, t_grid=t, values=values,
        exponent_pos=1.0 - spec.orders1.gamma, exponent_neg=2.0 - spec.orders2.gamma,
        tail_bound=bound, tail_profile=profile,
    )


def solve(spec: ProblemSpec, x_grid, t_grid=None) -> tuple[SpectralCoefficients, GridField]:
    """Solve and assemble, doubling ``n_max`` (up to 1024) until the tail bound
    is below ``spec.tol`` when ``spec.escalate`` is set."""
    cur = spec
    while True:
        c = solve_coefficients(cur)
        t = solver_time_grid(cur) if t_grid is None else np.asarray(t_grid, dtype=np.float64)
        s_pos, s_neg = t[t > 0], -t[t < 0][::-1]
        tail = tail_terms(cur, c, s_pos, s_neg)
        c = SpectralCoefficients(**{**c.__dict__, "tail": tail})
        bound = float(np.max(np.sum(tail.bounds, axis=0) + tail.remainder))
        if bound <= cur.tol or not cur.escalate or cur.n_max * 2 > N_MAX_LIMIT:
            return c, assemble_solution(c, cur, x_grid, t, check_tail=True)
        cur = cur.with_n_max(cur.n_max * 2)


# }}}


# {{{ hypothesis screening


def _endpoint_derivative(g, x0: float, direction: float, order: int, h: float) -> tuple[float, float]:
    """One-sided derivative estimate and its round-off level."""
    # stencil exact for polynomials of degree npts - 1
    npts = order + 6
    j = np.arange(npts, dtype=np.float64)
    A = j[None, :] ** np.arange(npts)[:, None]
    rhs = np.zeros(npts)
    rhs[order] = math.factorial(order)
    w = np.linalg.solve(A, rhs)
    vals = np.asarray(g(x0 + direction * h * j), dtype=np.float64)
    noise = 10 * np.finfo(float).eps * np.max(np.abs(vals)) * np.sum(np.abs(w)) / h**order
    return float(np.dot(w, vals) * direction**order / h**order), float(noise)


def hypothesis_check(spec: ProblemSpec, rtol: float = 1e-4) -> dict[str, tuple[str, float]]:
    """Screen the sufficient smoothness and compatibility conditions of the
    existence theorem. Each entry maps a condition to ``("pass" | "warn", value)``;
    failures are warnings since the conditions are only sufficient."""
    l = spec.l
    h = l / 256
    xs = np.linspace(0, l, 2049)
    out: dict[str, tuple[str, float]] = {}

    def scale_of(k, g):
        idx, w = fd_weights(xs, k)
        v = np.asarray(g(xs), dtype=np.float64)
        return max(1.0, float(np.max(np.abs(np.sum(w * v[idx], axis=1)))))

    for k in (0, 2, 4):
        sc = scale_of(k, spec.psi) if k else 1.0
        for name, x0, dirn in (("0", 0.0, 1.0), ("l", l, -1.0)):
            if k == 0:
                val, noise = float(spec.psi(np.array([x0]))[0]), 0.0
            else:
                val, noise = _endpoint_derivative(spec.psi, x0, dirn, k, h)
            ok = abs(val) <= (1e-12 if k == 0 else rtol * sc + noise)
            out[f"psi^({k})({name}) = 0"] = ("pass" if ok else "warn", val)

    n5 = scale_of(5, spec.psi)
    out["psi^(5) bounded"] = ("pass" if np.isfinite(n5) and n5 < 1e12 else "warn", n5)

    f = spec.forcing
    ts = np.linspace(-spec.T, spec.T, 17)
    ts = ts[ts != 0]
    for k in (0, 2):
        worst = 0.0
        sc = 1.0
        floor = 0.0
        for tv in ts:
            g = lambda x, tv=tv: np.asarray(f(x, np.full_like(x, tv)), dtype=np.float64)
            if k:
                sc = max(sc, scale_of(k, g))
            for x0, dirn in ((0.0, 1.0), (l, -1.0)):
                v, noise = (g(np.array([x0]))[0], 0.0) if k == 0 else _endpoint_derivative(g, x0, dirn, k, h)
                worst = max(worst, abs(float(v)))
                floor = max(floor, noise)
        ok = worst <= (1e-12 if k == 0 else rtol * sc + floor)
        out[{0: "f at walls = 0", 2: "f_xx at walls = 0"}[k]] = ("pass" if ok else "warn", worst)
    n3 = 0.0
    for tv in ts:
        g = lambda x, tv=tv: np.asarray(f(x, np.full_like(x, tv)), dtype=np.float64)
        n3 = max(n3, scale_of(3, g))
    out["f_xxx bounded"] = ("pass" if np.isfinite(n3) and n3 < 1e12 else "warn", n3)
    return out


# }}}
