r"""Closed-form solutions of the fractional ODEs produced by the spectral
method, together with Mittag-Leffler free Volterra oracles.

Closed forms share one convolution engine, :func:`ml_convolution`, which
evaluates

.. math::

    C(t) = \int_0^t (t - s)^{a - 1} E_{a, a}[\lambda (t - s)^a] f(s)\, ds

for piecewise linear :math:`f` on a uniform grid. Integrating by parts twice
against the primitives

.. math::

    G_1(r) = r^a E_{a, a + 1}(\lambda r^a), \qquad
    G_2(r) = r^{a + 1} E_{a, a + 2}(\lambda r^a)

integrates the whole kernel exactly on every cell, so large :math:`|\lambda|`
boundary layers need no resolution. Right-sided problems on :math:`[-T, 0]`
are handled in the mirrored variable :math:`s = -t`.

Oracles (``*_oracle`` and :func:`volterra_collocation`) use only
:mod:`bihilfer.frac_ops` product weights and the gamma function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from bihilfer.frac_ops import (
    OrderTriple,
    SampledFunction,
    Side,
    extrapolate_limit,
    rl_integral,
    rl_weights,
)
from bihilfer.special_functions import MLParams, gamma, ml_eval, rgamma

#: Relative tolerance for deciding that a grid is uniform.
UNIFORM_RTOL = 1.0e-9
#: Largest admissible growth factor in the triangular oracle solves.
GROWTH_BOUND = 1.0e8


class IllConditionedError(ArithmeticError):
    """Raised when a triangular Volterra solve amplifies errors too much."""


class ExtrapolationError(ArithmeticError):
    """Raised when limit extrapolation at the origin is unreliable."""


@dataclass(frozen=True)
class CauchyData:
    r"""Data of the right-sided Cauchy problem

    .. math::

        D^{(\alpha, \beta)\mu}_{0-} u = \lambda u + g, \quad
        \lim_{t \to 0-} I^{2 - \gamma}_{0-} u = \xi_0, \quad
        \lim_{t \to 0-} \frac{d}{dt} I^{2 - \gamma}_{0-} u = \xi_1.
    """

    lam: float
    xi0: float
    xi1: float
    forcing: SampledFunction
    orders: OrderTriple

    def __post_init__(self) -> None:
        if self.orders.side_order_i != 2:
            raise ValueError("Cauchy data need orders with side_order_i = 2")
        if np.any(self.forcing.grid > 0):
            raise ValueError("forcing must be sampled on [-T, 0]")
        if self.forcing.singular_exponent:
            raise ValueError("forcing must be given by unweighted samples")

    @property
    def T(self) -> float:
        return float(-np.min(self.forcing.grid))


# {{{ convolution engine


def _mirror(f: SampledFunction) -> tuple[np.ndarray, np.ndarray]:
    s = np.abs(f.grid)
    order = np.argsort(s)
    s, v = s[order], f.values[order]
    if s[0] != 0:
        raise ValueError("forcing grid must contain t = 0")
    return s, v


def _uniform(s: np.ndarray, v: np.ndarray, n_min: int = 64) -> tuple[float, np.ndarray]:
    """Step and values of *v* on a uniform grid spanning ``[0, s[-1]]``."""
    d = np.diff(s)
    if np.allclose(d, d[0], rtol=UNIFORM_RTOL, atol=0):
        return float(d[0]), v
    n = max(n_min, s.size - 1)
    su = np.linspace(0.0, s[-1], n + 1)
    if v.ndim == 1:
        return float(su[1]), np.interp(su, s, v)
    return float(su[1]), np.column_stack([np.interp(su, s, c) for c in v.T])


def _primitives(lam: float, order: float, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = float(order)
    z = lam * r**a
    g1 = r**a * ml_eval(MLParams(a, a + 1.0), z)
    g2 = r ** (a + 1.0) * ml_eval(MLParams(a, a + 2.0), z)
    return g1, g2


def ml_convolution(f: SampledFunction, lam: float, order: float, targets=None) -> np.ndarray:
    r"""Convolution of *f* with :math:`r^{a-1} E_{a,a}(\lambda r^a)`.

    For a left-sided *f* (grid in :math:`[0, T]`) returns
    :math:`\int_0^t (t - s)^{a-1} E_{a,a}[\lambda (t-s)^a] f(s) ds`; for a
    right-sided *f* (grid in :math:`[-T, 0]`) returns
    :math:`\int_t^0 (s - t)^{a-1} E_{a,a}[\lambda (s-t)^a] f(s) ds`.

    :arg targets: evaluation points of the same sign as the grid; defaults to
        the grid itself. Off-grid targets are evaluated by splining the
        smooth remainder after subtracting the exact contributions of the
        value and slope of *f* at the origin.
    """
    s, v = _mirror(f)
    h, vu = _uniform(s, v)
    n = vu.shape[0] - 1
    if not np.any(vu):
        shape = (s.size if targets is None else np.size(targets),) + vu.shape[1:]
        return np.zeros(shape)

    r = h * np.arange(n + 1)
    g1, g2 = _primitives(lam, order, r)
    dg2 = g2[1:] - g2[:-1]
    slope = (vu[1:] - vu[:-1]) / h
    if vu.ndim == 1:
        conv = np.convolve(slope, dg2)[:n]
        rem = np.concatenate([[0.0], conv - slope[0] * g2[1:]])
    else:
        conv = np.column_stack([np.convolve(c, dg2)[:n] for c in slope.T])
        rem = np.vstack([np.zeros((1, vu.shape[1])), conv - g2[1:, None] * slope[0]])

    if targets is None:
        # results follow the order of the input grid
        if s.size == r.size and np.allclose(s, r, rtol=UNIFORM_RTOL, atol=0):
            out = _assemble(vu, slope, g1, g2, rem)
            res = np.empty_like(out)
            res[np.argsort(np.abs(f.grid))] = out
            return res
        targets_abs = np.abs(f.grid)
    else:
        targets_abs = np.abs(np.asarray(targets, dtype=np.float64))
        if np.any(targets_abs > r[-1] * (1 + 1e-12)):
            raise ValueError("targets outside the forcing grid span")

    tg1, tg2 = _primitives(lam, order, targets_abs)
    spline = CubicSpline(r, rem, axis=0)
    out = spline(np.minimum(targets_abs, r[-1]))
    return _assemble(vu, slope, tg1, tg2, out)


def _assemble(vu, slope, g1, g2, rem):
    if vu.ndim == 1:
        return g1 * vu[0] + g2 * slope[0] + rem
    return g1[:, None] * vu[0] + g2[:, None] * slope[0] + rem


# }}}


# {{{ Volterra resolvent


def volterra_resolvent_solve(g: SampledFunction, lam: float, order: float) -> SampledFunction:
    r"""Resolvent solution of :math:`y - \lambda I^{\alpha}_{0-} y = g`,

    .. math::

        y(t) = g(t) + \lambda \int_t^0 (s - t)^{\alpha - 1}
            E_{\alpha, \alpha}[\lambda (s - t)^\alpha] g(s)\, ds,

    evaluated on the grid of *g* (right-sided; left-sided grids are accepted
    and handled symmetrically).
    """
    if order <= 0:
        raise ValueError(f"order must be positive, got {order}")
    if g.singular_exponent:
        raise ValueError("g must be given by unweighted samples")
    if lam == 0 or not np.any(g.values):
        return SampledFunction(g.grid, g.values.copy())
    conv = ml_convolution(g, lam, order)
    return SampledFunction(g.grid, g.values + lam * conv)


def resolvent_residual(g: SampledFunction, lam: float, order: float) -> tuple[float, float]:
    r"""Round trip of :func:`volterra_resolvent_solve`.

    Returns ``(residual, estimate)``: the sup norm of
    :math:`y - \lambda I^\alpha y - g` with :math:`I^\alpha` applied by product
    quadrature on the grid of *g*, and the quadrature error estimate
    :math:`\sup |R_h - R_{2h}|` from repeating the substitution on every other
    grid point.
    """
    s = np.abs(g.grid)
    idx = np.argsort(s)
    if (s.size - 1) % 2:
        raise ValueError("the grid needs an even number of cells")
    y = volterra_resolvent_solve(g, lam, order).values[idx]
    gv = g.values[idx]
    ss = s[idx]

    def residual(k: int) -> np.ndarray:
        Iy = rl_weights(ss[::k], order, 0.0) @ y[::k]
        return y[::k] - lam * Iy - gv[::k]

    r1, r2 = residual(1), residual(2)
    return float(np.max(np.abs(r1))), float(np.max(np.abs(r1[::2] - r2)))


def volterra_collocation(g: SampledFunction, lam: float, order: float) -> SampledFunction:
    r"""Direct product-integration solve of :math:`y - \lambda I^\alpha y = g`.

    Dense lower-triangular forward substitution; no Mittag-Leffler code.
    """
    s = np.abs(g.grid)
    idx = np.argsort(s)
    s = s[idx]
    W = rl_weights(s, order, 0.0)
    rhs = g.values[idx]
    y = _forward_substitution(lam * W, rhs, np.ones_like(s))
    out = np.empty_like(y)
    out[idx] = y
    return SampledFunction(g.grid, out)


def _forward_substitution(A: np.ndarray, rhs: np.ndarray, scale: np.ndarray) -> np.ndarray:
    r"""Solve :math:`v_j = scale_j \sum_{k \le j} A_{jk} v_k + rhs_j` by rows."""
    n = rhs.size
    v = np.zeros(n)
    diag = 1.0 - scale * np.diag(A)
    if np.min(np.abs(diag)) < 1.0 / GROWTH_BOUND:
        raise IllConditionedError("vanishing pivot in the triangular solve")
    for j in range(n):
        acc = scale[j] * np.dot(A[j, :j], v[:j]) if j else 0.0
        v[j] = (rhs[j] + acc) / diag[j]
    growth = np.max(np.abs(v)) / max(np.max(np.abs(rhs)), np.finfo(float).tiny)
    if growth > GROWTH_BOUND:
        raise IllConditionedError(f"growth factor {growth:.3e} exceeds {GROWTH_BOUND:.1e}")
    return v


# }}}


# {{{ right-sided Cauchy problem


def _homogeneous_right(d: CauchyData, s: np.ndarray) -> np.ndarray:
    """Weighted homogeneous part ``s^{2-gamma} u_h`` at mirrored points *s*."""
    gam, dlt = d.orders.gamma, d.orders.delta
    z = d.lam * s**dlt
    out = np.zeros_like(s)
    if d.xi0:
        out += d.xi0 * ml_eval(MLParams(dlt, gam - 1.0), z)
    if d.xi1:
        out -= d.xi1 * s * ml_eval(MLParams(dlt, gam), z)
    return out


def cauchy_right_solution(d: CauchyData, t_grid) -> SampledFunction:
    r"""Closed-form solution on *t_grid* :math:`\subset [-T, 0]`, stored with
    the weight :math:`(-t)^{2-\gamma}`. The entry at :math:`t = 0`, if present,
    holds the weighted limit :math:`\xi_0 / \Gamma(\gamma - 1)`."""
    t = np.asarray(t_grid, dtype=np.float64)
    if np.any(t > 0) or np.any(t < -d.T * (1 + 1e-12)):
        raise ValueError(f"t_grid must lie in [-{d.T}, 0]")
    return SampledFunction(t, _right_values(d, t), 2.0 - d.orders.gamma)


def _right_values(d: CauchyData, t: np.ndarray) -> np.ndarray:
    s = -t
    conv = ml_convolution(d.forcing, d.lam, d.orders.delta, targets=t)
    return _homogeneous_right(d, s) + s ** (2.0 - d.orders.gamma) * conv


def cauchy_right_closed_form(d: CauchyData, t: float) -> float:
    r"""Raw closed-form value :math:`u(t)` for :math:`t \in [-T, 0)`."""
    if not (-d.T <= t < 0):
        raise ValueError(f"t = {t} outside [-{d.T}, 0)")
    v = _right_values(d, np.array([float(t)]))[0]
    return float(v * (-t) ** (d.orders.gamma - 2.0))


def cauchy_right_oracle(d: CauchyData, t_grid=None) -> SampledFunction:
    r"""Weighted solution of the second-kind Volterra equation

    .. math::

        u = \lambda I^\delta_{0-} u + I^\delta_{0-} g
            + \frac{\xi_0 (-t)^{\gamma - 2}}{\Gamma(\gamma - 1)}
            - \frac{\xi_1 (-t)^{\gamma - 1}}{\Gamma(\gamma)}

    by product integration on *t_grid* (default: the forcing grid) and
    forward substitution for :math:`v = (-t)^{2 - \gamma} u`.
    """
    t = d.forcing.grid if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    gam, dlt = d.orders.gamma, d.orders.delta
    e = 2.0 - gam
    s = -t
    idx = np.argsort(s)
    ss = s[idx]
    if ss[0] != 0:
        raise ValueError("oracle grid must contain t = 0")

    if t_grid is None:
        gi = rl_integral(d.forcing, dlt, Side.Right).values[idx]
    else:
        fs, fv = _mirror(d.forcing)
        g = SampledFunction(-ss, np.interp(ss, fs, fv))
        gi = rl_integral(g, dlt, Side.Right).values

    W = rl_weights(ss, dlt, e)
    w = ss**e
    rhs = w * gi + d.xi0 * rgamma(gam - 1.0) - ss * d.xi1 * rgamma(gam)
    v = _forward_substitution(d.lam * W, rhs, w)
    out = np.empty_like(v)
    out[idx] = v
    return SampledFunction(t, out, e)


def weighted_initial_limits(u: SampledFunction, orders: OrderTriple, npoints: int = 10) -> tuple[float, float]:
    r"""Estimates of :math:`\lim_{t\to 0-} I^{2-\gamma}_{0-} u` and
    :math:`\lim_{t\to 0-} \frac{d}{dt} I^{2-\gamma}_{0-} u`.

    The weighted samples :math:`v = (-t)^{2-\gamma} u` are fitted near the
    origin by :math:`c_0 + c_1 s + \ldots` with the exponents of the
    solution's expansion; the power rule then maps :math:`c_0, c_1` to the
    two limits :math:`\Gamma(\gamma - 1) c_0` and :math:`-\Gamma(\gamma) c_1`.
    """
    gam, dlt = orders.gamma, orders.delta
    e = 2.0 - gam
    if not np.any(u.values):
        return 0.0, 0.0
    v = u.values
    if u.singular_exponent != e:
        s = np.abs(u.grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = v * s ** (e - u.singular_exponent)
    exps = _expansion_exponents([1.0, dlt, 1.0 + dlt, 2.0 * dlt, e + dlt, e + dlt + 1.0])
    mask = np.isfinite(v) & (u.grid < 0)
    c = extrapolate_limit(u.grid[mask], v[mask], exps, npoints=max(npoints, len(exps) + 3))
    xi0 = gamma(gam - 1.0) * c[0]
    xi1 = -gamma(gam) * c[1]
    _check_fit(u.grid[mask], v[mask], exps, c)
    return float(xi0), float(xi1)


def _expansion_exponents(exps, tol: float = 1e-3) -> list[float]:
    """Sorted distinct positive exponents (near duplicates merged)."""
    out: list[float] = []
    for p in sorted(exps):
        if p > tol and all(abs(p - q) > tol for q in out):
            out.append(p)
    return out


def _check_fit(s, v, exps, c) -> None:
    s = np.abs(np.asarray(s))
    near = np.argsort(s)[: len(exps) + 3]
    model = c[0] + sum(ci * s[near] ** p for ci, p in zip(c[1:], exps))
    scale = max(np.max(np.abs(v[near])), 1e-300)
    if np.max(np.abs(model - v[near])) > 1e-3 * scale:
        raise ExtrapolationError("limit extrapolation does not fit the data near 0")


# }}}


# {{{ left-sided Cauchy problem


def cauchy_left_solution(tau: float, lam: float, forcing: SampledFunction, orders: OrderTriple, t_grid) -> SampledFunction:
    r"""Weighted closed form :math:`t^{1-\gamma} u` on *t_grid* for

    .. math::

        u(t) = \tau t^{\gamma - 1} E_{\delta, \gamma}(-\lambda t^\delta)
            + \int_0^t (t - s)^{\delta - 1}
              E_{\delta, \delta}[-\lambda (t - s)^\delta] f(s)\, ds.
    """
    if orders.side_order_i != 1:
        raise ValueError("left-sided problems need orders with side_order_i = 1")
    t = np.asarray(t_grid, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("t_grid must lie in [0, T]")
    return SampledFunction(t, _left_values(tau, lam, forcing, orders, t), 1.0 - orders.gamma)


def _left_values(tau, lam, forcing, orders, t):
    gam, dlt = orders.gamma, orders.delta
    v = tau * ml_eval(MLParams(dlt, gam), -lam * t**dlt) if tau else np.zeros_like(t)
    return v + t ** (1.0 - gam) * ml_convolution(forcing, -lam, dlt, targets=t)


def cauchy_left_closed_form(tau: float, lam: float, forcing: SampledFunction, orders: OrderTriple, t: float) -> float:
    """Raw closed-form value of the left-sided solution at ``t`` in ``(0, T]``."""
    if not (0 < t <= np.max(forcing.grid) * (1 + 1e-12)):
        raise ValueError(f"t = {t} outside (0, {np.max(forcing.grid)}]")
    if orders.side_order_i != 1:
        raise ValueError("left-sided problems need orders with side_order_i = 1")
    v = _left_values(tau, lam, forcing, orders, np.array([float(t)]))[0]
    return float(v * t ** (orders.gamma - 1.0))


def cauchy_left_oracle(tau: float, lam: float, forcing: SampledFunction, orders: OrderTriple, t_grid=None) -> SampledFunction:
    r"""Mirror image of :func:`cauchy_right_oracle` for the equation
    :math:`u = -\lambda I^\delta_{0+} u + I^\delta_{0+} f
    + \tau t^{\gamma - 1} / \Gamma(\gamma)`."""
    gam, dlt = orders.gamma, orders.delta
    e = 1.0 - gam
    t = forcing.grid if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    idx = np.argsort(t)
    ss = t[idx]
    if ss[0] != 0:
        raise ValueError("oracle grid must contain t = 0")
    fs, fv = _mirror(forcing)
    g = SampledFunction(ss, np.interp(ss, fs, fv))
    gi = rl_integral(g, dlt, Side.Left).values
    W = rl_weights(ss, dlt, e)
    w = ss**e
    rhs = w * gi + tau * rgamma(gam)
    v = _forward_substitution(-lam * W, rhs, w)
    out = np.empty_like(v)
    out[idx] = v
    return SampledFunction(t, out, e)


# }}}
