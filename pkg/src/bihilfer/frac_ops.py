r"""Discretized Riemann-Liouville, Caputo and bi-ordinal Hilfer operators.

All operators work on :class:`SampledFunction` instances. Right-sided
operators on :math:`[-T, 0]` are evaluated by mirroring :math:`s = -t`, which
maps

.. math::

    I^a_{0-} g(t) = I^a_{0+} \tilde{g}(s), \qquad
    (-1)^n \frac{d^n}{dt^n} = \frac{d^n}{ds^n},

with :math:`\tilde{g}(s) = g(-s)`. Every operator is therefore implemented
once, for the left side, on an ascending grid that starts at the origin.

Fractional integrals use product integration: the sampled function is
interpolated piecewise linearly (after removing a singular power weight, if
present) and the kernel :math:`(t - s)^{a - 1}` is integrated exactly on each
cell with Gauss-Jacobi rules in the two singular cells and Gauss-Legendre rules
elsewhere.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from bihilfer.special_functions import gamma, rgamma

#: Number of quadrature nodes per cell used to build product weights.
QUAD_NODES = 10
#: Bound on ``max |d^n g| h^n / max |g|`` before a derivative is deemed unstable.
DIFF_CONDITION_BOUND = 1.0e8


class Side(enum.Enum):
    """Side of a fractional operator."""

    #: Left-sided, :math:`0+`, acting on :math:`[0, T]`.
    Left = enum.auto()
    #: Right-sided, :math:`0-`, acting on :math:`[-T, 0]`.
    Right = enum.auto()

    @classmethod
    def parse(cls, value: "Side | str") -> "Side":
        if isinstance(value, Side):
            return value
        return {"left": cls.Left, "right": cls.Right}[str(value).lower()]


class InstabilityError(ArithmeticError):
    """Raised when repeated finite differencing amplifies noise too much."""


class EndpointFitError(ArithmeticError):
    """Raised when one-sided derivatives at the origin cannot be estimated."""


@dataclass(frozen=True)
class OrderTriple:
    r"""Orders :math:`(\alpha, \beta)` and type :math:`\mu` of a bi-ordinal
    Hilfer derivative on a half-domain with :math:`i - 1 < \alpha, \beta < i`.

    The derived orders are :math:`\gamma = \beta + \mu (i - \beta)` and
    :math:`\delta = \beta + \mu (\alpha - \beta)`.
    """

    alpha: float
    beta: float
    mu: float
    side_order_i: int

    def __post_init__(self) -> None:
        i = self.side_order_i
        if i not in (1, 2):
            raise ValueError(f"side_order_i must be 1 or 2, got {i}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (i - 1 < v < i):
                raise ValueError(f"{name} must lie in ({i - 1}, {i}), got {v}")
        if not (0.0 <= self.mu <= 1.0):
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")

    @property
    def gamma(self) -> float:
        return self.beta + self.mu * (self.side_order_i - self.beta)

    @property
    def delta(self) -> float:
        return self.beta + self.mu * (self.alpha - self.beta)


@dataclass(frozen=True)
class SampledFunction:
    r"""Samples of a function on a strictly monotone grid.

    If *singular_exponent* :math:`e` is non-zero, *values* hold the weighted
    samples :math:`|t|^{e} g(t)`, and the entry at :math:`t = 0` is the
    weighted limit. *values* may be two-dimensional, in which case each column
    is an independent function on the same grid.
    """

    grid: np.ndarray
    values: np.ndarray
    singular_exponent: float = 0.0

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be one-dimensional with at least 2 points")
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("grid must be strictly monotone")
        if values.shape[0] != grid.size:
            raise ValueError(
                f"values have {values.shape[0]} rows for {grid.size} grid points"
            )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, f, grid, singular_exponent: float = 0.0) -> "SampledFunction":
        """Sample *f* on *grid*; for weighted functions *f* must return weighted values."""
        grid = np.asarray(grid, dtype=np.float64)
        return cls(grid, np.asarray(f(grid), dtype=np.float64), singular_exponent)

    def raw(self) -> np.ndarray:
        """Unweighted values; ``nan`` where the weight vanishes."""
        if self.singular_exponent == 0:
            return self.values
        w = np.abs(self.grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(w > 0, w ** (-self.singular_exponent), np.nan)
        return self.values * (scale if self.values.ndim == 1 else scale[:, None])


def graded_grid(T: float, n: int, grading: float = 2.0) -> np.ndarray:
    """Grid ``T (j / n)^grading`` on ``[0, T]``, clustered at the origin."""
    if n < 1 or T <= 0 or grading < 1:
        raise ValueError("need n >= 1, T > 0 and grading >= 1")
    return T * (np.arange(n + 1) / n) ** grading


# {{{ mirrored representation


@dataclass(frozen=True)
class _Mirrored:
    """Ascending abscissa ``s >= 0`` with ``s[0] == 0`` plus bookkeeping."""

    s: np.ndarray
    values: np.ndarray
    exponent: float
    side: Side
    #: permutation from the user ordering to ascending ``s``
    order: np.ndarray = field(repr=False)


def _to_mirrored(g: SampledFunction, side: Side) -> _Mirrored:
    if side is Side.Left:
        s = g.grid
        if np.any(s < 0):
            raise ValueError("left-sided operators need a grid in [0, T]")
    else:
        if np.any(g.grid > 0):
            raise ValueError("right-sided operators need a grid in [-T, 0]")
        s = -g.grid
    order = np.argsort(s)
    s = s[order]
    if s[0] != 0.0:
        raise ValueError("grid must contain the origin t = 0")
    if not (g.singular_exponent < 1.0):
        raise ValueError(f"singular exponent must be below 1, got {g.singular_exponent}")
    return _Mirrored(s, g.values[order], g.singular_exponent, side, order)


def _from_mirrored(m: _Mirrored, values: np.ndarray, exponent: float) -> SampledFunction:
    out = np.empty_like(values)
    out[m.order] = values
    s = np.empty_like(m.s)
    s[m.order] = m.s
    grid = s if m.side is Side.Left else -s
    return SampledFunction(grid, out, exponent)


# }}}


# {{{ product integration weights


@lru_cache(maxsize=64)
def _jacobi(n: int, a: float, b: float):
    x, w = roots_jacobi(n, a, b)
    return x, w


@lru_cache(maxsize=4)
def _legendre(n: int):
    return roots_legendre(n)


def _weights_cached_key(s: np.ndarray, order: float, exponent: float):
    return (s.tobytes(), float(order), float(exponent))


_WEIGHT_CACHE: dict = {}
_WEIGHT_CACHE_MAX = 16


def rl_weights(s: np.ndarray, order: float, exponent: float = 0.0) -> np.ndarray:
    r"""Product integration matrix for :math:`I^a_{0+}` on the grid *s*.

    For :math:`g(s) = s^{-e} v(s)` with :math:`v` interpolated piecewise
    linearly on *s*, returns :math:`W` with
    :math:`I^a g(s_j) \approx \sum_k W_{jk} v_k` for :math:`j \ge 1`. Row 0 is
    zero; the value at the origin is handled by the caller.

    :arg s: ascending grid with ``s[0] == 0``.
    :arg order: integration order :math:`a > 0`.
    :arg exponent: weight exponent :math:`e < 1`; negative values describe
        a vanishing power factor.
    """
    s = np.asarray(s, dtype=np.float64)
    key = _weights_cached_key(s, order, exponent)
    if key in _WEIGHT_CACHE:
        return _WEIGHT_CACHE[key]

    a, e = float(order), float(exponent)
    n = s.size
    W = np.zeros((n, n))
    nq = QUAD_NODES
    xl, wl = _legendre(nq)
    # first cell: weight sigma^{-e}; last cell: weight (t - sigma)^{a - 1}
    xf, wf = _jacobi(nq, 0.0, -e)
    xe, we = _jacobi(nq, a - 1.0, 0.0)

    h = np.diff(s)
    for j in range(1, n):
        t = s[j]
        if j == 1:
            # both singularities in the same cell: exact Beta integrals
            b0 = math.exp(math.lgamma(a) + math.lgamma(1.0 - e) - math.lgamma(1.0 + a - e))
            b1 = b0 * (1.0 - e) / (1.0 + a - e)
            scale = h[0] ** (a - e)
            W[1, 0] += scale * (b0 - b1)
            W[1, 1] += scale * b1
            continue

        # last cell [s_{j-1}, s_j]
        half = 0.5 * h[j - 1]
        sigma = s[j - 1] + half * (1.0 + xe)
        f = sigma ** (-e) if e else np.ones_like(sigma)
        hat_right = 0.5 * (1.0 + xe)
        scale = half**a
        W[j, j - 1] += scale * np.sum(we * f * (1.0 - hat_right))
        W[j, j] += scale * np.sum(we * f * hat_right)

        # first cell [0, s_1]
        half = 0.5 * h[0]
        sigma = half * (1.0 + xf)
        f = (t - sigma) ** (a - 1.0)
        hat_right = 0.5 * (1.0 + xf)
        scale = half ** (1.0 - e)
        W[j, 0] += scale * np.sum(wf * f * (1.0 - hat_right))
        W[j, 1] += scale * np.sum(wf * f * hat_right)

        if j > 2:
            # interior cells [s_k, s_{k+1}], k = 1 .. j - 2
            lo = s[1 : j - 1]
            hh = h[1 : j - 1]
            half = 0.5 * hh[:, None]
            sigma = lo[:, None] + half * (1.0 + xl[None, :])
            f = (t - sigma) ** (a - 1.0)
            if e:
                f = f * sigma ** (-e)
            hat_right = 0.5 * (1.0 + xl[None, :])
            fw = f * wl[None, :] * half
            W[j, 1 : j - 1] += np.sum(fw * (1.0 - hat_right), axis=1)
            W[j, 2:j] += np.sum(fw * hat_right, axis=1)

    W *= rgamma(a)
    if len(_WEIGHT_CACHE) >= _WEIGHT_CACHE_MAX:
        _WEIGHT_CACHE.pop(next(iter(_WEIGHT_CACHE)))
    _WEIGHT_CACHE[key] = W
    return W


def _integrate_mirrored(m: _Mirrored, order: float) -> tuple[np.ndarray, float]:
    """Left-sided integral on the mirrored grid; returns weighted values."""
    a, e = float(order), m.exponent
    if a == 0:
        return m.values.copy(), e
    W = rl_weights(m.s, a, e)
    res = W @ m.values
    out_exp = max(e - a, 0.0)
    v0 = m.values[0]
    # behaviour at the origin: I^a[s^{-e}] = Gamma(1-e)/Gamma(1-e+a) s^{a-e}
    if 0 < e and a <= e:
        res[0] = v0 * gamma(1.0 - e) * rgamma(1.0 - e + a)
    else:
        res[0] = 0.0 * v0
    if out_exp > 0:
        w = m.s[1:] ** out_exp
        res[1:] = res[1:] * (w if res.ndim == 1 else w[:, None])
    return res, out_exp


# }}}


# {{{ integrals


def rl_integral(g: SampledFunction, order: float, side: Side | str = Side.Left) -> SampledFunction:
    r"""Riemann-Liouville integral :math:`I^a_{0\pm} g` on the whole grid.

    The result carries the singular exponent :math:`\max(e - a, 0)`.
    """
    if order < 0:
        raise ValueError(f"integration order must be non-negative, got {order}")
    side = Side.parse(side)
    m = _to_mirrored(g, side)
    values, exp = _integrate_mirrored(m, order)
    return _from_mirrored(m, values, exp)


def _interp_at(result: SampledFunction, t: float) -> float:
    grid = result.grid
    lo, hi = min(grid[0], grid[-1]), max(grid[0], grid[-1])
    if not (lo <= t <= hi):
        raise ValueError(f"t = {t} outside the grid span [{lo}, {hi}]")
    order = np.argsort(grid)
    v = np.interp(t, grid[order], result.values[order])
    if result.singular_exponent and t != 0:
        v = v * abs(t) ** (-result.singular_exponent)
    return float(v)


def rl_integral_left(g: SampledFunction, order: float, t: float) -> float:
    """:math:`I^a_{0+} g(t)` for *t* in the grid span (exact at grid nodes)."""
    if not (order > 0):
        raise ValueError(f"order must be positive, got {order}")
    if t <= 0 or t > np.max(g.grid):
        raise ValueError(f"t = {t} outside (0, {np.max(g.grid)}]")
    return _integral_at(g, order, t, Side.Left)


def rl_integral_right(g: SampledFunction, order: float, t: float) -> float:
    """:math:`I^a_{0-} g(t)` for *t* in the grid span (exact at grid nodes)."""
    if not (order > 0):
        raise ValueError(f"order must be positive, got {order}")
    if t >= 0 or t < np.min(g.grid):
        raise ValueError(f"t = {t} outside [{np.min(g.grid)}, 0)")
    return _integral_at(g, order, t, Side.Right)


def _integral_at(g: SampledFunction, order: float, t: float, side: Side) -> float:
    grid = g.grid
    if np.any(np.isclose(grid, t, rtol=0, atol=1e-14 * max(1.0, abs(t)))):
        return _interp_at(rl_integral(g, order, side), t)
    # insert t into the grid by interpolating the weighted values
    new_grid = np.sort(np.append(grid, t))
    if side is Side.Right:
        new_grid = new_grid[::-1] if grid[0] > grid[-1] else new_grid
    srt = np.argsort(grid)
    vals = np.interp(new_grid, grid[srt], g.values[srt])
    h = SampledFunction(new_grid, vals, g.singular_exponent)
    return _interp_at(rl_integral(h, order, side), t)


# }}}


# {{{ derivatives


def fd_weights(s: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Finite difference stencils for the *n*-th derivative on a monotone grid.

    Returns ``(idx, w)`` such that ``d^n v(s_j) ~ sum_i w[j, i] v[idx[j, i]]``.
    First derivatives use three points (centered in the interior, one-sided at
    the ends); higher derivatives use ``n + 3`` points so that the stencil stays
    second order on non-uniform grids.
    """
    npts = s.size
    m = 3 if n == 1 else n + 3
    if npts < m:
        raise ValueError(f"need at least {m} points for derivative order {n}")
    start = np.clip(np.arange(npts) - m // 2, 0, npts - m)
    idx = start[:, None] + np.arange(m)[None, :]
    offsets = s[idx] - s[:, None]
    scale = np.max(np.abs(offsets), axis=1, keepdims=True)
    d = offsets / scale
    k = np.arange(m)
    fact = np.array([math.factorial(int(i)) for i in k], dtype=np.float64)
    # V[j, k, i] = d_i^k / k!
    V = d[:, None, :] ** k[None, :, None] / fact[None, :, None]
    rhs = np.zeros((npts, m))
    rhs[:, n] = 1.0
    w = np.linalg.solve(V, rhs[..., None])[..., 0]
    return idx, w / scale**n


def _differentiate(s: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    """*n*-th derivative with second order finite difference stencils."""
    if n == 0:
        return values
    idx, w = fd_weights(s, n)
    if values.ndim == 1:
        out = np.sum(w * values[idx], axis=1)
    else:
        out = np.einsum("ji,jic->jc", w, values[idx])
    if not np.all(np.isfinite(out)):
        raise InstabilityError("non-finite values after differencing")
    scale = np.max(np.abs(values)) if values.size else 0.0
    if scale > 0:
        hmin = float(np.min(np.diff(s)))
        amp = np.max(np.abs(out)) * hmin**n / scale
        if amp > DIFF_CONDITION_BOUND:
            raise InstabilityError(f"differencing amplification {amp:.3e} too large")
    return out


def _derivative_mirrored(m: _Mirrored, order: float, n: int) -> tuple[np.ndarray, float]:
    """``(d/ds)^n I^{n - order}`` on the mirrored grid; returns weighted values."""
    if m.s.size < 8 * (n + 1):
        raise ValueError(f"need at least {8 * (n + 1)} grid points for order {order}")
    integ, exp = _integrate_mirrored(m, n - order)
    if exp == 0:
        return _differentiate(m.s, integ, n), 0.0
    # weighted intermediate: differentiate the raw values away from the origin
    s = m.s[1:]
    w = s**exp
    raw = integ[1:] / (w if integ.ndim == 1 else w[:, None])
    d = _differentiate(s, raw, n)
    out_exp = exp + n
    if out_exp >= 1:
        raise ValueError(f"derivative is not integrable at the origin (exponent {out_exp})")
    ws = s**out_exp
    dw = d * (ws if d.ndim == 1 else ws[:, None])
    # weighted limit at the origin by linear extrapolation
    first = dw[0] + (dw[0] - dw[1]) * (0.0 - s[0]) / (s[1] - s[0])
    return np.concatenate([first[None, ...], dw]), out_exp


def rl_derivative(g: SampledFunction, order: float, side: Side | str = Side.Left) -> SampledFunction:
    r"""Riemann-Liouville derivative :math:`D^\alpha_{0\pm} g` with
    :math:`n - 1 < \alpha \le n`.

    Computed as :math:`(\pm d/dt)^n I^{n - \alpha}_{0\pm} g` with second order
    finite differences.
    """
    if order <= 0:
        raise ValueError(f"derivative order must be positive, got {order}")
    side = Side.parse(side)
    n = math.ceil(order)
    m = _to_mirrored(g, side)
    if order == n and m.exponent:
        raise ValueError("integer order derivatives of weighted samples are not supported")
    values, exp = _derivative_mirrored(m, order, n)
    return _from_mirrored(m, values, exp)


def endpoint_derivatives(s: np.ndarray, values: np.ndarray, n: int, npoints: int | None = None) -> np.ndarray:
    """Estimate ``v^{(k)}(0)`` for ``k < n`` by a least squares polynomial fit."""
    deg = max(n + 1, 2)
    npoints = npoints or deg + 3
    if s.size < npoints:
        raise EndpointFitError(f"need {npoints} points to fit {n} derivatives")
    x = s[:npoints]
    y = values[:npoints]
    scale = x[-1]
    try:
        coeffs = np.polynomial.polynomial.polyfit(x / scale, y, deg)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EndpointFitError(str(exc)) from exc
    coeffs = np.atleast_2d(coeffs.T).T if np.ndim(y) > 1 else coeffs
    ks = np.arange(n)
    fact = np.array([math.factorial(k) for k in ks], dtype=np.float64)
    scl = scale ** (-ks.astype(np.float64))
    if np.ndim(y) > 1:
        return coeffs[:n] * (fact * scl)[:, None]
    return coeffs[:n] * fact * scl


def caputo(g: SampledFunction, order: float, side: Side | str = Side.Left) -> SampledFunction:
    r"""Caputo derivative: the RL derivative of *g* minus its Taylor head at 0.

    The head :math:`\sum_{k < n} g^{(k)}(0) t^k / k!` is estimated from a
    polynomial fit to the samples nearest the origin.
    """
    side = Side.parse(side)
    if g.singular_exponent:
        raise ValueError("Caputo derivatives need unweighted samples")
    n = math.ceil(order)
    m = _to_mirrored(g, side)
    # Taylor polynomial in s = |t|; for the right side this is the Taylor
    # polynomial of g around 0 written in the mirrored variable
    derivs = endpoint_derivatives(m.s, m.values, n)
    head = np.zeros_like(m.values)
    for k in range(n):
        term = m.s**k / math.factorial(k)
        head = head + (np.multiply.outer(term, derivs[k]) if m.values.ndim > 1 else term * derivs[k])
    shifted = replace(m, values=m.values - head)
    values, exp = _derivative_mirrored(shifted, order, n)
    return _from_mirrored(m, values, exp)


def hilfer_bi(g: SampledFunction, o: OrderTriple, side: Side | str = Side.Left) -> SampledFunction:
    r"""Bi-ordinal Hilfer derivative :math:`D^{(\alpha, \beta)\mu}_{0\pm} g`.

    Evaluated through the factorization
    :math:`I^{\gamma - \delta}_{0\pm} D^{\gamma}_{0\pm} g`.
    """
    side = Side.parse(side)
    m = _to_mirrored(g, side)
    i = o.side_order_i
    gam, dlt = o.gamma, o.delta
    if gam == i and m.exponent:
        raise ValueError("mu = 1 needs unweighted samples")
    dvals, dexp = _derivative_mirrored(m, gam, i)
    dm = replace(m, values=dvals, exponent=dexp)
    values, exp = _integrate_mirrored(dm, gam - dlt)
    return _from_mirrored(m, values, exp)


# }}}


# {{{ limits


def extrapolate_limit(s, values, exponents, npoints: int | None = None):
    r"""Generalized Richardson extrapolation at :math:`s \to 0`.

    Fits :math:`v(s) \approx c_0 + \sum_j c_j s^{p_j}` on the *npoints*
    samples nearest the origin (excluding ``s == 0``) and returns the array
    ``[c_0, c_1, ...]``. With a single exponent and two points this reduces
    to classical Richardson extrapolation.
    """
    s = np.asarray(s, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    exponents = [float(p) for p in exponents]
    nb = len(exponents) + 1
    npoints = npoints or nb + 2
    idx = np.argsort(np.abs(s))
    idx = idx[np.abs(s[idx]) > 0][:npoints]
    if idx.size < nb:
        raise ValueError(f"need {nb} points away from the origin, got {idx.size}")
    x = np.abs(s[idx])
    scale = np.max(x)
    A = np.column_stack([np.ones_like(x)] + [(x / scale) ** p for p in exponents])
    # column equilibration keeps the least squares problem well scaled
    norms = np.linalg.norm(A, axis=0)
    coeffs, *_ = np.linalg.lstsq(A / norms, v[idx], rcond=None)
    coeffs = (coeffs.T / norms).T
    factors = np.array([1.0] + [scale ** (-p) for p in exponents])
    return (coeffs.T * factors).T


def rl_inversion_residual(g: SampledFunction, order: float) -> float:
    r"""Sup-norm residual of the right-sided inversion formula

    .. math::

        I^\alpha_{0-} D^\alpha_{0-} g(t) = g(t) - \sum_{j = 1}^{n}
            \frac{(-1)^{n - j} (-t)^{\alpha - j}}{\Gamma(\alpha - j + 1)}
            \lim_{t \to 0-} \left(\frac{d}{dt}\right)^{n - j} I^{n - \alpha}_{0-} g(t)

    for :math:`1 < \alpha \le 2` (:math:`n = 2`), measured on the weighted
    scale of *g*. The limits are estimated from the discrete integral.
    """
    if not (1.0 < order <= 2.0):
        raise ValueError(f"order must lie in (1, 2], got {order}")
    n = 2
    m = _to_mirrored(g, Side.Right)
    if not np.any(m.values):
        return 0.0

    integ, iexp = _integrate_mirrored(m, n - order)
    if iexp:
        raise ValueError("I^{n - alpha} g must be bounded at the origin")
    # limits of (d/dt)^{n-j} I^{n-alpha} g; d/dt = -d/ds
    lim = {2: integ[0], 1: -_differentiate(m.s, integ, 1)[0]}

    dvals, dexp = _derivative_mirrored(m, order, n)
    dm = replace(m, values=dvals, exponent=dexp)
    back, bexp = _integrate_mirrored(dm, order)

    s = m.s[1:]
    e = m.exponent
    # everything on the weighted scale s^e
    lhs = back[1:] * s ** (e - bexp) if bexp != e else back[1:]
    resid = lhs - m.values[1:]
    for j in (1, 2):
        corr = (-1.0) ** (n - j) * s ** (order - j + e) * rgamma(order - j + 1) * lim[j]
        resid = resid + corr
    return float(np.max(np.abs(resid)))


# }}}
