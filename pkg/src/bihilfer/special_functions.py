"""Gamma and two-parameter Mittag-Leffler functions on the real line.

The Mittag-Leffler function

.. math::

    E_{\\alpha, \\beta}(z) = \\sum_{k = 0}^\\infty \\frac{z^k}{\\Gamma(\\alpha k + \\beta)}

is evaluated with three regimes:

* a double precision Taylor sum when the largest series term is small,
* the algebraic asymptotic expansion (plus the exponentially small
  oscillating terms for :math:`1 < \\alpha \\le 2`) when its optimal
  truncation error is below machine precision,
* a Taylor sum in extended precision for the band in between, where the
  series suffers from cancellation: double-double Horner evaluation while
  the largest term stays below ``1e15``, :mod:`mpmath` beyond that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

#: Largest argument with a representable :math:`\Gamma(x)`.
GAMMA_MAX_ARG = 171.6243769563027

#: Absolute accuracy targeted by :func:`ml_eval`, scaled by ``1 / (1 + |z|)``.
ML_ABS_TARGET = 1.0e-13
#: Relative accuracy targeted by :func:`ml_eval`.
ML_REL_TARGET = 5.0e-16

_DOUBLE_TAYLOR_MAX_TERM = 10.0
# double-double Horner keeps ~16 digits while the largest term stays below this
_DD_TAYLOR_MAX_TERM = 1.0e15
_ASYMPTOTIC_MAX_TERMS = 600


class GammaPoleError(ValueError):
    """Raised when :math:`\\Gamma` is evaluated at a non-positive integer."""


class MLConvergenceError(ArithmeticError):
    """Raised when no evaluation regime reaches the requested accuracy."""

    def __init__(self, message: str, achieved: float = math.inf) -> None:
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class MLParams:
    """Parameters :math:`(\\alpha, \\beta)` of :math:`E_{\\alpha, \\beta}`."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite: {self.alpha}")
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite: {self.beta}")


@dataclass(frozen=True)
class MLEnvelope:
    """Constant :math:`M` in :math:`|E_{\\alpha, \\beta}(z)| \\le M / (1 + |z|)`."""

    constant_M: float
    params: MLParams
    #: Abscissa where the maximum of :math:`|E(z)| (1 + |z|)` was attained.
    argmax: float = 0.0

    def bound(self, z):
        return self.constant_M / (1.0 + np.abs(z))


# {{{ gamma


def _sinpi(x: float) -> float:
    n = round(x)
    r = x - n
    s = math.sin(math.pi * r)
    return -s if n % 2 else s


def _lanczos(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    a = _LANCZOS_COEFFS[0]
    t = x + _LANCZOS_G + 0.5
    for i in range(1, len(_LANCZOS_COEFFS)):
        a += _LANCZOS_COEFFS[i] / (x + i)
    half = 0.5 * (x + 0.5)
    return math.sqrt(2.0 * math.pi) * t**half * math.exp(-t) * t**half * a


def _is_pole(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def gamma(x: float) -> float:
    """Euler's gamma function :math:`\\Gamma(x)` for real *x*.

    :raises GammaPoleError: if *x* is a non-positive integer.
    :raises OverflowError: if :math:`|\\Gamma(x)|` is not representable.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"gamma argument must be finite: {x}")
    if _is_pole(x):
        raise GammaPoleError(f"gamma has a pole at {x}")
    if x > GAMMA_MAX_ARG:
        raise OverflowError(f"gamma({x}) overflows")
    if x == math.floor(x) and x <= 23:
        return float(math.factorial(int(x) - 1))
    if x < 0.5:
        s = _sinpi(x)
        g = _lanczos(1.0 - x)
        if not math.isfinite(g):
            # gamma(1 - x) overflowed, so gamma(x) underflows to zero
            return 0.0
        result = math.pi / (s * g)
        if not math.isfinite(result):
            raise OverflowError(f"gamma({x}) overflows")
        return result
    return _lanczos(x)


def rgamma(x: float) -> float:
    """Reciprocal gamma function :math:`1 / \\Gamma(x)`.

    This is an entire function: poles of :math:`\\Gamma` map to exact zeros.
    Arguments beyond the overflow threshold of :math:`\\Gamma` return ``0.0``.
    """
    x = float(x)
    if _is_pole(x):
        return 0.0
    if x > GAMMA_MAX_ARG:
        return 0.0
    if x < 0.5:
        # 1 / gamma(x) = sin(pi x) gamma(1 - x) / pi, never overflows here
        # unless 1 - x is huge
        g = _lanczos(1.0 - x) if 1.0 - x <= GAMMA_MAX_ARG else math.inf
        if not math.isfinite(g):
            raise OverflowError(f"rgamma({x}) overflows")
        return _sinpi(x) * g / math.pi
    return 1.0 / gamma(x)


def log_abs_gamma(x):
    """:math:`\\log |\\Gamma(x)|`, used only for magnitude estimates."""
    return gammaln(x)


# }}}


# {{{ Mittag-Leffler


def _log_abs_taylor_terms(alpha: float, beta: float, logx: float, k: np.ndarray):
    """Logarithm of :math:`|x^k / \\Gamma(\\alpha k + \\beta)|` (``-inf`` at poles)."""
    arg = alpha * k + beta
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = gammaln(arg)
    out = k * logx - lg
    poles = (arg <= 0) & (arg == np.floor(arg))
    out[poles] = -np.inf
    return out


def _taylor_extent(alpha: float, beta: float, x: float, log_tol: float = -52.0):
    """Return ``(K, log_max_term)`` for the Taylor series at ``|z| = x``.

    Terms are dropped once they fall below ``exp(log_tol)`` both in absolute
    terms and relative to the largest term.
    """
    if x == 0:
        return 1, 0.0
    logx = math.log(x)
    kmax = 64
    while True:
        k = np.arange(kmax, dtype=np.float64)
        logt = _log_abs_taylor_terms(alpha, beta, logx, k)
        log_max = float(np.max(logt[np.isfinite(logt)], initial=-np.inf))
        cutoff = min(log_max, 0.0) + log_tol
        # series must be decreasing and negligible at the tail
        tail = logt[-8:]
        if (
            np.all(tail < cutoff)
            and np.all(np.diff(logt[-8:][np.isfinite(tail)]) < 0)
        ) or kmax > 200000:
            break
        kmax *= 2
    if kmax > 200000:
        raise MLConvergenceError(f"Taylor series does not converge at |z| = {x}")

    # first index after the maximum where the terms are negligible
    imax = int(np.argmax(np.where(np.isfinite(logt), logt, -np.inf)))
    small = np.nonzero((logt[imax:] < cutoff) | ~np.isfinite(logt[imax:]))[0]
    K = imax + int(small[0]) + 4 if small.size else kmax
    return min(K, kmax), log_max


def _taylor_extents(alpha: float, beta: float, x: np.ndarray, log_tol: float = -52.0):
    """Vectorized :func:`_taylor_extent` over an array of ``|z|`` values."""
    x = np.asarray(x, dtype=np.float64)
    K_all, _ = _taylor_extent(alpha, beta, float(np.max(x)), log_tol)
    # the largest |z| needs the most terms; one matrix covers the batch
    k = np.arange(K_all + 8, dtype=np.float64)
    Ks = np.empty(x.size, dtype=np.int64)
    log_max = np.empty(x.size)
    for lo in range(0, x.size, 512):
        xb = x[lo : lo + 512]
        with np.errstate(divide="ignore"):
            logx = np.log(xb)[:, None]
        logt = _log_abs_taylor_terms(alpha, beta, 0.0, k)[None, :] + k[None, :] * logx
        logt[:, 0] = _log_abs_taylor_terms(alpha, beta, 0.0, k[:1])[0]
        logt = np.where(np.isfinite(logt), logt, -np.inf)
        lm = np.max(logt, axis=1)
        cutoff = np.minimum(lm, 0.0) + log_tol
        imax = np.argmax(logt, axis=1)
        after = (np.arange(k.size)[None, :] > imax[:, None]) & (logt < cutoff[:, None])
        first = np.where(after.any(axis=1), np.argmax(after, axis=1), k.size - 4)
        Ks[lo : lo + 512] = np.minimum(first + 4, k.size)
        log_max[lo : lo + 512] = lm
    return Ks, log_max


@lru_cache(maxsize=256)
def _taylor_coefficients_double(alpha: float, beta: float, K: int) -> np.ndarray:
    # correctly rounded; the double gamma loses a few ulps that cancellation amplifies
    return _taylor_coefficients_dd(alpha, beta, K)[0]


class _MPCoefficients:
    """Cache of :math:`1 / \\Gamma(\\alpha k + \\beta)` in extended precision."""

    def __init__(self, alpha: float, beta: float) -> None:
        self.alpha = alpha
        self.beta = beta
        self.dps = 0
        self.coeffs: list = []

    def get(self, K: int, dps: int) -> list:
        if dps > self.dps:
            # recompute everything at the higher precision
            self.dps = dps
            self.coeffs = []
        if len(self.coeffs) < K:
            with mpmath.workdps(self.dps):
                a = mpmath.mpf(self.alpha)
                b = mpmath.mpf(self.beta)
                for k in range(len(self.coeffs), K):
                    self.coeffs.append(mpmath.rgamma(a * k + b))
        return self.coeffs[:K]


@lru_cache(maxsize=1024)
def _mp_coefficients(alpha: float, beta: float) -> _MPCoefficients:
    return _MPCoefficients(alpha, beta)


def _taylor_mp(alpha: float, beta: float, z: float, K: int, log_max: float) -> float:
    # working precision: digits lost to cancellation plus a safety margin,
    # rounded up to a power of two to limit coefficient recomputation
    lost = max(log_max / math.log(10.0), 0.0)
    dps = 32
    while dps < lost + 25:
        dps *= 2
    coeffs = _mp_coefficients(alpha, beta).get(K, dps)
    with mpmath.workdps(dps):
        zz = mpmath.mpf(z)
        s = mpmath.mpf(0)
        for c in reversed(coeffs):
            s = s * zz + c
        return float(s)


def _taylor_double(alpha: float, beta: float, z: np.ndarray, K: int) -> np.ndarray:
    c = _taylor_coefficients_double(alpha, beta, K)
    # Horner in double precision
    s = np.zeros_like(z)
    for ck in c[::-1]:
        s = s * z + ck
    return s


@lru_cache(maxsize=256)
def _taylor_coefficients_dd(alpha: float, beta: float, K: int) -> tuple[np.ndarray, np.ndarray]:
    coeffs = _mp_coefficients(alpha, beta).get(K, 40)
    with mpmath.workdps(40):
        hi = np.array([float(c) for c in coeffs])
        lo = np.array([float(c - mpmath.mpf(h)) for c, h in zip(coeffs, hi)])
    return hi, lo


_SPLITTER = 134217729.0  # 2^27 + 1


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _taylor_dd(alpha: float, beta: float, z: np.ndarray, K: int) -> np.ndarray:
    """Horner evaluation in double-double arithmetic (error-free transforms)."""
    c_hi, c_lo = _taylor_coefficients_dd(alpha, beta, K)
    z_hi, z_lo = _split(z)
    s_hi = np.zeros_like(z)
    s_lo = np.zeros_like(z)
    for k in range(K - 1, -1, -1):
        # (s_hi + s_lo) * z, exact product of the leading parts
        p = s_hi * z
        a_hi, a_lo = _split(s_hi)
        e = ((a_hi * z_hi - p) + a_hi * z_lo + a_lo * z_hi) + a_lo * z_lo
        e = e + s_lo * z
        # + (c_hi + c_lo)
        t = p + c_hi[k]
        bb = t - p
        f = (p - (t - bb)) + (c_hi[k] - bb)
        f = f + e + c_lo[k]
        s_hi = t + f
        s_lo = f - (s_hi - t)
    return s_hi + s_lo


def _exponential_weight(alpha: float) -> float:
    if alpha < 1.0:
        return 0.0
    if alpha == 1.0:
        return 0.5
    return 1.0


def _asymptotic_negative(alpha: float, beta: float, x: np.ndarray):
    """Asymptotic expansion of :math:`E_{\\alpha,\\beta}(-x)` for ``x > 0``.

    Returns ``(value, error_estimate)``; the error estimate is the magnitude
    bound of the first omitted algebraic term.
    """
    k, log_c, sign_c, log_env = _asymptotic_coefficients(alpha, beta)

    logx = np.log(x)[:, None]
    log_bound = log_env[None, :] - k[None, :] * logx
    # optimal truncation: stop before the smallest bound, or earlier once the
    # bound is far below the accuracy target
    kstar = np.argmin(log_bound, axis=1)
    lead = np.max(log_c[:2][None, :] - k[:2][None, :] * logx, axis=1)
    log_target = np.minimum(
        math.log(ML_ABS_TARGET) - np.log1p(x), math.log(ML_REL_TARGET) + lead
    ) + math.log(1.0e-2)
    below = log_bound < log_target[:, None]
    first = np.where(below.any(axis=1), np.argmax(below, axis=1), k.size)
    kstar = np.minimum(kstar, first)
    err = np.exp(log_bound[np.arange(x.size), kstar])

    kcut = int(np.max(kstar)) if x.size else 0
    kk = k[:kcut]
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        terms = sign_c[None, :kcut] * np.exp(log_c[None, :kcut] - kk[None, :] * logx)
    mask = np.arange(kcut)[None, :] < kstar[:, None]
    terms = np.where(mask, terms, 0.0)
    # sum smallest terms first
    value = np.sum(terms[:, ::-1], axis=1)
    # rounding in the sum matters when large terms cancel (small x)
    err = err + 4.0e-16 * np.sum(np.abs(terms), axis=1)

    w = _exponential_weight(alpha)
    if w > 0:
        R = x ** (1.0 / alpha)
        zeta = R * np.exp(1j * math.pi / alpha)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            contrib = zeta ** (1.0 - beta) * np.exp(zeta)
        value = value + w * 2.0 / alpha * np.real(contrib)
        # phase error of exp(zeta) grows with |zeta|
        err = err + 4.0e-16 * (1.0 + R) * np.abs(contrib)

    return value, err


def sinpi(y) -> np.ndarray:
    r""":math:`\sin(\pi y)` with exact zeros at the integers."""
    y = np.asarray(y, dtype=np.float64)
    n = np.round(y)
    return np.where(n % 2 == 0, 1.0, -1.0) * np.sin(np.pi * (y - n))


_sinpi_array = sinpi


def _log_rgamma(y: np.ndarray):
    """Return ``(log|1/Gamma(y)|, sign(1/Gamma(y)))`` elementwise."""
    y = np.asarray(y, dtype=np.float64)
    poles = (y <= 0) & (y == np.floor(y))
    right = y >= 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        s = _sinpi_array(y)
        log_left = gammaln(1.0 - y) + np.log(np.abs(s)) - math.log(math.pi)
        log_c = np.where(right, -gammaln(np.where(right, y, 1.0)), log_left)
    sign_c = np.where(right, 1.0, np.sign(s))
    log_c[poles] = -np.inf
    sign_c[poles] = 0.0
    return log_c, sign_c


@lru_cache(maxsize=1024)
def _asymptotic_coefficients(alpha: float, beta: float):
    k = np.arange(1, _ASYMPTOTIC_MAX_TERMS + 1, dtype=np.float64)
    # coefficient of x^{-k} is -(-1)^k / Gamma(beta - alpha k), kept in log form
    log_c, sign_c = _log_rgamma(beta - alpha * k)
    sign_c = -((-1.0) ** k) * sign_c
    # magnitude envelope |1/Gamma(y)| <= Gamma(1 - y) / pi for y < 1/2
    arg = 1.0 - beta + alpha * k
    log_env = np.where(
        arg > 0.5, gammaln(np.maximum(arg, 0.5)) - math.log(math.pi), -np.inf
    )
    log_env = np.maximum(log_env, log_c)
    return k, log_c, sign_c, log_env


def ml_eval(p: MLParams | tuple[float, float], z):
    """Evaluate :math:`E_{\\alpha, \\beta}(z)` for real *z*.

    :arg p: parameters, either an :class:`MLParams` or an ``(alpha, beta)`` tuple.
    :arg z: scalar or array of real arguments.
    :returns: a float for scalar *z*, otherwise an array of the same shape.
    :raises MLConvergenceError: if no regime reaches the accuracy target.
    """
    if not isinstance(p, MLParams):
        p = MLParams(*p)
    alpha, beta = float(p.alpha), float(p.beta)

    zarr = np.asarray(z, dtype=np.float64)
    scalar = zarr.ndim == 0
    zflat = np.atleast_1d(zarr).ravel()
    if not np.all(np.isfinite(zflat)):
        raise ValueError("Mittag-Leffler argument must be finite")

    out = np.empty_like(zflat)
    todo = np.ones(zflat.size, dtype=bool)

    zero = zflat == 0
    out[zero] = rgamma(beta)
    todo &= ~zero

    # asymptotic regime on the negative axis; below |z| = 1 the Taylor series
    # is cheap and the expansion meaningless
    neg = todo & (zflat <= -1.0)
    if np.any(neg) and alpha <= 2.0:
        idx = np.nonzero(neg)[0]
        x = -zflat[idx]
        value, err = _asymptotic_negative(alpha, beta, x)
        ok = np.isfinite(value) & (
            err <= np.maximum(ML_REL_TARGET * np.abs(value), ML_ABS_TARGET / (1.0 + x))
        )
        out[idx[ok]] = value[ok]
        todo[idx[ok]] = False

    # Taylor regimes for everything left
    idx = np.nonzero(todo)[0]
    if idx.size:
        Ks, log_max = _taylor_extents(alpha, beta, np.abs(zflat[idx]))
        cheap = (log_max <= math.log(_DOUBLE_TAYLOR_MAX_TERM)) | (zflat[idx] > 0)
        if np.any(cheap):
            i_cheap = idx[cheap]
            K = int(np.max(Ks[cheap]))
            if K > 20000:
                raise MLConvergenceError(
                    f"Taylor series needs {K} terms for E_{{{alpha},{beta}}}"
                )
            out[i_cheap] = _taylor_double(alpha, beta, zflat[i_cheap], K)
        mid = ~cheap & (log_max <= math.log(_DD_TAYLOR_MAX_TERM))
        if np.any(mid):
            i_mid = idx[mid]
            out[i_mid] = _taylor_dd(alpha, beta, zflat[i_mid], int(np.max(Ks[mid])))
        for j in np.nonzero(~cheap & ~mid)[0]:
            i = idx[j]
            out[i] = _taylor_mp(alpha, beta, float(zflat[i]), int(Ks[j]), float(log_max[j]))

    if not np.all(np.isfinite(out)):
        bad = zflat[~np.isfinite(out)][0]
        raise MLConvergenceError(
            f"E_{{{alpha},{beta}}}({bad}) is not representable", achieved=math.inf
        )

    if scalar:
        return float(out[0])
    return out.reshape(zarr.shape)


def ml_recurrence_residual(p: MLParams | tuple[float, float], z):
    """Residual of :math:`E_{\\alpha,\\beta}(z) = 1/\\Gamma(\\beta) + z E_{\\alpha,\\alpha+\\beta}(z)`."""
    if not isinstance(p, MLParams):
        p = MLParams(*p)
    lhs = ml_eval(p, z)
    rhs = rgamma(p.beta) + np.asarray(z) * ml_eval(MLParams(p.alpha, p.alpha + p.beta), z)
    r = np.abs(lhs - rhs)
    return float(r) if np.ndim(r) == 0 else r


def ml_limit_products(p: MLParams | tuple[float, float], z_sequence):
    """Pairs :math:`(E_{\\alpha,\\beta}(z), z E_{\\alpha,\\beta}(z))` along *z_sequence*.

    For :math:`z \\to -\\infty` the first entry tends to zero and the second
    to :math:`-1/\\Gamma(\\beta - \\alpha)`.
    """
    if not isinstance(p, MLParams):
        p = MLParams(*p)
    z = np.asarray(z_sequence, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("z_sequence must be a non-empty 1d sequence")
    if np.any(z >= 0) or np.any(np.diff(z) >= 0):
        raise ValueError("z_sequence must be negative and strictly decreasing")
    e = ml_eval(p, z)
    return [(float(a), float(b)) for a, b in zip(e, z * e)]


def ml_limit_value(p: MLParams | tuple[float, float]) -> float:
    """Limit of :math:`z E_{\\alpha,\\beta}(z)` as :math:`z \\to -\\infty`."""
    if not isinstance(p, MLParams):
        p = MLParams(*p)
    return -rgamma(p.beta - p.alpha)


def ml_fit_envelope(p: MLParams | tuple[float, float], z_grid) -> MLEnvelope:
    """Smallest :math:`M` with :math:`|E_{\\alpha,\\beta}(z)| (1 + |z|) \\le M` on *z_grid*."""
    if not isinstance(p, MLParams):
        p = MLParams(*p)
    if p.alpha >= 2:
        raise ValueError(f"envelope requires alpha < 2, got {p.alpha}")
    z = np.atleast_1d(np.asarray(z_grid, dtype=np.float64))
    if z.size == 0 or np.any(z > 0) or not np.all(np.isfinite(z)):
        raise ValueError("z_grid must be finite, non-empty and non-positive")
    z = np.sort(z)
    scaled = np.abs(ml_eval(p, z)) * (1.0 + np.abs(z))
    i = int(np.argmax(scaled))
    best, where = float(scaled[i]), float(z[i])

    def neg_scaled(x):
        return -abs(float(ml_eval(p, x))) * (1.0 + abs(x))

    # sampled peaks sit below the true ones when E oscillates (alpha near 2);
    # polish every interior local maximum that could beat the sampled one
    inner = np.arange(1, z.size - 1)
    peaks = inner[(scaled[inner] >= scaled[inner - 1]) & (scaled[inner] >= scaled[inner + 1])]
    for j in peaks[scaled[peaks] >= 0.9 * best]:
        r = minimize_scalar(neg_scaled, bounds=(z[j - 1], z[j + 1]), method="bounded",
                            options={"xatol": 1e-10 * max(1.0, abs(z[j]))})
        if -r.fun > best:
            best, where = float(-r.fun), float(r.x)
    return MLEnvelope(constant_M=best, params=p, argmax=where)


# }}}
