import math

import numpy as np
import pytest

from bihilfer.frac_ops import (
    OrderTriple,
    SampledFunction,
    Side,
    caputo,
    endpoint_derivatives,
    extrapolate_limit,
    fd_weights,
    graded_grid,
    hilfer_bi,
    rl_derivative,
    rl_integral,
    rl_integral_left,
    rl_integral_right,
    rl_inversion_residual,
)
from bihilfer.special_functions import ml_eval

G = math.gamma

# (-t)^0.8 E_{0.8,1.8}(-(-t)^0.8) at t = -0.5, from a 60 digit mpmath series sum
ML_SHIFT_REFERENCE = 0.4376802468707906357


def _left(n, T=1.0, grading=1.0):
    return graded_grid(T, n, grading)


def _right(n, T=1.0, grading=1.0):
    return -graded_grid(T, n, grading)


# {{{ types


def test_order_triple_derived_orders():
    o = OrderTriple(0.9, 0.6, 0.5, 1)
    assert o.gamma == 0.6 + 0.5 * 0.4
    assert o.delta == 0.6 + 0.5 * 0.3
    o2 = OrderTriple(1.8, 1.5, 0.4, 2)
    assert o2.gamma == pytest.approx(1.7, abs=1e-15)
    assert o2.delta == pytest.approx(1.62, abs=1e-15)


@pytest.mark.parametrize("args", [(1.2, 0.5, 0.5, 1), (0.5, 0.5, 1.5, 1), (1.5, 2.5, 0.5, 2), (0.5, 0.5, 0.5, 3)])
def test_order_triple_validation(args):
    with pytest.raises(ValueError):
        OrderTriple(*args)


def test_sampled_function_validation():
    with pytest.raises(ValueError):
        SampledFunction(np.array([0.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        SampledFunction(np.array([0.0, 1.0, 0.5]), np.zeros(3))
    with pytest.raises(ValueError):
        SampledFunction(np.array([0.0, 1.0]), np.zeros(3))
    g = SampledFunction(np.array([0.0, 0.5, 1.0]), np.array([1.0, 1.0, 1.0]), 0.5)
    raw = g.raw()
    assert np.isnan(raw[0]) and raw[2] == 1.0


# }}}


# {{{ integrals


def test_left_integral_examples():
    s = _left(256)
    one = SampledFunction(s, np.ones_like(s))
    assert rl_integral_left(one, 0.5, 1.0) == pytest.approx(1 / G(1.5), abs=1e-14)
    s2 = _left(256, T=2.0)
    lin = SampledFunction(s2, s2)
    assert rl_integral_left(lin, 1.0, 2.0) == pytest.approx(2.0, abs=1e-14)
    sg = _left(1024, grading=2.0)
    p = SampledFunction(sg, sg**0.3)
    assert rl_integral_left(p, 0.7, 1.0) == pytest.approx(G(1.3) / G(2.0), abs=1e-5)


def test_right_integral_examples():
    t = _right(256)
    one = SampledFunction(t, np.ones_like(t))
    assert rl_integral_right(one, 0.5, -1.0) == pytest.approx(1 / G(1.5), abs=1e-14)
    tg = _right(1024, grading=2.0)
    p = SampledFunction(tg, (-tg) ** 0.4)
    assert rl_integral_right(p, 0.6, -1.0) == pytest.approx(G(1.4) / G(2.0), abs=1e-5)


def test_right_integral_of_mittag_leffler():
    t = _right(2048, grading=2.0)
    s = -t
    g = SampledFunction(t, ml_eval((0.8, 1.0), -(s**0.8)))
    val = rl_integral_right(g, 0.8, -0.5)
    assert val == pytest.approx(ML_SHIFT_REFERENCE, abs=1e-6)


def test_integral_off_grid_and_domain():
    s = _left(512)
    g = SampledFunction(s, s**2)
    t = 0.123456
    assert rl_integral_left(g, 0.5, t) == pytest.approx(G(3) / G(3.5) * t**2.5, abs=1e-5)
    with pytest.raises(ValueError):
        rl_integral_left(g, 0.5, 1.5)
    with pytest.raises(ValueError):
        rl_integral_right(g, 0.5, -0.5)


def test_weighted_integral_power_rule():
    # samples of s^{0.4} * s^{-0.4} (weighted) integrate like s^{-0.4}
    s = _left(512, grading=2.0)
    g = SampledFunction(s, np.ones_like(s), 0.4)
    out = rl_integral(g, 0.7, Side.Left)
    assert out.singular_exponent == 0.0
    exact = G(0.6) / G(1.3) * s**0.3
    assert np.max(np.abs(out.values - exact)) <= 1e-11


@pytest.mark.parametrize("a, b", [(0.3, 0.5), (0.5, 1.2), (1.2, 0.3), (0.3, 0.3)])
def test_semigroup(a, b):
    errs = []
    for n in (512, 1024):
        t = _right(n, grading=2.0)
        g = SampledFunction(t, np.cos(3 * t) + t**2)
        ab = rl_integral(rl_integral(g, b, Side.Right), a, Side.Right).values
        direct = rl_integral(g, a + b, Side.Right).values
        errs.append(np.max(np.abs(ab - direct)))
    assert errs[1] <= 1e-4
    assert errs[1] < errs[0]


# }}}


# {{{ derivatives


def test_fd_weights_exact_for_quadratics():
    s = np.sort(np.random.default_rng(3).uniform(0, 1, 30))
    for n, exact in ((1, 2 * s + 3), (2, 2 * np.ones_like(s))):
        idx, w = fd_weights(s, n)
        v = s**2 + 3 * s
        assert np.max(np.abs(np.sum(w * v[idx], axis=1) - exact)) <= 1e-8


def test_rl_derivative_examples():
    s = _left(1024, grading=2.0)
    a = 0.6
    g = SampledFunction(s, s**a)
    d = rl_derivative(g, a, Side.Left)
    far = s >= 0.25
    assert np.max(np.abs(d.values[far] - G(a + 1))) <= 1e-5

    c = SampledFunction(s, 2.5 * np.ones_like(s))
    d = rl_derivative(c, 0.5, Side.Left)
    assert np.max(np.abs(d.raw()[far] - 2.5 * s[far] ** -0.5 / G(0.5))) <= 1e-5

    t = -s
    r = SampledFunction(t, s**1.6)
    d = rl_derivative(r, 1.3, Side.Right)
    assert np.max(np.abs(d.values[far] - G(2.6) / G(1.3) * s[far] ** 0.3)) <= 1e-4


def test_rl_derivative_needs_points():
    s = _left(8)
    with pytest.raises(ValueError):
        rl_derivative(SampledFunction(s, s), 1.5, Side.Left)


def test_caputo_examples():
    s = _left(1024, grading=2.0)
    far = s >= 0.25
    c = SampledFunction(s, 3.0 * np.ones_like(s))
    assert np.max(np.abs(caputo(c, 0.4).values)) <= 1e-12
    lin = SampledFunction(s, s)
    a = 0.3
    assert np.max(np.abs(caputo(lin, a).values[far] - s[far] ** (1 - a) / G(2 - a))) <= 1e-5
    sq = SampledFunction(-s, s**2)
    d = caputo(sq, 1.5, Side.Right)
    assert np.max(np.abs(d.values[far] - G(3) / G(1.5) * s[far] ** 0.5)) <= 1e-4


def test_caputo_kills_taylor_head():
    s = _left(512)
    g = SampledFunction(s, 1.0 + 2.0 * s)
    assert np.max(np.abs(caputo(g, 1.4).values)) <= 1e-8


def test_endpoint_derivatives():
    s = np.linspace(0, 0.1, 20)
    d = endpoint_derivatives(s, np.exp(s), 3)
    assert np.allclose(d, [1.0, 1.0, 1.0], atol=1e-4)


# }}}


# {{{ Hilfer operator


@pytest.mark.parametrize("side", [Side.Left, Side.Right])
def test_hilfer_interpolation_endpoints(side):
    s = _left(1024, grading=2.0)
    g = SampledFunction(s if side is Side.Left else -s, s**1.7 + s**2.5)
    far = s >= 0.25
    o0 = OrderTriple(0.8, 0.4, 0.0, 1)
    assert np.max(np.abs(hilfer_bi(g, o0, side).values - rl_derivative(g, 0.4, side).values)) <= 1e-12
    o1 = OrderTriple(0.8, 0.4, 1.0, 1)
    diff = hilfer_bi(g, o1, side).values - caputo(g, 0.8, side).values
    assert np.max(np.abs(diff[far])) <= 1e-4


def test_hilfer_power_rule():
    o = OrderTriple(0.7, 0.4, 0.6, 1)
    s = _left(2048, grading=2.0)
    far = s >= 0.25
    p = 1.5
    g = SampledFunction(s, s**p)
    d = hilfer_bi(g, o, Side.Left)
    exact = G(p + 1) / G(p + 1 - o.delta) * s ** (p - o.delta)
    assert np.max(np.abs(d.raw()[far] - exact[far])) <= 1e-4


def test_hilfer_kills_weight_power():
    # t^{gamma - 1} lies in the kernel of D^gamma, hence of the Hilfer derivative
    o = OrderTriple(0.7, 0.4, 0.6, 1)
    s = _left(1024, grading=2.0)
    e = 1.0 - o.gamma
    g = SampledFunction(s, np.ones_like(s), e)
    d = hilfer_bi(g, o, Side.Left)
    assert np.max(np.abs(d.raw()[s >= 0.25])) <= 1e-4


def test_hilfer_second_order_right():
    o = OrderTriple(1.8, 1.5, 0.4, 2)
    s = _left(2048, grading=2.0)
    far = s >= 0.25
    p = 2.5
    g = SampledFunction(-s, s**p)
    d = hilfer_bi(g, o, Side.Right)
    exact = G(p + 1) / G(p + 1 - o.delta) * s ** (p - o.delta)
    assert np.max(np.abs(d.raw()[far] - exact[far])) <= 1e-3


# (operator, order, exponent p) for g = s^p; the Hilfer orders enter through delta
POWER_BATTERY = [
    ("rl", 0.4, 2.5),
    ("rl", 1.5, 3.2),
    ("caputo", 0.7, 2.5),
    ("caputo", 1.6, 3.2),
    ("hilfer", OrderTriple(0.8, 0.4, 0.5, 1), 2.5),
    ("hilfer", OrderTriple(1.8, 1.5, 0.4, 2), 3.2),
]


def _power_error(kind, order, p, side, n):
    s = graded_grid(1.0, n)
    g = SampledFunction(s if side is Side.Left else -s, s**p)
    if kind == "rl":
        d, q = rl_derivative(g, order, side), order
    elif kind == "caputo":
        d, q = caputo(g, order, side), order
    else:
        d, q = hilfer_bi(g, order, side), order.delta
    far = s >= 0.25
    exact = G(p + 1) / G(p + 1 - q) * s[far] ** (p - q)
    return float(np.max(np.abs(d.raw()[far] - exact)))


@pytest.mark.parametrize("side", [Side.Left, Side.Right])
@pytest.mark.parametrize("kind, order, p", POWER_BATTERY)
def test_power_rule_second_order(kind, order, p, side):
    e = [_power_error(kind, order, p, side, n) for n in (128, 256, 512)]
    assert e[-1] <= 1e-4
    assert e[0] / e[1] >= 3.5 and e[1] / e[2] >= 3.5


# }}}


# {{{ limits and inversion


def test_extrapolate_limit_recovers_coefficients():
    s = 0.5 ** np.arange(4, 24)
    v = 2.0 + 3.0 * s**0.5 - s
    c = extrapolate_limit(s, v, [0.5, 1.0], npoints=12)
    assert np.allclose(c, [2.0, 3.0, -1.0], atol=1e-8)


@pytest.mark.parametrize("a, shift", [(1.5, 1.0), (1.3, 1.0), (1.7, 2.0)])
def test_inversion_residual_power_functions(a, shift):
    # g = (-t)^{a - shift} stored on its own weight, so the samples are constant;
    # two numerical derivatives amplify round-off like h^{-shift}
    for n in (128, 256):
        s = graded_grid(1.0, n)
        g = SampledFunction(-s, np.ones_like(s), shift - a)
        assert rl_inversion_residual(g, a) <= (1e-9 if shift == 1.0 else 1e-6)


def test_inversion_residual_converges():
    res = []
    for n in (128, 256, 512):
        s = graded_grid(1.0, n, 2.0)
        res.append(rl_inversion_residual(SampledFunction(-s, s**1.5 + np.sin(s)), 1.5))
    assert res[-1] <= 1e-3
    assert res[0] / res[1] >= 1.8 and res[1] / res[2] >= 1.8


def test_inversion_residual_zero():
    s = graded_grid(1.0, 64)
    assert rl_inversion_residual(SampledFunction(-s, np.zeros_like(s)), 1.5) == 0.0


# }}}
