import math

import numpy as np
import pytest

from bihilfer.fode import CauchyData, cauchy_left_solution, cauchy_right_solution
from bihilfer.frac_ops import OrderTriple, SampledFunction
from bihilfer.special_functions import rgamma
from bihilfer.spectral import (
    GridField,
    ProblemSpec,
    SingularModeError,
    assemble_solution,
    determinant,
    determinant_limit,
    forcing_coefficients,
    forcing_functional,
    forward_psi_coefficients,
    sine_coefficients,
    solve,
    solve_coefficients,
    hypothesis_check,
)

O1 = OrderTriple(0.9, 0.6, 0.5, 1)
O2 = OrderTriple(1.8, 1.5, 0.4, 2)

# Delta_n for T = l = 1 and the orders above, from a 60+ digit mpmath series sum
DELTA_REFERENCE = {1: -0.75463830735165945807, 2: 0.030617556727971488591, 3: 0.07776635652081583489}
# T^{gamma2 - delta2 - 1} / (Gamma(delta1) Gamma(gamma2 - delta2)) at the same orders
DELTA_LIMIT = 0.068023542154382748724
# E_{d1,d1+1}(-pi^2) - E_{d2,d2+1}(-pi^2), the forcing functional of f_1 = 1 at T = 1
F1_REFERENCE = -0.027266067078559551475


def _spec(psi=lambda x: 0 * x, f=None, **kw):
    kw.setdefault("n_max", 8)
    kw.setdefault("nt", 64)
    return ProblemSpec(1.0, 1.0, O1, O2, psi=psi, f=f, **kw)


SINE = lambda x: np.sin(np.pi * x)


# {{{ data expansion


def test_sine_coefficients_examples():
    assert np.allclose(sine_coefficients(SINE, 1.0, 6), [1, 0, 0, 0, 0, 0], atol=1e-15)
    assert np.all(sine_coefficients(lambda x: 0 * x, 1.0, 6) == 0)
    n = np.arange(1, 33)
    exact = np.where(n % 2 == 1, 8 / (n**3 * np.pi**3), 0.0)
    assert np.max(np.abs(sine_coefficients(lambda x: x * (1 - x), 1.0, 32) - exact)) <= 1e-15


def test_sine_coefficients_other_length():
    l = 2.5
    c = sine_coefficients(lambda x: np.sin(3 * np.pi * x / l), l, 5)
    assert np.allclose(c, [0, 0, 1, 0, 0], atol=1e-15)


def test_forcing_coefficients_examples():
    spec = _spec(f=lambda x, t: SINE(x) * np.cos(t))
    fn = forcing_coefficients(spec.f, spec, 4)
    assert np.max(np.abs(fn.values[:, 0] - np.cos(fn.grid))) <= 1e-14
    assert np.max(np.abs(fn.values[:, 1:])) <= 1e-14

    sep = _spec(f=lambda x, t: x * (1 - x) * np.exp(t))
    fn = forcing_coefficients(sep.f, sep, 5)
    n = np.arange(1, 6)
    exact = np.outer(np.exp(fn.grid), np.where(n % 2 == 1, 8 / (n**3 * np.pi**3), 0.0))
    assert np.max(np.abs(fn.values - exact)) <= 1e-14


# }}}


# {{{ determinant and forcing functional


@pytest.mark.parametrize("n", [1, 2, 3])
def test_determinant_reference(n):
    assert determinant(n, _spec()) == pytest.approx(DELTA_REFERENCE[n], abs=1e-13)


def test_determinant_limit_and_sign():
    spec = _spec()
    lim = determinant_limit(spec)
    assert lim == pytest.approx(DELTA_LIMIT, rel=1e-13)
    dmin = min(O1.delta, O2.delta)
    n0 = math.ceil(math.sqrt(1e4) / math.pi)
    assert (n0 * math.pi) ** 2 * spec.T**dmin >= 1e4
    d = np.array([determinant(n, spec) for n in range(n0, n0 + 200)])
    assert np.all(d > 0)
    assert np.max(np.abs(d - lim)) <= 0.01 * lim


def test_forcing_functional_examples():
    assert forcing_functional(1, _spec()) == 0.0
    one = _spec(f=lambda x, t: SINE(x) * np.ones_like(t))
    assert forcing_functional(1, one) == pytest.approx(F1_REFERENCE, abs=1e-12)


def test_forcing_functional_self_refinement():
    f = lambda x, t: SINE(x) * np.sin(2 * t) * np.exp(t)
    v = [forcing_functional(1, _spec(f=f, nt_forcing=n)) for n in (256, 1024, 4096)]
    assert abs(v[1] - v[2]) <= 1e-6
    # piecewise linear forcing: second order, so 4x resolution gains about 16x
    assert abs(v[0] - v[2]) >= 8 * abs(v[1] - v[2])


# }}}


# {{{ coefficients


def test_homogeneous_coefficients_vanish():
    c = solve_coefficients(_spec())
    for v in (c.tau_n, c.nu_n, c.phi_n, c.F_n):
        assert np.all(v == 0)


def test_single_mode_coefficients():
    c = solve_coefficients(_spec(SINE))
    assert c.tau_n[0] == pytest.approx(1 / DELTA_REFERENCE[1], rel=1e-13)
    assert np.max(np.abs(c.tau_n[1:])) <= 1e-14


def test_conjugation_relations_exact():
    c = solve_coefficients(_spec(lambda x: x * (1 - x), f=lambda x, t: SINE(2 * x) * np.cos(t)))
    assert np.array_equal(c.tau_n, c.phi_n)
    assert np.array_equal(c.nu_n, -c.lambda_n * c.tau_n * rgamma(O1.delta))
    assert np.all(np.diff(c.lambda_n) > 0)


def test_manufactured_round_trip():
    spec = _spec(n_max=24)
    rng = np.random.default_rng(7)
    tau = rng.uniform(-1, 1, 24) / np.arange(1, 25) ** 3
    psi_n = forward_psi_coefficients(tau, spec)
    c = solve_coefficients(spec, psi_n)
    assert np.max(np.abs(c.tau_n - tau)) <= 1e-8
    assert np.max(np.abs(forward_psi_coefficients(c.tau_n, spec) - psi_n)) <= 1e-8


def test_singular_mode_detected():
    # T at a zero of Delta_1 for these orders, located by bisection
    spec = ProblemSpec(1.0, 0.6318433188663326, O1, O2, psi=SINE, n_max=4, nt=16)
    with pytest.raises(SingularModeError) as info:
        solve_coefficients(spec)
    assert info.value.mode == 1


def test_spec_validation():
    with pytest.raises(ValueError):
        _spec(lambda x: x)
    with pytest.raises(ValueError):
        _spec(f=lambda x, t: 1 + 0 * x * t)
    with pytest.raises(ValueError):
        ProblemSpec(1.0, 1.0, O2, O1, psi=SINE)


# }}}


# {{{ assembly


def test_zero_coefficients_give_zero_field():
    c, fld = solve(_spec(), np.linspace(0, 1, 11))
    assert np.all(fld.values == 0) and fld.tail_bound == 0


def test_single_mode_matches_closed_forms():
    spec = _spec(SINE, n_max=4)
    c, fld = solve(spec, np.array([0.0, 0.5, 1.0]))
    t = fld.t_grid
    pos, neg = t[t > 0], t[t < 0]
    lam = c.lambda_n[0]
    zero_p = SampledFunction(np.linspace(0, 1, 65), np.zeros(65))
    left = cauchy_left_solution(c.tau_n[0], lam, zero_p, O1, pos).values
    zero_n = SampledFunction(np.linspace(-1, 0, 65), np.zeros(65))
    d = CauchyData(-lam, c.phi_n[0], c.nu_n[0], zero_n, O2)
    right = cauchy_right_solution(d, neg).values
    assert np.max(np.abs(fld.values[1, t > 0] - left)) <= 1e-14
    assert np.max(np.abs(fld.values[1, t < 0] - right)) <= 1e-14
    assert np.all(fld.raw()[[0, 2]] == 0)


def test_linearity():
    x = np.linspace(0, 1, 21)
    p1, f1 = SINE, lambda x, t: SINE(2 * x) * np.cos(t)
    p2, f2 = lambda x: np.sin(3 * np.pi * x), lambda x, t: SINE(x) * t
    kw = dict(n_max=8, escalate=False, tol=1.0)
    _, a = solve(_spec(p1, f1, **kw), x)
    _, b = solve(_spec(p2, f2, **kw), x)
    _, ab = solve(_spec(lambda x: p1(x) + p2(x), lambda x, t: f1(x, t) + f2(x, t), **kw), x)
    assert np.max(np.abs(ab.values - a.values - b.values)) <= 1e-12


def test_grid_field_validation():
    with pytest.raises(ValueError):
        GridField(np.array([0.0, 1.0]), np.array([-1.0, 0.0, 1.0]), np.zeros((2, 3)), 0.1, 0.3)
    with pytest.raises(ValueError):
        GridField(np.array([0.0, 1.0]), np.array([-1.0, 1.0]), np.zeros((3, 2)), 0.1, 0.3)


def test_assembly_rejects_zero_time():
    c = solve_coefficients(_spec(SINE))
    with pytest.raises(ValueError):
        assemble_solution(c, _spec(SINE), np.linspace(0, 1, 5), np.array([-1.0, 0.0, 1.0]))


# }}}


# {{{ hypothesis screening


def test_hypothesis_screening_sine_passes():
    rep = hypothesis_check(_spec(SINE, f=lambda x, t: np.sin(2 * np.pi * x) * np.cos(t)))
    assert all(status == "pass" for status, _ in rep.values())


def test_hypothesis_screening_parabola_warns():
    rep = hypothesis_check(_spec(lambda x: x * (1 - x)))
    warned = {k for k, (status, _) in rep.items() if status == "warn"}
    assert warned == {"psi^(2)(0) = 0", "psi^(2)(l) = 0"}
    assert rep["psi^(2)(0) = 0"][1] == pytest.approx(-2.0, abs=1e-6)


# }}}
