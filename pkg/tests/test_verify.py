from dataclasses import replace

import numpy as np
import pytest

import bihilfer.verify as verify_module
from bihilfer.frac_ops import OrderTriple
from bihilfer.spectral import ProblemSpec, assemble_solution, solve
from bihilfer.verify import (
    Tolerances,
    boundary_residual,
    conjugation_residuals,
    nonlocal_residual,
    pde_residual,
    verify,
)

O1 = OrderTriple(0.9, 0.6, 0.5, 1)
O2 = OrderTriple(1.8, 1.5, 0.4, 2)
SINE = lambda x: np.sin(np.pi * x)


def _spec(psi=lambda x: 0 * x, nt=128, **kw):
    return ProblemSpec(1.0, 1.0, O1, O2, psi=psi, n_max=4, nt=nt, **kw)


def test_zero_field():
    spec = _spec()
    _, fld = solve(spec, np.linspace(0, 1, 41))
    rep = verify(fld, spec)
    assert rep.all_passed
    for _, value, status in rep.rows():
        if status != "info":
            assert value == 0.0
    assert conjugation_residuals(fld, spec) == (0.0, 0.0)


def test_perturbation_scales_linearly():
    spec = _spec()
    x = np.linspace(0, 1, 101)
    _, fld = solve(spec, x)
    t = fld.t_grid
    bump = np.outer(SINE(x), t**2 * np.abs(t) ** fld.weight_exponents)
    r1 = np.array(pde_residual(replace(fld, values=fld.values + 1e-3 * bump), spec))
    r2 = np.array(pde_residual(replace(fld, values=fld.values + 2e-3 * bump), spec))
    assert np.all(r1 > 1e-3)
    assert np.allclose(r2, 2 * r1, rtol=1e-9)


def test_violated_flux_relation_is_detected():
    spec = _spec(SINE)
    x = np.linspace(0, 1, 51)
    c, fld = solve(spec, x)
    assert conjugation_residuals(fld, spec)[1] <= 1e-6
    bad = assemble_solution(replace(c, nu_n=1.5 * c.nu_n), spec, x)
    value, flux = conjugation_residuals(bad, spec)
    assert value <= 1e-12
    assert flux == pytest.approx(0.5 * abs(c.nu_n[0]), rel=1e-6)
    assert not verify(bad, spec).all_passed


def test_single_mode_conditions():
    spec = _spec(SINE)
    c, fld = solve(spec, np.linspace(0, 1, 101))
    assert boundary_residual(fld, spec) == 0.0
    assert nonlocal_residual(fld, spec) <= 1e-8
    value, flux = conjugation_residuals(fld, spec)
    assert value <= 1e-10 and flux <= 1e-6


def test_single_mode_pde_residual_converges():
    res = []
    for nx, nt in ((51, 64), (101, 128), (201, 256)):
        spec = _spec(SINE, nt=nt)
        _, fld = solve(spec, np.linspace(0, 1, nx))
        res.append(max(pde_residual(fld, spec)))
    rates = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert res[-1] <= 5e-2 and np.all(rates >= 1.0)


def test_report_text_and_tolerances():
    spec = _spec(SINE)
    _, fld = solve(spec, np.linspace(0, 1, 51))
    rep = verify(fld, spec, Tolerances(pde=1e-12))
    assert not rep.passed["pde_omega1"] and rep.passed["nonlocal"]
    text = rep.to_text()
    assert "pde_omega1:" in text and "[FAIL]" in text and text.endswith("all_passed: false\n")
    assert rep.delta_min == pytest.approx(0.030617556727971488591, rel=1e-12)


def test_nonlocal_needs_end_rows():
    spec = _spec(SINE)
    _, fld = solve(spec, np.linspace(0, 1, 11), np.array([-0.5, 0.5]))
    with pytest.raises(ValueError):
        nonlocal_residual(fld, spec)


def test_checker_is_independent_of_mittag_leffler_code():
    names = set(vars(verify_module))
    assert not names & {"ml_eval", "ml_convolution", "cauchy_right_solution", "cauchy_left_solution"}
