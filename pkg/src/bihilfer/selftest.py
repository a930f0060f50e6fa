"""Seeded property checks run by ``bihilfer selftest``.

Each check draws its cases from a :class:`numpy.random.Generator` and
returns ``(name, passed, detail)``. The suite needs nothing beyond the
package's runtime dependencies.
"""

from __future__ import annotations

import math
import time

import numpy as np

from bihilfer.expr import compile_expression
from bihilfer.fode import CauchyData, cauchy_right_oracle, cauchy_right_solution, volterra_collocation, volterra_resolvent_solve
from bihilfer.frac_ops import OrderTriple, SampledFunction, Side, caputo, graded_grid, hilfer_bi, rl_derivative, rl_integral
from bihilfer.special_functions import gamma, ml_eval, ml_fit_envelope, ml_limit_products, ml_recurrence_residual, rgamma
from bihilfer.spectral import ProblemSpec, forward_psi_coefficients, solve, solve_coefficients


def check_ml_recurrence(rng):
    a = rng.uniform(0.1, 1.9, 40)
    b = rng.uniform(0.1, 2.5, 40)
    z = -rng.uniform(0.0, 1e4, 40)
    r = max(float(ml_recurrence_residual((ai, bi), zi)) for ai, bi, zi in zip(a, b, z))
    return r <= 1e-10, f"max residual {r:.2e}"


def check_ml_closed_forms(rng):
    z = rng.uniform(-10, 10, 64)
    e1 = np.max(np.abs(ml_eval((1.0, 1.0), z) - np.exp(z)))
    e2 = np.max(np.abs(ml_eval((2.0, 1.0), -(z**2)) - np.cos(z)))
    return max(e1, e2) <= 1e-10, f"exp {e1:.2e}, cos {e2:.2e}"


def check_ml_limits(rng):
    worst = 0.0
    for _ in range(8):
        a = rng.uniform(0.2, 1.8)
        b = rng.uniform(0.2, 2.4)
        _, prod = ml_limit_products((a, b), np.array([-1e6]))[0]
        worst = max(worst, abs(prod + rgamma(b - a)))
    return worst <= 1e-3, f"max |z E + 1/Gamma(b - a)| {worst:.2e}"


def check_envelope(rng):
    a, b = rng.uniform(0.2, 1.8), rng.uniform(0.2, 2.4)
    z = -np.logspace(-3, 6, 400)
    M = ml_fit_envelope((a, b), np.concatenate([[0.0], z])).constant_M
    zf = -np.logspace(-3, 6, 4000)
    excess = float(np.max(np.abs(ml_eval((a, b), zf)) * (1 + np.abs(zf)) / M))
    return np.isfinite(M) and excess <= 1.01, f"M = {M:.4g}, fine-grid ratio {excess:.4f}"


def check_power_rule(rng):
    worst = 0.0
    s = graded_grid(1.0, 512)
    for _ in range(6):
        p = rng.uniform(0.0, 2.0)
        a = rng.uniform(0.2, 1.8)
        side = Side.Left if rng.random() < 0.5 else Side.Right
        t = s if side is Side.Left else -s
        # s^p carried by the weight, so the product weights are exact
        g = SampledFunction(t, np.ones_like(s), -p)
        out = rl_integral(g, a, side).raw()[1:]
        exact = gamma(p + 1) / gamma(p + 1 + a) * s[1:] ** (p + a)
        worst = max(worst, float(np.max(np.abs(out - exact))))
    return worst <= 1e-12, f"max error {worst:.2e}"


def check_hilfer_endpoints(rng):
    s = graded_grid(1.0, 512)
    p = rng.uniform(1.2, 2.0)
    g = SampledFunction(s, s**p)
    a, b = rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9)
    tail = s >= 0.25
    e0 = np.max(np.abs(hilfer_bi(g, OrderTriple(a, b, 0.0, 1)).values - rl_derivative(g, b).values)[tail])
    e1 = np.max(np.abs(hilfer_bi(g, OrderTriple(a, b, 1.0, 1)).values - caputo(g, a).values)[tail])
    return max(e0, e1) <= 1e-4, f"mu=0 {e0:.2e}, mu=1 {e1:.2e}"


def check_resolvent(rng):
    lam = -rng.uniform(0.0, 10.0)
    a = rng.uniform(0.3, 1.5)
    c = rng.uniform(-1, 1, 3)
    t = -graded_grid(1.0, 512)[::-1]
    g = SampledFunction(t, c[0] + c[1] * t + c[2] * np.sin(3 * t))
    y = volterra_resolvent_solve(g, lam, a).values
    ref = volterra_collocation(g, lam, a).values
    err = float(np.max(np.abs(y - ref)))
    return err <= 1e-4, f"lambda={lam:.3g}, alpha={a:.3g}: {err:.2e}"


def check_cauchy(rng):
    o = OrderTriple(rng.uniform(1.1, 1.9), rng.uniform(1.1, 1.9), rng.uniform(0, 1), 2)
    t = -graded_grid(1.0, 512)[::-1]
    d = CauchyData(-rng.uniform(0, 5), 1.0, 0.5, SampledFunction(t, 1 + t), o)
    err = float(np.max(np.abs(cauchy_right_solution(d, t).values - cauchy_right_oracle(d).values)))
    return err <= 1e-4, f"closed form vs oracle {err:.2e}"


def check_spectral(rng):
    o1 = OrderTriple(0.9, 0.6, 0.5, 1)
    o2 = OrderTriple(1.8, 1.5, 0.4, 2)
    zero = ProblemSpec(1.0, 1.0, o1, o2, psi=lambda x: 0 * x, n_max=8, nt=32)
    _, fld = solve(zero, np.linspace(0, 1, 11))
    hom = float(np.max(np.abs(fld.values)))
    spec = ProblemSpec(1.0, 1.0, o1, o2, psi=lambda x: 0 * x, n_max=8, nt=32)
    tau = rng.uniform(-1, 1, 8) / np.arange(1, 9) ** 3
    psi_n = forward_psi_coefficients(tau, spec)
    rt = float(np.max(np.abs(solve_coefficients(spec, psi_n).tau_n - tau)))
    return hom <= 1e-12 and rt <= 1e-8, f"homogeneous {hom:.1e}, round trip {rt:.1e}"


def check_expressions(rng):
    x = rng.uniform(0, 1, 16)
    f = compile_expression("-x^2 + 2*sin(pi*x/l)/sqrt(4) - exp(0)", ("x",), l=2.0)
    err = float(np.max(np.abs(f(x) - (-(x**2) + np.sin(math.pi * x / 2.0) - 1.0))))
    return err <= 1e-15, f"max error {err:.1e}"


CHECKS = (
    check_ml_recurrence,
    check_ml_closed_forms,
    check_ml_limits,
    check_envelope,
    check_power_rule,
    check_hilfer_endpoints,
    check_resolvent,
    check_cauchy,
    check_spectral,
    check_expressions,
)


def run(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for check in CHECKS:
        name = check.__name__.removeprefix("check_")
        t0 = time.perf_counter()
        passed, detail = check(rng)
        ok &= bool(passed)
        out(f"{'PASS' if passed else 'FAIL'} {name}: {detail} ({time.perf_counter() - t0:.1f} s)")
    return ok
