"""Spectral solver and verification tools for a non-local problem for a
mixed diffusion/wave equation with bi-ordinal Hilfer time derivatives."""

from bihilfer.frac_ops import OrderTriple, SampledFunction, Side, caputo, hilfer_bi, rl_derivative, rl_integral
from bihilfer.fode import CauchyData, cauchy_left_closed_form, cauchy_right_closed_form, volterra_resolvent_solve
from bihilfer.special_functions import MLParams, gamma, ml_eval, rgamma
from bihilfer.spectral import GridField, ProblemSpec, SingularModeError, solve, solve_coefficients
from bihilfer.verify import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "CauchyData",
    "GridField",
    "MLParams",
    "OrderTriple",
    "ProblemSpec",
    "SampledFunction",
    "Side",
    "SingularModeError",
    "VerificationReport",
    "caputo",
    "cauchy_left_closed_form",
    "cauchy_right_closed_form",
    "gamma",
    "hilfer_bi",
    "ml_eval",
    "rgamma",
    "rl_derivative",
    "rl_integral",
    "solve",
    "solve_coefficients",
    "volterra_resolvent_solve",
]
