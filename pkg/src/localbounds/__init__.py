"""Explicit local upper, lower, Harnack and gradient bounds for -Lap u = lam u^p, with checks."""

__version__ = "0.1.0"

from .params import (  # noqa: E402
    CriticalExponents,
    ProblemParams,
    RadiiChain,
    RegimeError,
    ball_volume,
    critical_exponents,
    lambda_p,
    log_ball_volume,
)
from .radial import SolverError, build_profile, singular_profile, solve_lane_emden  # noqa: E402
from .verify import CheckResult, make_fixture, run_checks  # noqa: E402

__all__ = [
    "CheckResult",
    "CriticalExponents",
    "ProblemParams",
    "RadiiChain",
    "RegimeError",
    "SolverError",
    "ball_volume",
    "build_profile",
    "critical_exponents",
    "lambda_p",
    "log_ball_volume",
    "make_fixture",
    "run_checks",
    "singular_profile",
    "solve_lane_emden",
]
