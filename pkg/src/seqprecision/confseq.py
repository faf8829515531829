"""Anytime-valid confidence-sequence boundary radii, the pooled-variance upper
confidence sequence, the interval scale term, and the rho tuning helper."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .errors import UndefinedEstimateError
from .numerics import DEFAULT_TOL, ToleranceSpec, minimize_1d
from .streaming import ExperimentState

LOG_RHO_BRACKET = (-8.0, 4.0)  # covers tuning targets from ~10 to ~1e8


@dataclass(frozen=True)
class CsConfig:
    """Confidence-sequence settings: tuning parameter rho and level alpha."""
    rho: float
    alpha: float
    one_sided: bool = True

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha!r}")


def _check_args(n: int, rho: float, alpha: float) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")


def radius_one_sided(n: int, rho: float, alpha: float) -> float:
    """Boundary radius of the one-sided (upper) confidence sequence."""
    _check_args(n, rho, alpha)
    return float(_kernels.radius_one_sided(float(n), rho, alpha))


def radius_two_sided(n: int, rho: float, alpha: float) -> float:
    """Boundary radius of the two-sided (centered) confidence sequence."""
    _check_args(n, rho, alpha)
    return float(_kernels.radius_two_sided(float(n), rho, alpha))


def tune_rho(n_target: int, alpha: float, boundary: str = "one_sided",
             tol: ToleranceSpec = DEFAULT_TOL) -> float:
    """rho minimizing the chosen boundary radius at n = n_target.

    Searched in log space over LOG_RHO_BRACKET (the radius is positive and
    unimodal in rho; cross-checked against a dense grid in the tests).
    """
    if n_target < 1:
        raise ValueError(f"n_target must be >= 1, got {n_target!r}")
    if boundary == "one_sided":
        fn = _kernels.radius_one_sided
    elif boundary == "two_sided":
        fn = _kernels.radius_two_sided
    else:
        raise ValueError(f"boundary must be 'one_sided' or 'two_sided', got {boundary!r}")
    n = float(n_target)
    log_rho = minimize_1d(lambda t: fn(n, math.exp(t), alpha),
                          LOG_RHO_BRACKET[0], LOG_RHO_BRACKET[1], tol)
    return math.exp(log_rho)


def pooled_variance_upper(state: ExperimentState, cfg: CsConfig) -> float:
    """Upper confidence-sequence bound for the pooled variance at the current n."""
    if state.n0 < 2 or state.n1 < 2:
        raise UndefinedEstimateError(
            f"pooled variance upper bound needs 2 observations per arm "
            f"(have n0={state.n0}, n1={state.n1})")
    return (state.pooled_variance()
            + math.sqrt(state.influence_variance())
            * radius_one_sided(state.n, cfg.rho, cfg.alpha))


_clamp_count = 0


def halfwidth_scale(state: ExperimentState) -> float:
    """Empirical scale term of the anytime-valid interval for the effect.

    Nonnegative; a negative radicand from floating-point cancellation is
    clamped to 0 and counted (see :func:`clamp_count`).
    """
    global _clamp_count
    state._require_both_arms()
    p = state.p_hat
    if not 0.0 < p < 1.0:
        raise UndefinedEstimateError(f"p_hat must be strictly inside (0, 1), got {p!r}")
    a1, a0 = state.arm1, state.arm0
    rad = ((a1.variance + a1.mean ** 2) / p
           + (a0.variance + a0.mean ** 2) / (1.0 - p)
           - (a1.mean - a0.mean) ** 2)
    if rad < 0.0:
        _clamp_count += 1
        rad = 0.0
    return math.sqrt(rad)


def clamp_count() -> int:
    """Number of times halfwidth_scale clamped a negative radicand."""
    return _clamp_count


def reset_clamp_count() -> None:
    global _clamp_count
    _clamp_count = 0
