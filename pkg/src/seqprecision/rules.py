"""Stopping-rule definitions: thresholds, per-observation evaluation, stopping
forecasts, final reports, and design-stage sample-size helpers.

Seven rule kinds are supported. The fixed-width kinds stop when a variance
statistic falls to its threshold; the fixed-power kinds use the same statistics
against a power-derived threshold; the anytime-valid test and the group
sequential test stop on significance. Stopping comparisons are inclusive
(ties stop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from . import _kernels, confseq
from .errors import ConfigError, UndefinedEstimateError
from .gst import GstPlan, boundary_at
from .numerics import DEFAULT_TOL, find_root, norm_cdf, norm_quantile
from .streaming import ExperimentState

FWCID_NAIVE = "fwcid_naive"
FWCID_CONSERVATIVE = "fwcid_conservative"
FWCID_ALWAYS_VALID = "fwcid_always_valid"
FPD_NAIVE = "fpd_naive"
FPD_CONSERVATIVE = "fpd_conservative"
AV_TEST = "av_test"
GST = "gst"

ALL_KINDS = (FWCID_NAIVE, FWCID_CONSERVATIVE, FWCID_ALWAYS_VALID,
             FPD_NAIVE, FPD_CONSERVATIVE, AV_TEST, GST)
FWCID_KINDS = (FWCID_NAIVE, FWCID_CONSERVATIVE, FWCID_ALWAYS_VALID)
FPD_KINDS = (FPD_NAIVE, FPD_CONSERVATIVE)
CS_KINDS = (FWCID_CONSERVATIVE, FWCID_ALWAYS_VALID, FPD_CONSERVATIVE, AV_TEST)

KIND_CODES = {
    FWCID_NAIVE: _kernels.FWCID_NAIVE,
    FWCID_CONSERVATIVE: _kernels.FWCID_CONSERVATIVE,
    FWCID_ALWAYS_VALID: _kernels.FWCID_ALWAYS_VALID,
    FPD_NAIVE: _kernels.FPD_NAIVE,
    FPD_CONSERVATIVE: _kernels.FPD_CONSERVATIVE,
    AV_TEST: _kernels.AV_TEST,
    GST: _kernels.GST,
}

STOP_THRESHOLD = "threshold_met"
STOP_NMAX = "n_max_reached"

_REQUIRED = {
    FWCID_NAIVE: ("d", "alpha"),
    FWCID_CONSERVATIVE: ("d", "alpha", "alpha_c", "rho"),
    FWCID_ALWAYS_VALID: ("d", "alpha", "rho"),
    FPD_NAIVE: ("alpha", "beta", "tau_h0", "tau_h1"),
    FPD_CONSERVATIVE: ("alpha", "beta", "tau_h0", "tau_h1", "alpha_c", "rho"),
    AV_TEST: ("alpha", "tau_h0", "tau_h1", "rho"),
    GST: ("alpha", "tau_h0", "tau_h1", "n_max"),
}


@dataclass(frozen=True)
class StoppingRuleSpec:
    """Configuration for one stopping rule.

    Only the fields relevant to ``kind`` are required (see _REQUIRED); the
    rest may stay None. ``beta`` on the test kinds (av_test, gst) is optional
    and only used to derive reference sample sizes and n_max caps.
    """
    kind: str
    d: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    tau_h0: Optional[float] = None
    tau_h1: Optional[float] = None
    alpha_c: Optional[float] = None
    rho: Optional[float] = None
    n_max: Optional[int] = None
    min_per_arm: int = 2

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ConfigError(f"unknown rule kind: {self.kind!r}")
        for name in _REQUIRED[self.kind]:
            if getattr(self, name) is None:
                raise ConfigError(f"{self.kind} requires field {name!r}")
        if self.d is not None and self.d <= 0:
            raise ConfigError(f"d must be positive, got {self.d!r}")
        for name in ("alpha", "beta", "alpha_c"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must be in (0, 1), got {v!r}")
        if self.rho is not None and self.rho <= 0:
            raise ConfigError(f"rho must be positive, got {self.rho!r}")
        if self.min_per_arm < 2:
            raise ConfigError(f"min_per_arm must be >= 2, got {self.min_per_arm!r}")
        if self.n_max is not None and self.n_max < 2 * self.min_per_arm:
            raise ConfigError(
                f"n_max must be >= 2*min_per_arm = {2 * self.min_per_arm}, "
                f"got {self.n_max!r}")
        if self.kind in (*FPD_KINDS, AV_TEST, GST) and self.tau_d == 0.0:
            raise ConfigError("tau_h1 must differ from tau_h0")

    @property
    def tau_d(self) -> float:
        return (self.tau_h1 or 0.0) - (self.tau_h0 or 0.0)

    @property
    def direction(self) -> float:
        """+1 for an upper alternative (tau_h1 > tau_h0), -1 for a lower one."""
        return 1.0 if self.tau_d > 0 else -1.0

    def with_rho(self, rho: float) -> "StoppingRuleSpec":
        return replace(self, rho=rho)

    def with_n_max(self, n_max: int) -> "StoppingRuleSpec":
        return replace(self, n_max=n_max)


@dataclass(frozen=True)
class StopReport:
    """Terminal report of a monitoring session."""
    stopped: bool
    n_stop: int
    reason: str
    tau_hat: float
    ci_lo: float
    ci_hi: float
    rejected: Optional[bool]
    n_forecast: float


def threshold(spec: StoppingRuleSpec) -> float:
    """Variance threshold of the rule: d^2/z_{a/2}^2 for fixed-width kinds,
    tau_d^2/(z_a + z_b)^2 for fixed-power kinds."""
    if spec.kind in (FWCID_NAIVE, FWCID_CONSERVATIVE):
        z = norm_quantile(1.0 - spec.alpha / 2.0)
        return spec.d ** 2 / (z * z)
    if spec.kind in FPD_KINDS:
        z = norm_quantile(1.0 - spec.alpha) + norm_quantile(1.0 - spec.beta)
        return spec.tau_d ** 2 / (z * z)
    raise ConfigError(f"{spec.kind} has no fixed variance threshold")


def _cs_params(spec: StoppingRuleSpec,
               cs_cfg: Optional[confseq.CsConfig]) -> tuple[float, float]:
    """(rho, level) for the rule's confidence sequence, cs_cfg taking priority."""
    rho = cs_cfg.rho if cs_cfg is not None else spec.rho
    if spec.kind in (FWCID_CONSERVATIVE, FPD_CONSERVATIVE):
        level = cs_cfg.alpha if cs_cfg is not None else spec.alpha_c
    else:
        level = spec.alpha
    if rho is None or level is None:
        raise ConfigError(f"{spec.kind} needs confidence-sequence settings "
                          f"(rho and level); pass them on the spec or as cs_cfg")
    return float(rho), float(level)


def _kernel_args(spec: StoppingRuleSpec,
                 cs_cfg: Optional[confseq.CsConfig] = None):
    """(kind_code, thr, rho, alpha_cs, tau_h0, direction) for the compiled kernels."""
    kind = KIND_CODES[spec.kind]
    rho, alpha_cs, tau_h0, direction = 0.0, 0.0, 0.0, 1.0
    if spec.kind == FWCID_ALWAYS_VALID:
        thr = spec.d ** 2
        rho, alpha_cs = _cs_params(spec, cs_cfg)
    elif spec.kind == AV_TEST:
        thr = 0.0
        rho, alpha_cs = _cs_params(spec, cs_cfg)
        tau_h0, direction = spec.tau_h0, spec.direction
    elif spec.kind == GST:
        thr = 0.0
        tau_h0, direction = spec.tau_h0, spec.direction
    else:
        thr = threshold(spec)
        if spec.kind in (FWCID_CONSERVATIVE, FPD_CONSERVATIVE):
            rho, alpha_cs = _cs_params(spec, cs_cfg)
        if spec.kind in FPD_KINDS:
            tau_h0, direction = spec.tau_h0, spec.direction
    return kind, thr, rho, alpha_cs, tau_h0, direction


def evaluate(spec: StoppingRuleSpec, state: ExperimentState,
             cs_cfg: Optional[confseq.CsConfig] = None,
             gst_plan: Optional[GstPlan] = None) -> Optional[str]:
    """Stopping decision at the current state: None to continue, otherwise
    the stop reason ("threshold_met" or "n_max_reached").

    The monitored statistic is compared only once both arms hold min_per_arm
    observations; the GST statistic is compared only at plan looks. A
    threshold crossing at n == n_max is reported as a threshold stop.
    """
    n = state.n
    if state.n0 >= spec.min_per_arm and state.n1 >= spec.min_per_arm:
        if spec.kind == GST:
            if gst_plan is None:
                raise ConfigError("gst evaluation requires a GstPlan")
            if n in gst_plan.look_set:
                z = _kernels.z_statistic(state.data, spec.tau_h0, spec.direction)
                if z >= boundary_at(gst_plan, n):
                    return STOP_THRESHOLD
        else:
            kind, thr, rho, alpha_cs, tau_h0, direction = _kernel_args(spec, cs_cfg)
            value, limit = _kernels.rule_value(kind, state.data, thr, rho,
                                               alpha_cs, tau_h0, direction)
            if value <= limit:
                return STOP_THRESHOLD
    if spec.n_max is not None and n >= spec.n_max:
        return STOP_NMAX
    return None


def forecast_n(spec: StoppingRuleSpec, state: ExperimentState,
               cs_cfg: Optional[confseq.CsConfig] = None) -> float:
    """Forecast of the stopping sample size from the current state.

    Closed form (pooled variance over threshold and allocation) for the
    variance-threshold kinds; for the anytime-valid fixed-width kind the
    smallest n whose boundary half-width reaches d; NaN for the significance
    kinds (av_test, gst), whose stopping time depends on the effect path.
    """
    if state.n0 < spec.min_per_arm or state.n1 < spec.min_per_arm:
        raise UndefinedEstimateError(
            f"forecast needs min_per_arm={spec.min_per_arm} per arm "
            f"(have n0={state.n0}, n1={state.n1})")
    p = state.p_hat
    if not 0.0 < p < 1.0:
        raise UndefinedEstimateError("forecast needs both arms represented")
    if spec.kind in (FWCID_NAIVE, FWCID_CONSERVATIVE, *FPD_KINDS):
        return state.pooled_variance() / (threshold(spec) * p * (1.0 - p))
    if spec.kind == FWCID_ALWAYS_VALID:
        rho, level = _cs_params(spec, cs_cfg)
        vn = confseq.halfwidth_scale(state)
        if vn == 0.0:
            return float(state.n)

        def width(n: float) -> float:
            return vn * _kernels.radius_two_sided(n, rho, level) - spec.d

        lo, hi = 1.0, 2.0
        while width(hi) > 0.0 and hi < 1e15:
            lo, hi = hi, hi * 2.0
        if width(hi) > 0.0:
            return math.inf
        if width(lo) <= 0.0:
            return lo
        return find_root(width, lo, hi, DEFAULT_TOL)
    return math.nan


def final_report(spec: StoppingRuleSpec, state: ExperimentState, stop_reason: str,
                 cs_cfg: Optional[confseq.CsConfig] = None) -> StopReport:
    """Point estimate, interval, and test decision at the stopping point.

    Fixed-width kinds report the +-d interval on a threshold stop and fall
    back to the fixed-sample interval when truncated at n_max. The naive
    fixed-power kind runs the one-sided test tau_hat -+ z_a * sd against
    tau_h0 (strict inequality; mirrored for a lower alternative), also when
    truncated. The conservative fixed-power kind tests with the conservative
    standard deviation sqrt(upper-bound * kappa) and, like the significance
    kinds, cannot reject when its rule never fired: a truncated run reports
    rejected = False (the design could not certify its precision by n_max).
    """
    if stop_reason not in (STOP_THRESHOLD, STOP_NMAX):
        raise ValueError(f"final_report called with stop reason {stop_reason!r}")
    tau_hat = state.diff_in_means()
    sd = math.sqrt(state.estimator_variance())
    z2 = norm_quantile(1.0 - spec.alpha / 2.0)
    if spec.kind in FWCID_KINDS and stop_reason == STOP_THRESHOLD:
        ci_lo, ci_hi = tau_hat - spec.d, tau_hat + spec.d
    else:
        ci_lo, ci_hi = tau_hat - z2 * sd, tau_hat + z2 * sd
    if spec.kind in FWCID_KINDS:
        rejected = None
    elif spec.kind == FPD_NAIVE:
        za = norm_quantile(1.0 - spec.alpha)
        rejected = spec.direction * (tau_hat - spec.tau_h0) > za * sd
    elif spec.kind == FPD_CONSERVATIVE:
        if stop_reason == STOP_NMAX:
            rejected = False
        else:
            za = norm_quantile(1.0 - spec.alpha)
            rho, alpha_c = _cs_params(spec, cs_cfg)
            sd_cons = math.sqrt(
                _kernels.pooled_upper_bound(state.data, rho, alpha_c)
                * state.kappa())
            rejected = spec.direction * (tau_hat - spec.tau_h0) > za * sd_cons
    else:
        rejected = stop_reason == STOP_THRESHOLD
    try:
        fc = forecast_n(spec, state, cs_cfg)
    except UndefinedEstimateError:
        fc = math.nan
    return StopReport(stopped=True, n_stop=state.n, reason=stop_reason,
                      tau_hat=tau_hat, ci_lo=ci_lo, ci_hi=ci_hi,
                      rejected=rejected, n_forecast=fc)


def two_sided_beta_correction(alpha: float, beta: float) -> float:
    """Corrected beta quantile for a two-sided fixed-power design.

    Solves F(z') + F(-(2 z_{a/2} + z')) = 1 - beta for z'. The left term alone
    hits 1 - beta at z' = z_beta and the correction term is positive, so the
    root lies at or below z_beta; the expression's minimum over z' is alpha
    (at z' = -z_{a/2}), so a root exists whenever alpha <= 1 - beta and the
    bracket [-z_{a/2}, z_beta] encloses exactly the relevant one.
    """
    if not 0.0 < alpha < 1.0 or not 0.0 < beta < 1.0:
        raise ValueError("alpha and beta must be in (0, 1)")
    if alpha > 1.0 - beta:
        raise ConfigError(
            f"no corrected quantile exists: alpha={alpha} exceeds 1-beta={1 - beta}")
    z_half = norm_quantile(1.0 - alpha / 2.0)
    z_beta = norm_quantile(1.0 - beta)

    def g(zp: float) -> float:
        return norm_cdf(zp) + norm_cdf(-(2.0 * z_half + zp)) - (1.0 - beta)

    if alpha == 1.0 - beta:
        return -z_half
    return find_root(g, -z_half, z_beta, DEFAULT_TOL)


def reference_sample_size(kind: str, target: float, alpha: float,
                          beta: Optional[float] = None, p: float = 0.5) -> int:
    """Fixed-sample reference size under a unit pooled variance.

    ``kind`` is "fwcid" (target = interval half-width d) or "fpd" (target =
    tau_d). Rounded to the nearest integer.
    """
    if target <= 0:
        raise ValueError(f"target must be positive, got {target!r}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p!r}")
    key = kind.split("_")[0] if kind in ALL_KINDS else kind
    if key in ("fwcid",):
        z = norm_quantile(1.0 - alpha / 2.0)
    elif key in ("fpd", "av", "gst"):
        if beta is None:
            raise ValueError("fixed-power reference size requires beta")
        z = norm_quantile(1.0 - alpha) + norm_quantile(1.0 - beta)
    else:
        raise ValueError(f"unknown design kind: {kind!r}")
    return int(math.floor(z * z / (target * target * p * (1.0 - p)) + 0.5))
