"""Data-generating processes: outcome distribution pairs, normalization and
effect constants, and variate generation.

Each process draws the raw outcome X from a named family, then emits
``y = scale_a * X + post_shift``. The scale is solved so that the pooled
variance of the scaled outcomes is exactly 1, which also normalizes the
variance of the effect estimate to 1/(n p (1-p)); effect constants are solved
so the scaled mean difference hits a target effect (default 0.2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConfigError
from .numerics import DEFAULT_TOL, find_root

FAMILIES = ("normal", "lognormal", "gamma")


@dataclass(frozen=True)
class DistSpec:
    """One scaled-and-shifted outcome distribution.

    ``param1``/``param2`` are (mean, sd) for normal, (log-mean, log-sd) for
    lognormal, (shape, scale) for gamma. The emitted value is
    ``scale_a * X + post_shift``.
    """
    family: str
    param1: float
    param2: float
    scale_a: float = 1.0
    post_shift: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family: {self.family!r}")
        # sd exactly 0 is allowed as a degenerate point mass
        if self.family == "normal" and self.param2 < 0:
            raise ConfigError(f"normal sd must be nonnegative, got {self.param2!r}")
        if self.family == "lognormal" and self.param2 <= 0:
            raise ConfigError(f"lognormal log-sd must be positive, got {self.param2!r}")
        if self.family == "gamma" and (self.param1 <= 0 or self.param2 <= 0):
            raise ConfigError(
                f"gamma shape and scale must be positive, got "
                f"({self.param1!r}, {self.param2!r})")
        if self.scale_a <= 0:
            raise ConfigError(f"scale_a must be positive, got {self.scale_a!r}")


def analytic_moments(dist: DistSpec) -> tuple[float, float]:
    """Mean and variance of the scaled-and-shifted outcome."""
    if dist.family == "normal":
        m, v = dist.param1, dist.param2 ** 2
    elif dist.family == "lognormal":
        s2 = dist.param2 ** 2
        m = math.exp(dist.param1 + s2 / 2.0)
        v = (math.exp(s2) - 1.0) * math.exp(2.0 * dist.param1 + s2)
    else:  # gamma
        m = dist.param1 * dist.param2
        v = dist.param1 * dist.param2 ** 2
    return dist.scale_a * m + dist.post_shift, dist.scale_a ** 2 * v


def solve_normalization(control: DistSpec, treated: DistSpec, p: float) -> float:
    """Common scale a with a^2 * ((1-p) V_treated + p V_control) = 1.

    Variances are taken from the specs as given (pass unscaled specs); the
    convention makes the pooled variance of the scaled outcomes exactly 1.
    """
    if not 0.0 < p < 1.0:
        raise ConfigError(f"p must be in (0, 1), got {p!r}")
    v0 = analytic_moments(control)[1]
    v1 = analytic_moments(treated)[1]
    if v0 <= 0 or v1 <= 0:
        raise ConfigError("both arms need positive variance")
    return 1.0 / math.sqrt((1.0 - p) * v1 + p * v0)


def solve_effect_constant(control: DistSpec,
                          make_treated: Callable[[float], DistSpec],
                          p: float, target_tau: float,
                          c_init: float = 1.0,
                          c_lower: float = -math.inf) -> float:
    """Distribution constant c with scaled effect a(c) * (E1(c) - E0) = target_tau.

    The normalization scale is re-solved at every candidate c. The bracket is
    grown geometrically from c_init (respecting c_lower, e.g. 0 for gamma
    parameters) until the effect gap changes sign.
    """

    def gap(c: float) -> float:
        treated = make_treated(c)
        a = solve_normalization(control, treated, p)
        e0 = analytic_moments(control)[0]
        e1 = analytic_moments(treated)[0]
        return a * (e1 - e0) + (treated.post_shift - control.post_shift) - target_tau

    lo = hi = float(c_init)
    flo = fhi = gap(c_init)
    step = 0.5
    for _ in range(80):
        if flo * fhi <= 0.0 and lo < hi:
            break
        lo = max(lo - step, c_lower + 1e-12) if math.isfinite(c_lower) else lo - step
        hi = hi + step
        flo, fhi = gap(lo), gap(hi)
        step *= 2.0
    else:
        raise ConfigError("could not bracket the effect constant")
    return find_root(gap, lo, hi, DEFAULT_TOL)


@dataclass(frozen=True)
class DgpSpec:
    """A potential-outcome distribution pair plus an assignment scheme.

    ``tau`` is the analytic scaled average treatment effect. Construction
    checks the unit-pooled-variance normalization.
    """
    id: int
    control: DistSpec
    treated: DistSpec
    p: float
    assignment: str = "bernoulli"
    tau: float = 0.0

    def __post_init__(self):
        if self.assignment not in ("bernoulli", "alternating"):
            raise ConfigError(f"unknown assignment: {self.assignment!r}")
        if not 0.0 < self.p < 1.0:
            raise ConfigError(f"p must be in (0, 1), got {self.p!r}")
        v0 = analytic_moments(self.control)[1]
        v1 = analytic_moments(self.treated)[1]
        norm = (1.0 - self.p) * v1 + self.p * v0
        # degenerate point-mass pairs (both variances 0) skip the unit check
        if norm != 0.0 and abs(norm - 1.0) > 1e-10:
            raise ConfigError(
                f"scaled pooled variance is {norm!r}, expected 1 (bad scale_a?)")
        e0 = analytic_moments(self.control)[0]
        e1 = analytic_moments(self.treated)[0]
        if abs((e1 - e0) - self.tau) > 1e-10:
            raise ConfigError(
                f"declared tau {self.tau!r} does not match analytic effect {e1 - e0!r}")


def _scaled_pair(control: DistSpec, treated: DistSpec, p: float) -> tuple[DistSpec, DistSpec, float]:
    a = solve_normalization(control, treated, p)
    return (replace(control, scale_a=a), replace(treated, scale_a=a), a)


def standard_dgp(dgp_id: int, p: float = 0.5, target_tau: float = 0.2,
                 assignment: str = "bernoulli") -> DgpSpec:
    """One of the eight studied processes, normalized and effect-calibrated.

    1: normal/normal, no effect          5: lognormal pair, log-mean constant
    2: lognormal/lognormal, no effect    6: gamma control, lognormal treated
    3: normal pair, mean shift           7: gamma pair, scale constant
    4: lognormal pair, post-scaling shift 8: gamma pair, shape constant
    """
    if dgp_id == 1:
        c0 = DistSpec("normal", 0.0, 1.0)
        c1 = DistSpec("normal", 0.0, 1.0)
    elif dgp_id == 2:
        c0 = DistSpec("lognormal", 0.0, 1.0)
        c1 = DistSpec("lognormal", 0.0, 1.0)
    elif dgp_id == 3:
        c0 = DistSpec("normal", 0.0, 1.0)
        c1 = DistSpec("normal", target_tau, 1.0)
    elif dgp_id == 4:
        c0 = DistSpec("lognormal", 0.0, 1.0)
        c1 = DistSpec("lognormal", 0.0, 1.0, post_shift=target_tau)
    elif dgp_id == 5:
        c0 = DistSpec("lognormal", 0.0, 1.0)
        c = solve_effect_constant(c0, lambda v: DistSpec("lognormal", v, 1.0),
                                  p, target_tau, c_init=0.0)
        c1 = DistSpec("lognormal", c, 1.0)
    elif dgp_id == 6:
        c0 = DistSpec("gamma", 1.0, 1.0)
        c = solve_effect_constant(c0, lambda v: DistSpec("lognormal", v, 0.75),
                                  p, target_tau, c_init=0.0)
        c1 = DistSpec("lognormal", c, 0.75)
    elif dgp_id == 7:
        c0 = DistSpec("gamma", 1.0, 1.0)
        c = solve_effect_constant(c0, lambda v: DistSpec("gamma", 1.0, v),
                                  p, target_tau, c_init=1.5, c_lower=0.0)
        c1 = DistSpec("gamma", 1.0, c)
    elif dgp_id == 8:
        c0 = DistSpec("gamma", 1.0, 1.0)
        c = solve_effect_constant(c0, lambda v: DistSpec("gamma", v, 1.0),
                                  p, target_tau, c_init=1.5, c_lower=0.0)
        c1 = DistSpec("gamma", c, 1.0)
    else:
        raise ConfigError(f"dgp id must be 1..8, got {dgp_id!r}")
    scaled0, scaled1, _ = _scaled_pair(c0, c1, p)
    e0 = analytic_moments(scaled0)[0]
    e1 = analytic_moments(scaled1)[0]
    return DgpSpec(id=dgp_id, control=scaled0, treated=scaled1, p=p,
                   assignment=assignment, tau=e1 - e0)


def custom_dgp(control: DistSpec, treated: DistSpec, p: float = 0.5,
               assignment: str = "bernoulli", dgp_id: int = 0) -> DgpSpec:
    """Normalize an arbitrary distribution pair into a usable process."""
    scaled0, scaled1, _ = _scaled_pair(control, treated, p)
    e0 = analytic_moments(scaled0)[0]
    e1 = analytic_moments(scaled1)[0]
    return DgpSpec(id=dgp_id, control=scaled0, treated=scaled1, p=p,
                   assignment=assignment, tau=e1 - e0)


def _draw(dist: DistSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    if dist.family == "normal":
        x = dist.param1 + dist.param2 * rng.standard_normal(size)
    elif dist.family == "lognormal":
        x = np.exp(dist.param1 + dist.param2 * rng.standard_normal(size))
    else:
        x = dist.param2 * rng.standard_gamma(dist.param1, size)
    return dist.scale_a * x + dist.post_shift


class DgpStream:
    """Sequential unit sampler for one replication.

    Owns its rng; draw order per batch is fixed (assignments, then treated
    outcomes, then control outcomes) so a given seed yields one stream
    regardless of batch sizes chosen by the caller... with the caveat that
    batch boundaries do shift the rng call pattern, so callers needing exact
    reproducibility must also fix their batch schedule.
    """

    __slots__ = ("dgp", "rng", "position")

    def __init__(self, dgp: DgpSpec, rng: np.random.Generator):
        self.dgp = dgp
        self.rng = rng
        self.position = 0

    def draw_batch(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        """(arm indicators, outcomes) for the next `size` units."""
        if self.dgp.assignment == "bernoulli":
            ws = (self.rng.random(size) < self.dgp.p).astype(np.int64)
        else:
            idx = self.position + np.arange(size, dtype=np.int64)
            ws = (idx % 2 == 0).astype(np.int64)  # alternating starts treated
        ys = np.empty(size, dtype=np.float64)
        treated_mask = ws == 1
        k1 = int(treated_mask.sum())
        if k1:
            ys[treated_mask] = _draw(self.dgp.treated, k1, self.rng)
        if size - k1:
            ys[~treated_mask] = _draw(self.dgp.control, size - k1, self.rng)
        self.position += size
        return ws, ys

    def draw(self) -> tuple[int, float]:
        ws, ys = self.draw_batch(1)
        return int(ws[0]), float(ys[0])


def sample_unit(dgp: DgpSpec, rng: np.random.Generator) -> tuple[int, float]:
    """One (arm, outcome) draw; for alternating assignment use DgpStream."""
    return DgpStream(dgp, rng).draw()
