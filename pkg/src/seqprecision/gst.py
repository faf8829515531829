"""Group-sequential boundaries under quadratic alpha spending.

Boundaries are computed by the standard recursion on the sub-density of the
standardized partial-sum statistic: keep the non-crossing sub-density on a
uniform grid, carry it from look to look by Gaussian-kernel convolution with
increment variance equal to the information-fraction difference, and solve
each critical value so the per-look crossing probability matches the spending
increment. Quadrature is trapezoidal with Euler-Maclaurin endpoint
corrections plus local-cubic handling of partial cells, giving O(h^4)
accuracy; the sub-density is re-gridded onto [-halfwidth, z_k] after each
look so truncation points are exact grid endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConvergenceError

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_PROB_TOL = 1e-8  # tolerance on each look's crossing probability
_Z_TOL = 1e-9  # bisection width on the critical value
_MAX_GRID = 4096


def spend(n: int, n_max: int, alpha: float) -> float:
    """Cumulative type-I error budget spent by sample size n: alpha*(n/n_max)^2."""
    if not 1 <= n <= n_max:
        raise ValueError(f"n must be in [1, n_max={n_max}], got {n!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    f = n / n_max
    return alpha * f * f


@dataclass(frozen=True)
class GstPlan:
    """Looks, spending targets, and critical values of one group-sequential design."""
    n_max: int
    alpha: float
    looks: np.ndarray  # ascending int64 sample sizes, last == n_max
    boundaries: np.ndarray  # critical z per look
    spend_increments: np.ndarray  # targeted per-look crossing probabilities
    crossing_probs: np.ndarray  # achieved per-look crossing probabilities
    grid_points: int
    grid_halfwidth: float
    look_set: frozenset = field(repr=False, default=frozenset())

    @property
    def cumulative_alpha(self) -> np.ndarray:
        return np.cumsum(self.spend_increments)


def default_looks(n_max: int, max_looks: int = 50) -> np.ndarray:
    """Equally spaced look schedule with at most max_looks looks, ending at n_max."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max!r}")
    k = min(n_max, max_looks)
    looks = np.unique(np.round(np.arange(1, k + 1) * (n_max / k)).astype(np.int64))
    looks[-1] = n_max
    return looks


def every_n_looks(n_max: int) -> np.ndarray:
    """A look at every sample size (continuous monitoring)."""
    return np.arange(1, n_max + 1, dtype=np.int64)


def _edge_derivatives(vals: np.ndarray, h: float) -> tuple[float, float]:
    """Third-order one-sided first derivatives at both grid ends."""
    d_lo = (-11.0 * vals[0] + 18.0 * vals[1] - 9.0 * vals[2] + 2.0 * vals[3]) / (6.0 * h)
    d_hi = (11.0 * vals[-1] - 18.0 * vals[-2] + 9.0 * vals[-3] - 2.0 * vals[-4]) / (6.0 * h)
    return d_lo, d_hi


def _full_integral(vals: np.ndarray, h: float) -> float:
    """Corrected trapezoid over the whole grid."""
    t = h * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
    d_lo, d_hi = _edge_derivatives(vals, h)
    return t + h * h / 12.0 * (d_lo - d_hi)


def _cubic_coeffs(y0, y1, y2, y3):
    """Coefficients of the cubic through (0,y0)..(3,y3) in local coordinates."""
    a0 = y0
    a1 = (-11.0 * y0 + 18.0 * y1 - 9.0 * y2 + 2.0 * y3) / 6.0
    a2 = (2.0 * y0 - 5.0 * y1 + 4.0 * y2 - y3) / 2.0
    a3 = (-y0 + 3.0 * y1 - 3.0 * y2 + y3) / 6.0
    return a0, a1, a2, a3


def _partial_integral(vals: np.ndarray, lo: float, h: float, z: float) -> float:
    """Integral of the sampled function from the grid start to z (z inside the grid)."""
    g = vals.shape[0]
    pos = (z - lo) / h
    if pos <= 0.0:
        return 0.0
    if pos >= g - 1:
        return _full_integral(vals, h)
    j = int(pos)
    out = 0.0
    if j > 0:
        out = h * (vals[: j + 1].sum() - 0.5 * (vals[0] + vals[j]))
        d_lo, _ = _edge_derivatives(vals, h)
        if 1 <= j <= g - 2:
            d_j = (vals[j + 1] - vals[j - 1]) / (2.0 * h)
        else:
            d_j = (vals[j] - vals[j - 1]) / h
        out += h * h / 12.0 * (d_lo - d_j)
    # Partial cell [x_j, z] via the local cubic on the 4-node window.
    jw = min(max(j - 1, 0), g - 4)
    a0, a1, a2, a3 = _cubic_coeffs(vals[jw], vals[jw + 1], vals[jw + 2], vals[jw + 3])
    ua, ub = float(j - jw), pos - jw
    out += h * (a0 * (ub - ua)
                + a1 * (ub ** 2 - ua ** 2) / 2.0
                + a2 * (ub ** 3 - ua ** 3) / 3.0
                + a3 * (ub ** 4 - ua ** 4) / 4.0)
    return out


def _cubic_interp(vals: np.ndarray, lo: float, h: float, xq: np.ndarray) -> np.ndarray:
    """Local-cubic interpolation of grid samples at query points inside the grid."""
    g = vals.shape[0]
    pos = (xq - lo) / h
    j = np.clip(pos.astype(np.int64), 0, g - 2)
    jw = np.clip(j - 1, 0, g - 4)
    u = pos - jw
    y0, y1, y2, y3 = vals[jw], vals[jw + 1], vals[jw + 2], vals[jw + 3]
    a0, a1, a2, a3 = _cubic_coeffs(y0, y1, y2, y3)
    return ((a3 * u + a2) * u + a1) * u + a0


def _propagate(g_vals: np.ndarray, g_lo: float, g_h: float, t_src: float,
               t_dst: float, target_grid: np.ndarray) -> np.ndarray:
    """Carry a truncated sub-density of Z_{t_src} to the Z_{t_dst} scale.

    Computes f(y) = sqrt(t_dst/dt) * integral g(x) * pdf((y*sqrt(t_dst) -
    x*sqrt(t_src)) / sqrt(dt)) dx over the source grid, with endpoint
    corrections for the truncation at the grid's upper end.
    """
    dt = t_dst - t_src
    s_src, s_dst = math.sqrt(t_src), math.sqrt(t_dst)
    sd = math.sqrt(dt)
    x = g_lo + g_h * np.arange(g_vals.shape[0])
    u = (target_grid[:, None] * s_dst - x[None, :] * s_src) / sd
    kern = np.exp(-0.5 * u * u) * (s_dst / (sd * _SQRT_2PI))
    w = np.full(g_vals.shape[0], g_h)
    w[0] = w[-1] = 0.5 * g_h
    out = kern @ (w * g_vals)
    # Euler-Maclaurin endpoint correction: d/dx [g(x) kern(y, x)] at both ends,
    # with d/dx kern = kern * u * s_src/sd.
    dg_lo, dg_hi = _edge_derivatives(g_vals, g_h)
    dkern = kern * u * (s_src / sd)
    corr_lo = dg_lo * kern[:, 0] + g_vals[0] * dkern[:, 0]
    corr_hi = dg_hi * kern[:, -1] + g_vals[-1] * dkern[:, -1]
    out += g_h * g_h / 12.0 * (corr_lo - corr_hi)
    return out


def compute_boundaries(looks, n_max: int, alpha: float, grid_points: int = 512,
                       grid_halfwidth: float = 8.0) -> GstPlan:
    """Critical z-values such that each look's null crossing probability equals
    its quadratic-spending increment."""
    looks = np.asarray(looks, dtype=np.int64)
    if looks.ndim != 1 or looks.shape[0] == 0:
        raise ConfigError("looks must be a nonempty 1-D sequence")
    if np.any(np.diff(looks) <= 0):
        raise ConfigError("looks must be strictly increasing")
    if looks[0] < 1 or looks[-1] != n_max:
        raise ConfigError("looks must start at >= 1 and end exactly at n_max")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha!r}")
    if grid_points < 64:
        raise ConfigError(f"grid_points must be >= 64, got {grid_points!r}")
    if grid_halfwidth < 4.0:
        raise ConfigError(f"grid_halfwidth must be >= 4, got {grid_halfwidth!r}")

    t = looks / float(n_max)
    cum = alpha * t * t
    incs = np.diff(cum, prepend=0.0)

    # The convolution kernel must be resolved by the grid; widen it for dense
    # look schedules where increments are narrow on the z scale.
    min_sd = math.sqrt(float(np.min(np.diff(t, prepend=0.0)[1:]))) if t.shape[0] > 1 else 1.0
    g = grid_points
    if t.shape[0] > 1:
        needed = int(math.ceil(2.0 * grid_halfwidth / (min_sd / 2.5))) + 1
        g = max(g, needed)
    if g > _MAX_GRID:
        raise ConfigError(
            f"look schedule needs {g} grid points (> {_MAX_GRID}); "
            f"use fewer looks or a larger n_max spacing")

    hw = float(grid_halfwidth)
    full_grid = np.linspace(-hw, hw, g)
    h_full = full_grid[1] - full_grid[0]
    f = np.exp(-0.5 * full_grid ** 2) / _SQRT_2PI  # density of the first look's statistic

    boundaries = np.empty(looks.shape[0])
    achieved = np.empty(looks.shape[0])
    src_lo, src_h, src_vals, src_t = -hw, h_full, f, t[0]
    for k in range(looks.shape[0]):
        if k > 0:
            src_vals = _propagate(src_vals, src_lo, src_h, src_t, t[k], full_grid)
            np.maximum(src_vals, 0.0, out=src_vals)
            src_lo, src_h, src_t = -hw, h_full, t[k]
        total = _full_integral(src_vals, src_h)
        target = float(incs[k])

        lo, hi = -hw, hw
        z = 0.5 * (lo + hi)
        while hi - lo > _Z_TOL:
            z = 0.5 * (lo + hi)
            crossing = total - _partial_integral(src_vals, src_lo, src_h, z)
            if crossing > target:
                lo = z
            else:
                hi = z
        z = 0.5 * (lo + hi)
        crossing = total - _partial_integral(src_vals, src_lo, src_h, z)
        if abs(crossing - target) > _PROB_TOL:
            raise ConvergenceError(
                f"look {k}: crossing probability {crossing:.3e} misses target "
                f"{target:.3e} beyond tolerance {_PROB_TOL:g}")
        boundaries[k] = z
        achieved[k] = crossing
        if k < looks.shape[0] - 1:
            trunc_grid = np.linspace(-hw, z, g)
            src_vals = np.maximum(
                _cubic_interp(src_vals, src_lo, src_h, trunc_grid), 0.0)
            src_lo, src_h = -hw, trunc_grid[1] - trunc_grid[0]

    if abs(float(np.sum(incs)) - alpha) > 1e-6:
        raise ConvergenceError("cumulative spend does not exhaust alpha")
    return GstPlan(n_max=int(n_max), alpha=float(alpha), looks=looks,
                   boundaries=boundaries, spend_increments=incs,
                   crossing_probs=achieved, grid_points=g,
                   grid_halfwidth=hw,
                   look_set=frozenset(int(v) for v in looks))


def boundary_at(plan: GstPlan, n: int) -> float:
    """Critical value in force at sample size n: the upcoming look's boundary."""
    if n > plan.n_max:
        raise ValueError(f"n={n} beyond n_max={plan.n_max}")
    idx = int(np.searchsorted(plan.looks, n, side="left"))
    return float(plan.boundaries[idx])
