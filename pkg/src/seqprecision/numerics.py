"""Shared numeric kernels: normal CDF/quantile, bracketing root-finder, 1-D minimizer.

Self-contained (math module only) so the same formulas can be reused inside
compiled kernels. Accuracy contracts: norm_cdf to 1e-12 absolute,
norm_quantile round-trips through norm_cdf to 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import BracketError, ConvergenceError

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ToleranceSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.max_iter < 1:
            raise ValueError("tolerances must be positive and max_iter >= 1")


DEFAULT_TOL = ToleranceSpec()


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"norm_cdf requires finite x, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


# Acklam's rational approximation for the inverse normal CDF (relative error
# ~1.15e-9), refined below by one Halley step to full double precision.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_quantile(q: float) -> float:
    """Inverse standard normal CDF on (0, 1)."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError(f"norm_quantile requires 0 < q < 1, got {q!r}")
    if q < _P_LOW:
        u = math.sqrt(-2.0 * math.log(q))
        x = ((((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4]) * u + _C[5])
             / ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0))
    elif q <= 1.0 - _P_LOW:
        u = q - 0.5
        r = u * u
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        u = math.sqrt(-2.0 * math.log(1.0 - q))
        x = -((((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4]) * u + _C[5])
              / ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0))
    # One Halley step against the erfc-based CDF.
    e = norm_cdf(x) - q
    u = e * _SQRT_2PI * math.exp(0.5 * x * x)
    x -= u / (1.0 + 0.5 * x * u)
    return x


def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: ToleranceSpec = DEFAULT_TOL) -> float:
    """Find a root of f on a bracketing interval by the Illinois method.

    Requires f(lo) * f(hi) <= 0. Terminates when |f(x)| <= abs_tol or the
    bracket width falls below max(abs_tol, rel_tol * |x|).
    """
    lo, hi = float(lo), float(hi)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketError(
            f"no sign change on [{lo:g}, {hi:g}]: f(lo)={flo:g}, f(hi)={fhi:g}")
    side = 0
    x = lo
    for _ in range(tol.max_iter):
        x = (lo * fhi - hi * flo) / (fhi - flo)
        # Guard against stagnation at an endpoint.
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        fx = f(x)
        if abs(fx) <= tol.abs_tol:
            return x
        if fx * flo < 0.0:
            hi, fhi = x, fx
            if side == -1:
                flo *= 0.5
            side = -1
        else:
            lo, flo = x, fx
            if side == 1:
                fhi *= 0.5
            side = 1
        if hi - lo <= max(tol.abs_tol, tol.rel_tol * abs(x)):
            return x
    raise ConvergenceError(f"find_root: no convergence in {tol.max_iter} iterations")


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def minimize_1d(f: Callable[[float], float], lo: float, hi: float,
                tol: ToleranceSpec = DEFAULT_TOL) -> float:
    """Golden-section minimum of a unimodal f on [lo, hi] (unimodality assumed)."""
    lo, hi = float(lo), float(hi)
    if hi < lo:
        lo, hi = hi, lo
    h = hi - lo
    c = lo + _INV_PHI2 * h
    d = lo + _INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(tol.max_iter):
        if h <= max(tol.abs_tol, tol.rel_tol * max(abs(lo), abs(hi), 1.0)):
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            h = hi - lo
            c = lo + _INV_PHI2 * h
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            h = hi - lo
            d = lo + _INV_PHI * h
            fd = f(d)
    else:
        raise ConvergenceError(f"minimize_1d: no convergence in {tol.max_iter} iterations")
    return 0.5 * (lo + hi)
