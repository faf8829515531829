"""Streaming per-arm moment accumulation and the derived two-arm estimators.

All variance-like quantities use divide-by-count normalization (no Bessel
correction). The estimator variance follows the convention that it is +inf
while either arm has at most one observation.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .errors import DataValidationError, UndefinedEstimateError

_COUNT, _MEAN, _M2, _M3, _M4 = range(5)


class ArmAccumulator:
    """One-pass accumulator for a single arm's first four central moments.

    Backed by a 5-slot float64 buffer ``[count, mean, m2, m3, m4]`` shared
    with the compiled kernels, where m2/m3/m4 are running sums of
    squared/cubed/fourth-power deviations from the running mean.
    """

    __slots__ = ("_buf", "_off")

    def __init__(self, _buf: np.ndarray | None = None, _off: int = 0):
        if _buf is None:
            _buf = np.zeros(5, dtype=np.float64)
            _off = 0
        self._buf = _buf
        self._off = _off

    @property
    def count(self) -> int:
        return int(self._buf[self._off + _COUNT])

    @property
    def mean(self) -> float:
        return float(self._buf[self._off + _MEAN])

    @property
    def m2(self) -> float:
        return float(self._buf[self._off + _M2])

    @property
    def m3(self) -> float:
        return float(self._buf[self._off + _M3])

    @property
    def m4(self) -> float:
        return float(self._buf[self._off + _M4])

    @property
    def variance(self) -> float:
        """Naive (divide-by-count) sample variance; 0.0 on a single point."""
        if self.count == 0:
            raise UndefinedEstimateError("variance of an empty accumulator")
        return self.m2 / self.count

    @property
    def fourth_moment(self) -> float:
        """Naive fourth central moment."""
        if self.count == 0:
            raise UndefinedEstimateError("fourth moment of an empty accumulator")
        return self.m4 / self.count

    def add(self, y: float) -> None:
        y = float(y)
        if not math.isfinite(y):
            raise DataValidationError(f"non-finite observation: {y!r}")
        _kernels.push(self._buf, self._off, y)

    def merge(self, other: "ArmAccumulator") -> None:
        """Fold another accumulator in, as if its stream had been appended."""
        na = float(self._buf[self._off + _COUNT])
        nb = float(other._buf[other._off + _COUNT])
        if nb == 0.0:
            return
        if na == 0.0:
            for i in range(5):
                self._buf[self._off + i] = other._buf[other._off + i]
            return
        a, b = self._buf, other._buf
        oa, ob = self._off, other._off
        n = na + nb
        delta = b[ob + _MEAN] - a[oa + _MEAN]
        d2 = delta * delta
        m2a, m2b = a[oa + _M2], b[ob + _M2]
        m3a, m3b = a[oa + _M3], b[ob + _M3]
        m4a, m4b = a[oa + _M4], b[ob + _M4]
        m4 = (m4a + m4b
              + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
              + 6.0 * d2 * (na * na * m2b + nb * nb * m2a) / (n * n)
              + 4.0 * delta * (na * m3b - nb * m3a) / n)
        m3 = (m3a + m3b
              + delta * d2 * na * nb * (na - nb) / (n * n)
              + 3.0 * delta * (na * m2b - nb * m2a) / n)
        m2 = m2a + m2b + d2 * na * nb / n
        a[oa + _COUNT] = n
        a[oa + _MEAN] += delta * nb / n
        a[oa + _M2] = m2
        a[oa + _M3] = m3
        a[oa + _M4] = m4

    def __repr__(self) -> str:
        return (f"ArmAccumulator(count={self.count}, mean={self.mean:.6g}, "
                f"m2={self.m2:.6g})")


class ExperimentState:
    """Streaming sufficient statistics for a two-arm experiment.

    Holds one :class:`ArmAccumulator` per arm as views into a single 10-slot
    buffer (the layout consumed by the compiled kernels). Plain value
    semantics: single writer per instance, `merge` supports parallel
    reduction over disjoint streams.
    """

    __slots__ = ("data",)

    def __init__(self):
        self.data = np.zeros(10, dtype=np.float64)

    @property
    def arm0(self) -> ArmAccumulator:
        return ArmAccumulator(self.data, _kernels.ARM0_OFFSET)

    @property
    def arm1(self) -> ArmAccumulator:
        return ArmAccumulator(self.data, _kernels.ARM1_OFFSET)

    @property
    def n(self) -> int:
        return int(self.data[0] + self.data[5])

    @property
    def n0(self) -> int:
        return int(self.data[0])

    @property
    def n1(self) -> int:
        return int(self.data[5])

    @property
    def p_hat(self) -> float:
        """Share of units assigned to arm 1."""
        n = self.n
        if n == 0:
            raise UndefinedEstimateError("p_hat of an empty state")
        return self.n1 / n

    def observe(self, w: int, y: float) -> "ExperimentState":
        """Fold one (arm, outcome) pair into the state; returns self."""
        if w not in (0, 1):
            raise DataValidationError(f"arm indicator must be 0 or 1, got {w!r}")
        y = float(y)
        if not math.isfinite(y):
            raise DataValidationError(f"non-finite outcome: {y!r}")
        _kernels.push(self.data, _kernels.ARM1_OFFSET if w else _kernels.ARM0_OFFSET, y)
        return self

    def merge(self, other: "ExperimentState") -> "ExperimentState":
        self.arm0.merge(other.arm0)
        self.arm1.merge(other.arm1)
        return self

    def copy(self) -> "ExperimentState":
        out = ExperimentState()
        out.data[:] = self.data
        return out

    def _require_both_arms(self, min_count: int = 1) -> None:
        if self.n0 < min_count or self.n1 < min_count:
            raise UndefinedEstimateError(
                f"need at least {min_count} observation(s) per arm "
                f"(have n0={self.n0}, n1={self.n1})")

    def diff_in_means(self) -> float:
        """Difference-in-means effect estimate, arm1 minus arm0."""
        self._require_both_arms()
        return self.arm1.mean - self.arm0.mean

    def pooled_variance(self) -> float:
        """Cross-weighted pooled variance (n0/n)*var1 + (n1/n)*var0."""
        self._require_both_arms()
        n = self.n
        return (self.n0 / n) * self.arm1.variance + (self.n1 / n) * self.arm0.variance

    def kappa(self) -> float:
        """1/n0 + 1/n1 = n/(n0*n1)."""
        self._require_both_arms()
        return self.n / (self.n0 * self.n1)

    def estimator_variance(self) -> float:
        """Variance estimate of the difference-in-means; +inf when an arm has <= 1 unit."""
        if self.n0 <= 1 or self.n1 <= 1:
            return math.inf
        return self.arm1.variance / self.n1 + self.arm0.variance / self.n0

    def influence_variance(self, z_center: str = "pooled",
                           weights: str = "plain") -> float:
        """Variance of the per-unit squared-deviation influence values.

        ``z_center`` selects the centering of the influence values: "pooled"
        subtracts the squared pooled variance (agrees with the explicit
        per-unit definition exactly at p_hat = 1/2), "sample_mean" subtracts
        the squared sample mean of the influence values. ``weights`` selects
        the plain squared deviations ("plain") or the assignment-ratio
        weighted form ("influence"), under which the two centerings coincide.
        Clamped at 0 when cancellation drives the value negative.
        """
        self._require_both_arms()
        p = self.p_hat
        q = 1.0 - p
        m41 = self.arm1.fourth_moment
        m40 = self.arm0.fourth_moment
        var1 = self.arm1.variance
        var0 = self.arm0.variance
        if weights == "plain":
            second = p * m41 + q * m40
            zbar = p * var1 + q * var0
        elif weights == "influence":
            second = (q * q / p) * m41 + (p * p / q) * m40
            zbar = q * var1 + p * var0  # equals the pooled variance exactly
        else:
            raise ValueError(f"unknown weights: {weights!r}")
        if z_center == "pooled":
            center = q * var1 + p * var0
        elif z_center == "sample_mean":
            center = zbar
        else:
            raise ValueError(f"unknown z_center: {z_center!r}")
        out = second - center * center
        return out if out > 0.0 else 0.0

    def __repr__(self) -> str:
        return f"ExperimentState(n0={self.n0}, n1={self.n1})"
