"""Hot numeric kernels for per-observation monitoring.

Every function below is JIT-compiled with numba's ``@njit`` when numba is
importable. Setting the environment variable ``SEQPRECISION_DISABLE_NUMBA=1``
selects the uncompiled path: the exact same Python/numpy code, just slower.
``benchmarks/bench_kernels.py`` times the two paths against each other.

State vector layout (float64, length 10):

    [n0, mean0, m2_0, m3_0, m4_0, n1, mean1, m2_1, m3_1, m4_1]

where ``m2``/``m3``/``m4`` are running sums of squared/cubed/fourth-power
deviations from the running mean (divide-by-count normalization throughout).
"""

from __future__ import annotations

import math
import os

DISABLE_ENV_VAR = "SEQPRECISION_DISABLE_NUMBA"


def _numba_enabled() -> bool:
    if os.environ.get(DISABLE_ENV_VAR, "").strip().lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()

if NUMBA_ENABLED:
    from numba import njit

    def _compiled(fn):
        return njit(cache=True, nogil=True)(fn)

else:

    def _compiled(fn):
        return fn


# Rule kind codes (mirrored by rules.KIND_CODES).
FWCID_NAIVE = 0
FWCID_CONSERVATIVE = 1
FWCID_ALWAYS_VALID = 2
FPD_NAIVE = 3
FPD_CONSERVATIVE = 4
AV_TEST = 5
GST = 6

# Stop reason codes.
REASON_NONE = 0
REASON_THRESHOLD = 1
REASON_NMAX = 2

ARM0_OFFSET = 0
ARM1_OFFSET = 5


@_compiled
def push(state, off, y):
    """Fold one observation into the arm accumulator starting at ``off``."""
    n = state[off] + 1.0
    delta = y - state[off + 1]
    dn = delta / n
    dn2 = dn * dn
    term = delta * dn * (n - 1.0)
    m2 = state[off + 2]
    m3 = state[off + 3]
    state[off] = n
    state[off + 1] += dn
    state[off + 4] += term * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * m2 - 4.0 * dn * m3
    state[off + 3] += term * dn * (n - 2.0) - 3.0 * dn * m2
    state[off + 2] += term


@_compiled
def radius_one_sided(n, rho, alpha):
    """One-sided (upper) confidence-sequence boundary radius at sample size n."""
    r2 = rho * rho
    q = n * r2 + 1.0
    return math.sqrt(2.0 * q / (n * n * r2) * math.log(1.0 + math.sqrt(q) / (2.0 * alpha)))


@_compiled
def radius_two_sided(n, rho, alpha):
    """Two-sided (centered) confidence-sequence boundary radius at sample size n."""
    r2 = rho * rho
    q = n * r2 + 1.0
    return math.sqrt(2.0 * q / (n * n * r2) * math.log(math.sqrt(q) / alpha))


@_compiled
def halfwidth_scale_sq(state):
    """Squared empirical scale of the anytime-valid interval (clamped at 0)."""
    n0 = state[0]
    n1 = state[5]
    n = n0 + n1
    p1 = n1 / n
    var0 = state[2] / n0
    var1 = state[7] / n1
    mean0 = state[1]
    mean1 = state[6]
    rad = (var1 + mean1 * mean1) / p1 + (var0 + mean0 * mean0) / (1.0 - p1)
    rad -= (mean1 - mean0) * (mean1 - mean0)
    if rad < 0.0:
        rad = 0.0
    return rad


@_compiled
def pooled_upper_bound(state, rho, alpha_c):
    """Upper confidence-sequence bound for the pooled variance."""
    n0 = state[0]
    n1 = state[5]
    n = n0 + n1
    p1 = n1 / n
    var0 = state[2] / n0
    var1 = state[7] / n1
    pooled = (1.0 - p1) * var1 + p1 * var0
    vz = p1 * (state[9] / n1) + (1.0 - p1) * (state[4] / n0) - pooled * pooled
    if vz < 0.0:
        vz = 0.0
    return pooled + math.sqrt(vz) * radius_one_sided(n, rho, alpha_c)


@_compiled
def rule_value(kind, state, thr, rho, alpha_cs, tau_h0, direction):
    """Monitored statistic and its limit for non-GST kinds; stop iff value <= limit.

    ``thr`` is the variance threshold for FWCID/FPD kinds and d**2 for the
    always-valid FWCID kind. ``alpha_cs`` is the confidence-sequence level
    (alpha_c for conservative kinds, alpha for the anytime-valid kinds).
    """
    n0 = state[0]
    n1 = state[5]
    n = n0 + n1
    if kind == 0 or kind == 3:
        return state[7] / (n1 * n1) + state[2] / (n0 * n0), thr
    if kind == 1 or kind == 4:
        ub = pooled_upper_bound(state, rho, alpha_cs)
        return ub * n / (n0 * n1), thr
    if kind == 2:
        psi = radius_two_sided(n, rho, alpha_cs)
        return halfwidth_scale_sq(state) * psi * psi, thr
    # kind == 5: anytime-valid test, stop-and-reject on significance
    vn = math.sqrt(halfwidth_scale_sq(state))
    tau = state[6] - state[1]
    return -direction * (tau - tau_h0), -vn * radius_one_sided(n, rho, alpha_cs)


@_compiled
def z_statistic(state, tau_h0, direction):
    """Directional z-statistic of the effect estimate against tau_h0."""
    n0 = state[0]
    n1 = state[5]
    var_tau = state[7] / (n1 * n1) + state[2] / (n0 * n0)
    diff = direction * (state[6] - state[1] - tau_h0)
    if var_tau <= 0.0:
        if diff > 0.0:
            return math.inf
        if diff < 0.0:
            return -math.inf
        return 0.0
    return diff / math.sqrt(var_tau)


@_compiled
def consume(state, ws, ys, kind, thr, rho, alpha_cs, tau_h0, direction,
            n_max, min_per_arm, looks, bounds, look_ptr):
    """Stream a batch of (arm, outcome) pairs, checking the rule after each unit.

    Returns ``(index, reason, look_ptr)`` where ``index`` is the batch position
    at which sampling stopped (-1 if the batch was exhausted). The threshold
    check runs before the n_max check, so a threshold crossing at n == n_max
    is reported as a threshold stop.
    """
    for i in range(ws.shape[0]):
        if ws[i] == 1:
            push(state, 5, ys[i])
        else:
            push(state, 0, ys[i])
        n0 = state[0]
        n1 = state[5]
        n = n0 + n1
        if n0 >= min_per_arm and n1 >= min_per_arm:
            if kind == 6:
                while look_ptr < looks.shape[0] and looks[look_ptr] < n:
                    look_ptr += 1
                if look_ptr < looks.shape[0] and looks[look_ptr] == n:
                    if z_statistic(state, tau_h0, direction) >= bounds[look_ptr]:
                        return i, 1, look_ptr
                    look_ptr += 1
            else:
                value, limit = rule_value(kind, state, thr, rho, alpha_cs,
                                          tau_h0, direction)
                if value <= limit:
                    return i, 1, look_ptr
        if n_max > 0.0 and n >= n_max:
            return i, 2, look_ptr
    return -1, 0, look_ptr
