r"""Bessel functions of the first kind, :math:`J_m(x)`, for integer orders.

Small arguments use the ascending power series directly; everything else
goes through Miller's downward recurrence

.. math::
    J_{k-1}(x) = \frac{2k}{x} J_k(x) - J_{k+1}(x)

started well above both the highest requested order and ``x``, and then
normalised with the sum rule :math:`J_0 + 2\sum_{k\ge1} J_{2k} = 1`.
Downward recurrence is the stable direction for the minimal solution, so
the result keeps full absolute accuracy for high orders where the upward
recurrence would blow up.
"""

import math

import numpy as np

from .errors import DomainError

MAX_ORDER = 200
MAX_ARG = 1.0e4
# Table evaluation is used for sideband sums whose truncation grows with x.
MAX_TABLE_ORDER = 12000

_SERIES_CUTOFF = 1.0
_RESCALE_AT = 1.0e250


def _check_args(max_order, x, order_limit):
    if int(max_order) != max_order or max_order < 0:
        raise DomainError(f"order must be a non-negative integer, got {max_order!r}")
    if max_order > order_limit:
        raise DomainError(f"order {max_order} exceeds the supported maximum {order_limit}")
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite")
    if np.any(x < 0.0) or np.any(x > MAX_ARG):
        raise DomainError(f"Bessel argument must lie in [0, {MAX_ARG:g}]")


def _series_table(max_order, x):
    """Ascending series, only used for 0 < x < 1 where no cancellation occurs."""
    m = np.arange(max_order + 1, dtype=float)[:, None]
    half = 0.5 * x[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_lead = m * np.log(half) - np.array([math.lgamma(k + 1.0) for k in range(max_order + 1)])[:, None]
    term = np.exp(log_lead)
    # subnormal x underflows half to zero, and 0 * log(0) is nan
    term[0] = 1.0
    term = np.nan_to_num(term, nan=0.0)
    total = term.copy()
    q = -half * half
    for k in range(1, 30):
        term = term * q / (k * (m + k))
        total += term
    return total


def _miller_table(max_order, x):
    n = x.size
    top = max(max_order, float(x.max()))
    start = int(top + math.sqrt(60.0 * top) + 20)
    start += start % 2

    out = np.zeros((max_order + 1, n))
    two_over_x = 2.0 / x
    j_next = np.zeros(n)
    j = np.ones(n)
    norm = np.zeros(n)
    for k in range(start, 0, -1):
        j_prev = k * two_over_x * j - j_next
        j_next, j = j, j_prev
        low = k - 1
        if low <= max_order:
            out[low] = j
        if low > 0 and low % 2 == 0:
            norm += 2.0 * j
        big = np.abs(j) > _RESCALE_AT
        if big.any():
            scale = np.where(big, 1.0 / _RESCALE_AT, 1.0)
            j *= scale
            j_next *= scale
            norm *= scale
            out *= scale[None, :]
    norm += j
    return out / norm[None, :]


def bessel_j_table(max_order, x):
    """Return ``J_m(x)`` for ``m = 0..max_order`` as an array of shape
    ``(max_order + 1, len(x))``.

    ``x`` may be a scalar or a 1-D array of non-negative arguments.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DomainError("Bessel argument must be a scalar or a 1-D array")
    _check_args(max_order, x, MAX_TABLE_ORDER)

    out = np.zeros((int(max_order) + 1, x.size))
    zero = x == 0.0
    small = (x > 0.0) & (x < _SERIES_CUTOFF)
    large = x >= _SERIES_CUTOFF
    out[0, zero] = 1.0
    if small.any():
        out[:, small] = _series_table(int(max_order), x[small])
    if large.any():
        out[:, large] = _miller_table(int(max_order), x[large])
    return out


def bessel_j(order, x):
    """J_order(x) for an integer ``0 <= order <= 200`` and ``0 <= x <= 1e4``.

    Negative orders are not accepted here; use ``J_{-m} = (-1)^m J_m``.
    """
    x = float(x)
    _check_args(order, np.array([x]), MAX_ORDER)
    return float(bessel_j_table(int(order), x)[int(order), 0])
