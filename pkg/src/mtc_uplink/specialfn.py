"""Scalar special functions: Gaussian Q-function, its inverse, and the
Erlang law of the post-combining channel gain.

The Erlang lower tail is evaluated from the ascending series below the mode
and from the (finite, cancellation-free) upper sum above it, so values down
to 1e-300 keep full relative precision.  Anything smaller is treated as an
exact zero.
"""

from __future__ import annotations

import math
import operator

import numpy as np

__all__ = [
    "DomainError",
    "LogProb",
    "q_function",
    "log_q_function",
    "q_inverse",
    "erlang_pdf",
    "channel_cdf",
    "log_channel_cdf",
    "log_channel_cdf_array",
]

LogProb = float
"""Natural log of a probability; ``-inf`` encodes probability zero."""

TINY_PROB = 1e-300
LOG_TINY = math.log(TINY_PROB)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SERIES_RTOL = 1e-17


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


def _check_order(n_t) -> int:
    try:
        n = operator.index(n_t)
    except TypeError:
        raise DomainError(f"antenna count must be an integer, got {n_t!r}") from None
    if n < 1:
        raise DomainError(f"antenna count must be >= 1, got {n}")
    return n


# --------------------------------------------------------------------------
# Gaussian tail
# --------------------------------------------------------------------------

def q_function(x: float) -> float:
    """Gaussian tail probability ``Q(x) = P{Z > x}`` for standard normal Z."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"q_function needs a finite argument, got {x}")
    return 0.5 * math.erfc(x / _SQRT2)


def log_q_function(x: float) -> float:
    """``ln Q(x)``, finite for every finite x."""
    q = 0.5 * math.erfc(x / _SQRT2)
    if q > 0.0:
        return math.log(q)
    # erfc underflow (x > ~38): continued-fraction tail of the Mills ratio
    r = 1.0 / (x + 1.0 / (x + 2.0 / (x + 3.0 / (x + 4.0 / x))))
    return -0.5 * x * x + math.log(_INV_SQRT_2PI * r)


def q_inverse(p: float) -> float:
    """Return x with ``Q(x) = p``.

    Bisection brackets the root to ~1e-3, then Newton steps on
    ``ln Q(x) - ln p`` polish it.  Newton steps that leave the bracket are
    replaced by bisection, so the iteration cannot diverge.
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"q_inverse needs 0 < p < 1, got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -q_inverse(1.0 - p)

    lo, hi = 0.0, 1.0
    while q_function(hi) > p:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if q_function(mid) > p:
            lo = mid
        else:
            hi = mid

    log_p = math.log(p)
    x = 0.5 * (lo + hi)
    for _ in range(50):
        log_q = log_q_function(x)
        resid = log_q - log_p
        if resid > 0.0:
            lo = x
        elif resid < 0.0:
            hi = x
        else:
            break
        # d/dx ln Q = -phi(x)/Q(x)
        slope = -_INV_SQRT_2PI * math.exp(-0.5 * x * x - log_q)
        step = -resid / slope
        x_new = x + step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4e-16 * max(1.0, abs(x)):
            x = x_new
            break
        x = x_new
    return x


# --------------------------------------------------------------------------
# Erlang(n_t, 1) channel gain
# --------------------------------------------------------------------------

def erlang_pdf(x: float, n_t: int) -> float:
    """Density ``x^(n_t-1) e^-x / (n_t-1)!`` of the channel gain."""
    n = _check_order(n_t)
    x = float(x)
    if x < 0.0:
        raise DomainError(f"gain must be >= 0, got {x}")
    if x == 0.0:
        return 1.0 if n == 1 else 0.0
    return math.exp((n - 1) * math.log(x) - x - math.lgamma(n))


def _log_lower_series(x: float, n: int) -> float:
    # e^-x sum_{k>=n} x^k/k! = e^-x x^n/n! * sum_j x^j / ((n+1)...(n+j))
    log_prefix = -x + n * math.log(x) - math.lgamma(n + 1)
    if log_prefix < LOG_TINY - 50.0:
        return -math.inf
    term = 1.0
    total = 1.0
    k = n
    while True:
        k += 1
        term *= x / k
        total += term
        if term < _SERIES_RTOL * total:
            break
    return log_prefix + math.log(total)


def _upper_sum(x: float, n: int) -> float:
    # e^-x sum_{k<n} x^k/k!, summed downward from k = n-1; ratios j/x < 1 for x >= n
    log_top = -x + (n - 1) * math.log(x) - math.lgamma(n)
    if log_top < LOG_TINY - 50.0:
        return 0.0
    term = 1.0
    total = 1.0
    for j in range(n - 1, 0, -1):
        term *= j / x
        total += term
        if term < _SERIES_RTOL * total:
            break
    return math.exp(log_top) * total


def _log_cdf(x: float, n: int) -> float:
    if x <= 0.0:
        return -math.inf
    if x == math.inf:
        return 0.0
    if x < n:
        r = _log_lower_series(x, n)
        return r if r >= LOG_TINY else -math.inf
    return math.log1p(-_upper_sum(x, n))


def channel_cdf(x: float, n_t: int) -> float:
    """``P{g < x}`` for g ~ Erlang(n_t, 1).

    >>> round(channel_cdf(1.0, 2), 10)
    0.2642411177
    """
    n = _check_order(n_t)
    x = float(x)
    if not x >= 0.0:
        raise DomainError(f"gain must be >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x == math.inf:
        return 1.0
    if x < n:
        r = _log_lower_series(x, n)
        return math.exp(r) if r >= LOG_TINY else 0.0
    return 1.0 - _upper_sum(x, n)


def log_channel_cdf(x: float, n_t: int) -> LogProb:
    """Natural log of :func:`channel_cdf`; ``-inf`` below 1e-300."""
    n = _check_order(n_t)
    x = float(x)
    if not x >= 0.0:
        raise DomainError(f"gain must be >= 0, got {x}")
    return _log_cdf(x, n)


def log_channel_cdf_array(x: np.ndarray, n_t: int) -> np.ndarray:
    """Vectorised :func:`log_channel_cdf` over a nonnegative array."""
    n = _check_order(n_t)
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0.0)):
        raise DomainError("gain must be >= 0")
    out = np.full(x.shape, -np.inf)

    low = (x > 0.0) & (x < n)
    if np.any(low):
        xl = x[low]
        log_prefix = -xl + n * np.log(xl) - math.lgamma(n + 1)
        term = np.ones_like(xl)
        total = np.ones_like(xl)
        k = n
        while True:
            k += 1
            term *= xl / k
            total += term
            if np.all(term < _SERIES_RTOL * total):
                break
        r = log_prefix + np.log(total)
        out[low] = np.where(r >= LOG_TINY, r, -np.inf)

    out[x == np.inf] = 0.0
    high = (x >= n) & (x < np.inf)
    if np.any(high):
        xh = x[high]
        log_top = -xh + (n - 1) * np.log(xh) - math.lgamma(n)
        term = np.ones_like(xh)
        total = np.ones_like(xh)
        for j in range(n - 1, 0, -1):
            term *= j / xh
            total += term
            if np.all(term < _SERIES_RTOL * total):
                break
        out[high] = np.log1p(-np.exp(log_top) * total)
    return out
