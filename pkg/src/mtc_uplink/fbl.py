"""Short-packet rate model: finite-blocklength achievable bits per frame,
the Shannon limit, and the channel-gain threshold for delivering a packet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .specialfn import DomainError, q_inverse

__all__ = [
    "LinkBudget",
    "achievable_bits",
    "shannon_bits",
    "gain_threshold",
    "gain_threshold_z",
]

_LN2 = math.log(2.0)
_EXP_OVERFLOW = 709.0


@dataclass(frozen=True)
class LinkBudget:
    """Large-scale link state of one device.

    Attributes:
        alpha: average channel gain (linear).
        p_max: transmit power in W.
        n0: single-sided noise spectral density in W/Hz.
        t_f: frame duration in s.
        u_bits: packet size in bits.
    """

    alpha: float
    p_max: float
    n0: float
    t_f: float
    u_bits: float

    def __post_init__(self):
        for name in ("alpha", "p_max", "n0", "t_f", "u_bits"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"LinkBudget.{name} must be finite and > 0, got {v!r}")

    @property
    def noise_scale(self) -> float:
        """``N0 / (alpha * P)``: gain-to-SNR conversion per Hz."""
        return self.n0 / (self.alpha * self.p_max)

    def snr_at(self, g: float, bandwidth: float) -> float:
        return self.alpha * self.p_max * g / (self.n0 * bandwidth)


def _check_positive(name, v):
    if not v > 0.0:
        raise DomainError(f"{name} must be > 0, got {v!r}")


def shannon_bits(lb: LinkBudget, g: float, bandwidth: float) -> float:
    """Bits per frame at the Shannon limit, ``T_f B log2(1 + snr)``."""
    _check_positive("gain", g)
    _check_positive("bandwidth", bandwidth)
    snr = lb.snr_at(g, bandwidth)
    return lb.t_f * bandwidth / _LN2 * math.log1p(snr)


def achievable_bits(lb: LinkBudget, g: float, bandwidth: float, eps: float) -> float:
    """Bits deliverable in one frame at block error probability ``eps``.

    Normal approximation with dispersion ``V = 1 - (1 + snr)^-2``.  The raw
    value is returned, so it goes negative when the dispersion penalty
    exceeds capacity.
    """
    _check_positive("gain", g)
    _check_positive("bandwidth", bandwidth)
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    snr = lb.snr_at(g, bandwidth)
    blocklength = lb.t_f * bandwidth
    dispersion = -math.expm1(-2.0 * math.log1p(snr))
    penalty = math.sqrt(dispersion / blocklength) * q_inverse(eps)
    return blocklength / _LN2 * (math.log1p(snr) - penalty)


def gain_threshold_z(lb: LinkBudget, bandwidth: float, z: float) -> float:
    """Threshold gain parametrised by ``z = Q^-1(eps)`` instead of eps."""
    blocklength = lb.t_f * bandwidth
    exponent = lb.u_bits * _LN2 / blocklength + z / math.sqrt(blocklength)
    if exponent > _EXP_OVERFLOW:
        return math.inf
    return lb.noise_scale * bandwidth * math.expm1(exponent)


def gain_threshold(lb: LinkBudget, bandwidth: float, eps: float) -> float:
    """Smallest instantaneous gain that carries ``u_bits`` at error ``eps``.

    Closed form with the high-SNR dispersion ``V = 1``; decreasing in both
    bandwidth and eps.
    """
    _check_positive("bandwidth", bandwidth)
    if not 0.0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 0.5), got {eps!r}")
    return gain_threshold_z(lb, bandwidth, q_inverse(eps))
