"""Per-device minimum-bandwidth transmit policy.

For a device with link budget ``lb`` the loss probability of a policy
(n subchannels of bandwidth B, decoding error target eps) is

    f_u(n, B, eps) = F(g_th(B, eps))**n + eps

where F is the Erlang(n_t) CDF of the channel gain.  The solver minimises
``n * B`` subject to ``f_u <= eps_ul``, ``B <= w_c`` and ``n <= n_max``:

* the inner search minimises f_u over eps (golden section when the
  convexity certificate ``g_th < n_t - 1`` holds, dense log-grid otherwise);
* a bisection on B finds the smallest feasible bandwidth for each n, which
  is valid because ``min_eps f_u`` is strictly decreasing in B;
* an outer sweep over n keeps the smallest objective.

Inner searches work on ``z = Q^-1(eps)`` so the hot loop never inverts the
Q-function; termination is still measured as a bracket width in log-eps.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .fbl import LinkBudget, gain_threshold, gain_threshold_z
from .specialfn import DomainError, _log_cdf, log_channel_cdf, log_channel_cdf_array, q_inverse

log = logging.getLogger(__name__)

__all__ = [
    "QosTarget",
    "TransmitPolicy",
    "Status",
    "SolveOutcome",
    "EpsOptimum",
    "BandwidthSearch",
    "PopulationResult",
    "reliability_fu",
    "optimize_eps",
    "min_bandwidth_for_n",
    "solve_device",
    "solve_population",
    "corner_fu",
    "verify_policy",
    "EPS_FLOOR",
    "DEFAULT_DELTA_B",
]

EPS_FLOOR = 1e-12
EPS_CEIL_FACTOR = 1.0 - 1e-6
GOLDEN_RTOL = 1e-4
GRID_PER_DECADE = 400
DEFAULT_DELTA_B = 10.0
TIE_HZ = 1.0

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_SQRT2 = math.sqrt(2.0)
_LN2 = math.log(2.0)
_EXP_CLIP = 700.0


@dataclass(frozen=True)
class QosTarget:
    """Reliability target and resource limits shared by all devices.

    Attributes:
        eps_ul: uplink packet-loss budget.
        w_c: coherence bandwidth in Hz; also the per-subchannel cap.
        n_max: maximum number of subchannels per device.
        n_t: receive antennas at the base station.
    """

    eps_ul: float
    w_c: float
    n_max: int
    n_t: int

    def __post_init__(self):
        if not 0.0 < self.eps_ul < 0.5:
            raise DomainError(f"eps_ul must lie in (0, 0.5), got {self.eps_ul!r}")
        if not self.w_c > 0.0:
            raise DomainError(f"w_c must be > 0, got {self.w_c!r}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise DomainError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise DomainError(f"n_t must be an integer >= 1, got {self.n_t!r}")
        if self.eps_ul * EPS_CEIL_FACTOR <= EPS_FLOOR:
            raise DomainError(f"eps_ul must exceed the search floor {EPS_FLOOR}")

    @property
    def eps_ceiling(self) -> float:
        return self.eps_ul * EPS_CEIL_FACTOR


@dataclass(frozen=True)
class TransmitPolicy:
    n_sub: int
    bandwidth: float
    eps: float
    g_th: float
    fu: float

    @property
    def objective(self) -> float:
        """Total bandwidth ``n_sub * bandwidth`` in Hz."""
        return self.n_sub * self.bandwidth


class Status(str, enum.Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"


class EpsOptimum(NamedTuple):
    """Result of the inner search over the decoding error target."""

    eps: float
    fu: float
    certified: bool  # convexity certificate held over the whole bracket
    log_width: float  # final bracket width in ln(eps)


class BandwidthSearch(NamedTuple):
    """Bisection record for one subchannel count.

    When the check at ``w_c`` fails, ``bandwidth`` and ``eps`` are NaN.
    Otherwise ``fu(lower) > eps_ul >= fu(bandwidth)`` with
    ``bandwidth - lower <= delta_b``; ``lower == 0`` means the bracket never
    moved off the open endpoint and ``fu_lower`` is inf.
    """

    n: int
    bandwidth: float
    eps: float
    fu: float
    lower: float
    fu_lower: float
    fu_at_cap: float
    steps: int

    @property
    def achievable(self) -> bool:
        return not math.isnan(self.bandwidth)

    @property
    def objective(self) -> float:
        return self.n * self.bandwidth


@dataclass(frozen=True)
class SolveOutcome:
    status: Status
    policy: Optional[TransmitPolicy] = None
    best_fu: Optional[float] = None
    searches: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    @property
    def objective(self) -> float:
        """Total bandwidth of the policy; 0 for infeasible devices."""
        return self.policy.objective if self.policy is not None else 0.0


# --------------------------------------------------------------------------
# reliability function
# --------------------------------------------------------------------------

def _check_point(qos: QosTarget, n: int, bandwidth: float):
    if int(n) != n or not 1 <= n <= qos.n_max:
        raise DomainError(f"n must be an integer in [1, {qos.n_max}], got {n!r}")
    if not 0.0 < bandwidth <= qos.w_c:
        raise DomainError(f"bandwidth must lie in (0, {qos.w_c}], got {bandwidth!r}")


def reliability_fu(qos: QosTarget, lb: LinkBudget, n: int, bandwidth: float, eps: float) -> float:
    """Packet-loss probability ``F(g_th)**n + eps`` of a policy."""
    _check_point(qos, n, bandwidth)
    g_th = gain_threshold(lb, bandwidth, eps)
    return math.exp(n * log_channel_cdf(g_th, qos.n_t)) + eps


def _fu_closures(lb: LinkBudget, n: int, n_t: int, bandwidth: float):
    """Fast ``z -> f_u`` and ``z -> g_th`` at fixed (n, B), no validation."""
    scale = lb.noise_scale * bandwidth
    blocklength = lb.t_f * bandwidth
    k1 = lb.u_bits * _LN2 / blocklength
    k2 = 1.0 / math.sqrt(blocklength)
    erfc, expm1, exp = math.erfc, math.expm1, math.exp

    def g_th(z):
        return scale * expm1(min(k1 + k2 * z, _EXP_CLIP))

    def fu(z):
        lf = _log_cdf(scale * expm1(min(k1 + k2 * z, _EXP_CLIP)), n_t)
        return exp(n * lf) + 0.5 * erfc(z / _SQRT2)

    def fu_array(z):
        g = scale * np.expm1(np.minimum(k1 + k2 * z, _EXP_CLIP))
        return np.exp(n * log_channel_cdf_array(g, n_t))

    return fu, g_th, fu_array


# --------------------------------------------------------------------------
# inner search over eps
# --------------------------------------------------------------------------

def _log_q(z: float) -> float:
    return math.log(0.5 * math.erfc(z / _SQRT2))


@lru_cache(maxsize=64)
def _z_bracket(eps_ul: float):
    z_lo = q_inverse(eps_ul * EPS_CEIL_FACTOR)
    z_hi = q_inverse(EPS_FLOOR)
    return z_lo, z_hi, _log_q(z_lo) - _log_q(z_hi)


@lru_cache(maxsize=16)
def _eps_grid(eps_ul: float):
    lo, hi = math.log10(EPS_FLOOR), math.log10(eps_ul * EPS_CEIL_FACTOR)
    count = int(math.ceil(GRID_PER_DECADE * (hi - lo))) + 1
    eps = 10.0 ** np.linspace(lo, hi, count)
    z = np.array([q_inverse(e) for e in eps])
    eps.setflags(write=False)
    z.setflags(write=False)
    return eps, z


def _golden(f, a: float, b: float, log_tol: float):
    """Minimise ``f`` on [a, b] until the bracket spans <= log_tol in ln(eps)."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while _log_q(a) - _log_q(b) > log_tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    width = _log_q(a) - _log_q(b)
    return (c, fc, width) if fc < fd else (d, fd, width)


def _optimize_eps(qos: QosTarget, lb: LinkBudget, n: int, bandwidth: float) -> EpsOptimum:
    fu, g_th, fu_array = _fu_closures(lb, n, qos.n_t, bandwidth)
    z_lo, z_hi, full_width = _z_bracket(qos.eps_ul)
    log_tol = GOLDEN_RTOL * full_width

    # g_th is increasing in z, so the eps-floor end carries the largest threshold
    certified = g_th(z_hi) < qos.n_t - 1
    candidates = [(z_lo, fu(z_lo)), (z_hi, fu(z_hi))]
    if certified:
        z, fz, width = _golden(fu, z_lo, z_hi, log_tol)
    else:
        eps_grid, z_grid = _eps_grid(qos.eps_ul)
        values = fu_array(np.asarray(z_grid)) + eps_grid
        i = int(np.argmin(values))
        candidates.append((float(z_grid[i]), fu(float(z_grid[i]))))
        a = float(z_grid[min(i + 1, len(z_grid) - 1)])  # eps grid ascends, z descends
        b = float(z_grid[max(i - 1, 0)])
        z, fz, width = _golden(fu, a, b, log_tol)
    candidates.append((z, fz))
    z_best, f_best = min(candidates, key=lambda t: t[1])
    return EpsOptimum(0.5 * math.erfc(z_best / _SQRT2), f_best, certified, width)


def optimize_eps(qos: QosTarget, lb: LinkBudget, n: int, bandwidth: float) -> EpsOptimum:
    """Minimise ``f_u`` over eps in [1e-12, eps_ul) at fixed (n, B)."""
    _check_point(qos, n, bandwidth)
    return _optimize_eps(qos, lb, n, bandwidth)


def corner_fu(qos: QosTarget, lb: LinkBudget) -> float:
    """Best attainable loss probability, at ``n = n_max`` and ``B = w_c``.

    A device admits a feasible policy iff this is <= ``eps_ul``.
    """
    return _optimize_eps(qos, lb, qos.n_max, qos.w_c).fu


# --------------------------------------------------------------------------
# bandwidth bisection and sweep over n
# --------------------------------------------------------------------------

def min_bandwidth_for_n(
    qos: QosTarget, lb: LinkBudget, n: int, delta_b: float = DEFAULT_DELTA_B
) -> BandwidthSearch:
    """Smallest per-subchannel bandwidth meeting ``eps_ul`` with n subchannels."""
    _check_point(qos, n, qos.w_c)
    if not delta_b > 0.0:
        raise DomainError(f"delta_b must be > 0, got {delta_b!r}")
    nan = math.nan
    top = _optimize_eps(qos, lb, n, qos.w_c)
    if top.fu > qos.eps_ul:
        return BandwidthSearch(n, nan, nan, nan, nan, nan, top.fu, 0)

    lo, hi = 0.0, qos.w_c
    fu_lo, best = math.inf, top
    steps = 0
    while hi - lo > delta_b:
        mid = 0.5 * (lo + hi)
        r = _optimize_eps(qos, lb, n, mid)
        steps += 1
        if r.fu > qos.eps_ul:
            lo, fu_lo = mid, r.fu
        else:
            hi, best = mid, r
    log.debug("n=%d B=%.3f Hz eps=%.3e bracket=[%.3f, %.3f] log-eps width=%.2e",
              n, hi, best.eps, lo, hi, best.log_width)
    return BandwidthSearch(n, hi, best.eps, best.fu, lo, fu_lo, top.fu, steps)


def solve_device(
    qos: QosTarget, lb: LinkBudget, delta_b: float = DEFAULT_DELTA_B, prune: bool = True
) -> SolveOutcome:
    """Optimal (n, B, eps) for one device, or Infeasible.

    Subchannel counts are swept upward; a larger n replaces the incumbent only
    if it lowers the objective by more than 1 Hz per subchannel.  With
    ``prune`` a count is skipped when even ``B = best/n - 1`` is infeasible;
    this never changes the result, since the bisection for any surviving n
    runs unchanged.
    """
    searches: dict[int, BandwidthSearch] = {}
    best: Optional[BandwidthSearch] = None
    for n in range(1, qos.n_max + 1):
        if prune and best is not None:
            cap = best.objective / n - TIE_HZ
            if cap <= 0.0:
                continue
            if cap < qos.w_c and _optimize_eps(qos, lb, n, cap).fu > qos.eps_ul:
                continue
        s = min_bandwidth_for_n(qos, lb, n, delta_b)
        searches[n] = s
        if s.achievable and (best is None or s.objective < best.objective - TIE_HZ * n):
            best = s

    if best is None:
        best_fu = min(s.fu_at_cap for s in searches.values())
        return SolveOutcome(Status.INFEASIBLE, best_fu=best_fu, searches=searches)
    policy = TransmitPolicy(
        n_sub=best.n,
        bandwidth=best.bandwidth,
        eps=best.eps,
        g_th=gain_threshold(lb, best.bandwidth, best.eps),
        fu=best.fu,
    )
    return SolveOutcome(Status.FEASIBLE, policy=policy, searches=searches)


def verify_policy(qos: QosTarget, lb: LinkBudget, policy: TransmitPolicy) -> bool:
    """Re-check every constraint of a policy by direct evaluation."""
    if not (isinstance(policy.n_sub, int) and 1 <= policy.n_sub <= qos.n_max):
        return False
    if not 0.0 < policy.bandwidth <= qos.w_c:
        return False
    if not 0.0 < policy.eps < qos.eps_ul:
        return False
    return reliability_fu(qos, lb, policy.n_sub, policy.bandwidth, policy.eps) <= qos.eps_ul


# --------------------------------------------------------------------------
# populations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PopulationResult:
    outcomes: list
    total: float  # sum of objectives over feasible devices, Hz

    @property
    def infeasible(self) -> list:
        """Indices of devices without a feasible policy."""
        return [i for i, o in enumerate(self.outcomes) if not o.feasible]


def _solve_one(args):
    qos, lb, delta_b = args
    return solve_device(qos, lb, delta_b)


def solve_population(
    qos: QosTarget,
    devices: Sequence[LinkBudget],
    delta_b: float = DEFAULT_DELTA_B,
    workers: int = 1,
) -> PopulationResult:
    """Solve each device independently and total the feasible objectives.

    Outcomes are returned in input order regardless of ``workers``.
    """
    jobs = [(qos, lb, delta_b) for lb in devices]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_solve_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        outcomes = [_solve_one(j) for j in jobs]
    total = math.fsum(o.objective for o in outcomes if o.feasible)
    return PopulationResult(outcomes, total)
