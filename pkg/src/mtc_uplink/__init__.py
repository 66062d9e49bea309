"""Minimum-bandwidth uplink policies for short-packet machine-type devices
under ultra-high reliability targets, with a Monte Carlo harness for
single-cell studies."""

__version__ = "0.1.0"

from .fbl import LinkBudget, achievable_bits, gain_threshold, shannon_bits
from .scenario import DeviceParams, SystemConfig, dbm_to_watts, pathloss_alpha, synthesize_population
from .solver import (
    QosTarget,
    SolveOutcome,
    Status,
    TransmitPolicy,
    min_bandwidth_for_n,
    optimize_eps,
    reliability_fu,
    solve_device,
    solve_population,
)
from .specialfn import DomainError, channel_cdf, log_channel_cdf, q_function, q_inverse
