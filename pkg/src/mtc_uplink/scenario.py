"""Single-cell system model: configuration, device population and traffic.

Random streams
--------------
All randomness derives from ``numpy.random.SeedSequence(rng_seed)`` through
fixed spawn keys, so a draw never depends on what else was sampled before:

* ``(0, draw, 0)``: device distances (PCG64)
* ``(0, draw, 1)``: shadowing offsets (PCG64)
* ``(1, draw)``: Philox key for traffic; frame ``k`` uses counter
  ``[0, k, 0, 0]``, so every frame has its own counter-based substream.

Changing this layout changes every Monte Carlo result and is treated as a
breaking change.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fbl import LinkBudget
from .solver import QosTarget
from .specialfn import DomainError

__all__ = [
    "ConfigError",
    "SystemConfig",
    "DeviceParams",
    "pathloss_alpha",
    "dbm_to_watts",
    "synthesize_population",
    "frame_rng",
    "sample_active_set",
]

PATHLOSS_INTERCEPT_DB = 35.3
PATHLOSS_SLOPE_DB = 37.6

_POP_STREAM = 0
_TRAFFIC_STREAM = 1


class ConfigError(ValueError):
    """Invalid configuration value; the message names the offending field."""


@dataclass(frozen=True)
class SystemConfig:
    m_devices: int = 1000
    cell_range: tuple = (50.0, 250.0)
    p_max_dbm: float = 23.0
    n0_dbm_hz: float = -174.0
    t_f: float = 1e-4
    u_bits: float = 160.0
    w_c: float = 0.5e6
    n_max: int = 10
    n_t: int = 32
    eps_max: float = 1e-7
    eps_ul_fraction: float = 0.5
    packet_rate: float = 100.0
    shadowing_sigma_db: float = 8.0
    rng_seed: int = 0

    def __post_init__(self):
        def bad(name, why):
            raise ConfigError(f"{name}: {why} (got {getattr(self, name)!r})")

        for name in ("m_devices", "n_max", "n_t", "rng_seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                bad(name, "must be an integer")
        if self.m_devices < 0:
            bad("m_devices", "must be >= 0")
        if self.n_max < 1:
            bad("n_max", "must be >= 1")
        if self.n_t < 1:
            bad("n_t", "must be >= 1")
        if self.rng_seed < 0:
            bad("rng_seed", "must be >= 0")
        if len(self.cell_range) != 2 or not 0.0 < self.cell_range[0] <= self.cell_range[1]:
            bad("cell_range", "must be two distances 0 < d_min <= d_max")
        for name in ("p_max_dbm", "n0_dbm_hz"):
            if not math.isfinite(getattr(self, name)):
                bad(name, "must be finite")
        for name in ("t_f", "u_bits", "w_c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                bad(name, "must be finite and > 0")
        if not 0.0 < self.eps_max < 1.0:
            bad("eps_max", "must lie in (0, 1)")
        if not 0.0 < self.eps_ul_fraction < 1.0:
            bad("eps_ul_fraction", "must lie in (0, 1)")
        if not 0.0 <= self.eps_ul < 0.5:
            bad("eps_ul_fraction", "eps_max * eps_ul_fraction must be < 0.5")
        if not (self.packet_rate >= 0.0 and self.packet_rate * self.t_f <= 1.0):
            bad("packet_rate", "packet_rate * t_f must lie in [0, 1]")
        if not (math.isfinite(self.shadowing_sigma_db) and self.shadowing_sigma_db >= 0.0):
            bad("shadowing_sigma_db", "must be finite and >= 0")

    @property
    def eps_ul(self) -> float:
        return self.eps_ul_fraction * self.eps_max

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def n0_w_hz(self) -> float:
        return dbm_to_watts(self.n0_dbm_hz)

    @property
    def activity_p(self) -> float:
        return self.packet_rate * self.t_f

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def qos(self, n_t: Optional[int] = None) -> QosTarget:
        return QosTarget(
            eps_ul=self.eps_ul,
            w_c=self.w_c,
            n_max=self.n_max,
            n_t=self.n_t if n_t is None else n_t,
        )

    def link_budget(self, alpha: float) -> LinkBudget:
        return LinkBudget(alpha=alpha, p_max=self.p_max_w, n0=self.n0_w_hz,
                          t_f=self.t_f, u_bits=self.u_bits)


@dataclass(frozen=True)
class DeviceParams:
    device_id: int
    distance_m: float
    shadow_db: float
    alpha: float
    activity_p: float


def dbm_to_watts(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def pathloss_alpha(d: float, shadow_db: float = 0.0) -> float:
    """Average channel gain at distance ``d`` metres with a shadowing offset in dB."""
    if not d > 0.0:
        raise DomainError(f"distance must be > 0, got {d!r}")
    loss_db = PATHLOSS_INTERCEPT_DB + PATHLOSS_SLOPE_DB * math.log10(d) + shadow_db
    return 10.0 ** (-loss_db / 10.0)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def synthesize_population(cfg: SystemConfig, draw: int = 0) -> list[DeviceParams]:
    """Draw ``cfg.m_devices`` devices uniformly over the cell range."""
    m = cfg.m_devices
    d_min, d_max = cfg.cell_range
    distances = _stream(cfg.rng_seed, _POP_STREAM, draw, 0).uniform(d_min, d_max, size=m)
    if cfg.shadowing_sigma_db > 0.0:
        shadows = _stream(cfg.rng_seed, _POP_STREAM, draw, 1).normal(
            0.0, cfg.shadowing_sigma_db, size=m)
    else:
        shadows = np.zeros(m)
    p = cfg.activity_p
    return [
        DeviceParams(i, float(d), float(s), pathloss_alpha(float(d), float(s)), p)
        for i, (d, s) in enumerate(zip(distances, shadows))
    ]


def _traffic_key(seed: int, draw: int) -> np.ndarray:
    return np.random.SeedSequence(seed, spawn_key=(_TRAFFIC_STREAM, draw)).generate_state(
        2, dtype=np.uint64)


def frame_rng(seed: int, frame: int, draw: int = 0) -> np.random.Generator:
    """Generator for the traffic of a single frame."""
    counter = np.array([0, frame, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=_traffic_key(seed, draw), counter=counter))


def sample_active_set(pop: Sequence[DeviceParams], rng: np.random.Generator) -> list[int]:
    """Ids of the devices that transmit in one frame (independent Bernoulli)."""
    if not pop:
        return []
    p = np.fromiter((dev.activity_p for dev in pop), dtype=float, count=len(pop))
    active = rng.random(len(pop)) < p
    return [pop[i].device_id for i in np.flatnonzero(active)]
