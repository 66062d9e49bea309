"""Monte Carlo experiments over a synthesized cell.

Per-device policies depend only on the large-scale gain, never on traffic,
so every experiment solves each device once and reuses the result.  Frame
sampling then only draws active sets.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .scenario import DeviceParams, SystemConfig, frame_rng, pathloss_alpha, synthesize_population
from .solver import DEFAULT_DELTA_B, SolveOutcome, corner_fu, solve_device, solve_population

log = logging.getLogger(__name__)

__all__ = [
    "InfeasibleFrameError",
    "BandwidthCdf",
    "FeasibilityCensus",
    "ProfileRow",
    "solve_cached",
    "frame_active_ids",
    "frame_total",
    "run_bandwidth_cdf",
    "run_reserved_baseline",
    "run_feasibility_census",
    "run_distance_profile",
]


class InfeasibleFrameError(RuntimeError):
    """Raised in strict mode when an active device has no feasible policy."""


@dataclass(frozen=True)
class BandwidthCdf:
    samples: int  # simulated frames
    grid: np.ndarray  # distinct per-frame totals, Hz, ascending
    cdf: np.ndarray  # P{total <= grid[i]} over feasible frames
    infeasible_frames: int

    def quantile(self, q: float) -> float:
        """Smallest grid value whose empirical CDF reaches ``q``."""
        if not 0.0 < q <= 1.0:
            raise ValueError(f"q must lie in (0, 1], got {q!r}")
        if len(self.grid) == 0:
            return math.nan
        i = int(np.searchsorted(self.cdf, q - 1e-12, side="left"))
        return float(self.grid[min(i, len(self.grid) - 1)])


@dataclass(frozen=True)
class FeasibilityCensus:
    n_t: int
    total_devices: int
    infeasible_count: int
    per_draw: tuple = ()  # infeasible fraction of each population draw

    @property
    def percentage(self) -> float:
        """Infeasible fraction in [0, 1]."""
        return self.infeasible_count / self.total_devices if self.total_devices else 0.0


@dataclass(frozen=True)
class ProfileRow:
    distance_m: float
    n_t: int
    outcome: SolveOutcome


def solve_cached(
    cfg: SystemConfig,
    pop: Sequence[DeviceParams],
    n_t: Optional[int] = None,
    delta_b: float = DEFAULT_DELTA_B,
    workers: int = 1,
) -> list[SolveOutcome]:
    """Solve every device of a population once, in population order."""
    if not pop:
        return []
    devices = [cfg.link_budget(dev.alpha) for dev in pop]
    return solve_population(cfg.qos(n_t), devices, delta_b, workers).outcomes


def _activity(pop: Sequence[DeviceParams]) -> np.ndarray:
    return np.fromiter((dev.activity_p for dev in pop), dtype=float, count=len(pop))


def frame_active_ids(cfg: SystemConfig, activity: np.ndarray, frame: int, draw: int = 0) -> np.ndarray:
    """Indices of the devices active in ``frame``."""
    rng = frame_rng(cfg.rng_seed, frame, draw)
    return np.flatnonzero(rng.random(len(activity)) < activity)


def frame_total(objectives: Sequence[float], ids: Iterable[int]) -> float:
    """Exactly rounded sum of the objectives of the active devices."""
    return math.fsum(objectives[i] for i in ids)


def run_bandwidth_cdf(
    cfg: SystemConfig,
    frames: int,
    delta_b: float = DEFAULT_DELTA_B,
    n_t: Optional[int] = None,
    workers: int = 1,
    strict: bool = False,
    draw: int = 0,
) -> BandwidthCdf:
    """Empirical CDF of the total bandwidth granted per frame.

    Frames with an active infeasible device are tallied and left out of the
    CDF, or raise :class:`InfeasibleFrameError` when ``strict``.
    """
    if frames < 1:
        raise ValueError(f"frames must be >= 1, got {frames!r}")
    pop = synthesize_population(cfg, draw)
    outcomes = solve_cached(cfg, pop, n_t, delta_b, workers)
    objectives = [o.objective for o in outcomes]
    infeasible = np.array([not o.feasible for o in outcomes], dtype=bool)
    activity = _activity(pop)

    totals = []
    bad_frames = 0
    for k in range(frames):
        ids = frame_active_ids(cfg, activity, k, draw)
        if infeasible[ids].any():
            if strict:
                raise InfeasibleFrameError(f"frame {k}: active device without a feasible policy")
            bad_frames += 1
            continue
        totals.append(frame_total(objectives, ids))
    grid, counts = np.unique(np.asarray(totals, dtype=float), return_counts=True)
    cdf = np.cumsum(counts) / max(len(totals), 1)
    if bad_frames:
        log.warning("%d of %d frames contained an infeasible active device", bad_frames, frames)
    return BandwidthCdf(frames, grid, cdf, bad_frames)


def run_reserved_baseline(
    cfg: SystemConfig,
    n_t: Optional[int] = None,
    delta_b: float = DEFAULT_DELTA_B,
    workers: int = 1,
    draw: int = 0,
) -> float:
    """Total bandwidth (Hz) when every device holds a reservation.

    Infeasible devices contribute nothing; use :func:`solve_cached` to list them.
    """
    pop = synthesize_population(cfg, draw)
    outcomes = solve_cached(cfg, pop, n_t, delta_b, workers)
    return math.fsum(o.objective for o in outcomes if o.feasible)


def _census_draw(cfg: SystemConfig, n_t_list: Sequence[int], draw: int) -> list[int]:
    pop = synthesize_population(cfg, draw)
    counts = []
    for n_t in n_t_list:
        qos = cfg.qos(n_t)
        counts.append(sum(corner_fu(qos, cfg.link_budget(dev.alpha)) > qos.eps_ul for dev in pop))
    return counts


def run_feasibility_census(
    cfg: SystemConfig,
    n_t_list: Sequence[int],
    draws: int = 1,
    workers: int = 1,
) -> list[FeasibilityCensus]:
    """Count devices without any feasible policy, per antenna count.

    A device is infeasible exactly when ``n_max`` subchannels of width
    ``w_c`` cannot meet the target, so only that corner is evaluated.
    """
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws!r}")
    n_t_list = list(n_t_list)
    if workers > 1 and draws > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_draw = list(pool.map(_census_draw, [cfg] * draws, [n_t_list] * draws, range(draws)))
    else:
        per_draw = [_census_draw(cfg, n_t_list, d) for d in range(draws)]

    m = cfg.m_devices
    result = []
    for j, n_t in enumerate(n_t_list):
        counts = [row[j] for row in per_draw]
        fractions = tuple(c / m if m else 0.0 for c in counts)
        result.append(FeasibilityCensus(n_t, m * draws, sum(counts), fractions))
    return result


def run_distance_profile(
    cfg: SystemConfig,
    n_t_list: Sequence[int],
    distance_grid: Sequence[float],
    delta_b: float = DEFAULT_DELTA_B,
) -> list[ProfileRow]:
    """Optimal policy of an unshadowed device at each grid distance."""
    rows = []
    for n_t in n_t_list:
        qos = cfg.qos(n_t)
        for d in distance_grid:
            lb = cfg.link_budget(pathloss_alpha(float(d), 0.0))
            rows.append(ProfileRow(float(d), int(n_t), solve_device(qos, lb, delta_b)))
    return rows
