"""Command-line entry point.

Exit codes: 0 when the run completes (Infeasible policies included),
2 for usage or configuration errors, 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import apply_overrides, config_hash, dump_config, load_config
from .montecarlo import (
    run_bandwidth_cdf,
    run_distance_profile,
    run_feasibility_census,
    run_reserved_baseline,
)
from .scenario import ConfigError, SystemConfig, pathloss_alpha
from .solver import DEFAULT_DELTA_B, solve_device
from .specialfn import DomainError

log = logging.getLogger("mtc_uplink")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


def _num(x) -> str:
    return format(float(x), ".16e")


def _finite(obj):
    """Replace NaN/inf by None so the record is strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file (defaults if omitted)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config field; repeatable")
    common.add_argument("--seed", type=int, help="override rng_seed")
    common.add_argument("--out", type=Path, help="output directory (default: current directory)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for device solves")
    common.add_argument("--delta-b", type=float, default=DEFAULT_DELTA_B, help="bandwidth bisection accuracy, Hz")
    common.add_argument("--frames", type=int, default=100_000, help="frames for the cdf run")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mtc-uplink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-device", parents=[common], help="optimal policy of one device")
    p.add_argument("--distance", type=float, required=True, help="device distance, m")
    p.add_argument("--shadow-db", type=float, default=0.0, help="shadowing offset, dB")
    p.add_argument("--n-t", type=int, help="receive antennas (overrides config n_t)")

    p = sub.add_parser("cdf", parents=[common], help="CDF of per-frame total bandwidth")
    p.add_argument("--n-t", type=int)
    p.add_argument("--strict", action="store_true", help="fail on frames with an infeasible device")

    p = sub.add_parser("baseline", parents=[common], help="bandwidth reserved for all devices")
    p.add_argument("--n-t", type=_int_list, help="comma-separated antenna counts")
    p.add_argument("--draws", type=int, default=1, help="population draws averaged per row")

    p = sub.add_parser("census", parents=[common], help="fraction of devices without a feasible policy")
    p.add_argument("--n-t", type=_int_list, default=[16, 32, 64, 128])
    p.add_argument("--draws", type=int, default=1)

    p = sub.add_parser("profile", parents=[common], help="optimal policy versus distance")
    p.add_argument("--n-t", type=_int_list, default=[2, 4, 8, 16])
    p.add_argument("--distances", type=_float_list,
                   default=[float(d) for d in range(50, 251, 10)], help="comma-separated distances, m")
    return parser


def resolve_config(args) -> SystemConfig:
    if args.config is not None:
        if not args.config.is_file():
            raise UsageError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
    else:
        cfg = SystemConfig()
    cfg = apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = cfg.replace(rng_seed=args.seed)
    return cfg


def _write_csv(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _write_manifest(out: Path, cfg: SystemConfig, command: str, artifacts, started: float, extra=None):
    manifest = {
        "subcommand": command,
        "library_version": __version__,
        "config_hash": config_hash(cfg),
        "rng_seed": cfg.rng_seed,
        "config": dump_config(cfg),
        "artifacts": [str(p) for p in artifacts],
        "wall_clock_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        manifest.update(extra)
    path = out / f"{command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def cmd_solve_device(args, cfg: SystemConfig, started: float) -> int:
    n_t = args.n_t if args.n_t is not None else cfg.n_t
    qos = cfg.qos(n_t)
    lb = cfg.link_budget(pathloss_alpha(args.distance, args.shadow_db))
    outcome = solve_device(qos, lb, args.delta_b)

    record = {
        "distance_m": args.distance,
        "shadow_db": args.shadow_db,
        "n_t": n_t,
        "alpha": lb.alpha,
        "status": outcome.status.value,
        "policy": asdict(outcome.policy) | {"objective": outcome.objective} if outcome.policy else None,
        "best_fu": outcome.best_fu,
        "certificates": [
            {"n": s.n, "achievable": s.achievable, "bandwidth_hz": s.bandwidth,
             "lower_hz": s.lower, "fu": s.fu, "fu_lower": s.fu_lower, "fu_at_w_c": s.fu_at_cap}
            for s in outcome.searches.values()
        ],
    }
    print(f"status      {outcome.status.value}")
    if outcome.policy:
        pol = outcome.policy
        print(f"n_sub       {pol.n_sub}")
        print(f"bandwidth   {pol.bandwidth:.3f} Hz")
        print(f"eps         {pol.eps:.6e}")
        print(f"g_th        {pol.g_th:.6f}")
        print(f"objective   {pol.objective:.3f} Hz")
        print(f"f_u         {pol.fu:.6e} (target {qos.eps_ul:.3e})")
    else:
        print(f"best f_u    {outcome.best_fu:.6e} > target {qos.eps_ul:.3e}")
    for s in outcome.searches.values():
        if s.achievable:
            print(f"  n={s.n:<3d} f_u({s.lower:.1f} Hz)={s.fu_lower:.3e} > target >= f_u({s.bandwidth:.1f} Hz)={s.fu:.3e}")
        else:
            print(f"  n={s.n:<3d} not achievable: f_u(w_c)={s.fu_at_cap:.3e}")
    print(json.dumps(_finite(record)))
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / "solve_device.json"
        path.write_text(json.dumps(_finite(record), indent=2) + "\n")
        _write_manifest(args.out, cfg, "solve-device", [path], started)
    return EXIT_OK


def cmd_cdf(args, cfg, started) -> int:
    result = run_bandwidth_cdf(cfg, args.frames, args.delta_b, args.n_t, args.threads, args.strict)
    path = _write_csv(args.out / "cdf.csv", ["bandwidth_hz", "cdf"],
                      ([_num(g), _num(c)] for g, c in zip(result.grid, result.cdf)))
    print(f"frames={result.samples} infeasible_frames={result.infeasible_frames} "
          f"p99.9={result.quantile(0.999):.6e} Hz")
    _write_manifest(args.out, cfg, "cdf", [path], started,
                    {"frames": result.samples, "infeasible_frames": result.infeasible_frames,
                     "n_t": args.n_t if args.n_t is not None else cfg.n_t})
    return EXIT_OK


def cmd_baseline(args, cfg, started) -> int:
    if args.draws < 1:
        raise UsageError("--draws must be >= 1")
    rows = []
    for n_t in args.n_t or [cfg.n_t]:
        totals = [run_reserved_baseline(cfg, n_t, args.delta_b, args.threads, draw=k)
                  for k in range(args.draws)]
        rows.append([n_t, _num(np.mean(totals))])
        print(f"n_t={n_t} reserved={np.mean(totals) / 1e6:.3f} MHz over {args.draws} draw(s)")
    path = _write_csv(args.out / "baseline.csv", ["n_t", "total_hz"], rows)
    _write_manifest(args.out, cfg, "baseline", [path], started, {"draws": args.draws})
    return EXIT_OK


def cmd_census(args, cfg, started) -> int:
    if args.draws < 1:
        raise UsageError("--draws must be >= 1")
    result = run_feasibility_census(cfg, args.n_t, args.draws, args.threads)
    path = _write_csv(args.out / "census.csv", ["n_t", "total", "infeasible", "percentage"],
                      ([c.n_t, c.total_devices, c.infeasible_count, _num(c.percentage)] for c in result))
    for c in result:
        print(f"n_t={c.n_t} infeasible={c.infeasible_count}/{c.total_devices} ({100 * c.percentage:.2f}%)")
    _write_manifest(args.out, cfg, "census", [path], started, {"draws": args.draws})
    return EXIT_OK


def cmd_profile(args, cfg, started) -> int:
    rows = []
    for r in run_distance_profile(cfg, args.n_t, args.distances, args.delta_b):
        pol = r.outcome.policy
        if pol is None:
            rows.append([_num(r.distance_m), r.n_t, r.outcome.status.value, "", "", "", ""])
        else:
            rows.append([_num(r.distance_m), r.n_t, r.outcome.status.value, pol.n_sub,
                         _num(pol.bandwidth), _num(pol.eps), _num(pol.objective)])
    path = _write_csv(args.out / "profile.csv",
                      ["distance_m", "n_t", "status", "n_sub", "bandwidth_hz", "eps", "objective_hz"], rows)
    print(f"wrote {len(rows)} rows to {path}")
    _write_manifest(args.out, cfg, "profile", [path], started)
    return EXIT_OK


COMMANDS = {
    "solve-device": cmd_solve_device,
    "cdf": cmd_cdf,
    "baseline": cmd_baseline,
    "census": cmd_census,
    "profile": cmd_profile,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        cfg = resolve_config(args)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if args.frames < 1:
            raise UsageError("--frames must be >= 1")
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command != "solve-device":
            args.out = args.out or Path(".")
            args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg, started)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - any failure after validation is a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
