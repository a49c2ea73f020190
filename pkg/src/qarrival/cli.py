"""
Command-line front end.

    qarrival verify   --config run.cfg --out out/
    qarrival simulate --config run.cfg --out out/ [--record-states]
    qarrival sweep    --config run.cfg --out out/ --param dt --values 0.01 0.005 [--workers 2]

Exit codes: 0 success, 2 config or validation error, 3 invariant failure,
4 numerical abort (edge contamination or singular solve).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .arrival import ArrivalError
from .banded import SingularSystemError
from .config import ConfigError, SimulationConfig, build, load
from .dynamics import EdgeContaminationError
from .pipeline import SUMMARY_COLUMNS, run_simulation, write_outputs
from .verification import format_report, run_verification

log = logging.getLogger("qarrival")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_ABORT = 4

NUMERICAL_ERRORS = (EdgeContaminationError, SingularSystemError, ArrivalError)

SWEEP_KEYS = {
    "k0": "packet.k0",
    "sigma": "packet.sigma",
    "x_d": "detector.x_d",
    "dt": "propagation.dt",
    "dx": "grid.n",
}


def _load_config(path) -> SimulationConfig:
    return SimulationConfig() if path is None else load(path)


def _outdir(args, cfg: SimulationConfig) -> Path:
    return Path(args.out if args.out is not None else cfg.output.dir)


def cmd_verify(cfg: SimulationConfig, outdir) -> int:
    setup = build(cfg)
    checks = run_verification(setup)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify.txt").write_text(format_report(checks))
    failed = [c.name for c in checks if c.asserted and not c.passed]
    for name in failed:
        log.error("invariant failed: %s", name)
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_simulate(cfg: SimulationConfig, outdir, record_states: bool = False) -> int:
    setup = build(cfg)
    result = run_simulation(setup, record_states=record_states)
    write_outputs(result, outdir)
    failed = [name for name, _, _, ok in result.run_checks() if not ok]
    for name in failed:
        log.error("run check failed: %s", name)
    return EXIT_INVARIANT if failed else EXIT_OK


def sweep_configs(cfg: SimulationConfig, param: str, values) -> list[tuple[str, SimulationConfig]]:
    """One (subdirectory name, config) pair per value. Raises ConfigError on bad input."""
    if param not in SWEEP_KEYS:
        raise ConfigError(f"cannot sweep {param!r}; choose from {', '.join(SWEEP_KEYS)}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    out = []
    for raw in values:
        try:
            v = float(raw)
        except ValueError:
            raise ConfigError(f"sweep value {raw!r} is not a number") from None
        if param == "dx":
            new = cfg.replace("grid.n", _points_for_spacing(cfg, v))
        else:
            new = cfg.replace(SWEEP_KEYS[param], v)
        out.append((f"{param}={v!r}", new))
    names = [name for name, _ in out]
    if len(set(names)) != len(names):
        raise ConfigError("sweep values must be distinct")
    return out


def _points_for_spacing(cfg: SimulationConfig, dx: float) -> int:
    if not dx > 0:
        raise ConfigError(f"dx must be positive, got {dx!r}")
    cells = (cfg.grid.x_max - cfg.grid.x_min) / dx
    n = int(round(cells))
    if abs(cells - n) > 1e-9 * cells:
        raise ConfigError(f"dx={dx!r} does not divide the grid length")
    return n + 1


def _sweep_one(job) -> tuple[int, dict | None, str]:
    name, cfg, outdir, record_states = job
    try:
        setup = build(cfg)
        result = run_simulation(setup, record_states=record_states)
    except ConfigError as e:
        return EXIT_CONFIG, None, f"config: {e}"
    except NUMERICAL_ERRORS as e:
        return EXIT_ABORT, None, f"abort: {e}"
    write_outputs(result, Path(outdir) / name)
    failed = [k for k, _, _, ok in result.run_checks() if not ok]
    if failed:
        return EXIT_INVARIANT, result.summary, "failed: " + " ".join(failed)
    return EXIT_OK, result.summary, "ok"


def cmd_sweep(cfg: SimulationConfig, outdir, param: str, values, workers: int | None = None,
              record_states: bool = False) -> int:
    runs = sweep_configs(cfg, param, values)
    for _, c in runs:
        build(c)  # fail fast before any run starts
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(name, c, out, record_states) for name, c in runs]
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        results = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_sweep_one, jobs))

    columns = ("run", "value", "status") + SUMMARY_COLUMNS
    rows = []
    for (name, _), value, (code, summary, status) in zip(runs, values, results):
        if code != EXIT_OK:
            log.error("%s: %s", name, status)
        cells = [summary[k] if summary else "nan" for k in SUMMARY_COLUMNS]
        rows.append([name, float(value), status.split(":")[0]] + cells)
    io.write_csv(out / "sweep_summary.csv", columns, rows)
    return max(code for code, _, _ in results)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qarrival", description="Quantum arrival-time simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file (defaults used when omitted)")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("verify", help="run operator-identity checks"))
    p = sub.add_parser("simulate", help="run one transit simulation")
    common(p)
    p.add_argument("--record-states", action="store_true", help="write wavefunction snapshots")
    p = sub.add_parser("sweep", help="run one simulation per parameter value")
    common(p)
    p.add_argument("--param", required=True, help=f"one of: {', '.join(SWEEP_KEYS)}")
    p.add_argument("--values", nargs="*", default=[], help="values to sweep")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: cpu count)")
    p.add_argument("--record-states", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _load_config(args.config)
        outdir = _outdir(args, cfg)
        if args.command == "verify":
            return cmd_verify(cfg, outdir)
        if args.command == "simulate":
            return cmd_simulate(cfg, outdir, args.record_states)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        return cmd_sweep(cfg, outdir, args.param, args.values, args.workers, args.record_states)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
