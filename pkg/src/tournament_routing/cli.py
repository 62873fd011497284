"""Command-line driver: ``tournament-routing <command> --config run.ini``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, experiments
from .config import COMMANDS, ConfigError, RunConfig, load_config
from .errors import ParameterError

log = logging.getLogger("tournament_routing")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    return str(value)


def write_csv(path: Path, rows: list[dict], columns: list[str] | None = None) -> Path:
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    return path


def write_json_atomic(path: Path, payload: dict) -> Path:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def run_directory(base: Path, command: str, seed: int) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    name = f"{command}_seed{seed}_{stamp}"
    path = base / name
    k = 1
    while path.exists():
        path = base / f"{name}-{k}"
        k += 1
    path.mkdir(parents=True)
    return path


def cmd_sweep_gamma(cfg: RunConfig, out: Path) -> list[Path]:
    summary, analytic, _ = experiments.sweep_gamma(cfg)
    files = [
        write_csv(out / "summary.csv", experiments.summary_rows(summary)),
        write_csv(out / "analytic.csv", analytic),
    ]
    if cfg.study.raw:
        files.append(write_csv(out / "windows.csv", experiments.window_rows(summary)))
    return files


def cmd_optimal_gamma(cfg: RunConfig, out: Path) -> list[Path]:
    rows, membership = experiments.optimal_gamma_tables(cfg)
    return [write_csv(out / "optimal_gamma.csv", rows), write_csv(out / "interval.csv", membership)]


def cmd_heatmap(cfg: RunConfig, out: Path) -> list[Path]:
    return [write_csv(out / "heatmap.csv", experiments.heatmap_rows(cfg))]


def cmd_distance(cfg: RunConfig, out: Path) -> list[Path]:
    bins, decay, _ = experiments.distance_tables(cfg)
    return [write_csv(out / "distance.csv", bins), write_csv(out / "decay.csv", decay)]


def cmd_multipair(cfg: RunConfig, out: Path) -> list[Path]:
    rows, slopes, _ = experiments.multipair_tables(cfg)
    return [write_csv(out / "multipair.csv", rows), write_csv(out / "multipair_slopes.csv", slopes)]


def cmd_fairness(cfg: RunConfig, out: Path) -> list[Path]:
    return [write_csv(out / "fairness.csv", experiments.fairness_rows(cfg))]


def cmd_bounds(cfg: RunConfig, out: Path) -> list[Path]:
    return [write_csv(out / "bounds.csv", experiments.bounds_rows(cfg))]


def cmd_hopfit(cfg: RunConfig, out: Path) -> list[Path]:
    rows, params, _ = experiments.hopfit_tables(cfg)
    return [write_csv(out / "hopfit.csv", rows), write_json_atomic(out / "hopfit_params.json", params)]


HANDLERS = {
    "sweep-gamma": cmd_sweep_gamma,
    "optimal-gamma": cmd_optimal_gamma,
    "heatmap": cmd_heatmap,
    "distance": cmd_distance,
    "multipair": cmd_multipair,
    "fairness": cmd_fairness,
    "bounds": cmd_bounds,
    "hopfit": cmd_hopfit,
}
assert set(HANDLERS) == set(COMMANDS)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI run configuration")
    common.add_argument("--seed", type=int, default=None, help="override the master seed")
    common.add_argument("--out", default="runs", help="base directory for run folders")
    common.add_argument("--quick", action="store_true", help="cut windows and ensembles tenfold")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tournament-routing", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative", "seed")
            cfg = cfg.with_seed(args.seed)
        if args.quick:
            cfg = cfg.quick()
    except (ConfigError, ParameterError) as exc:
        key = getattr(exc, "key", None)
        print(f"config error{f' [{key}]' if key else ''}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    try:
        out = run_directory(Path(args.out), args.command, cfg.experiment.seed)
        log.info("writing to %s", out)
        files = HANDLERS[args.command](cfg, out)
    except Exception as exc:  # noqa: BLE001 - reported via exit code
        log.debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest = {
        "experiment": args.command,
        "config": cfg.to_dict(),
        "seed": cfg.experiment.seed,
        "quick": bool(args.quick),
        "version": __version__,
        "outputs": [f.name for f in files],
        "duration_s": round(time.perf_counter() - start, 3),
    }
    # the manifest is the completion marker, so it goes last
    write_json_atomic(out / "manifest.json", manifest)
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
