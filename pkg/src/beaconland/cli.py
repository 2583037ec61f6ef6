"""Command-line interface: ``beaconland {simulate,detect,metrics,sweep}``.

Exit codes: 0 success, 2 bad input (config, image, arguments), 3 the filter
diverged at least once (outputs are still written).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .errors import BeaconlandError, ConfigError, EmptyBand, MalformedLog
from .harness import (DEFAULT_BANDS, METRICS_COLUMNS, compute_metrics, format_metrics,
                      read_log, run_simulation, write_log, write_metrics)
from .imaging import (DEFAULT_K, DEFAULT_WINDOW, PnmError, detect_light_sources, read_pgm,
                      write_pbm, write_pgm)
from .imaging.pnm import distance_to_pgm
from .world import rng_for

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGED = 3
OUT_ENV = "BEACONLAND_OUT"

log = logging.getLogger("beaconland")


def _out_dir(arg):
    return Path(arg or os.environ.get(OUT_ENV) or "out")


def _bands(text):
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad band list {text!r}") from None
    if not vals or any(a <= b for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("bands must be strictly descending")
    return vals


def _fail(msg):
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _load_config(path, seed):
    cfg = config_mod.load(path)
    if seed is not None:
        cfg = config_mod.with_value(cfg, "run.seed", seed)
    return cfg


def _frame_dumper(directory: Path):
    directory.mkdir(parents=True, exist_ok=True)

    def dump(k, art):
        stem = directory / f"frame_{k:04d}"
        write_pgm(f"{stem}_image.pgm", art.image)
        write_pbm(f"{stem}_binary.pbm", art.binary_map)
        write_pgm(f"{stem}_distance.pgm", distance_to_pgm(art.distance_map))
    return dump


def _simulate_once(cfg, out: Path, bands, debug=False):
    """Run, write trajectory.csv/metrics.csv into ``out``; returns (log, rows)."""
    out.mkdir(parents=True, exist_ok=True)
    hook = _frame_dumper(out / "frames") if debug else None
    traj = run_simulation(cfg, on_frame=hook)
    write_log(out / "trajectory.csv", traj)
    rows = compute_metrics(traj, bands)
    write_metrics(out / "metrics.csv", rows)
    return traj, rows


def cmd_simulate(args):
    try:
        cfg = _load_config(args.config, args.seed)
    except ConfigError as exc:
        return _fail(str(exc))
    out = _out_dir(args.out)
    try:
        traj, rows = _simulate_once(cfg, out, args.bands, args.debug_dumps)
    except EmptyBand as exc:
        return _fail(f"metrics: {exc}")
    print(format_metrics(rows))
    if traj.diverged:
        print(f"filter diverged at frames {traj.diverged_frames}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_detect(args):
    try:
        img = read_pgm(args.image)
    except (OSError, PnmError) as exc:
        return _fail(f"{args.image}: {exc}")
    if args.window < 3 or args.window % 2 == 0:
        return _fail("window must be odd and >= 3")
    if not args.k > 0:
        return _fail("k must be positive")
    bmap, dets = detect_light_sources(img, args.k, args.window)
    print("u,v,intensity")
    for d in dets:
        print(f"{d.u},{d.v},{d.intensity:g}")
    if args.write_map:
        write_pbm(Path(args.image).with_suffix(".pbm"), bmap)
    return EXIT_OK


def cmd_metrics(args):
    try:
        traj = read_log(args.trajectory)
    except OSError as exc:
        return _fail(f"{args.trajectory}: {exc}")
    except MalformedLog as exc:
        return _fail(f"{args.trajectory}: {exc}")
    touchdown = np.zeros(3)
    if args.config:
        try:
            touchdown = config_mod.load(args.config).glide_config().touchdown
        except ConfigError as exc:
            return _fail(str(exc))
    try:
        rows = compute_metrics(traj, args.bands, touchdown=touchdown)
    except (EmptyBand, ValueError) as exc:
        return _fail(f"metrics: {exc}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_metrics(out / "metrics.csv", rows)
    print(format_metrics(rows))
    return EXIT_OK


def _numeric_key(key):
    if key not in config_mod.valid_keys():
        return False
    default = config_mod.RunConfig()
    sec, name = key.split(".", 1)
    val = getattr(getattr(default, sec), name)
    return isinstance(val, (int, float)) and not isinstance(val, bool)


def derived_seed(seed, index):
    """Seed for the ``index``-th run of a sweep over a base ``seed``."""
    return int(rng_for(seed, "sweep", index).integers(2 ** 63))


def cmd_sweep(args):
    if not _numeric_key(args.param):
        return _fail(f"unknown or non-numeric key {args.param!r}; valid keys: "
                     + ", ".join(k for k in config_mod.valid_keys() if _numeric_key(k)))
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        return _fail("empty value list")
    try:
        base = _load_config(args.config, args.seed)
        cfgs = [config_mod.validate(config_mod.with_value(
            config_mod.with_value(base, args.param, v), "run.seed", derived_seed(base.seed, i)))
            for i, v in enumerate(values)]
    except ConfigError as exc:
        return _fail(str(exc))

    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["param", "value", "seed", "diverged"]
    for b in args.bands:
        header += [f"{c}@{b:g}" for c in METRICS_COLUMNS[1:]]
    lines = [",".join(header)]
    any_diverged = False
    for i, (v, cfg) in enumerate(zip(values, cfgs)):
        log.info("sweep %s=%s (seed %d)", args.param, v, cfg.seed)
        try:
            traj, rows = _simulate_once(cfg, out / "runs" / f"{i:03d}", args.bands)
        except EmptyBand as exc:
            return _fail(f"metrics for {args.param}={v}: {exc}")
        any_diverged |= traj.diverged
        cells = [args.param, v, str(cfg.seed), str(int(traj.diverged))]
        for r in rows:
            cells += [format(r.max_linear_dev_m, ".17g"), format(r.max_orient_dev_deg, ".17g")]
        lines.append(",".join(cells))
        print(f"{args.param}={v}: " + ", ".join(
            f"{r.band_m:g} m -> {r.max_linear_dev_m:.3f} m / {r.max_orient_dev_deg:.3f} deg"
            for r in rows))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return EXIT_DIVERGED if any_diverged else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="beaconland",
                                description="Infrared-beacon landing tracker simulator.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = p.add_subparsers(dest="command", required=True)

    def out_arg(sp):
        sp.add_argument("-o", "--out", help=f"output directory (default ${OUT_ENV} or ./out)")

    def bands_arg(sp):
        sp.add_argument("--bands", type=_bands, default=DEFAULT_BANDS,
                        help="descending band edges in meters (default 500,100,10)")

    s = sub.add_parser("simulate", help="run one synthetic approach")
    s.add_argument("-c", "--config", required=True, help="INI config file")
    s.add_argument("--seed", type=int, help="override run.seed")
    s.add_argument("--debug-dumps", action="store_true",
                   help="write per-frame image/binary/distance maps under OUT/frames")
    out_arg(s)
    bands_arg(s)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("detect", help="detect light sources in a P5 PGM image")
    d.add_argument("image")
    d.add_argument("-k", type=float, default=DEFAULT_K, help="threshold in standard deviations")
    d.add_argument("-w", "--window", type=int, default=DEFAULT_WINDOW, help="odd vicinity size")
    d.add_argument("--write-map", action="store_true",
                   help="write the binary map as a PBM next to the input")
    d.set_defaults(func=cmd_detect)

    m = sub.add_parser("metrics", help="band metrics of a trajectory CSV")
    m.add_argument("trajectory")
    m.add_argument("-c", "--config", help="config whose glide defines the touchdown point")
    m.add_argument("-o", "--out", help="also write metrics.csv into this directory")
    bands_arg(m)
    m.set_defaults(func=cmd_metrics)

    w = sub.add_parser("sweep", help="run one simulation per value of a config key")
    w.add_argument("-c", "--config", required=True, help="INI config file")
    w.add_argument("--param", required=True, help="dotted config key, e.g. filter.particles")
    w.add_argument("--values", required=True, help="comma-separated values")
    w.add_argument("--seed", type=int, help="override the base run.seed")
    out_arg(w)
    bands_arg(w)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BeaconlandError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
