"""
Command line entry point: ``vlcloc <command> [--config FILE] [--seed N] [--out PATH] [--trials N]``.

Sweeps are written as CSV, single-shot results as JSON. Without ``--out`` (or
an ``output`` entry in the config) the result goes to stdout.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .channel import observe
from .exceptions import VLCLocError
from .experiments import (PATH_COLUMNS, derive_seed, load_observation, localize_once,
                          observation_payload, run_convergence_experiment, run_coverage_sweep,
                          run_crlb_grid, run_path_experiment, write_csv, write_json, fmt)
from .geometry import build_room_scene

COMMANDS = ("path1", "path2", "convergence", "coverage-ceiling", "coverage-polar",
            "crlb-grid", "localize", "simulate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlcloc", description="VLC receiver localisation experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML experiment file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--trials", type=int, help="trials per position")
        if name == "localize":
            p.add_argument("--observation", required=True,
                           help="JSON file with the RSS vector under key 's'")
    return parser


def _config_for(args) -> ExperimentConfig:
    kind = "localize-once" if args.command in ("localize", "simulate") else args.command
    if args.config:
        cfg = load_config(args.config)
        if cfg.kind != kind and not (kind == "localize-once" and args.command == "simulate"):
            raise VLCLocError(f"config kind {cfg.kind!r} does not match command {args.command!r}")
    else:
        cfg = ExperimentConfig(kind=kind)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise VLCLocError("seed must be an unsigned 64-bit integer")
    return cfg.with_overrides(seed=args.seed, trials=args.trials, output=args.out)


def _emit_csv(out, columns, rows):
    if out:
        write_csv(out, columns, rows)
        return
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    sys.stdout.write(buf.getvalue())


def _emit_json(out, payload):
    if out:
        write_json(out, payload)
    else:
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run(args) -> None:
    cfg = _config_for(args)
    out = cfg.output
    cmd = args.command
    if cmd in ("path1", "path2"):
        _emit_csv(out, PATH_COLUMNS, run_path_experiment(cfg))
    elif cmd == "convergence":
        _emit_csv(out, ["clusters", "probability"], run_convergence_experiment(cfg))
    elif cmd in ("coverage-ceiling", "coverage-polar"):
        axis = "ceiling_deg" if cmd == "coverage-ceiling" else "polar_deg"
        _emit_csv(out, [axis, "threshold", "probability"], run_coverage_sweep(cfg))
    elif cmd == "crlb-grid":
        report = run_crlb_grid(cfg)
        summary = {"spacing": report.spacing, "room": list(report.room),
                   "probabilities": {fmt(t): p for t, p in report.probabilities.items()}}
        _emit_csv(out, ["x", "y", "z", "crlb"], report.rows())
        if out:
            write_json(Path(out).with_suffix(".summary.json"), summary)
        else:
            _emit_json(None, summary)
    elif cmd == "simulate":
        scene = build_room_scene(cfg.scenario, cfg.receiver_location)
        obs = observe(scene, cfg.noise_variance, derive_seed(cfg.seed, 0, 0))
        _emit_json(out, observation_payload(obs, scene.receiver.location))
    else:
        scene = build_room_scene(cfg.scenario, cfg.receiver_location)
        obs = load_observation(args.observation, scene, cfg.noise_variance)
        _emit_json(out, localize_once(cfg, obs))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except (VLCLocError, ValueError, ZeroDivisionError) as exc:
        msg = " ".join(str(exc).split())
        print(f"vlcloc: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
