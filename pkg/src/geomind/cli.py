"""Command-line entry point.

Usage: geomind <simulate|compete|learn|analyze|geodesic> --config <path>
       [--out <dir>] [--seed <n> ...]

Exit status is 0 on success, 1 on a runtime failure (with a report file
written), 2 on usage or configuration errors. All outputs are deterministic
for a fixed config and seed list.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path


from .config import RunConfig, load_config
from .errors import ConfigError, FieldFormatError, NoGeodesicError
from .geodesic import geodesic_between, path_length_energy
from .io import export_trajectory, field_to_dict
from .mind import (analyze_field, pca_projection, run_learning,
                   run_thought_flow, select_conscious)


COMMANDS = ("simulate", "compete", "learn", "analyze", "geodesic")


def _configure_logging() -> None:
    level_name = os.environ.get("GEOMIND_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _run_flows(config: RunConfig):
    source = config.metric_source()
    flows = []
    for seed in config.seeds:
        flow = run_thought_flow(
            config.field, source, config.params, inputs=config.inputs,
            n_steps=config.steps, dt=config.dt, seed=seed,
            start=config.start, velocity=config.velocity)
        flows.append(flow)
    return flows


def _export_flows(flows, config: RunConfig) -> bool:
    truncated = False
    for flow in flows:
        name = f"trajectory_seed{flow.seed}.{config.fmt}"
        export_trajectory(flow.trajectory, config.fmt, config.out_dir / name)
        truncated = truncated or flow.trajectory.truncated
    return truncated


def cmd_simulate(config: RunConfig) -> int:
    flows = _run_flows(config)
    truncated = _export_flows(flows, config)
    if truncated:
        bad = [f.seed for f in flows if f.trajectory.truncated]
        _write_json(config.out_dir / "failure.json",
                    {"error": "chart-exit", "seeds": bad})
        return 1
    return 0


def cmd_compete(config: RunConfig) -> int:
    flows = _run_flows(config)
    truncated = _export_flows(flows, config)
    selection = select_conscious(flows, config.threshold)
    _write_json(config.out_dir / "selection.json", {
        "threshold": selection.threshold,
        "scores": selection.scores,
        "winner_index": selection.winner,
        "winner_seed": None if selection.winner is None else config.seeds[selection.winner],
    })
    if truncated:
        bad = [f.seed for f in flows if f.trajectory.truncated]
        _write_json(config.out_dir / "failure.json",
                    {"error": "chart-exit", "seeds": bad})
        return 1
    return 0


def cmd_learn(config: RunConfig) -> int:
    if config.learning_input is None:
        raise ConfigError("learn command requires learning.input in the config")
    snapshots, error_norms = run_learning(
        config.field, config.params, config.learning_input,
        cycles=config.learning_cycles, dt=config.dt, seed=config.seeds[0],
        rate=config.learning_rate, start=config.start, velocity=config.velocity)
    for k, snap in enumerate(snapshots):
        _write_json(config.out_dir / f"field_cycle{k:04d}.json", field_to_dict(snap))
    if config.fmt == "csv":
        lines = ["cycle,error_norm"]
        lines += [f"{k},{repr(float(e))}" for k, e in enumerate(error_norms, start=1)]
        (config.out_dir / "error_curve.csv").write_text("\n".join(lines) + "\n")
    else:
        _write_json(config.out_dir / "error_curve.json",
                    {"error_norms": [float(e) for e in error_norms]})
    return 0


def cmd_analyze(config: RunConfig) -> int:
    source = config.metric_source()
    report = analyze_field(config.field, source)
    _write_json(config.out_dir / "field_report.json", {
        "curvature_samples": [
            {"point": p.tolist(), "scalar": s} for p, s in report.curvature_samples
        ],
        "high_curvature": [p.tolist() for p in report.high_curvature],
        "percentile_cut": report.percentile_cut,
        "components": report.components,
        "intrinsic_dimension": report.intrinsic_dimension,
    })
    projection = pca_projection(config.field)
    if config.fmt == "csv":
        lines = ["token_id,x,y"]
        lines += [f"{tid},{repr(float(c[0]))},{repr(float(c[1]))}"
                  for tid, c in sorted(projection.items())]
        (config.out_dir / "pca_projection.csv").write_text("\n".join(lines) + "\n")
    else:
        _write_json(config.out_dir / "pca_projection.json",
                    {str(tid): c.tolist() for tid, c in sorted(projection.items())})
    return 0


def cmd_geodesic(config: RunConfig) -> int:
    if config.geodesic_start is None or config.geodesic_end is None:
        raise ConfigError("geodesic command requires geodesic.start and geodesic.end")
    source = config.metric_source()
    try:
        traj = geodesic_between(config.geodesic_start, config.geodesic_end,
                                source, config.shooting)
    except NoGeodesicError as exc:
        _write_json(config.out_dir / "no_geodesic.json", {
            "error": "no-geodesic-found",
            "miss": exc.miss,
            "iterations": exc.iterations,
        })
        return 1
    export_trajectory(traj, config.fmt, config.out_dir / f"geodesic_path.{config.fmt}")
    length, energy = path_length_energy(traj, source)
    _write_json(config.out_dir / "geodesic_summary.json",
                {"length": length, "energy": energy})
    return 0


def run(command: str, config: RunConfig) -> int:
    """Dispatch a command against a validated config; returns the exit status."""
    handlers = {
        "simulate": cmd_simulate,
        "compete": cmd_compete,
        "learn": cmd_learn,
        "analyze": cmd_analyze,
        "geodesic": cmd_geodesic,
    }
    if command not in handlers:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    config.out_dir.mkdir(parents=True, exist_ok=True)
    return handlers[command](config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geomind",
        description="Simulate thought flows on token-embedding manifolds")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--seed", type=int, action="append", default=None,
                        help="override the seed list (repeatable)")
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config, out_override=args.out, seed_override=args.seed)
        return run(args.command, config)
    except (ConfigError, FieldFormatError) as exc:
        print(f"geomind: error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
