"""Command-line entry point: run exploration missions and compare planners.

Exit codes: 0 success, 1 runtime failure, 2 bad usage or configuration.
"""
from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

from . import maps
from .config import ConfigError, ExperimentConfig, apply_overrides, \
    parse_config, serialize_config
from .simulator import (PLANNERS, GroundTruthGrid, MapParseError, MissionLog,
                        load_map_file, run_mission)


def _load_grid(cfg: ExperimentConfig) -> GroundTruthGrid:
    name = cfg.mission.map
    if name in maps.BUILTIN_MAPS:
        if name == "maze":
            return maps.maze_map(seed=cfg.mission.maze_seed,
                                 cell_width=cfg.mission.cell_width)
        return maps.BUILTIN_MAPS[name](cell_width=cfg.mission.cell_width)
    return load_map_file(name)


def _build_config(args) -> ExperimentConfig:
    if args.config:
        cfg = parse_config(Path(args.config).read_text())
    else:
        cfg = ExperimentConfig()
    apply_overrides(cfg, args.set or [])
    if getattr(args, "map", None):
        cfg.mission.map = args.map
    if getattr(args, "planner", None):
        cfg.mission.planner = args.planner
    if getattr(args, "seeds", None):
        cfg.mission.seeds = tuple(args.seeds)
    if getattr(args, "steps", None):
        cfg.mission.step_limit = args.steps
    if getattr(args, "frames", None):
        cfg.options.frames_every = args.frames
    return cfg


def _run_one(grid, planner, cfg, seed, out_dir: Path) -> MissionLog:
    opts = cfg.options
    if opts.frames_every:
        frames = out_dir / f"frames_{planner}_{seed}"
        frames.mkdir(parents=True, exist_ok=True)
        import dataclasses
        opts = dataclasses.replace(opts, frames_dir=str(frames))
    log = run_mission(grid, planner, cfg.sensor, cfg.rewards, cfg.planner,
                      seed, cfg.mission.step_limit, opts,
                      map_name=cfg.mission.map)
    log.to_csv(out_dir / f"{planner}_seed{seed}.csv")
    return log


def _summarize(logs: list[MissionLog]) -> dict:
    return {
        "planner": logs[0].planner,
        "seeds": [l.seed for l in logs],
        "covered_m2_mean": statistics.mean(l.final_covered_m2 for l in logs),
        "path_m_mean": statistics.mean(l.final_path_m for l in logs),
        "risk_mean": statistics.mean(l.total_risk for l in logs),
        "steps_mean": statistics.mean(l.steps for l in logs),
        "completed": sum(l.completed for l in logs),
        "reachable_m2": logs[0].reachable_free_m2,
    }


def cmd_run(args) -> int:
    cfg = _build_config(args)
    grid = _load_grid(cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs = [_run_one(grid, cfg.mission.planner, cfg, seed, out_dir)
            for seed in cfg.mission.seeds]
    summary = _summarize(logs)
    (out_dir / "meta.json").write_text(json.dumps(summary, indent=2) + "\n")
    (out_dir / "config.ini").write_text(serialize_config(cfg))
    frac = summary["covered_m2_mean"] / max(summary["reachable_m2"], 1e-12)
    print(f"{summary['planner']}: covered {summary['covered_m2_mean']:.1f} m^2 "
          f"({100 * frac:.1f}% of reachable), path {summary['path_m_mean']:.1f} m, "
          f"risk {summary['risk_mean']:.2f}, "
          f"{summary['completed']}/{len(logs)} missions complete")
    return 0


def cmd_compare(args) -> int:
    cfg = _build_config(args)
    grid = _load_grid(cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = []
    for planner in args.planners:
        logs = [_run_one(grid, planner, cfg, seed, out_dir)
                for seed in cfg.mission.seeds]
        report.append(_summarize(logs))
    (out_dir / "meta.json").write_text(json.dumps(report, indent=2) + "\n")
    (out_dir / "config.ini").write_text(serialize_config(cfg))
    hdr = f"{'planner':10s} {'covered m^2':>12s} {'path m':>8s} {'risk':>7s} {'done':>5s}"
    print(hdr)
    for row in report:
        print(f"{row['planner']:10s} {row['covered_m2_mean']:12.1f} "
              f"{row['path_m_mean']:8.1f} {row['risk_mean']:7.2f} "
              f"{row['completed']:3d}/{len(cfg.mission.seeds)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="covplan",
        description="Coverage path planning missions on occupancy-grid worlds.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--map", help="builtin map name or path to a .map file")
        sp.add_argument("--seeds", type=int, nargs="+", help="mission RNG seeds")
        sp.add_argument("--steps", type=int, help="per-mission step limit")
        sp.add_argument("--out", default="runs", help="output directory")
        sp.add_argument("--config", help="INI config file")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="config override, repeatable")
        sp.add_argument("--frames", type=int,
                        help="dump a lattice snapshot every N steps")

    run = sub.add_parser("run", help="run one planner")
    common(run)
    run.add_argument("--planner", choices=PLANNERS)
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run several planners on one map")
    common(cmp_)
    cmp_.add_argument("--planners", nargs="+", choices=PLANNERS,
                      default=list(PLANNERS))
    cmp_.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, MapParseError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
