"""Command-line surface.

    uavnav run    --scene scene.json [--planner oracle|vlm|scripted] ...
    uavnav suite  --dir scenes/ [--reps 5] ...
    uavnav replay --record episode.jsonl [--out dir]
    uavnav plot   --record episode.jsonl --out traj.svg

Exit codes: 0 all requested episodes ended in Success, 1 completed with
failures (or a replay mismatch), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, EpisodeConfig, load_config
from .harness import (RecordFormatError, ReplayMismatchError, read_record,
                      render_report_json, render_report_table, replay,
                      run_episode_file, run_suite)
from .plotting import emit_plot
from .scaler import MODE_FIXED


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (CLI flags override it)")
    p.add_argument("--planner", choices=("oracle", "vlm", "scripted"), default=None)
    p.add_argument("--fixed-step", type=float, default=None, metavar="METERS",
                   help="force fixed-step scaling with this step size")
    p.add_argument("--latency", type=float, default=None, metavar="SECONDS",
                   help="simulated planner latency")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pipelined", action="store_true",
                   help="plan during the tail of execution instead of between schedules")
    p.add_argument("--no-avoid", action="store_true",
                   help="disable image-space obstacle adjustment")
    p.add_argument("--no-jitter", action="store_true",
                   help="disable seeded start-pose jitter")
    p.add_argument("-v", "--verbose", action="store_true")


def _build_config(args: argparse.Namespace) -> EpisodeConfig:
    cfg = load_config(args.config)
    if args.planner is not None:
        cfg = replace(cfg, planner_kind=args.planner)
    if args.fixed_step is not None:
        cfg = replace(cfg, scaler=replace(cfg.scaler, mode=MODE_FIXED,
                                          fixed_step=args.fixed_step))
    if args.latency is not None:
        cfg = replace(cfg, planner_latency=args.latency)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.pipelined:
        cfg = replace(cfg, pipelined=True)
    if args.no_avoid:
        cfg = replace(cfg, avoid_enabled=False)
    if args.no_jitter:
        cfg = replace(cfg, jitter_enabled=False)
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    planner = None
    if cfg.planner_kind == "scripted":
        if not args.script:
            raise ConfigError("--planner scripted requires --script RECORD")
        from .planner import ScriptedPlanner, outcome_from_dict
        src = read_record(args.script)
        planner = ScriptedPlanner([outcome_from_dict(r["outcome"]) for r in src.plan_rows])
    metrics, record = run_episode_file(cfg, args.scene, planner=planner)
    print(json.dumps(metrics.to_dict(), indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        record_path = out / (Path(args.scene).stem + ".jsonl")
        record.write(record_path)
        emit_plot(record, out / (Path(args.scene).stem + ".svg"))
        print(f"record: {record_path}", file=sys.stderr)
    return 0 if metrics.success else 1


def _cmd_suite(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    report = run_suite(args.dir, cfg, reps=args.reps, out_dir=args.out)
    print(render_report_table(report))
    if args.out:
        print(f"report: {Path(args.out) / 'report.json'}", file=sys.stderr)
    else:
        print(render_report_json(report), end="")
    ov = report["overall"]
    return 0 if ov["successes"] == ov["episodes"] else 1


def _cmd_replay(args: argparse.Namespace) -> int:
    try:
        metrics, record = replay(args.record, verify=True)
    except ReplayMismatchError as e:
        print(f"replay mismatch: {e}", file=sys.stderr)
        return 1
    print(json.dumps(metrics.to_dict(), indent=2))
    print("replay: trajectory identical to record", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        record.write(out / "replay.jsonl")
    return 0 if metrics.success else 1


def _cmd_plot(args: argparse.Namespace) -> int:
    record = read_record(args.record)
    fig_path, csv_path = emit_plot(record, args.out)
    print(f"wrote {fig_path} and {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavnav",
                                     description="Closed-loop UAV waypoint-navigation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one episode")
    p_run.add_argument("--scene", required=True, help="scene/task JSON file")
    p_run.add_argument("--out", help="directory for the trajectory record and plot")
    p_run.add_argument("--script", help="source record for --planner scripted")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="run every scene in a directory")
    p_suite.add_argument("--dir", required=True, help="directory of scene JSON files")
    p_suite.add_argument("--reps", type=int, default=5,
                         help="repetitions per scene (seed advances each rep)")
    p_suite.add_argument("--out", help="directory for records and report.json")
    _add_common(p_suite)
    p_suite.set_defaults(func=_cmd_suite)

    p_replay = sub.add_parser("replay", help="re-run an episode from its record")
    p_replay.add_argument("--record", required=True)
    p_replay.add_argument("--out", help="directory for the replayed record")
    p_replay.add_argument("-v", "--verbose", action="store_true")
    p_replay.set_defaults(func=_cmd_replay)

    p_plot = sub.add_parser("plot", help="render a trajectory record")
    p_plot.add_argument("--record", required=True)
    p_plot.add_argument("--out", required=True, help="figure path (.svg/.pdf/.png)")
    p_plot.add_argument("-v", "--verbose", action="store_true")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, RecordFormatError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
