"""Command-line harness.

Verbs:
    bench run <config>            run the benchmark suite, write CSV + figures
    bench timing <config>         run the timing probes, write timing.csv
    bench map gen <type> <seed> <out>   generate a world map file
    bench replay <trace> --map M  re-check a trace for collisions

Exit codes: 0 success, 1 usage, 2 config validation, 3 I/O. The output
directory can be overridden by the TENTANAV_OUT environment variable; the
--out flag takes precedence over it, and --seed over the config seed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from .bench import ConfigParseError, ConfigValidationError
from .sim import RobotModel, read_map, read_trace, replay_trace, write_map

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_IO = 3

ENV_OUTPUT_DIR = "TENTANAV_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bench", description="Reactive navigation benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the benchmark suite from a config file")
    run.add_argument("config", help="YAML config path")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", default=None, help="override the output directory")
    run.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    timing = sub.add_parser("timing", help="run the timing probes")
    timing.add_argument("config", help="YAML config path")
    timing.add_argument("--seed", type=int, default=None)
    timing.add_argument("--out", default=None)

    map_cmd = sub.add_parser("map", help="map utilities")
    map_sub = map_cmd.add_subparsers(dest="map_command", required=True)
    gen = map_sub.add_parser("gen", help="generate a world map file")
    gen.add_argument("type", choices=["forest", "cylinders", "empty"])
    gen.add_argument("seed", type=int)
    gen.add_argument("out", help="output map file path")
    gen.add_argument("--count", type=int, default=15, help="cylinder count (cylinders maps)")
    gen.add_argument("--area", type=float, default=100.0, help="area in m^2 (forest maps)")
    gen.add_argument("--density", type=float, default=0.2, help="trees per m^2 (forest maps)")

    replay = sub.add_parser("replay", help="re-check a trace against a map for collisions")
    replay.add_argument("trace", help="trace file path")
    replay.add_argument("--map", required=True, dest="map_path", help="map file path")
    replay.add_argument("--robot-box", nargs=3, type=float, metavar=("L", "W", "H"),
                        default=[0.45, 0.45, 0.25], help="robot bounding box, meters")
    return parser


def _resolve_outdir(flag_value, config_value) -> str:
    if flag_value is not None:
        return flag_value
    env_value = os.environ.get(ENV_OUTPUT_DIR)
    if env_value:
        return env_value
    return config_value


def _cmd_run(args) -> int:
    params, spec, _timing = bench_mod.parse_config(args.config, seed_override=args.seed)
    outdir = _resolve_outdir(args.out, spec.output_dir)

    def progress(row):
        print(f"  {row.map_label} trial {row.trial}: {row.outcome} "
              f"({row.duration:.1f} s, {row.path_length:.1f} m)")

    print(f"running {len(spec.maps)} map(s) x {spec.trials} trial(s), seed {spec.seed}")
    results = bench_mod.run_benchmark(spec, params, progress=progress)
    try:
        written = bench_mod.emit_results(results, outdir)
    except OSError as exc:
        print(f"error: cannot write results to {outdir}: {exc}", file=sys.stderr)
        return EXIT_IO
    if spec.plots and not args.no_plots:
        from .plots import render_benchmark_figures

        written += render_benchmark_figures(results, outdir)
    print(f"overall success rate: {results.overall_success_rate:.2f}")
    print(f"wrote {len(written)} file(s) under {outdir}")
    return EXIT_OK


def _cmd_timing(args) -> int:
    params, spec, timing = bench_mod.parse_config(args.config, seed_override=args.seed)
    outdir = _resolve_outdir(args.out, spec.output_dir)
    reports = bench_mod.run_timing_probe(params, timing, seed=spec.seed)
    print(bench_mod.format_timing_table(reports), end="")
    try:
        path = bench_mod.emit_timing(reports, outdir)
    except OSError as exc:
        print(f"error: cannot write timing results to {outdir}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_map_gen(args) -> int:
    spec = bench_mod.MapSpec(
        kind=args.type,
        seed=args.seed,
        label=f"{args.type}{args.seed}",
        count=args.count,
        area=args.area,
        density=args.density,
    )
    world = bench_mod.build_world(spec)
    try:
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w") as f:
            write_map(world, f)
    except OSError as exc:
        print(f"error: cannot write map file {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out} ({len(world.obstacles)} obstacle(s))")
    return EXIT_OK


def _cmd_replay(args) -> int:
    try:
        with open(args.map_path) as f:
            world = read_map(f)
        with open(args.trace) as f:
            trace = read_trace(f)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    l, w, h = args.robot_box
    model = RobotModel(w_R=w, l_R=l, h_R=h)
    collisions = replay_trace(trace, world, model)
    if collisions:
        print(f"{len(collisions)} colliding record(s); first at index {collisions[0]} "
              f"(t={trace[collisions[0], 0]:.3f} s)")
    else:
        print(f"trace is collision-free over {len(trace)} record(s)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "timing":
            return _cmd_timing(args)
        if args.command == "map":
            return _cmd_map_gen(args)
        if args.command == "replay":
            return _cmd_replay(args)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    parser.error("no command given")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
