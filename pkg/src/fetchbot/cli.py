"""Command-line entry points: build-map, run, serve.

Exit codes: 0 success, 2 scenario fault, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .grid import save_grid_pgm
from .scenario import ConfigError, load_scenario
from .trace import TraceWriter

EXIT_OK = 0
EXIT_SCENARIO_FAULT = 2
EXIT_CONFIG_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fetchbot",
                                     description="Deterministic fetch-and-handover robot simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("build-map", help="survey the scenario world into a PGM static map")
    p_map.add_argument("scenario")
    p_map.add_argument("--out", required=True, help="output path prefix (writes PREFIX.pgm + PREFIX.meta.yaml)")

    p_run = sub.add_parser("run", help="run a scenario headless")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--ticks", type=int, default=None, help="step budget override")
    p_run.add_argument("--trace", default=None, help="trace file path (line-delimited JSON)")
    p_run.add_argument("--headless", action="store_true", default=True,
                       help=argparse.SUPPRESS)  # headless is the only mode here
    p_run.add_argument("--command-log", default=None, help="write applied commands as JSON")
    p_run.add_argument("--inject-log", default=None,
                       help="replay a recorded command log (JSON [tick, command] pairs) as the script")

    p_serve = sub.add_parser("serve", help="serve the scenario live over a WebSocket")
    p_serve.add_argument("scenario")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--rate", type=float, default=20.0,
                         help="ticks per second (0 = as fast as possible)")
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.add_argument("--trace", default=None)
    p_serve.add_argument("--command-log", default=None)
    return parser


def _cmd_build_map(args) -> int:
    from . import mapping

    scenario = load_scenario(args.scenario)
    world = scenario.make_world(scenario.seed)
    grid = mapping.build_static_map(world, resolution=scenario.map.resolution,
                                    margin=scenario.map.margin,
                                    scan_sigma=scenario.map.build_sigma,
                                    sweep_spacing=scenario.map.sweep_spacing)
    save_grid_pgm(grid, args.out + ".pgm", args.out + ".meta.yaml")
    print(f"map written: {args.out}.pgm ({grid.width}x{grid.height} @ {grid.resolution} m)")
    return EXIT_OK


def _cmd_run(args) -> int:
    from .runner import ScenarioRunner

    scenario = load_scenario(args.scenario)
    if args.inject_log:
        with open(args.inject_log, "r", encoding="utf-8") as fh:
            scenario.script = [(int(t), dict(c)) for t, c in json.load(fh)]
    runner = ScenarioRunner(scenario, seed=args.seed, trace=TraceWriter(args.trace))
    result = runner.run(max_ticks=args.ticks)
    if args.command_log:
        with open(args.command_log, "w", encoding="utf-8") as fh:
            json.dump([[t, c] for t, c in runner.command_log], fh)
    summary = {
        "completed": result.completed,
        "final_state": result.final_state,
        "ticks": result.ticks,
        "collisions": result.collisions,
        "replans": result.replans,
        "fault": result.fault,
    }
    print(json.dumps(summary))
    return EXIT_OK if result.completed else EXIT_SCENARIO_FAULT


def _cmd_serve(args) -> int:
    from .runner import ScenarioRunner
    from .server import run_server

    scenario = load_scenario(args.scenario)
    runner = ScenarioRunner(scenario, seed=args.seed, trace=TraceWriter(args.trace))
    try:
        run_server(runner, host=args.host, port=args.port, tick_rate=args.rate)
    except KeyboardInterrupt:
        pass
    if args.command_log:
        with open(args.command_log, "w", encoding="utf-8") as fh:
            json.dump([[t, c] for t, c in runner.command_log], fh)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "build-map":
            return _cmd_build_map(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
