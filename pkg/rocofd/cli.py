import argparse
import logging
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from braceexpand import braceexpand

from . import report
from ._version import __version__
from .data import GridModel, read_grid_file, validate_grid
from .dispatch import coi_dispatch, dispatch
from .errors import InternalConsistencyError, ModelAssumptionError
from .network import assemble_blocks
from .rocof import ALL_LOAD_BUSES, Disturbance, nodal_rocof_report, screen_contingencies, trip_generator
from .simulate import initial_rocof_estimate, simulate_swing

logger = logging.getLogger(__name__)

COMMANDS = ("validate", "rocof", "screen", "dispatch", "simulate")
THREADS_ENV = "ROCOF_DISPATCH_THREADS"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_MODEL = 3


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    r"""
    One command-line invocation.

    Args:
        command: One of ``validate``, ``rocof``, ``screen``, ``dispatch``, ``simulate``.
        grid_path: Grid file, URL or brace pattern (``validate`` only).
        bus: Disturbed load bus.
        mw: Disturbance size, or the tripped output with ``trip``, MW.
        all_load_buses: Use one disturbance of ``mw`` at every load bus.
        trip: Generator to trip.
        rocof_max: RoCoF limit for ``dispatch``, Hz/s.
        output_format: ``json`` or ``csv``.
        output: Output path; stdout if ``None``.
        dt: Simulation step, s.
        horizon: Simulated time, s.
        coi: Dispatch with the centre-of-inertia constraint instead of the nodal one.
        dump_blocks: Path for a CSV dump of the susceptance matrix.
        threads: Screening parallelism.
        verbose: Log at DEBUG level.
    """

    command: str
    grid_path: str
    bus: Optional[str] = None
    mw: Optional[float] = None
    all_load_buses: bool = False
    trip: Optional[str] = None
    rocof_max: Optional[float] = None
    output_format: str = "json"
    output: Optional[str] = None
    dt: float = 1e-3
    horizon: float = 1.0
    coi: bool = False
    dump_blocks: Optional[str] = None
    threads: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        assert self.command in COMMANDS, f"Unknown command '{self.command}'."
        if self.command == "validate":
            return
        if self.mw is None:
            raise UsageError(f"{self.command} requires --mw")
        if self.command in ("rocof", "simulate") and self.bus is None and self.trip is None:
            raise UsageError(f"{self.command} requires --bus or --trip")
        if self.command in ("screen", "dispatch") and self.trip is not None:
            raise UsageError(f"--trip is not supported by {self.command}")
        if self.all_load_buses and self.command not in ("screen", "dispatch"):
            raise UsageError(f"--all-load-buses is not supported by {self.command}")
        if self.command == "dispatch":
            if self.rocof_max is None:
                raise UsageError("dispatch requires --rocof-max")
            if self.bus is None and not self.all_load_buses:
                raise UsageError("dispatch requires --bus or --all-load-buses")
        if self.coi and self.command != "dispatch":
            raise UsageError("--coi is only supported by dispatch")


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"error: {message}\n")


def thread_limit(environ=os.environ) -> int:
    """Screening threads from ``ROCOF_DISPATCH_THREADS``, default ``min(4, cpu_count)``."""
    raw = environ.get(THREADS_ENV)
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        threads = int(raw)
    except ValueError:
        threads = 0
    if threads < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got '{raw}'")
    return threads


def build_parser() -> ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", required=True, help="grid JSON file, file:// or gs:// URL")
    common.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="output path (default: stdout)")
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")

    where = argparse.ArgumentParser(add_help=False)
    group = where.add_mutually_exclusive_group()
    group.add_argument("--bus", default=None, help="disturbed load bus")
    group.add_argument("--all-load-buses", action="store_true", help="one disturbance at every load bus")
    group.add_argument("--trip", default=None, help="generator to trip")
    where.add_argument("--mw", type=float, default=None, help="disturbance size in MW")
    where.add_argument("--dump-blocks", default=None, help="write the susceptance matrix to this CSV")

    parser = ArgumentParser(prog="rocofd", description="Nodal RoCoF screening and inertia dispatch.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("validate", parents=[common], help="check grid files")
    commands.add_parser("rocof", parents=[common, where], help="initial nodal RoCoF of one disturbance")
    commands.add_parser("screen", parents=[common, where], help="initial nodal RoCoF of a contingency set")
    dispatch_parser = commands.add_parser("dispatch", parents=[common, where], help="optimal inertia dispatch")
    dispatch_parser.add_argument("--rocof-max", type=float, default=None, help="RoCoF limit in Hz/s")
    dispatch_parser.add_argument("--coi", action="store_true", help="use the centre-of-inertia constraint")
    simulate_parser = commands.add_parser("simulate", parents=[common, where], help="swing-equation trace")
    simulate_parser.add_argument("--dt", type=float, default=1e-3, help="step size in s")
    simulate_parser.add_argument("--horizon", type=float, default=1.0, help="simulated time in s")
    return parser


def parse_config(argv: Optional[Sequence[str]] = None, environ=os.environ) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return RunConfig(
            command=args.command,
            grid_path=args.grid,
            bus=getattr(args, "bus", None),
            mw=getattr(args, "mw", None),
            all_load_buses=getattr(args, "all_load_buses", False),
            trip=getattr(args, "trip", None),
            rocof_max=getattr(args, "rocof_max", None),
            output_format=args.output_format,
            output=args.output,
            dt=getattr(args, "dt", 1e-3),
            horizon=getattr(args, "horizon", 1.0),
            coi=getattr(args, "coi", False),
            dump_blocks=getattr(args, "dump_blocks", None),
            threads=thread_limit(environ) if args.command == "screen" else 1,
            verbose=args.verbose,
        )
    except UsageError as e:
        parser.error(str(e))


def configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("rocofd")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)


def _disturbance(config: RunConfig, grid: GridModel) -> Tuple[GridModel, Disturbance]:
    if config.trip is not None:
        return trip_generator(grid, config.trip, config.mw)
    return grid, Disturbance(config.bus, config.mw)


def _emit(config: RunConfig, json_text: str, csv_text: str) -> None:
    report.write_text(json_text if config.output_format == "json" else csv_text, config.output)


def run_validate(config: RunConfig) -> int:
    code = EXIT_OK
    for path in braceexpand(config.grid_path):
        try:
            grid = read_grid_file(path)
        except (OSError, ValueError) as e:
            print(f"error: {path}: {e}", file=sys.stderr)
            code = EXIT_USAGE
            continue
        result = validate_grid(grid)
        for issue in result.issues:
            print(f"{path}: {issue}", file=sys.stderr)
        if result.ok:
            print(f"{path}: ok (n={grid.n}, m={grid.m})")
        else:
            code = EXIT_USAGE
    return code


def run_rocof(config: RunConfig, grid: GridModel) -> int:
    grid, d = _disturbance(config, grid)
    try:
        result = nodal_rocof_report(grid, d)
    except ModelAssumptionError as e:
        if e.report is not None:
            _emit(config, report.rocof_report_json(e.report), report.rocof_report_csv(e.report))
        raise
    _emit(config, report.rocof_report_json(result), report.rocof_report_csv(result))
    return EXIT_OK


def run_screen(config: RunConfig, grid: GridModel) -> int:
    contingencies = [Disturbance(config.bus, config.mw)] if config.bus is not None else ALL_LOAD_BUSES
    result = screen_contingencies(grid, contingencies, p_dis=config.mw, max_workers=config.threads)
    _emit(config, report.screening_json(result), report.screening_csv(result))
    return EXIT_OK


def run_dispatch(config: RunConfig, grid: GridModel) -> int:
    contingencies = ALL_LOAD_BUSES if config.all_load_buses else [Disturbance(config.bus, config.mw)]
    solve = coi_dispatch if config.coi else dispatch
    solution = solve(grid, contingencies, config.rocof_max, p_dis=config.mw)
    _emit(config, report.dispatch_json(solution), report.dispatch_csv(solution))
    if not solution.optimal:
        pairs = ", ".join(f"({gen}, {solution.contingencies[k].name})" for gen, k in solution.infeasible_pairs)
        print(f"error: dispatch is infeasible: {pairs}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def run_simulate(config: RunConfig, grid: GridModel) -> int:
    grid, d = _disturbance(config, grid)
    trace = simulate_swing(grid, d, horizon=config.horizon, dt=config.dt)
    estimate = initial_rocof_estimate(trace)
    if config.output_format == "csv":
        report.write_text(report.trace_csv(trace), config.output)
        if config.output is not None:
            report.write_text(report.trace_csv(trace, rocof=True), report.companion_path(config.output, "rocof"))
        return EXIT_OK

    algebraic = None
    if d.p_dis > 0:
        try:
            algebraic = nodal_rocof_report(grid, d)
        except ModelAssumptionError as e:
            algebraic = e.report
    report.write_text(report.simulation_json(trace, estimate.tolist(), algebraic), config.output)
    return EXIT_OK


RUNNERS = {
    "rocof": run_rocof,
    "screen": run_screen,
    "dispatch": run_dispatch,
    "simulate": run_simulate,
}


def run(config: RunConfig) -> int:
    r"""
    Execute one command and return its exit code.

    Exit codes: 0 success, 1 usage, parse or validation error, 2 infeasible
    dispatch, 3 model-assumption breach or internal consistency failure.
    Errors are reported as ``error: <message>`` lines on stderr.
    """
    try:
        if config.command == "validate":
            return run_validate(config)
        grid = read_grid_file(config.grid_path)
        if config.dump_blocks is not None:
            report.write_text(report.blocks_csv(assemble_blocks(grid)), config.dump_blocks)
        return RUNNERS[config.command](config, grid)
    except (ModelAssumptionError, InternalConsistencyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MODEL
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = parse_config(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging(config.verbose)
    logger.debug("running %s", config)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
