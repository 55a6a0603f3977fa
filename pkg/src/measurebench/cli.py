"""Command-line entry point: run, report, inspect.

Exit codes: nonzero on configuration/validation errors; zero when an
experiment completes, even with failed tests (failures are benchmark data).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
from pathlib import Path

from .datatypes import TestStatus
from .orchestrator import (
    ConfigError,
    Workspace,
    WorkspaceLockedError,
    kappa_grid_of,
    parse_config,
    run_experiment,
    summarize,
)
from .registry import ExpectedBehaviorTable, build_measure_registry
from .reporting import emit_reports

WORKSPACE_ENV_VAR = "MEASUREBENCH_WORKSPACE"


def _default_workspace() -> str:
    return os.environ.get(WORKSPACE_ENV_VAR, "workspace")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="measurebench",
        description="Benchmark the evaluators of synthetic time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run or resume an experiment")
    run_p.add_argument("config", help="path to the experiment YAML config")
    run_p.add_argument("--mode", choices=("sequential", "parallel"),
                       default="sequential")
    run_p.add_argument("--workers", type=int, default=None,
                       help="worker count for parallel mode")
    run_p.add_argument("--workspace", default=None,
                       help=f"workspace root (default: ${WORKSPACE_ENV_VAR} or ./workspace)")
    run_p.add_argument("--seed-override", type=int, nargs="+", default=None,
                       help="replace the config seed list")
    run_p.add_argument("--kappa-steps", type=int, default=None,
                       help="override the modulation grid resolution")
    run_p.add_argument("--no-report", action="store_true",
                       help="skip evaluation after the run completes")

    report_p = sub.add_parser("report", help="evaluate a finished workspace")
    report_p.add_argument("experiment", help="experiment name")
    report_p.add_argument("--workspace", default=None)

    inspect_p = sub.add_parser("inspect", help="print one test record")
    inspect_p.add_argument("experiment", help="experiment name")
    inspect_p.add_argument("test_id", help="test id (tests/<id>.json)")
    inspect_p.add_argument("--workspace", default=None)
    return parser


class _ProgressPrinter:
    def __init__(self, total: int, initial: dict, stream=sys.stderr):
        self.counts = dict(initial)
        self.total = total
        self.stream = stream
        self._lock = threading.Lock()

    def __call__(self, record: dict) -> None:
        with self._lock:
            self.counts[record["status"]] = self.counts.get(record["status"], 0) + 1
            self.counts["todo"] = max(0, self.counts.get("todo", 0) - 1)
            done = sum(self.counts.get(s, 0) for s in
                       ("successful", "failed", "skipped"))
            print(
                f"[{done}/{self.total}] todo={self.counts.get('todo', 0)} "
                f"ongoing=0 successful={self.counts.get('successful', 0)} "
                f"failed={self.counts.get('failed', 0)} "
                f"skipped={self.counts.get('skipped', 0)}",
                file=self.stream,
            )


def cmd_run(args) -> int:
    root = args.workspace or _default_workspace()
    try:
        config = parse_config(Path(args.config).read_text(),
                              base_dir=Path(args.config).resolve().parent)
        if args.seed_override:
            config.seeds = list(args.seed_override)
        if args.kappa_steps:
            config.kappa_grid = kappa_grid_of(args.kappa_steps)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        printer = _ProgressPrinter(total=0, initial={})
        workspace = run_experiment(config, root, mode=args.mode,
                                   workers=args.workers, progress=printer)
    except WorkspaceLockedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    summary = summarize(workspace)
    print(
        f"experiment {config.name!r} finished: {summary.total} tests, "
        f"{summary.successful} successful, {summary.failed} failed, "
        f"{summary.skipped} skipped"
    )
    if not args.no_report:
        info = emit_reports(workspace, build_measure_registry(), ExpectedBehaviorTable())
        _print_top_ranked(info)
    return 0


def _print_top_ranked(info: dict) -> None:
    print("top-ranked measure per category:")
    for category, measure in info["top_ranked"].items():
        print(f"  {category}: {measure if measure else 'n/a'}")
    print(f"report files: {', '.join(info['files'])}")


def cmd_report(args) -> int:
    root = args.workspace or _default_workspace()
    workspace = Workspace(root, args.experiment)
    try:
        info = emit_reports(workspace, build_measure_registry(), ExpectedBehaviorTable())
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _print_top_ranked(info)
    return 0


def cmd_inspect(args) -> int:
    root = args.workspace or _default_workspace()
    workspace = Workspace(root, args.experiment)
    record = workspace.read_record(args.test_id)
    if record is None:
        print(f"error: no record {args.test_id!r}", file=sys.stderr)
        return 2
    spec = record["spec"]
    print(f"test {record['test_id']}")
    print(f"  dataset:        {spec['dataset']}")
    print(f"  transformations:{' + '.join(spec['transformation_chain'])}")
    print(f"  measure:        {spec['measure']}")
    print(f"  embedder:       {spec['embedder'] or '-'}")
    print(f"  seed:           {spec['seed']}")
    print(f"  status:         {record['status']}")
    if record.get("failure_reason"):
        print(f"  reason:         {record['failure_reason']}")
    grid = spec["kappa_grid"]
    for i, score in enumerate(record.get("scores", [])):
        runtime = record["runtimes"][i] if i < len(record["runtimes"]) else float("nan")
        print(f"  kappa={grid[i]:<4g} score={score!r:<24} runtime={runtime:.4f}s")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "report":
        return cmd_report(args)
    if args.command == "inspect":
        return cmd_inspect(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
