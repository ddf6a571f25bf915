"""Command-line interface: config-driven experiment suites.

Subcommands: ``vqe``, ``classify``, ``bp-variance``, ``purity``, ``dla-info``.
A JSON config file mirrors the ExperimentConfig fields; command-line flags
override individual entries.  Reports are JSON (schema-versioned; the
``created_at`` stamp is the only run-dependent field) and per-trial traces
are CSV with columns iteration, cost, qpu_calls, phase.

Exit codes: 0 success, 2 usage, 3 config error, 4 I/O error, 5 runtime error
in a component.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import bench

__all__ = ["cli_main", "main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_RUNTIME = 5

TASKS = ("vqe", "classify", "bp-variance", "purity", "dla-info")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helia",
        description="Hybrid quantum/classical variational training suites.")
    sub = parser.add_subparsers(dest="task", metavar="{" + ",".join(TASKS) + "}")
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} suite")
        p.add_argument("--config", type=str, default=None,
                       help="JSON config file mirroring ExperimentConfig")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--trials", type=int, default=None, help="trial count override")
        p.add_argument("--out", type=str, default=None,
                       help="output directory for report.json and traces/")
        p.add_argument("--shots", type=str, default=None,
                       help="shots per expectation, or 'exact'")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel worker processes across trials")
        if task == "dla-info":
            p.add_argument("--family", type=str, default=None,
                           help="generator family (xy, tfim, YZ, ZX)")
            p.add_argument("--n", type=int, default=None, help="qubit count")
    return parser


def _load_config(args) -> bench.ExperimentConfig:
    data = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise _CliError(EXIT_IO, f"cannot read config: {exc}")
        except json.JSONDecodeError as exc:
            raise _CliError(EXIT_CONFIG, f"config is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise _CliError(EXIT_CONFIG, "config must be a JSON object")
    data.setdefault("task", args.task)
    if data["task"] != args.task:
        raise _CliError(EXIT_CONFIG,
                        f"config task {data['task']!r} does not match subcommand {args.task!r}")
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.trials is not None:
        data["trials"] = args.trials
    if args.shots is not None:
        data["shots"] = None if args.shots == "exact" else int(args.shots)
    if getattr(args, "family", None) is not None:
        data["family"] = args.family
    if getattr(args, "n", None) is not None:
        data["n_qubits"] = args.n
    try:
        return bench.ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise _CliError(EXIT_CONFIG, f"bad config: {exc}")


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _write_report(report: dict, out_dir: Optional[str]) -> None:
    traces = report.pop("_traces", None)
    text = json.dumps(report, indent=1, sort_keys=True)
    if out_dir is None:
        print(text)
        return
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text + "\n", encoding="utf-8")
        if traces:
            trace_dir = out / "traces"
            trace_dir.mkdir(exist_ok=True)
            for method, csvs in traces.items():
                safe = method.replace("+", "_plus_")
                for k, csv_text in enumerate(csvs):
                    (trace_dir / f"{safe}_trial{k}.csv").write_text(
                        csv_text, encoding="utf-8")
        print(f"report written to {out / 'report.json'}")
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot write report: {exc}")


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else EXIT_OK
    if args.task is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        config = _load_config(args)
        if args.task == "vqe":
            report = bench.run_vqe(config, jobs=args.jobs)
        elif args.task == "classify":
            report = bench.run_classification(config, jobs=args.jobs)
        elif args.task == "bp-variance":
            report = bench.bp_variance_sweep(config, jobs=args.jobs)
        elif args.task == "purity":
            report = bench.purity_depth_sweep(config, jobs=args.jobs)
        else:  # dla-info
            report = bench.dla_info(config)
            print(report["basis_text"], end="")
            if args.out is not None:
                _write_report(report, args.out)
            return EXIT_OK
        _write_report(report, args.out)
        return EXIT_OK
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # component failures map to a distinct code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli_main())
