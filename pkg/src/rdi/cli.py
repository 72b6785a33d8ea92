"""Command-line entry point: ``rdi list | run | validate``."""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .report import dumps, scenario_document, to_markdown
from .runner import RunOptions, run_scenario
from .scenario import BUILTIN_NAMES, ConfigError, ScenarioNotFound, get_scenario, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3


def _resolve(target: str):
    """Scenario for a builtin name or a path to a JSON file."""
    if target in BUILTIN_NAMES:
        return get_scenario(target)
    if target.endswith(".json") or Path(target).is_file():
        return load_scenario(target)
    raise ScenarioNotFound(f"scenario not found: {target}")


def _run_one(target: str, options: RunOptions) -> dict:
    sc = _resolve(target)
    return scenario_document(sc.name, run_scenario(sc, options))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdi", description="Numerical certification of direct-image constructions.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list builtin scenarios")
    r = sub.add_parser("run", help="run the check suite of a scenario")
    r.add_argument("target", help="builtin scenario name, 'all', or a scenario JSON file")
    r.add_argument("--quad-order", type=int, default=None, help="override the quadrature order")
    r.add_argument("--tol", type=float, default=None, help="override every residual tolerance")
    r.add_argument("--jobs", type=int, default=1, help="scenarios run in parallel")
    r.add_argument("--report", type=Path, default=None, help="write the report here instead of stdout")
    r.add_argument("--format", choices=("json", "md"), default="json")
    r.add_argument("--timings", action="store_true", help="record per-check runtimes (reports stop being byte-stable)")
    v = sub.add_parser("validate", help="validate a scenario JSON file")
    v.add_argument("config", type=Path)
    return p


def _cmd_run(args) -> int:
    if args.quad_order is not None and args.quad_order < 1:
        print("rdi: --quad-order must be positive", file=sys.stderr)
        return EXIT_USAGE
    if args.jobs < 1:
        print("rdi: --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    targets = list(BUILTIN_NAMES) if args.target == "all" else [args.target]
    options = RunOptions(quad_order=args.quad_order, tol=args.tol, timings=args.timings)
    try:
        for t in targets:
            _resolve(t)
        if args.jobs > 1 and len(targets) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                docs = list(ex.map(_run_one, targets, [options] * len(targets)))
        else:
            docs = [_run_one(t, options) for t in targets]
    except ScenarioNotFound as e:
        print(f"rdi: {e.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"rdi: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    docs.sort(key=lambda d: d["scenario"])
    text = dumps(docs) + "\n" if args.format == "json" else to_markdown(docs)
    if args.report is not None:
        args.report.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    failed = [(d["scenario"], c["name"]) for d in docs for c in d["checks"] if not c["pass"]]
    for sc, name in failed:
        print(f"FAIL {sc}: {name}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def _cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.config)
    except ConfigError as e:
        print(f"rdi: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{sc.name}: ok (m={sc.m}, k={sc.k}, rank={sc.bundle.rank})")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for n in BUILTIN_NAMES:
            print(n)
        return EXIT_OK
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())
