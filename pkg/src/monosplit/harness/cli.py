"""Command-line interface: list builtins, run experiments, validate spec files."""

import argparse
import sys
from pathlib import Path

from ..space import UsageError
from .experiments import (
    apply_overrides,
    build_builtin,
    builtin_names,
    emit_control_tables,
    run_experiment,
)
from .specfile import load_spec_file, validate_spec_file

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monosplit",
        description="Benchmark harness for monotone-inclusion splitting solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="print the builtin experiment names")

    run_p = sub.add_parser("run", help="run a builtin experiment or a spec file")
    run_p.add_argument("target", help="builtin name or path to a spec file")
    run_p.add_argument("--max-iter", type=int, default=None, help="override iteration budget")
    run_p.add_argument("--tol", type=float, default=None, help="override stopping tolerance")
    run_p.add_argument("--algo", default=None, help="run only the matching algorithm/label")
    run_p.add_argument("--out", default="results", help="output directory (default: results)")
    run_p.add_argument("--trace", action="store_true", help="also persist full iterate traces")

    val_p = sub.add_parser("validate", help="check a spec file without running it")
    val_p.add_argument("specfile", help="path to a spec file")
    return parser


def _load_target(target: str):
    if target in builtin_names():
        return build_builtin(target)
    if Path(target).is_file():
        return load_spec_file(target)
    raise UsageError(f"{target!r} is neither a builtin experiment nor a spec file")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list":
        for name in builtin_names():
            print(name)
        return EXIT_OK

    if args.command == "validate":
        try:
            violations = validate_spec_file(args.specfile)
        except UsageError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if violations:
            for v in violations:
                print(f"invalid: {v}")
            return EXIT_CONFIG
        print("ok")
        return EXIT_OK

    # run
    try:
        spec = _load_target(args.target)
        spec = apply_overrides(
            spec,
            max_iter=args.max_iter,
            tol=args.tol,
            algo=args.algo,
            out_dir=args.out,
            keep_iterates=True if args.trace else None,
        )
        if not spec.entries:
            print("no entries match the requested filter", file=sys.stderr)
            return EXIT_CONFIG
        report = run_experiment(spec)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(report.format_table())
    if spec.control is not None and spec.out_dir is not None:
        for row in report.rows:
            if row.status == "ok":
                emit_control_tables(row.record, spec.control, spec.out_dir,
                                    stem=f"{spec.name}__{row.label}")
    if report.any_failure:
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
