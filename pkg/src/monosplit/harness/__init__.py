"""Experiment orchestration, spec files, CSV persistence and the CLI."""

from .experiments import (
    BUILTINS,
    ComparisonReport,
    Entry,
    ExperimentSpec,
    ReportRow,
    apply_overrides,
    build_builtin,
    builtin_names,
    emit_control_tables,
    run_experiment,
)
from .specfile import build_spec, load_spec_file, parse_pairs, validate_spec_file

__all__ = [
    "BUILTINS",
    "ComparisonReport",
    "Entry",
    "ExperimentSpec",
    "ReportRow",
    "apply_overrides",
    "build_builtin",
    "builtin_names",
    "emit_control_tables",
    "run_experiment",
    "build_spec",
    "load_spec_file",
    "parse_pairs",
    "validate_spec_file",
]
