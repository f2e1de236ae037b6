"""Splitting solvers for monotone inclusions 0 in (S+T)w, with benchmarks."""

from .space import (
    MonotoneMap,
    NumericalFailure,
    ResolventOp,
    UsageError,
    as_vector,
    box_project,
    box_resolvent,
    inner,
    l1_resolvent,
    norm,
    scaled_identity,
    scaled_identity_resolvent,
    soft_threshold,
)
from .stepsize import (
    Constant,
    InverseSquare,
    PolyRatio,
    Rational,
    StepSizeState,
    Table,
    ValidationReport,
    parse_sequence,
    update_step,
    validate_parameters,
)
from .solvers import (
    ALGORITHMS,
    FRAB_ADAPTIVE,
    FRAB_FIXED,
    FRAB_INERTIAL,
    FRAB_INERTIAL_VARIABLE,
    FRBSM,
    INERTIAL_VISCOSITY,
    RFBSM,
    VISCOSITY,
    IterationState,
    RunRecord,
    SolverConfig,
    residual,
    run,
    step_residual,
    validate_config,
)
from . import problems

__version__ = "0.1.0"
