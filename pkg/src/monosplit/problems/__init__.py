"""Benchmark problem families: academic, optimal control, image deblurring."""

from .academic import L2_CASES, R3_CASES, l2_anchor, make_l2_problem, make_r3_problem
from .base import Problem, geometric, geometric_tail_norm
from .control import (
    ControlProblem,
    bang_bang_control,
    control_gradient,
    double_integrator,
    estimate_switch_time,
    make_control_problem,
    objective_value,
    simulate_states,
)
from .deblur import (
    REPLICATE,
    ZERO_PAD,
    BlurModel,
    BlurOperator,
    gaussian_kernel,
    make_deblur_problem,
    snr,
    synthetic_image,
)
from .imageio import read_matrix_csv, read_pgm, write_matrix_csv, write_pgm

__all__ = [
    "Problem",
    "geometric",
    "geometric_tail_norm",
    "make_r3_problem",
    "make_l2_problem",
    "l2_anchor",
    "R3_CASES",
    "L2_CASES",
    "ControlProblem",
    "make_control_problem",
    "double_integrator",
    "control_gradient",
    "simulate_states",
    "objective_value",
    "bang_bang_control",
    "estimate_switch_time",
    "BlurModel",
    "BlurOperator",
    "gaussian_kernel",
    "make_deblur_problem",
    "snr",
    "synthetic_image",
    "ZERO_PAD",
    "REPLICATE",
    "read_pgm",
    "write_pgm",
    "read_matrix_csv",
    "write_matrix_csv",
]
