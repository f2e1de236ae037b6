"""Flat key-value experiment files.

Format: one ``key = value`` pair per line, ``#`` comments allowed.  Keys are
documented in the README; sequences use the kinds of
:mod:`monosplit.stepsize` (e.g. ``sigma = rational(0.005, 3, 25000)``),
vectors accept ``zeros``, ``ones``, ``fill(v)``, ``geometric(first, ratio)``
or a comma-separated list.
"""

import re
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..problems import (
    double_integrator,
    geometric,
    l2_anchor,
    make_control_problem,
    make_deblur_problem,
    make_l2_problem,
    make_r3_problem,
    synthetic_image,
)
from ..problems.deblur import ZERO_PAD, BlurModel, BlurOperator, gaussian_kernel
from ..solvers import (
    ALGORITHMS,
    FRAB_FIXED,
    FRBSM,
    INERTIAL_VISCOSITY,
    RFBSM,
    STOP_DISTANCE,
    STOP_RESIDUAL,
    STOP_RESIDUAL_STEP,
    VISCOSITY,
    SolverConfig,
)
from ..space import UsageError
from ..stepsize import parse_sequence
from .experiments import Entry, ExperimentSpec

_KNOWN_KEYS = {
    "name", "problem", "case", "algorithms", "max_iter", "tol", "stop_metric",
    "r_bar", "beta_bar", "delta0", "delta1", "sigma", "c", "anchor", "theta",
    "theta_bar", "contraction", "fixed_delta", "lambda", "gamma", "w0", "w1",
    "out", "keep_iterates", "trunc_dim", "mesh", "seed", "rows", "cols",
    "reg", "kernel_size", "kernel_sigma", "boundary", "noise_std",
}

_REQUIRED = ("problem", "algorithms")

_FN_RE = re.compile(r"^([a-z_]+)\((.*)\)$")


def parse_pairs(text: str) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise UsageError(f"line {lineno}: unknown key {key!r}")
        if key in pairs:
            raise UsageError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _parse_vector(value: str, dim: int) -> np.ndarray:
    value = value.strip()
    if value == "zeros":
        return np.zeros(dim)
    if value == "ones":
        return np.ones(dim)
    m = _FN_RE.match(value)
    if m:
        kind, body = m.group(1), m.group(2)
        args = [float(t) for t in body.split(",")] if body.strip() else []
        if kind == "fill" and len(args) == 1:
            return np.full(dim, args[0])
        if kind == "geometric" and len(args) == 2:
            return geometric(args[0], args[1], dim)
        raise UsageError(f"unknown vector form {value!r}")
    vec = np.array([float(t) for t in value.split(",")], dtype=float)
    if vec.size != dim:
        raise UsageError(f"vector literal has {vec.size} entries, problem needs {dim}")
    return vec


def _parse_contraction(value: str):
    m = _FN_RE.match(value.strip())
    if m and m.group(1) == "scale":
        k = float(m.group(2))
        if not (0.0 <= k < 0.5):
            raise UsageError(f"scale({k}) is not a contraction with constant < 1/2")
        return (lambda w: k * w, k)
    raise UsageError(f"unknown contraction form {value!r}; use scale(k)")


def _build_problem(pairs: Dict[str, str]):
    kind = pairs["problem"].strip().lower()
    if kind == "r3":
        return make_r3_problem(pairs.get("case", "ia")), None, None
    if kind == "l2":
        dim = int(pairs.get("trunc_dim", "64"))
        return make_l2_problem(dim, pairs.get("case", "iia")), None, None
    if kind == "control":
        control = double_integrator(mesh=int(pairs.get("mesh", "100")))
        return make_control_problem(control), None, control
    if kind == "deblur":
        rows = int(pairs.get("rows", "32"))
        cols = int(pairs.get("cols", "32"))
        truth = synthetic_image(rows, cols)
        model = BlurModel(
            gaussian_kernel(int(pairs.get("kernel_size", "9")),
                            float(pairs.get("kernel_sigma", "4"))),
            (rows, cols),
            boundary=pairs.get("boundary", ZERO_PAD),
        )
        observed = BlurOperator(model).apply(truth)
        noise = float(pairs.get("noise_std", "0"))
        if noise > 0:
            rng = np.random.default_rng(int(pairs.get("seed", "0")))
            observed = observed + noise * rng.standard_normal(observed.size)
        problem = make_deblur_problem(model, observed, float(pairs.get("reg", "1")))
        return problem, truth, None
    raise UsageError(f"unknown problem kind {kind!r}; use r3 | l2 | control | deblur")


def build_spec(pairs: Dict[str, str], default_name: str = "custom") -> ExperimentSpec:
    for key in _REQUIRED:
        if key not in pairs:
            raise UsageError(f"missing required key {key!r}")
    problem, snr_reference, control = _build_problem(pairs)
    algorithms = [a.strip() for a in pairs["algorithms"].split(",") if a.strip()]
    for algo in algorithms:
        if algo not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")

    stop_metric = pairs.get("stop_metric", STOP_RESIDUAL)
    if stop_metric not in (STOP_RESIDUAL, STOP_RESIDUAL_STEP, STOP_DISTANCE):
        raise UsageError(f"unknown stop_metric {stop_metric!r}")
    common = dict(
        max_iter=int(pairs.get("max_iter", "10000")),
        tol=float(pairs.get("tol", "1e-8")),
        stop_metric=stop_metric,
        keep_iterates=pairs.get("keep_iterates", "false").lower() in ("true", "1", "yes"),
    )
    non_baseline = dict(
        r_bar=float(pairs.get("r_bar", "0.3")),
        beta_bar=float(pairs.get("beta_bar", "0.19")),
        delta0=float(pairs.get("delta0", "0.1")),
        delta1=float(pairs.get("delta1", "0.3")),
        sigma=parse_sequence(pairs.get("sigma", "rational(0.005, 3, 25000)")),
        c=parse_sequence(pairs.get("c", "polyratio(1; 1, 0, 1)")),
        anchor=_parse_vector(pairs.get("anchor", "zeros"), problem.dim),
    )
    theta = float(pairs.get("theta", "0"))
    contraction = _parse_contraction(pairs["contraction"]) if "contraction" in pairs else None

    entries = []
    for algo in algorithms:
        kwargs = dict(common)
        if algo == FRBSM:
            if "lambda" not in pairs:
                raise UsageError("frbsm needs a 'lambda' step sequence")
            kwargs["step_lambda"] = parse_sequence(pairs["lambda"])
        elif algo == RFBSM:
            if "gamma" not in pairs:
                raise UsageError("rfbsm needs a 'gamma' constant step")
            kwargs["gamma"] = float(pairs["gamma"])
        else:
            kwargs.update(non_baseline)
            kwargs["theta"] = theta
            if "theta_bar" in pairs:
                kwargs["theta_bar"] = float(pairs["theta_bar"])
            if algo == FRAB_FIXED:
                if "fixed_delta" not in pairs:
                    raise UsageError("frab_fixed needs 'fixed_delta'")
                kwargs["fixed_delta"] = float(pairs["fixed_delta"])
            if algo in (VISCOSITY, INERTIAL_VISCOSITY):
                if contraction is None:
                    raise UsageError(f"{algo} needs a 'contraction', e.g. scale(0.4)")
                kwargs["contraction"] = contraction
        if "w0" in pairs:
            kwargs["w0"] = _parse_vector(pairs["w0"], problem.dim)
        if "w1" in pairs:
            kwargs["w1"] = _parse_vector(pairs["w1"], problem.dim)
        entries.append(Entry(algo, SolverConfig(algorithm=algo, **kwargs)))

    return ExperimentSpec(
        name=pairs.get("name", default_name),
        problem=problem,
        entries=tuple(entries),
        out_dir=Path(pairs["out"]) if "out" in pairs else None,
        keep_iterates=common["keep_iterates"],
        snr_reference=snr_reference,
        control=control,
    )


def load_spec_file(path) -> ExperimentSpec:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"spec file not found: {path}")
    pairs = parse_pairs(path.read_text())
    return build_spec(pairs, default_name=path.stem)


def validate_spec_file(path) -> List[str]:
    """Parse plus config validation; returns all violations found."""
    try:
        spec = load_spec_file(path)
    except UsageError as exc:
        return [str(exc)]
    return spec.validated()
