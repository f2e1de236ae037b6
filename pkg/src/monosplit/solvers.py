"""Iteration schemes for the inclusion 0 in (S+T)w and the run driver.

Six strongly convergent schemes (anchored with adaptive or fixed step,
inertial with constant or variable extrapolation, viscosity, inertial
viscosity) plus two weakly convergent baselines, all behind a common
stepper interface.  Every anchored/inertial/viscosity stepper performs
exactly one fresh forward evaluation and one resolvent call per iteration.
"""

import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .space import MonotoneMap, NumericalFailure, ResolventOp, UsageError
from .stepsize import StepSizeState, is_summable, update_step, validate_parameters

# Algorithm identifiers (also used in spec files, CLI filters and CSV output).
FRAB_ADAPTIVE = "frab_adaptive"
FRAB_FIXED = "frab_fixed"
FRAB_INERTIAL = "frab_inertial"
FRAB_INERTIAL_VARIABLE = "frab_inertial_variable"
VISCOSITY = "viscosity"
INERTIAL_VISCOSITY = "inertial_viscosity"
FRBSM = "frbsm"
RFBSM = "rfbsm"

ALGORITHMS = (
    FRAB_ADAPTIVE,
    FRAB_FIXED,
    FRAB_INERTIAL,
    FRAB_INERTIAL_VARIABLE,
    VISCOSITY,
    INERTIAL_VISCOSITY,
    FRBSM,
    RFBSM,
)

# Algorithms that use the anchored/reflected scheme with the adaptive step.
_ADAPTIVE_FAMILY = (
    FRAB_ADAPTIVE,
    FRAB_INERTIAL,
    FRAB_INERTIAL_VARIABLE,
    VISCOSITY,
    INERTIAL_VISCOSITY,
)

# Stopping metrics.
STOP_RESIDUAL = "residual"  # 0.5 * |w - J_1(w - Tw)|^2
STOP_RESIDUAL_STEP = "residual_step"  # 0.5 * |w - J_d(w - d*Tw)|^2, d = current step
STOP_DISTANCE = "distance"  # 0.5 * |w - known_solution|^2


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one solver run.

    ``sigma`` (anchoring coefficients), ``c`` (step-size slack), ``theta``
    (inertia, constant or sequence) and ``step_lambda`` (baseline step
    sequence) are callables of a 1-based iteration index.  Initial points
    default to the problem's when left ``None``.
    """

    algorithm: str
    max_iter: int
    tol: float = 1e-8
    r_bar: float = 0.3
    beta_bar: float = 0.19
    delta0: float = 0.1
    delta1: float = 0.3
    sigma: Optional[Callable[[int], float]] = None
    c: Optional[Callable[[int], float]] = None
    anchor: Optional[np.ndarray] = None
    theta: Union[float, Callable[[int], float]] = 0.0
    theta_bar: Optional[float] = None
    contraction: Optional[Tuple[Callable[[np.ndarray], np.ndarray], float]] = None
    fixed_delta: Optional[float] = None
    step_lambda: Optional[Callable[[int], float]] = None
    gamma: Optional[float] = None
    w0: Optional[np.ndarray] = None
    w1: Optional[np.ndarray] = None
    stop_metric: str = STOP_RESIDUAL
    keep_iterates: bool = False

    def theta_at(self, n: int) -> float:
        if callable(self.theta):
            return float(self.theta(n))
        return float(self.theta)

    def theta_cap(self) -> float:
        """Largest inertia value the run can use (bound checked at validation)."""
        if self.theta_bar is not None:
            return float(self.theta_bar)
        if callable(self.theta):
            raise UsageError("theta_bar is required when theta is a sequence")
        return float(self.theta)


@dataclass(frozen=True)
class IterationState:
    """Two consecutive iterates with cached operator values.

    ``Tw_prev``/``Tw_curr`` hold the forward-operator values at
    ``w_prev``/``w_curr`` for the schemes that reuse them (``None`` for the
    reflected baseline, which evaluates at an extrapolated point instead).
    """

    w_prev: np.ndarray
    w_curr: np.ndarray
    Tw_prev: Optional[np.ndarray]
    Tw_curr: Optional[np.ndarray]
    step: StepSizeState
    n: int = 1


@dataclass
class RunRecord:
    """Per-iteration trace and termination summary of one run."""

    algorithm: str
    iterations: int
    terminated_by: str  # "tolerance" | "max_iter" | "numerical_failure"
    residuals: List[float]
    deltas: List[float]
    elapsed: List[float]
    wall_time: float
    operator_eval_count: int
    resolvent_call_count: int
    final_iterate: Optional[np.ndarray] = None
    distances: Optional[List[float]] = None
    iterates_kept: Optional[List[np.ndarray]] = None
    failure_index: Optional[int] = None

    @property
    def final_residual(self) -> Optional[float]:
        return self.residuals[-1] if self.residuals else None

    @property
    def final_distance(self) -> Optional[float]:
        if self.distances:
            return self.distances[-1]
        return None


class _CountingMap:
    """Wrap an operator to count solver-side evaluations."""

    def __init__(self, fn):
        self.fn = fn
        self.count = 0

    def __call__(self, *args):
        self.count += 1
        return self.fn(*args)


def _check_finite(arr: np.ndarray, n: int, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericalFailure(f"non-finite {what} at iteration {n}", n)
    return arr


# ---------------------------------------------------------------------------
# Steppers.  Each advances the state by one iteration; the recursions are
# written out independently so the degenerate-parameter reductions between
# them are genuine cross-checks rather than shared code paths.
# ---------------------------------------------------------------------------


def frab_step(state: IterationState, cfg: SolverConfig, T, J) -> IterationState:
    """Anchored reflected step with the self-adaptive step size."""
    n = state.n
    sigma = cfg.sigma(n)
    dn = state.step.delta_curr
    dprev = state.step.delta_prev
    # the anchored combination is evaluated as w + sigma*(anchor - w) so that
    # solutions with anchor == w are preserved exactly in floating point
    arg = (
        state.w_curr + sigma * (cfg.anchor - state.w_curr)
        - dn * state.Tw_curr
        - dprev * (1.0 - sigma) * (state.Tw_curr - state.Tw_prev)
    )
    _check_finite(arg, n, "resolvent argument")
    w_next = J(arg, dn)
    _check_finite(w_next, n, "iterate")
    Tw_next = T(w_next)
    step = update_step(state.step, cfg.r_bar, cfg.c(n), state.w_curr, w_next, state.Tw_curr, Tw_next)
    return IterationState(state.w_curr, w_next, state.Tw_curr, Tw_next, step, n + 1)


def frab_fixed_step(state: IterationState, cfg: SolverConfig, T, J) -> IterationState:
    """Anchored reflected step with a constant step below 1/(2L)."""
    n = state.n
    sigma = cfg.sigma(n)
    d = cfg.fixed_delta
    arg = (
        state.w_curr + sigma * (cfg.anchor - state.w_curr)
        - d * state.Tw_curr
        - d * (1.0 - sigma) * (state.Tw_curr - state.Tw_prev)
    )
    _check_finite(arg, n, "resolvent argument")
    w_next = J(arg, d)
    _check_finite(w_next, n, "iterate")
    Tw_next = T(w_next)
    step = StepSizeState(delta_prev=d, delta_curr=d, n=n + 1)
    return IterationState(state.w_curr, w_next, state.Tw_curr, Tw_next, step, n + 1)


def frab_inertial_step(state: IterationState, cfg: SolverConfig, T, J) -> IterationState:
    """Anchored reflected step applied at an inertially extrapolated base point."""
    n = state.n
    sigma = cfg.sigma(n)
    theta = cfg.theta_at(n)
    dn = state.step.delta_curr
    dprev = state.step.delta_prev
    base = state.w_curr + theta * (state.w_curr - state.w_prev)
    arg = (
        base + sigma * (cfg.anchor - base)
        - dn * state.Tw_curr
        - dprev * (1.0 - sigma) * (state.Tw_curr - state.Tw_prev)
    )
    _check_finite(arg, n, "resolvent argument")
    w_next = J(arg, dn)
    _check_finite(w_next, n, "iterate")
    Tw_next = T(w_next)
    step = update_step(state.step, cfg.r_bar, cfg.c(n), state.w_curr, w_next, state.Tw_curr, Tw_next)
    return IterationState(state.w_curr, w_next, state.Tw_curr, Tw_next, step, n + 1)


def viscosity_step(state: IterationState, cfg: SolverConfig, T, J) -> IterationState:
    """Reflected step anchored at a contraction of the current iterate."""
    n = state.n
    sigma = cfg.sigma(n)
    U, kappa = cfg.contraction
    dn = state.step.delta_curr
    dprev = state.step.delta_prev
    arg = (
        state.w_curr + sigma * (U(state.w_curr) - state.w_curr)
        - dn * state.Tw_curr
        - dprev * (1.0 - sigma * (1.0 - 2.0 * kappa)) * (state.Tw_curr - state.Tw_prev)
    )
    _check_finite(arg, n, "resolvent argument")
    w_next = J(arg, dn)
    _check_finite(w_next, n, "iterate")
    Tw_next = T(w_next)
    step = update_step(state.step, cfg.r_bar, cfg.c(n), state.w_curr, w_next, state.Tw_curr, Tw_next)
    return IterationState(state.w_curr, w_next, state.Tw_curr, Tw_next, step, n + 1)


def inertial_viscosity_step(state: IterationState, cfg: SolverConfig, T, J) -> IterationState:
    """Viscosity step applied at an inertially extrapolated base point."""
    n = state.n
    sigma = cfg.sigma(n)
    theta = cfg.theta_at(n)
    U, kappa = cfg.contraction
    dn = state.step.delta_curr
    dprev = state.step.delta_prev
    base = state.w_curr + theta * (state.w_curr - state.w_prev)
    arg = (
        base + sigma * (U(state.w_curr) - base)
        - dn * state.Tw_curr
        - dprev * (1.0 - sigma * (1.0 - 2.0 * kappa)) * (state.Tw_curr - state.Tw_prev)
    )
    _check_finite(arg, n, "resolvent argument")
    w_next = J(arg, dn)
    _check_finite(w_next, n, "iterate")
    Tw_next = T(w_next)
    step = update_step(state.step, cfg.r_bar, cfg.c(n), state.w_curr, w_next, state.Tw_curr, Tw_next)
    return IterationState(state.w_curr, w_next, state.Tw_curr, Tw_next, step, n + 1)


def frbsm_baseline_step(state: IterationState, cfg: SolverConfig, T, J) -> IterationState:
    """Reflected forward step baseline with a two-memory step sequence.

    Reduces to the constant-step recursion w - 2d*Tw_n + d*Tw_{n-1} when the
    sequence is constant.
    """
    n = state.n
    lam_n = cfg.step_lambda(n)
    lam_prev = cfg.step_lambda(n - 1)
    arg = state.w_curr - lam_n * state.Tw_curr - lam_prev * (state.Tw_curr - state.Tw_prev)
    _check_finite(arg, n, "resolvent argument")
    w_next = J(arg, lam_n)
    _check_finite(w_next, n, "iterate")
    Tw_next = T(w_next)
    step = StepSizeState(delta_prev=lam_n, delta_curr=cfg.step_lambda(n + 1), n=n + 1)
    return IterationState(state.w_curr, w_next, state.Tw_curr, Tw_next, step, n + 1)


def rfbsm_baseline_step(state: IterationState, cfg: SolverConfig, T, J) -> IterationState:
    """Projected/backward step with the forward operator at the reflected point.

    Costs one forward evaluation per step, at 2*w_n - w_{n-1}.
    """
    n = state.n
    gamma = cfg.gamma
    reflected = 2.0 * state.w_curr - state.w_prev
    arg = state.w_curr - gamma * T(reflected)
    _check_finite(arg, n, "resolvent argument")
    w_next = J(arg, gamma)
    _check_finite(w_next, n, "iterate")
    step = StepSizeState(delta_prev=gamma, delta_curr=gamma, n=n + 1)
    return IterationState(state.w_curr, w_next, None, None, step, n + 1)


STEPPERS = {
    FRAB_ADAPTIVE: frab_step,
    FRAB_FIXED: frab_fixed_step,
    FRAB_INERTIAL: frab_inertial_step,
    FRAB_INERTIAL_VARIABLE: frab_inertial_step,
    VISCOSITY: viscosity_step,
    INERTIAL_VISCOSITY: inertial_viscosity_step,
    FRBSM: frbsm_baseline_step,
    RFBSM: rfbsm_baseline_step,
}


def residual(w: np.ndarray, T: MonotoneMap, J: ResolventOp, Tw: Optional[np.ndarray] = None) -> float:
    """Natural residual 0.5 * |w - J_1(w - Tw)|^2; zero exactly at solutions.

    The resolvent parameter is fixed to 1.  ``Tw`` may be passed to reuse a
    cached forward value.
    """
    if Tw is None:
        Tw = T(w)
    return 0.5 * float(np.linalg.norm(w - J(w - Tw, 1.0))) ** 2


def step_residual(w: np.ndarray, T: MonotoneMap, J: ResolventOp, delta: float,
                  Tw: Optional[np.ndarray] = None) -> float:
    """Natural residual at step scale delta: 0.5 * |w - J_d(w - d*Tw)|^2."""
    if Tw is None:
        Tw = T(w)
    return 0.5 * float(np.linalg.norm(w - J(w - delta * Tw, delta))) ** 2


def validate_config(cfg: SolverConfig, T: MonotoneMap) -> List[str]:
    """Collect configuration violations for the chosen algorithm (never raises)."""
    problems: List[str] = []
    if cfg.algorithm not in ALGORITHMS:
        return [f"unknown algorithm {cfg.algorithm!r}"]
    if cfg.max_iter < 0:
        problems.append("max_iter must be >= 0")
    if cfg.tol < 0:
        problems.append("tol must be >= 0")
    if cfg.stop_metric not in (STOP_RESIDUAL, STOP_RESIDUAL_STEP, STOP_DISTANCE):
        problems.append(f"unknown stop_metric {cfg.stop_metric!r}")

    if cfg.algorithm in _ADAPTIVE_FAMILY or cfg.algorithm == FRAB_FIXED:
        if cfg.sigma is None:
            problems.append("sigma sequence is required")
        else:
            for k in (1, 2, 10, 1000, 10**6):
                s = cfg.sigma(k)
                if not (0.0 < s < 1.0):
                    problems.append(f"sigma({k})={s} outside (0, 1)")
                    break

    if cfg.algorithm in _ADAPTIVE_FAMILY:
        if not (cfg.delta0 > 0 and cfg.delta1 > 0):
            problems.append("delta0 and delta1 must be positive")
        if cfg.c is None:
            problems.append("c sequence is required")
        else:
            for k in (1, 2, 10, 1000):
                if cfg.c(k) < 0:
                    problems.append(f"c({k})={cfg.c(k)} is negative")
                    break
            if is_summable(cfg.c) is False:
                problems.append("c sequence has divergent partial sums")
        kappa = cfg.contraction[1] if cfg.contraction else 0.0
        theta_bar = 0.0
        if cfg.algorithm in (FRAB_INERTIAL, FRAB_INERTIAL_VARIABLE, INERTIAL_VISCOSITY):
            try:
                theta_bar = cfg.theta_cap()
            except UsageError as exc:
                problems.append(str(exc))
        report = validate_parameters(cfg.r_bar, cfg.beta_bar, theta_bar, kappa)
        problems.extend(report.violations)
        if cfg.algorithm == FRAB_INERTIAL_VARIABLE and callable(cfg.theta):
            cap = cfg.theta_bar if cfg.theta_bar is not None else math.inf
            prev = -math.inf
            for k in range(1, 201):
                th = cfg.theta(k)
                if th < prev - 1e-15 or th > cap + 1e-15:
                    problems.append("theta sequence must be nondecreasing and bounded by theta_bar")
                    break
                prev = th

    if cfg.algorithm in (FRAB_ADAPTIVE, FRAB_FIXED, FRAB_INERTIAL, FRAB_INERTIAL_VARIABLE):
        if cfg.anchor is None:
            problems.append("anchor point is required")

    if cfg.algorithm in (VISCOSITY, INERTIAL_VISCOSITY):
        if cfg.contraction is None:
            problems.append("contraction (U, kappa_bar) is required")
        elif not (0.0 <= cfg.contraction[1] < 0.5):
            problems.append(f"kappa_bar={cfg.contraction[1]} outside [0, 0.5)")

    if cfg.algorithm == FRAB_FIXED:
        if T.lipschitz is None:
            problems.append("fixed-step scheme needs the operator's Lipschitz constant")
        elif cfg.fixed_delta is None:
            problems.append("fixed_delta is required")
        elif not (0.0 < cfg.fixed_delta < 1.0 / (2.0 * T.lipschitz)):
            problems.append(
                f"fixed_delta={cfg.fixed_delta} outside (0, {1.0 / (2.0 * T.lipschitz)})"
            )

    if cfg.algorithm == FRBSM and cfg.step_lambda is None:
        problems.append("step_lambda sequence is required")
    if cfg.algorithm == RFBSM and not (cfg.gamma and cfg.gamma > 0):
        problems.append("gamma must be positive")
    return problems


def initial_state(cfg: SolverConfig, w0: np.ndarray, w1: np.ndarray, T) -> IterationState:
    if w0.shape != w1.shape:
        raise UsageError("w0 and w1 must have equal dimensions")
    if cfg.algorithm == RFBSM:
        return IterationState(w0, w1, None, None,
                              StepSizeState(cfg.gamma, cfg.gamma, 1), 1)
    if cfg.algorithm == FRAB_FIXED:
        step = StepSizeState(cfg.fixed_delta, cfg.fixed_delta, 1)
    elif cfg.algorithm == FRBSM:
        step = StepSizeState(cfg.step_lambda(0), cfg.step_lambda(1), 1)
    else:
        step = StepSizeState(cfg.delta0, cfg.delta1, 1)
    return IterationState(w0, w1, T(w0), T(w1), step, 1)


def run(problem, cfg: SolverConfig) -> RunRecord:
    """Drive one solver to the stopping tolerance or the iteration budget.

    The stopping value compared against ``cfg.tol`` is chosen by
    ``cfg.stop_metric``; a tolerance of 0 runs the full budget.  Raises
    :class:`NumericalFailure` (with the partial record attached) on
    non-finite iterates; raises :class:`UsageError` on invalid configs.
    Deterministic: identical inputs give identical traces.
    """
    T, J = problem.T, problem.J
    violations = validate_config(cfg, T)
    if violations:
        raise UsageError("invalid solver configuration: " + "; ".join(violations))
    if cfg.stop_metric == STOP_DISTANCE and problem.known_solution is None:
        raise UsageError("distance stopping needs a problem with a known solution")

    w0 = cfg.w0 if cfg.w0 is not None else problem.default_initials[0]
    w1 = cfg.w1 if cfg.w1 is not None else problem.default_initials[1]
    w0 = np.asarray(w0, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    if w0.shape != (problem.dim,) or w1.shape != (problem.dim,):
        raise UsageError("initial points do not match the problem dimension")

    stepper = STEPPERS[cfg.algorithm]
    counting_T = _CountingMap(T)
    counting_J = _CountingMap(J)

    residuals: List[float] = []
    deltas: List[float] = []
    elapsed: List[float] = []
    distances: Optional[List[float]] = [] if problem.known_solution is not None else None
    iterates: Optional[List[np.ndarray]] = [w0.copy(), w1.copy()] if cfg.keep_iterates else None
    terminated_by = "max_iter"
    failure_index = None
    iterations = 0
    final_iterate = w1.copy()

    start = time.perf_counter()
    try:
        state = initial_state(cfg, w0, w1, counting_T)
        for _ in range(cfg.max_iter):
            delta_used = state.step.delta_curr
            state = stepper(state, cfg, counting_T, counting_J)
            iterations += 1
            w = state.w_curr
            final_iterate = w
            if cfg.stop_metric == STOP_RESIDUAL_STEP:
                value = step_residual(w, T, J, delta_used, Tw=state.Tw_curr)
            elif cfg.stop_metric == STOP_DISTANCE:
                value = 0.5 * float(np.linalg.norm(w - problem.known_solution)) ** 2
            else:
                value = residual(w, T, J, Tw=state.Tw_curr)
            residuals.append(value)
            deltas.append(delta_used)
            elapsed.append(time.perf_counter() - start)
            if distances is not None:
                distances.append(float(np.linalg.norm(w - problem.known_solution)))
            if iterates is not None:
                iterates.append(w.copy())
            if cfg.tol > 0.0 and value < cfg.tol:
                terminated_by = "tolerance"
                break
    except NumericalFailure as failure:
        failure_index = failure.iteration
        failure.record = RunRecord(
            algorithm=cfg.algorithm,
            iterations=iterations,
            terminated_by="numerical_failure",
            residuals=residuals,
            deltas=deltas,
            elapsed=elapsed,
            wall_time=time.perf_counter() - start,
            operator_eval_count=counting_T.count,
            resolvent_call_count=counting_J.count,
            final_iterate=final_iterate,
            distances=distances,
            iterates_kept=iterates,
            failure_index=failure_index,
        )
        raise

    return RunRecord(
        algorithm=cfg.algorithm,
        iterations=iterations,
        terminated_by=terminated_by,
        residuals=residuals,
        deltas=deltas,
        elapsed=elapsed,
        wall_time=time.perf_counter() - start,
        operator_eval_count=counting_T.count,
        resolvent_call_count=counting_J.count,
        final_iterate=final_iterate,
        distances=distances,
        iterates_kept=iterates,
        failure_index=failure_index,
    )
