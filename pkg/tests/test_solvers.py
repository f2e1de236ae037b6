import dataclasses

import numpy as np
import pytest

from monosplit.problems import Problem, make_l2_problem, make_r3_problem
from monosplit.solvers import (
    ALGORITHMS,
    FRAB_ADAPTIVE,
    FRAB_FIXED,
    FRAB_INERTIAL,
    FRAB_INERTIAL_VARIABLE,
    FRBSM,
    INERTIAL_VISCOSITY,
    RFBSM,
    STOP_DISTANCE,
    STOP_RESIDUAL,
    VISCOSITY,
    IterationState,
    SolverConfig,
    frab_fixed_step,
    frab_inertial_step,
    frab_step,
    frbsm_baseline_step,
    inertial_viscosity_step,
    initial_state,
    residual,
    rfbsm_baseline_step,
    run,
    validate_config,
    viscosity_step,
)
from monosplit.space import (
    MonotoneMap,
    NumericalFailure,
    ResolventOp,
    UsageError,
    box_resolvent,
    l1_resolvent,
    soft_threshold,
)
from monosplit.stepsize import Constant, PolyRatio, Rational, StepSizeState


def one_d_setup():
    """S = l1 subdifferential, T = identity, w0 = 4, w1 = 2."""
    T = MonotoneMap(lambda w: w.copy(), lipschitz=1.0)
    J = l1_resolvent()
    w0, w1 = np.array([4.0]), np.array([2.0])
    state = IterationState(w0, w1, T(w0), T(w1), StepSizeState(0.2, 0.2), 1)
    return T, J, state


def base_cfg(**kw):
    defaults = dict(algorithm=FRAB_ADAPTIVE, max_iter=100, tol=1e-10,
                    sigma=Constant(0.1), c=Constant(0.0),
                    anchor=np.array([0.0]), r_bar=0.3, beta_bar=0.19,
                    delta0=0.2, delta1=0.2)
    defaults.update(kw)
    return SolverConfig(**defaults)


# --- single-step hand evaluations ---------------------------------------------

def test_frab_step_hand_evaluation():
    T, J, state = one_d_setup()
    out = frab_step(state, base_cfg(), T, J)
    # argument: 0.1*0 + 0.9*2 - 0.2*2 - 0.2*0.9*(2-4) = 1.76, then shrink by 0.2
    assert out.w_curr[0] == pytest.approx(1.56, abs=1e-12)
    assert out.n == 2


def test_frab_step_fixed_point_at_zero():
    T, J, _ = one_d_setup()
    z = np.array([0.0])
    state = IterationState(z, z, T(z), T(z), StepSizeState(0.2, 0.2), 1)
    out = frab_step(state, base_cfg(), T, J)
    assert out.w_curr[0] == 0.0


def test_frab_fixed_step_coincides_when_deltas_equal():
    T, J, state = one_d_setup()
    adaptive = frab_step(state, base_cfg(), T, J)
    fixed = frab_fixed_step(state, base_cfg(algorithm=FRAB_FIXED, fixed_delta=0.2), T, J)
    assert fixed.w_curr[0] == adaptive.w_curr[0]


def test_frab_fixed_rejects_delta_at_boundary():
    problem = Problem(T=MonotoneMap(lambda w: w, lipschitz=1.0), J=l1_resolvent(),
                      dim=1, default_initials=(np.array([1.0]), np.array([1.0])))
    cfg = base_cfg(algorithm=FRAB_FIXED, fixed_delta=0.5)
    violations = validate_config(cfg, problem.T)
    assert any("fixed_delta" in v for v in violations)
    with pytest.raises(UsageError):
        run(problem, cfg)


def test_frab_inertial_step_hand_evaluation():
    T, J, state = one_d_setup()
    out = frab_inertial_step(state, base_cfg(theta=0.05), T, J)
    # inertial base adds 0.9*0.05*(2-4) = -0.09 to the previous argument 1.76
    assert out.w_curr[0] == pytest.approx(1.47, abs=1e-12)


def test_viscosity_step_hand_evaluation():
    T, J, state = one_d_setup()
    cfg = base_cfg(algorithm=VISCOSITY, contraction=(lambda w: 0.4 * w, 0.4))
    out = viscosity_step(state, cfg, T, J)
    sigma, kappa = 0.1, 0.4
    arg = (sigma * 0.4 * 2.0 + (1 - sigma) * 2.0 - 0.2 * 2.0
           - 0.2 * (1 - sigma * (1 - 2 * kappa)) * (2.0 - 4.0))
    assert out.w_curr[0] == pytest.approx(soft_threshold(np.array([arg]), 0.2)[0], abs=1e-14)


def test_viscosity_constant_anchor_matches_frab():
    T, J, state = one_d_setup()
    cfg_v = base_cfg(algorithm=VISCOSITY, contraction=(lambda w: np.array([0.0]), 0.0))
    out_v = viscosity_step(state, cfg_v, T, J)
    out_f = frab_step(state, base_cfg(), T, J)
    assert out_v.w_curr[0] == out_f.w_curr[0]


def test_inertial_viscosity_hand_evaluation():
    T, J, state = one_d_setup()
    cfg = base_cfg(algorithm=INERTIAL_VISCOSITY, theta=0.05,
                   contraction=(lambda w: 0.4 * w, 0.4))
    out = inertial_viscosity_step(state, cfg, T, J)
    sigma, kappa, theta = 0.1, 0.4, 0.05
    base = 2.0 + theta * (2.0 - 4.0)
    arg = (sigma * 0.4 * 2.0 + (1 - sigma) * base - 0.2 * 2.0
           - 0.2 * (1 - sigma * (1 - 2 * kappa)) * (2.0 - 4.0))
    assert out.w_curr[0] == pytest.approx(soft_threshold(np.array([arg]), 0.2)[0], abs=1e-14)


def test_frbsm_constant_step_identity():
    # w - d*Tw_n - d*(Tw_n - Tw_{n-1}) == w - 2d*Tw_n + d*Tw_{n-1}
    T, J, state = one_d_setup()
    cfg = base_cfg(algorithm=FRBSM, step_lambda=Constant(0.2))
    out = frbsm_baseline_step(state, cfg, T, J)
    d = 0.2
    direct = soft_threshold(state.w_curr - 2 * d * state.Tw_curr + d * state.Tw_prev, d)
    assert out.w_curr[0] == direct[0]


def test_rfbsm_hand_evaluation():
    T, J, state = one_d_setup()
    cfg = base_cfg(algorithm=RFBSM, gamma=0.2)
    out = rfbsm_baseline_step(state, cfg, T, J)
    # reflected point 2*2-4 = 0, argument 2 - 0.2*T(0) = 2, shrink by 0.2
    assert out.w_curr[0] == pytest.approx(1.8, abs=1e-14)


# --- reduction lattice (bit-for-bit degenerations) ------------------------------

def random_monotone_setup(rng, dim=5):
    M = rng.standard_normal((dim, dim))
    sym = M @ M.T / dim            # positive semidefinite part
    skew = rng.standard_normal((dim, dim))
    A = sym + (skew - skew.T)      # monotone linear operator
    b = rng.standard_normal(dim)
    T = MonotoneMap(lambda w: A @ w + b)
    J = l1_resolvent()
    w0 = rng.standard_normal(dim)
    w1 = rng.standard_normal(dim)
    state = IterationState(w0, w1, T(w0), T(w1),
                           StepSizeState(rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)),
                           int(rng.integers(1, 50)))
    return T, J, state


def test_reduction_lattice_bitwise_over_random_states():
    rng = np.random.default_rng(42)
    for _ in range(100):
        T, J, state = random_monotone_setup(rng)
        anchor = rng.standard_normal(5)
        sigma = Rational(1.0, 1.0, float(rng.integers(5, 50)))
        shared = dict(sigma=sigma, c=Constant(0.0), r_bar=0.3, beta_bar=0.19,
                      delta0=0.1, delta1=0.1, max_iter=1, tol=0.0)
        plain = SolverConfig(algorithm=FRAB_ADAPTIVE, anchor=anchor, **shared)
        inertial0 = SolverConfig(algorithm=FRAB_INERTIAL, anchor=anchor, theta=0.0, **shared)
        visc_const = SolverConfig(algorithm=VISCOSITY,
                                  contraction=(lambda w: anchor, 0.0), **shared)
        visc = SolverConfig(algorithm=VISCOSITY,
                            contraction=(lambda w: 0.3 * w, 0.3), **shared)
        iv_theta0 = SolverConfig(algorithm=INERTIAL_VISCOSITY, theta=0.0,
                                 contraction=(lambda w: 0.3 * w, 0.3), **shared)
        iv_full0 = SolverConfig(algorithm=INERTIAL_VISCOSITY, theta=0.0,
                                contraction=(lambda w: anchor, 0.0), **shared)

        ref = frab_step(state, plain, T, J).w_curr
        assert np.array_equal(frab_inertial_step(state, inertial0, T, J).w_curr, ref)
        assert np.array_equal(viscosity_step(state, visc_const, T, J).w_curr, ref)
        assert np.array_equal(inertial_viscosity_step(state, iv_full0, T, J).w_curr, ref)
        assert np.array_equal(inertial_viscosity_step(state, iv_theta0, T, J).w_curr,
                              viscosity_step(state, visc, T, J).w_curr)


def test_variable_inertia_reduces_to_constant():
    rng = np.random.default_rng(1)
    T, J, state = random_monotone_setup(rng)
    anchor = rng.standard_normal(5)
    shared = dict(sigma=Constant(0.01), c=Constant(0.0), r_bar=0.3, beta_bar=0.19,
                  delta0=0.1, delta1=0.1, max_iter=1, tol=0.0, anchor=anchor)
    const = SolverConfig(algorithm=FRAB_INERTIAL, theta=0.04, **shared)
    variable = SolverConfig(algorithm=FRAB_INERTIAL_VARIABLE,
                            theta=lambda n: 0.04, theta_bar=0.04, **shared)
    assert np.array_equal(frab_inertial_step(state, const, T, J).w_curr,
                          frab_inertial_step(state, variable, T, J).w_curr)


# --- fixed-point preservation ----------------------------------------------------

def all_algorithm_configs(anchor, fixed_point=None):
    sigma = Rational(1.0, 1.0, 10.0)
    contraction = (lambda w: anchor.copy(), 0.0)
    shared = dict(max_iter=50, tol=0.0, sigma=sigma, c=Constant(0.0),
                  r_bar=0.3, beta_bar=0.19, delta0=0.1, delta1=0.2)
    return [
        SolverConfig(algorithm=FRAB_ADAPTIVE, anchor=anchor, **shared),
        SolverConfig(algorithm=FRAB_FIXED, anchor=anchor, fixed_delta=0.2, **shared),
        SolverConfig(algorithm=FRAB_INERTIAL, anchor=anchor, theta=0.04, **shared),
        SolverConfig(algorithm=FRAB_INERTIAL_VARIABLE, anchor=anchor,
                     theta=lambda n: 0.04 * n / (n + 1.0), theta_bar=0.04, **shared),
        SolverConfig(algorithm=VISCOSITY, contraction=contraction, **shared),
        SolverConfig(algorithm=INERTIAL_VISCOSITY, contraction=contraction,
                     theta=0.04, **shared),
        SolverConfig(algorithm=FRBSM, max_iter=50, tol=0.0, step_lambda=Constant(0.1)),
        SolverConfig(algorithm=RFBSM, max_iter=50, tol=0.0, gamma=0.1),
    ]


def test_fixed_point_preservation_all_algorithms():
    problem = make_r3_problem("ia")
    solution = problem.known_solution
    for cfg in all_algorithm_configs(anchor=solution):
        cfg = dataclasses.replace(cfg, w0=solution.copy(), w1=solution.copy(),
                                  stop_metric=STOP_RESIDUAL)
        record = run(problem, cfg)
        assert record.iterations == 50
        assert max(record.residuals) == 0.0, cfg.algorithm
        np.testing.assert_array_equal(record.final_iterate, solution)


# --- residual ---------------------------------------------------------------------

def test_residual_zero_at_r3_solution():
    problem = make_r3_problem("ia")
    assert residual(problem.known_solution, problem.T, problem.J) == 0.0


def test_residual_zero_at_l2_solution():
    problem = make_l2_problem(64, "iia")
    assert residual(np.zeros(64), problem.T, problem.J) == 0.0


def test_residual_hand_value_on_positive_part_operator():
    problem = make_l2_problem(64, "iia")
    w = np.zeros(64)
    w[0] = 2.0
    # T(w) = w, so w - Tw = 0, J(0) = 0 and the residual is 0.5 * |w|^2 = 2
    assert residual(w, problem.T, problem.J) == pytest.approx(2.0)


def test_residual_positive_off_solutions():
    problem = make_r3_problem("ia")
    rng = np.random.default_rng(5)
    for _ in range(20):
        w = problem.known_solution + rng.standard_normal(3) * 0.5
        if np.linalg.norm(w - problem.known_solution) > 1e-8:
            assert residual(w, problem.T, problem.J) > 0.0


# --- driver behavior ----------------------------------------------------------------

def r3_reference_cfg(**kw):
    defaults = dict(algorithm=FRAB_ADAPTIVE, max_iter=10000, tol=1e-10,
                    r_bar=0.3, beta_bar=0.19, delta0=0.1, delta1=0.3,
                    sigma=Rational(0.005, 3, 25000),
                    c=PolyRatio((1.0,), (1.0, 0.0, 1.0)),
                    anchor=np.array([2.0, 1.0, -6.0]),
                    stop_metric=STOP_DISTANCE)
    defaults.update(kw)
    return SolverConfig(**defaults)


def test_run_r3_case_ia_count_and_limit():
    problem = make_r3_problem("ia")
    record = run(problem, r3_reference_cfg())
    assert 45 <= record.iterations <= 75
    assert record.terminated_by == "tolerance"
    assert np.linalg.norm(record.final_iterate - problem.known_solution) < 2e-5


def test_run_zero_budget():
    problem = make_r3_problem("ia")
    record = run(problem, r3_reference_cfg(max_iter=0))
    assert record.iterations == 0
    assert record.terminated_by == "max_iter"
    assert record.residuals == []


def test_run_deterministic():
    problem = make_r3_problem("ia")
    a = run(problem, r3_reference_cfg())
    b = run(problem, r3_reference_cfg())
    assert a.residuals == b.residuals
    assert a.deltas == b.deltas
    assert a.iterations == b.iterations


def test_run_trace_lengths_match_iterations():
    problem = make_r3_problem("ia")
    record = run(problem, r3_reference_cfg(keep_iterates=True))
    assert len(record.residuals) == record.iterations
    assert len(record.deltas) == record.iterations
    assert len(record.elapsed) == record.iterations
    # trace holds w0, w1 plus every produced iterate
    assert len(record.iterates_kept) == record.iterations + 2


def test_run_rejects_invalid_config():
    problem = make_r3_problem("ia")
    with pytest.raises(UsageError):
        run(problem, r3_reference_cfg(r_bar=0.35, beta_bar=0.2))


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_numerical_failure_carries_index_and_record():
    # gradient scale blows the iterates up to overflow
    problem = Problem(
        T=MonotoneMap(lambda w: 1e12 * w),
        J=ResolventOp(lambda a, d: a),
        dim=2,
        default_initials=(np.array([1.0, 1.0]), np.array([2.0, 2.0])),
    )
    cfg = SolverConfig(algorithm=RFBSM, max_iter=1000, tol=0.0, gamma=10.0)
    with pytest.raises(NumericalFailure) as err:
        run(problem, cfg)
    assert err.value.record is not None
    assert err.value.record.terminated_by == "numerical_failure"
    assert err.value.iteration == err.value.record.failure_index
    assert err.value.record.iterations < 1000


def test_cache_coherence_exact():
    problem = make_r3_problem("ia")
    T, J = problem.T, problem.J
    cfg = r3_reference_cfg()
    state = initial_state(cfg, *problem.default_initials, T)
    for _ in range(10):
        state = frab_step(state, cfg, T, J)
        np.testing.assert_array_equal(state.Tw_curr, T(state.w_curr))
        np.testing.assert_array_equal(state.Tw_prev, T(state.w_prev))


# --- per-iteration cost ---------------------------------------------------------------

def test_forward_evaluation_budget():
    problem = make_r3_problem("ia")
    solution = problem.known_solution
    for cfg in all_algorithm_configs(anchor=solution):
        cfg = dataclasses.replace(cfg, max_iter=1000, tol=0.0)
        record = run(problem, cfg)
        assert record.iterations == 1000
        assert record.operator_eval_count <= record.iterations + 2, cfg.algorithm
        assert record.resolvent_call_count == record.iterations, cfg.algorithm


# --- anchored strong limit --------------------------------------------------------------

def test_anchored_limit_is_projection_of_anchor():
    # degenerate inclusion: T = 0, S = normal cone of a box in R^2
    lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    problem = Problem(
        T=MonotoneMap(lambda w: np.zeros_like(w)),
        J=box_resolvent(lo, hi),
        dim=2,
        default_initials=(np.array([-0.3, -0.8]), np.array([-0.3, -0.8])),
    )
    anchor = np.array([2.0, 0.5])
    cfg = SolverConfig(algorithm=FRAB_ADAPTIVE, max_iter=10000, tol=0.0,
                       r_bar=0.3, beta_bar=0.19, delta0=0.1, delta1=0.3,
                       sigma=lambda n: 0.99 / n**0.9, c=Constant(0.0),
                       anchor=anchor, stop_metric=STOP_RESIDUAL)
    record = run(problem, cfg)
    expected = np.clip(anchor, lo, hi)  # clamp oracle
    assert np.linalg.norm(record.final_iterate - expected) < 1e-6
