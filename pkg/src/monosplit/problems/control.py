"""Linear-dynamics terminal-cost control problems reduced to inclusions.

The decision variable is a piecewise-constant control on a uniform mesh.
The forward operator runs an explicit Euler state sweep, applies the
terminal gradient and runs the matching discrete adjoint sweep backwards,
yielding the exact gradient of the discretized objective.  The backward
step is the projection onto the control bounds.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ..space import MonotoneMap, UsageError, box_resolvent
from .base import Problem

MatrixLike = Union[np.ndarray, Callable[[float], np.ndarray]]


def _as_time_fn(M: MatrixLike) -> Callable[[float], np.ndarray]:
    if callable(M):
        return M
    arr = np.asarray(M, dtype=float)
    return lambda t: arr


@dataclass(frozen=True)
class ControlProblem:
    """Data of one control instance on the horizon [0, T_end].

    ``P_dyn`` (d x d) and ``Q_dyn`` (d x l) may be constant arrays or
    callables of time.  ``mesh`` is the number of control intervals; the
    control vector has ``mesh * l`` entries.  ``weighted`` selects the
    mesh-weighted control-space pairing (gradients independent of the mesh
    width) over the raw Euclidean one.
    """

    P_dyn: MatrixLike
    Q_dyn: MatrixLike
    horizon: float
    mesh: int
    x0: np.ndarray
    terminal_grad: Callable[[np.ndarray], np.ndarray]
    terminal_value: Callable[[np.ndarray], float]
    lower: float = -1.0
    upper: float = 1.0
    weighted: bool = True

    def __post_init__(self):
        if self.mesh < 2:
            raise UsageError("mesh must have at least 2 intervals")
        if self.horizon <= 0:
            raise UsageError("horizon must be positive")
        if np.any(np.asarray(self.lower) > np.asarray(self.upper)):
            raise UsageError("control bounds require lower <= upper")

    @property
    def h(self) -> float:
        return self.horizon / self.mesh

    @property
    def n_controls(self) -> int:
        Q = _as_time_fn(self.Q_dyn)(0.0)
        return int(np.atleast_2d(Q).shape[1])

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.mesh + 1)


def simulate_states(spec: ControlProblem, z: np.ndarray) -> np.ndarray:
    """Explicit Euler state sweep; returns the (mesh+1) x d trajectory."""
    P = _as_time_fn(spec.P_dyn)
    Q = _as_time_fn(spec.Q_dyn)
    h = spec.h
    l = spec.n_controls
    z = np.asarray(z, dtype=float).reshape(spec.mesh, l)
    states = np.empty((spec.mesh + 1, spec.x0.size))
    states[0] = spec.x0
    t = 0.0
    for j in range(spec.mesh):
        states[j + 1] = states[j] + h * (P(t) @ states[j] + np.atleast_2d(Q(t)) @ z[j])
        t += h
    return states


def objective_value(spec: ControlProblem, z: np.ndarray) -> float:
    """Terminal objective of the discretized dynamics under control ``z``."""
    return float(spec.terminal_value(simulate_states(spec, z)[-1]))


def control_gradient(spec: ControlProblem, z: np.ndarray) -> np.ndarray:
    """Gradient of the discretized objective via the adjoint sweep.

    With ``weighted=True`` the result is the gradient in the mesh-weighted
    pairing (the Euclidean gradient divided by the mesh width).
    """
    P = _as_time_fn(spec.P_dyn)
    Q = _as_time_fn(spec.Q_dyn)
    h = spec.h
    l = spec.n_controls
    states = simulate_states(spec, z)
    psi = np.asarray(spec.terminal_grad(states[-1]), dtype=float)
    grad = np.empty((spec.mesh, l))
    for j in range(spec.mesh - 1, -1, -1):
        t = j * h
        grad[j] = np.atleast_2d(Q(t)).T @ psi
        psi = psi + h * (P(t).T @ psi)
    if not spec.weighted:
        grad *= h
    return grad.ravel()


def make_control_problem(spec: ControlProblem) -> Problem:
    """Wrap a control instance as a monotone inclusion on the control vector."""
    dim = spec.mesh * spec.n_controls
    lo = np.full(dim, spec.lower, dtype=float)
    hi = np.full(dim, spec.upper, dtype=float)
    zeros = np.zeros(dim)
    return Problem(
        T=MonotoneMap(lambda z: control_gradient(spec, z)),
        J=box_resolvent(lo, hi),
        dim=dim,
        default_initials=(zeros.copy(), zeros.copy()),
        known_solution=None,
        label=f"control-K{spec.mesh}",
    )


def double_integrator(mesh: int = 100, weighted: bool = True) -> ControlProblem:
    """Double integrator on [0, 2] with objective -w1(T) + w2(T)^2.

    Dynamics: dw1 = w2, dw2 = z, w(0) = 0, control bounded in [-1, 1].
    The optimal control is bang-bang, +1 before t = 1.2 and -1 after.
    """
    P = np.array([[0.0, 1.0], [0.0, 0.0]])
    Q = np.array([[0.0], [1.0]])

    def grad(w):
        return np.array([-1.0, 2.0 * w[1]])

    def value(w):
        return -w[0] + w[1] ** 2

    return ControlProblem(
        P_dyn=P,
        Q_dyn=Q,
        horizon=2.0,
        mesh=mesh,
        x0=np.zeros(2),
        terminal_grad=grad,
        terminal_value=value,
        lower=-1.0,
        upper=1.0,
        weighted=weighted,
    )


def bang_bang_control(spec: ControlProblem, switch_time: float,
                      before: float = 1.0, after: float = -1.0) -> np.ndarray:
    """Single-switch control sampled at the mesh-cell midpoints."""
    h = spec.h
    mids = (np.arange(spec.mesh) + 0.5) * h
    z = np.where(mids < switch_time, before, after)
    return np.repeat(z, spec.n_controls)


def estimate_switch_time(spec: ControlProblem, z: np.ndarray) -> Optional[float]:
    """Left endpoint of the first mesh cell whose control changes sign."""
    z = np.asarray(z, dtype=float).reshape(spec.mesh, spec.n_controls)[:, 0]
    signs = np.sign(z)
    for j in range(1, spec.mesh):
        if signs[j] != signs[0]:
            return j * spec.h
    return None
