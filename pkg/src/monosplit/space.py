"""Dense vector arithmetic and the operator abstractions used by the solvers."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class UsageError(ValueError):
    """Raised on misuse of the library API (bad dimensions, bad parameters)."""


class NumericalFailure(RuntimeError):
    """A non-finite quantity appeared during an iteration.

    Attributes
    ----------
    iteration : int
        Index of the iteration at which the failure was detected.
    record : object, optional
        Partial run record, attached by the driver when available.
    """

    def __init__(self, message, iteration, record=None):
        super().__init__(message)
        self.iteration = iteration
        self.record = record


def as_vector(entries) -> np.ndarray:
    """Validate and return a point of the ambient space as a float64 array.

    Requires dimension >= 1 and finite entries; the result is a fresh,
    read-only copy so shared problem data cannot be mutated by callers.
    """
    w = np.array(entries, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise UsageError(f"expected a 1-D vector with at least one entry, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise UsageError("vector entries must be finite")
    w.setflags(write=False)
    return w


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean inner product, with a dimension check."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def soft_threshold(w: np.ndarray, delta: float) -> np.ndarray:
    """Componentwise shrinkage sign(w_i) * max(|w_i| - delta, 0).

    This is the resolvent of delta times the l1-norm subdifferential.
    """
    if delta <= 0:
        raise UsageError(f"soft_threshold requires delta > 0, got {delta}")
    w = np.asarray(w, dtype=float)
    return np.sign(w) * np.maximum(np.abs(w) - delta, 0.0)


def box_project(w: np.ndarray, lo, hi) -> np.ndarray:
    """Componentwise clamp of ``w`` onto the box [lo, hi].

    ``lo`` and ``hi`` may be scalars or vectors.  The projection is the
    resolvent of the box's normal cone for every positive resolvent
    parameter, so no ``delta`` argument is needed.
    """
    w = np.asarray(w, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), w.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), w.shape)
    if np.any(lo > hi):
        raise UsageError("box_project requires lo <= hi componentwise")
    return np.clip(w, lo, hi)


def scaled_identity_resolvent(a: np.ndarray, delta: float, slope: float) -> np.ndarray:
    """Exact resolvent of the linear operator w -> slope * w: a / (1 + delta*slope)."""
    if delta <= 0 or slope <= 0:
        raise UsageError("scaled_identity_resolvent requires delta > 0 and slope > 0")
    return np.asarray(a, dtype=float) / (1.0 + delta * slope)


@dataclass(frozen=True)
class MonotoneMap:
    """Single-valued monotone operator, optionally with a known Lipschitz constant.

    ``fn`` must be deterministic and dimension-preserving.  ``lipschitz`` is
    metadata: required by fixed-step solvers, ignored by adaptive ones.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: Optional[float] = None

    def __post_init__(self):
        if self.lipschitz is not None and self.lipschitz <= 0:
            raise UsageError("lipschitz constant must be positive when given")

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return self.fn(w)


@dataclass(frozen=True)
class ResolventOp:
    """Resolvent of a maximal monotone operator: (I + delta*S)^(-1)."""

    fn: Callable[[np.ndarray, float], np.ndarray]

    def __call__(self, a: np.ndarray, delta: float) -> np.ndarray:
        return self.fn(a, delta)


def l1_resolvent() -> ResolventOp:
    """Resolvent of the l1-norm subdifferential (soft thresholding)."""
    return ResolventOp(soft_threshold)


def box_resolvent(lo, hi) -> ResolventOp:
    """Resolvent of a box's normal cone: the clamp, for every delta."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise UsageError("box_resolvent requires lo <= hi componentwise")
    return ResolventOp(lambda a, delta: box_project(a, lo, hi))


def scaled_identity(slope: float) -> ResolventOp:
    """Resolvent of w -> slope * w."""
    return ResolventOp(lambda a, delta: scaled_identity_resolvent(a, delta, slope))
