"""Small closed-form benchmark problems with known solutions."""

import numpy as np

from ..space import MonotoneMap, UsageError, l1_resolvent, scaled_identity
from .base import Problem, geometric, geometric_tail_norm

R3_CASES = {
    "ia": (np.array([5.0, 1.0, -4.0]), np.array([20.0, 4.0, 7.0])),
    "ib": (np.array([-7.0, 10.0, 3.0]), np.array([90.0, -3.0, -4.0])),
}

# (w0 first term, w0 ratio, w1 first term, w1 ratio) per case.
L2_CASES = {
    "iia": (2.0, -0.5, 2.0 / 3.0, 1.0 / 6.0),
    "iib": (4.0, 0.25, 9.0, 1.0 / np.sqrt(3.0)),
    "iic": (4.0 / 3.0, 1.0 / 3.0, -2.0, -0.5),
    "iid": (-4.0, -0.25, 20.0, -0.2),
}

# Anchor used by the truncated-sequence experiments: 1.5 * (-1/2)**k.
L2_ANCHOR_FIRST = 1.5
L2_ANCHOR_RATIO = -0.5


def make_r3_problem(case: str = "ia") -> Problem:
    """l1-regularized quadratic in R3 with minimizer (1, 0, 1).

    The smooth part has gradient 2*w + (-3, 1, -3) (Lipschitz constant 2);
    the nonsmooth part is the l1 norm, so the backward step is soft
    thresholding.
    """
    case = case.lower()
    if case not in R3_CASES:
        raise UsageError(f"unknown case {case!r}; choose from {sorted(R3_CASES)}")
    shift = np.array([-3.0, 1.0, -3.0])

    def grad(w):
        return 2.0 * w + shift

    w0, w1 = R3_CASES[case]
    return Problem(
        T=MonotoneMap(grad, lipschitz=2.0),
        J=l1_resolvent(),
        dim=3,
        default_initials=(w0.copy(), w1.copy()),
        known_solution=np.array([1.0, 0.0, 1.0]),
        label=f"r3-case-{case}",
    )


def make_l2_problem(trunc_dim: int = 64, case: str = "iia") -> Problem:
    """Truncation of the sequence-space instance with solution 0.

    The set-valued part is 2*I (resolvent a / (1 + 2*delta)); the forward
    operator is the componentwise positive part, monotone with Lipschitz
    constant 1.  Initial points are geometric sequences materialized to
    ``trunc_dim`` entries; the truncation must keep their dropped tails
    below 1e-10 in norm.
    """
    case = case.lower()
    if case not in L2_CASES:
        raise UsageError(f"unknown case {case!r}; choose from {sorted(L2_CASES)}")
    if trunc_dim < 8:
        raise UsageError("trunc_dim must be at least 8")
    f0, r0, f1, r1 = L2_CASES[case]
    for first, ratio in ((f0, r0), (f1, r1), (L2_ANCHOR_FIRST, L2_ANCHOR_RATIO)):
        tail = geometric_tail_norm(first, ratio, trunc_dim)
        if tail > 1e-10:
            raise UsageError(
                f"trunc_dim={trunc_dim} leaves a tail of norm {tail:.2e} > 1e-10"
            )

    def positive_part(a):
        return 0.5 * (a + np.abs(a))

    return Problem(
        T=MonotoneMap(positive_part, lipschitz=1.0),
        J=scaled_identity(2.0),
        dim=trunc_dim,
        default_initials=(geometric(f0, r0, trunc_dim), geometric(f1, r1, trunc_dim)),
        known_solution=np.zeros(trunc_dim),
        label=f"l2-case-{case}-dim{trunc_dim}",
    )


def l2_anchor(trunc_dim: int) -> np.ndarray:
    """Anchor point matching the truncated sequence-space experiments."""
    return geometric(L2_ANCHOR_FIRST, L2_ANCHOR_RATIO, trunc_dim)
