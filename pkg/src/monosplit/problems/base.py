"""Common problem container shared by all benchmark families."""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..space import MonotoneMap, ResolventOp


@dataclass(frozen=True)
class Problem:
    """A monotone inclusion instance: forward operator, resolvent, metadata."""

    T: MonotoneMap
    J: ResolventOp
    dim: int
    default_initials: Tuple[np.ndarray, np.ndarray]
    known_solution: Optional[np.ndarray] = None
    label: str = ""


def geometric(first: float, ratio: float, n: int) -> np.ndarray:
    """First ``n`` terms of the geometric sequence first * ratio**k."""
    return first * np.asarray(ratio, dtype=float) ** np.arange(n)


def geometric_tail_norm(first: float, ratio: float, n: int) -> float:
    """l2 norm of the dropped tail when truncating after ``n`` terms."""
    r = abs(ratio)
    if r >= 1.0:
        return float("inf")
    return abs(first) * r**n / np.sqrt(1.0 - r * r)
