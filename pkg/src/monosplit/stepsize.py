"""Self-adaptive step-size recurrence and the coefficient sequences it consumes."""

import math
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .space import NumericalFailure, UsageError

# Threshold on the operator-difference norm below which the two operator
# values are treated as equal and the additive cap branch is taken.
EPS_OPERATOR = 1e-30


@dataclass(frozen=True)
class StepSizeState:
    """Pair of consecutive step sizes plus the iteration index they belong to."""

    delta_prev: float
    delta_curr: float
    n: int = 1

    def __post_init__(self):
        if not (self.delta_prev > 0 and self.delta_curr > 0):
            raise UsageError("step sizes must be positive")


def update_step(
    state: StepSizeState,
    r_bar: float,
    c_n: float,
    w_curr: np.ndarray,
    w_next: np.ndarray,
    Tw_curr: np.ndarray,
    Tw_next: np.ndarray,
) -> StepSizeState:
    """Advance the step size one iteration.

    The new value is ``min(r_bar * |w_next - w_curr| / |Tw_next - Tw_curr|,
    delta_curr + c_n)``; when the operator values coincide (difference norm
    below ``EPS_OPERATOR``) only the additive cap applies.  The returned
    state has ``delta_prev`` shifted to the old ``delta_curr``.
    """
    diff_w = float(np.linalg.norm(w_next - w_curr))
    diff_T = float(np.linalg.norm(Tw_next - Tw_curr))
    if not (math.isfinite(diff_w) and math.isfinite(diff_T)):
        raise NumericalFailure("non-finite norm in step-size update", state.n)
    capped = state.delta_curr + c_n
    # diff_w == 0 forces the cap too: a deterministic operator cannot move.
    if diff_T <= EPS_OPERATOR or diff_w == 0.0:
        new_delta = capped
    else:
        new_delta = min(r_bar * diff_w / diff_T, capped)
    return StepSizeState(delta_prev=state.delta_curr, delta_curr=new_delta, n=state.n + 1)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a parameter check: empty ``violations`` means acceptable."""

    violations: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_parameters(
    r_bar: float,
    beta_bar: float,
    theta_bar: float = 0.0,
    kappa_bar: float = 0.0,
) -> ValidationReport:
    """Check the admissible ranges of the solver constants.

    Accepts iff beta_bar in (0, 1/4), r_bar in (beta_bar, (1 - 2*beta_bar)/2),
    theta_bar in [0, min(beta_bar/2, (1/2 - r_bar)/2)) and kappa_bar in
    [0, 1/2).  Never raises; every violated constraint is listed.
    """
    violations = []
    if not (0.0 < beta_bar < 0.25):
        violations.append(f"beta_bar={beta_bar} outside (0, 0.25)")
    lo, hi = beta_bar, (1.0 - 2.0 * beta_bar) / 2.0
    if not (lo < r_bar < hi):
        violations.append(f"r_bar={r_bar} outside ({lo}, {hi})")
    theta_cap = min(beta_bar / 2.0, (0.5 - r_bar) / 2.0)
    if not (0.0 <= theta_bar < theta_cap):
        violations.append(f"theta_bar={theta_bar} outside [0, {theta_cap})")
    if not (0.0 <= kappa_bar < 0.5):
        violations.append(f"kappa_bar={kappa_bar} outside [0, 0.5)")
    return ValidationReport(tuple(violations))


# ---------------------------------------------------------------------------
# Coefficient sequences.  All kinds are callables of a 1-based index; they are
# evaluated lazily and never materialized.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    """n -> value."""

    value: float

    def __call__(self, n: int) -> float:
        return self.value


@dataclass(frozen=True)
class Rational:
    """n -> a / (b*n + c)."""

    a: float
    b: float
    c: float

    def __call__(self, n: int) -> float:
        return self.a / (self.b * n + self.c)


@dataclass(frozen=True)
class InverseSquare:
    """n -> 1 / (a*n + b)^2."""

    a: float
    b: float

    def __call__(self, n: int) -> float:
        return 1.0 / (self.a * n + self.b) ** 2


@dataclass(frozen=True)
class PolyRatio:
    """Ratio of two polynomials in n, coefficients highest degree first."""

    num: Tuple[float, ...]
    den: Tuple[float, ...]

    def __call__(self, n: int) -> float:
        p = 0.0
        for coeff in self.num:
            p = p * n + coeff
        q = 0.0
        for coeff in self.den:
            q = q * n + coeff
        return p / q


@dataclass(frozen=True)
class Table:
    """Explicit leading values; indices past the end return the last entry."""

    values: Tuple[float, ...]

    def __call__(self, n: int) -> float:
        if n < 1:
            n = 1
        return self.values[min(n, len(self.values)) - 1]


def is_summable(seq) -> Optional[bool]:
    """Best-effort summability test for the known sequence kinds.

    Returns ``True``/``False`` when decidable, ``None`` for arbitrary
    callables.
    """
    if isinstance(seq, Constant):
        return seq.value == 0.0
    if isinstance(seq, InverseSquare):
        return True
    if isinstance(seq, Rational):
        return seq.a == 0.0
    if isinstance(seq, PolyRatio):
        deg_num = len(seq.num) - 1
        deg_den = len(seq.den) - 1
        lead = next((c for c in seq.num if c != 0.0), 0.0)
        if lead == 0.0:
            return True
        return deg_den >= deg_num + 2
    if isinstance(seq, Table):
        return seq.values[-1] == 0.0
    return None


_KIND_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def parse_sequence(text: str):
    """Parse a sequence expression of the documented kinds.

    Syntax: ``constant(v)``, ``rational(a, b, c)`` for a/(b*n + c),
    ``inverse_square(a, b)`` for 1/(a*n + b)^2,
    ``polyratio(p...; q...)`` for a polynomial ratio with coefficients
    highest degree first, and ``table(v1, v2, ...)``.
    A bare number is shorthand for ``constant``.
    """
    text = text.strip()
    try:
        return Constant(float(text))
    except ValueError:
        pass
    m = _KIND_RE.match(text)
    if not m:
        raise UsageError(f"cannot parse sequence expression: {text!r}")
    kind, body = m.group(1), m.group(2)
    try:
        if kind == "constant":
            return Constant(float(body))
        if kind == "rational":
            a, b, c = (float(t) for t in body.split(","))
            return Rational(a, b, c)
        if kind == "inverse_square":
            a, b = (float(t) for t in body.split(","))
            return InverseSquare(a, b)
        if kind == "polyratio":
            num_s, den_s = body.split(";")
            num = tuple(float(t) for t in num_s.split(","))
            den = tuple(float(t) for t in den_s.split(","))
            return PolyRatio(num, den)
        if kind == "table":
            return Table(tuple(float(t) for t in body.split(",")))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad arguments in sequence expression {text!r}: {exc}") from exc
    raise UsageError(f"unknown sequence kind {kind!r}")


def format_sequence(seq) -> str:
    """Inverse of :func:`parse_sequence` for the known kinds."""
    if isinstance(seq, Constant):
        return f"constant({seq.value!r})"
    if isinstance(seq, Rational):
        return f"rational({seq.a!r}, {seq.b!r}, {seq.c!r})"
    if isinstance(seq, InverseSquare):
        return f"inverse_square({seq.a!r}, {seq.b!r})"
    if isinstance(seq, PolyRatio):
        num = ", ".join(repr(c) for c in seq.num)
        den = ", ".join(repr(c) for c in seq.den)
        return f"polyratio({num}; {den})"
    if isinstance(seq, Table):
        return "table(" + ", ".join(repr(v) for v in seq.values) + ")"
    raise UsageError(f"cannot format sequence of type {type(seq).__name__}")
