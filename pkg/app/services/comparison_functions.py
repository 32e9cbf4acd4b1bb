"""Comparison functions zeta: [0, inf) -> [0, inf).

A member of the comparison class is non-decreasing and its iterates vanish
pointwise, which forces zeta(0) = 0 and zeta(t) < t for t > 0. None of this
is decidable for an arbitrary callable, so :func:`check_membership` only ever
issues a *sampled certificate* over a finite grid.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import DomainError, UsageError
from app.schemas.reports import MembershipReport

# Rounding slack for the monotonicity check.
MONOTONE_SLACK = 1e-12


def _scaled_power(c: float, t: float, p: float) -> float:
    # overflow saturates to inf
    with np.errstate(over="ignore"):
        return float(c * np.power(t, p))


def default_grid(size: Optional[int] = None) -> np.ndarray:
    """Logarithmically spaced grid used for membership certificates."""
    size = size or settings.MEMBERSHIP_GRID_SIZE
    return np.logspace(
        math.log10(settings.MEMBERSHIP_GRID_LO),
        math.log10(settings.MEMBERSHIP_GRID_HI),
        size,
    )


@dataclass(frozen=True)
class ComparisonFn:
    """A scalar function candidate for the comparison class.

    Build instances with :meth:`linear`, :meth:`power_scaled` or
    :meth:`custom`; evaluation is pure and thread-safe.
    """

    kind: str
    fn: Callable[[float], float] = field(repr=False, compare=False)
    params: Dict[str, float] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        zero = float(self.fn(0.0))
        if zero != 0.0:
            raise UsageError(f"Comparison function {self.label} must vanish at 0, got {zero}")
        for t in default_grid():
            value = float(self.fn(float(t)))
            if not value >= 0.0:
                raise UsageError(
                    f"Comparison function {self.label} must be nonnegative, got {value} at t={t}"
                )

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}({args})"

    @classmethod
    def linear(cls, c: float) -> "ComparisonFn":
        """zeta(t) = c * t with 0 <= c < 1."""
        if not 0.0 <= c < 1.0:
            raise UsageError(f"Linear comparison function needs 0 <= c < 1, got {c}")
        return cls(kind="linear", fn=lambda t: c * t, params={"c": c})

    @classmethod
    def power_scaled(cls, c: float, p: float) -> "ComparisonFn":
        """zeta(t) = c * t**p with c >= 0 and p > 0.

        Only accepted when it passes the sampled membership certificate.
        """
        if c < 0.0 or p <= 0.0:
            raise UsageError(f"Power-scaled comparison function needs c >= 0 and p > 0, got c={c}, p={p}")
        zeta = cls(kind="power_scaled", fn=lambda t: _scaled_power(c, t, p), params={"c": c, "p": p})
        report = check_membership(zeta)
        if not report.passed:
            raise UsageError(
                f"{zeta.label} is not a comparison function: {report.violated_check} fails at t={report.worst_violation[0]}"
            )
        return zeta

    @classmethod
    def custom(cls, fn: Callable[[float], float], name: str = "custom") -> "ComparisonFn":
        return cls(kind="custom", fn=fn, name=name)

    def __call__(self, t: float) -> float:
        return evaluate(self, t)


def evaluate(zeta: ComparisonFn, t: float) -> float:
    """Return zeta(t) for t >= 0; values too large for a float come back as inf."""
    if not t >= 0.0:
        raise DomainError(f"Comparison functions are defined on [0, inf), got t={t}")
    try:
        return float(zeta.fn(float(t)))
    except OverflowError:
        return math.inf


def iterate_zeta(zeta: ComparisonFn, t: float, n: int) -> float:
    """Return the n-fold composition zeta^n(t); zeta^0 is the identity."""
    if n < 0:
        raise UsageError(f"Iteration count must be >= 0, got {n}")
    value = float(t)
    if value < 0.0:
        raise DomainError(f"Comparison functions are defined on [0, inf), got t={t}")
    for _ in range(n):
        value = evaluate(zeta, value)
    return value


def check_membership(
    zeta: ComparisonFn,
    grid: Optional[Sequence[float]] = None,
    n_max: Optional[int] = None,
    tol: Optional[float] = None,
) -> MembershipReport:
    """Certify the comparison-class conditions of ``zeta`` on a finite grid.

    The checks are, in reporting order: zeta(t) < t, monotonicity over the
    sorted grid, and zeta^n_max(t) < tol. ``worst_violation`` holds the grid
    point and failure amount of the worst offender of the first failing check.
    """
    points = default_grid() if grid is None else np.asarray(list(grid), dtype=np.float64)
    n_max = settings.MEMBERSHIP_N_MAX if n_max is None else n_max
    tol = settings.MEMBERSHIP_TOL if tol is None else tol

    if points.size == 0:
        raise UsageError("Membership grid must not be empty")
    if np.any(~(points > 0.0)):
        raise UsageError("Membership grid entries must be positive")
    if n_max < 1:
        raise UsageError(f"n_max must be >= 1, got {n_max}")
    if not tol > 0.0:
        raise UsageError(f"tol must be positive, got {tol}")

    points = np.sort(points)
    values = np.array([evaluate(zeta, float(t)) for t in points])
    iterated = np.array([iterate_zeta(zeta, float(t), n_max) for t in points])

    # Each entry: failure amount per grid point, positive where the check fails
    identity_gap = values - points
    monotone_gap = np.append(values[:-1] - values[1:] - MONOTONE_SLACK, -np.inf)
    vanish_gap = np.where(iterated < tol, -np.inf, iterated)

    checks = [
        ("strict_below_identity", identity_gap >= 0.0, identity_gap),
        ("nondecreasing", monotone_gap > 0.0, monotone_gap + MONOTONE_SLACK),
        ("iterates_vanish", ~(iterated < tol), vanish_gap),
    ]
    flags = {}
    worst = None
    violated = None
    for check_name, failed, detail in checks:
        flags[check_name] = not bool(np.any(failed))
        if worst is None and not flags[check_name]:
            i = int(np.argmax(np.where(failed, detail, -np.inf)))
            worst = (float(points[i]), float(detail[i]))
            violated = check_name

    report = MembershipReport(
        nondecreasing_ok=flags["nondecreasing"],
        iterates_vanish_ok=flags["iterates_vanish"],
        strict_below_identity_ok=flags["strict_below_identity"],
        worst_violation=worst,
        violated_check=violated,
        grid_size=int(points.size),
        n_max=n_max,
        tol=tol,
    )
    if not report.passed:
        logger.warning(f"{zeta.label} failed the sampled {violated} check at t={worst[0]}")
    return report
