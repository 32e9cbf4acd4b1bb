"""Picard, Krasnoselskij and alternating iteration with full traces.

Every run records the iterates p_0 ... p_M and the step norms
||p_{m+1} - p_m||, and stops on the first of: a step below ``tol``
(converged), a revisited iterate (cycle detected), or ``max_iters`` steps.
"""
import csv
import io
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, TextIO, Union

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import NumericOverflowError, UsageError
from app.services.mappings import Mapping, averaged, fix_residual
from app.services.normed_spaces import NormedSpace, Vector, VectorLike, affine_combine, as_vector


class IterationStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS_REACHED = "max_iters_reached"
    CYCLE_DETECTED = "cycle_detected"


@dataclass(frozen=True)
class IterationConfig:
    """Averaging parameter and stopping rules of a run."""

    lam: float = 1.0
    max_iters: int = field(default_factory=lambda: settings.MAX_ITERS)
    tol: float = field(default_factory=lambda: settings.TOL)
    cycle_window: int = field(default_factory=lambda: settings.CYCLE_WINDOW)
    cycle_tol: float = field(default_factory=lambda: settings.CYCLE_TOL)

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise UsageError(f"lambda must lie in (0, 1], got {self.lam}")
        if self.max_iters < 1:
            raise UsageError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0.0:
            raise UsageError(f"tol must be positive, got {self.tol}")
        if self.cycle_window < 0:
            raise UsageError(f"cycle_window must be >= 0, got {self.cycle_window}")

    def with_lambda(self, lam: float) -> "IterationConfig":
        return replace(self, lam=lam)


def lambda_from_k(k: float) -> float:
    """Averaging parameter 1/(k+1) guaranteed to work for an enriched map with shift k."""
    if not k >= 0.0:
        raise UsageError(f"k must be >= 0, got {k}")
    return 1.0 / (k + 1.0)


@dataclass
class IterationTrace:
    iterates: List[Vector]
    step_norms: List[float]
    status: IterationStatus
    limit: Optional[Vector] = None
    period: Optional[int] = None

    @property
    def iterations(self) -> int:
        return len(self.step_norms)

    @property
    def final(self) -> Vector:
        return self.iterates[-1]

    @property
    def converged(self) -> bool:
        return self.status is IterationStatus.CONVERGED

    def write_csv(self, target: Union[str, Path, TextIO]) -> None:
        """Write the trace as ``n,step_norm,x0,...`` rows with 17 significant digits."""
        if isinstance(target, (str, Path)):
            with open(target, "w", newline="", encoding="utf-8") as fh:
                self.write_csv(fh)
            return
        d = self.iterates[0].size
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(["n", "step_norm"] + [f"x{i}" for i in range(d)])
        for n, p in enumerate(self.iterates):
            step = "" if n == 0 else format_number(self.step_norms[n - 1])
            writer.writerow([n, step] + [format_number(x) for x in p])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def format_number(x: float) -> str:
    """Round-trip safe decimal representation."""
    return format(float(x), ".17g")


Step = Callable[[int, Vector], Vector]
Stationary = Callable[[Vector], bool]


def _find_period(iterates: List[Vector], space: NormedSpace, window: int, cycle_tol: float, step: float) -> Optional[int]:
    """Smallest j <= window with iterate m within ``cycle_tol * step`` of iterate m-j.

    The tolerance is scaled by the current step. An absolute tolerance would
    report a "cycle" for any sequence that converges below it, since
    neighbouring iterates then coincide.
    """
    if step <= 0.0:
        return None
    current = iterates[-1]
    for j in range(1, min(window, len(iterates) - 1) + 1):
        if space.distance(current, iterates[-1 - j]) <= cycle_tol * step:
            return j
    return None


def _run(
    name: str,
    space: NormedSpace,
    step: Step,
    config: IterationConfig,
    p0: VectorLike,
    stationary: Optional[Stationary] = None,
) -> IterationTrace:
    p = as_vector(p0)
    space.check(p)
    stationary = stationary or (lambda _: True)
    iterates: List[Vector] = [p]
    step_norms: List[float] = []

    for m in range(config.max_iters):
        nxt = step(m, p)
        if not np.all(np.isfinite(nxt)):
            trace = IterationTrace(iterates, step_norms, IterationStatus.MAX_ITERS_REACHED)
            raise NumericOverflowError(f"{name} produced a non-finite iterate at n={m + 1}", trace)
        d = space.distance(nxt, p)

        if m == 0 and d < config.tol and stationary(p):
            logger.info(f"{name}: initial point is stationary, converged at n=0")
            return IterationTrace(iterates, step_norms, IterationStatus.CONVERGED, limit=p)

        iterates.append(nxt)
        step_norms.append(d)
        p = nxt

        if d < config.tol and stationary(p):
            logger.info(f"{name}: converged after {m + 1} iterations (step {d:.3e})")
            return IterationTrace(iterates, step_norms, IterationStatus.CONVERGED, limit=p)

        if config.cycle_window > 0:
            period = _find_period(iterates, space, config.cycle_window, config.cycle_tol, d)
            if period is not None:
                logger.info(f"{name}: cycle of period {period} detected at n={m + 1}")
                return IterationTrace(iterates, step_norms, IterationStatus.CYCLE_DETECTED, period=period)

    logger.info(f"{name}: stopped after {config.max_iters} iterations, last step {step_norms[-1]:.3e}")
    return IterationTrace(iterates, step_norms, IterationStatus.MAX_ITERS_REACHED)


def krasnoselskij(mapping: Mapping, config: IterationConfig, p0: VectorLike) -> IterationTrace:
    """Run p_{m+1} = (1 - lam) p_m + lam R p_m."""
    lam = config.lam
    return _run(
        f"krasnoselskij(lam={lam})",
        mapping.space,
        lambda _, p: affine_combine(lam, p, mapping.apply(p)),
        config,
        p0,
    )


def picard(mapping: Mapping, config: IterationConfig, p0: VectorLike) -> IterationTrace:
    """Run p_{m+1} = R p_m; the configured lambda is ignored."""
    return _run("picard", mapping.space, lambda _, p: mapping.apply(p), config.with_lambda(1.0), p0)


def alternating(map_r: Mapping, map_s: Mapping, config: IterationConfig, p0: VectorLike) -> IterationTrace:
    """Alternate the averaged maps: odd iterates from R_lam, even iterates from S_lam.

    Convergence needs a small step *and* both averaged residuals below tol at
    the current point, so a 2-cycle between the two fixed-point sets is not
    mistaken for a common fixed point.
    """
    if map_r.space != map_s.space:
        raise UsageError(f"Alternating maps must share a space: {map_r.space} vs {map_s.space}")
    r_lam = averaged(map_r, config.lam)
    s_lam = averaged(map_s, config.lam)

    def step(m: int, p: Vector) -> Vector:
        return r_lam.apply(p) if m % 2 == 0 else s_lam.apply(p)

    def stationary(p: Vector) -> bool:
        return fix_residual(r_lam, p) < config.tol and fix_residual(s_lam, p) < config.tol

    return _run(f"alternating(lam={config.lam})", map_r.space, step, config, p0, stationary)
