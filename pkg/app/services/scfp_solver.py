"""Split convex feasibility: find x in C with Tx in Q.

x solves the problem exactly when it is a fixed point of

    L p = P_C(p + T^T (P_Q(Tp) - Tp) / ||T||^2)

so the solver runs the Krasnoselskij iteration on L. Projections are
Euclidean; domain and codomain dimensions may differ.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import UsageError
from app.schemas.reports import ScfpSolution
from app.services.iteration_engine import IterationConfig, IterationTrace, krasnoselskij, lambda_from_k
from app.services.mappings import Mapping
from app.services.normed_spaces import NormedSpace, NormKind, Vector, VectorLike, as_vector, freeze

# How far a supplied norm_estimate may fall below the power-iteration norm.
NORM_UNDERESTIMATE_SLACK = 1e-6


class ConvexSet(ABC):
    """Closed convex subset of R^d with a closed-form Euclidean projection."""

    kind: str = "set"

    def __init__(self, dimension: int):
        self.dimension = dimension

    def project(self, p: VectorLike) -> Vector:
        """Nearest point of the set; ``p`` itself when it already belongs to the set."""
        p = as_vector(p)
        if p.size != self.dimension:
            raise UsageError(f"{self.kind} lives in dimension {self.dimension}, got a vector of dimension {p.size}")
        return freeze(self._project(p))

    @abstractmethod
    def _project(self, p: Vector) -> np.ndarray:
        """Projection of a vector of matching dimension."""

    def distance(self, p: VectorLike) -> float:
        p = as_vector(p)
        return float(np.linalg.norm(p - self.project(p)))

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind}


class BoxSet(ConvexSet):
    kind = "box"

    def __init__(self, lo: VectorLike, hi: VectorLike):
        self.lo = as_vector(lo)
        self.hi = as_vector(hi, dimension=self.lo.size)
        if np.any(self.lo > self.hi):
            raise UsageError(f"Box needs lo <= hi componentwise, got lo={self.lo.tolist()}, hi={self.hi.tolist()}")
        super().__init__(self.lo.size)

    def _project(self, p: Vector) -> np.ndarray:
        return np.clip(p, self.lo, self.hi)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class BallSet(ConvexSet):
    """Closed Euclidean ball."""

    kind = "ball"

    def __init__(self, center: VectorLike, radius: float):
        self.center = as_vector(center)
        if not radius > 0.0:
            raise UsageError(f"Ball radius must be positive, got {radius}")
        self.radius = float(radius)
        super().__init__(self.center.size)

    def _project(self, p: Vector) -> np.ndarray:
        offset = p - self.center
        dist = np.linalg.norm(offset)
        if dist <= self.radius:
            return p
        return self.center + (self.radius / dist) * offset

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}


class _AffineConstraint(ConvexSet):
    def __init__(self, normal: VectorLike, offset: float):
        self.normal = as_vector(normal)
        self.normal_sq = float(self.normal @ self.normal)
        if self.normal_sq == 0.0:
            raise UsageError(f"{self.kind} needs a nonzero normal")
        self.offset = float(offset)
        super().__init__(self.normal.size)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "normal": self.normal.tolist(), "offset": self.offset}


class HalfspaceSet(_AffineConstraint):
    """{x : <normal, x> <= offset}."""

    kind = "halfspace"

    def _project(self, p: Vector) -> np.ndarray:
        excess = float(self.normal @ p) - self.offset
        if excess <= 0.0:
            return p
        return p - (excess / self.normal_sq) * self.normal


class HyperplaneSet(_AffineConstraint):
    """{x : <normal, x> = offset}."""

    kind = "hyperplane"

    def _project(self, p: Vector) -> np.ndarray:
        excess = float(self.normal @ p) - self.offset
        return p - (excess / self.normal_sq) * self.normal


@dataclass(frozen=True)
class LinearOperator:
    """A rows x cols matrix mapping R^cols to R^rows; the adjoint is its transpose."""

    matrix: np.ndarray

    def __post_init__(self):
        try:
            matrix = np.array(self.matrix, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise UsageError(f"Linear operator needs a rectangular numeric matrix: {e}") from e
        if matrix.ndim != 2 or matrix.size == 0:
            raise UsageError(f"Linear operator needs a nonempty 2-D matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise UsageError("Linear operator entries must be finite")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, d: int, scale: float = 1.0) -> "LinearOperator":
        return cls(scale * np.eye(d))

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def __call__(self, p: Vector) -> np.ndarray:
        return self.matrix @ p

    def adjoint(self, y: Vector) -> np.ndarray:
        return self.matrix.T @ y


def _power_iteration(A: np.ndarray, x: np.ndarray, tol: float, max_iters: int) -> float:
    """Largest eigenvalue of A^T A reached from the unit start vector ``x``."""
    rho = float(np.linalg.norm(A @ x) ** 2)
    if rho == 0.0:
        return 0.0
    for i in range(max_iters):
        y = A.T @ (A @ x)
        x = y / np.linalg.norm(y)
        rho_new = float(np.linalg.norm(A @ x) ** 2)
        if abs(rho_new - rho) <= tol * rho_new:
            logger.debug(f"Power iteration converged after {i + 1} iterations")
            return rho_new
        rho = rho_new
    logger.warning(f"Power iteration did not reach tol={tol} in {max_iters} iterations")
    return rho


def operator_norm(
    T: LinearOperator,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    safety: Optional[float] = None,
) -> float:
    """Spectral norm estimate by power iteration on T^T T, times a safety factor.

    The main start vector is the normalized all-ones vector. A second fixed
    start (an alternating ramp) is also run and the larger estimate kept, so a
    start orthogonal to the top singular vector cannot cause an underestimate
    on its own. The result is deterministic.
    """
    tol = settings.POWER_TOL if tol is None else tol
    max_iters = settings.POWER_MAX_ITERS if max_iters is None else max_iters
    safety = settings.NORM_SAFETY if safety is None else safety
    A = T.matrix
    if not np.any(A):
        raise UsageError("operator_norm is undefined for the zero operator")

    n = T.cols
    ramp = np.array([(-1.0) ** i * (i + 1) for i in range(n)])
    starts = [np.ones(n) / np.sqrt(n), ramp / np.linalg.norm(ramp)]
    rho = max(_power_iteration(A, x, tol, max_iters) for x in starts)

    sigma = float(np.sqrt(rho))
    logger.debug(f"Spectral norm estimate {sigma:.12g} (x{safety} safety)")
    return sigma * safety


@dataclass(frozen=True)
class ScfpProblem:
    C: ConvexSet
    Q: ConvexSet
    T: LinearOperator
    norm_estimate: Optional[float] = field(default=None)

    def __post_init__(self):
        if self.C.dimension != self.T.cols:
            raise UsageError(f"C has dimension {self.C.dimension} but T expects {self.T.cols}")
        if self.Q.dimension != self.T.rows:
            raise UsageError(f"Q has dimension {self.Q.dimension} but T maps into {self.T.rows}")
        if self.norm_estimate is None:
            object.__setattr__(self, "norm_estimate", operator_norm(self.T))
        elif not self.norm_estimate > 0.0:
            raise UsageError(f"norm_estimate must be positive, got {self.norm_estimate}")
        else:
            sigma = operator_norm(self.T, safety=1.0)
            if self.norm_estimate < sigma - NORM_UNDERESTIMATE_SLACK:
                raise UsageError(
                    f"norm_estimate {self.norm_estimate} underestimates the spectral norm of T ({sigma:.12g})"
                )

    @property
    def domain(self) -> NormedSpace:
        return NormedSpace(dimension=self.T.cols, norm_kind=NormKind.L2)

    def feasibility(self, x: VectorLike) -> Dict[str, float]:
        """Distances of x to C and of Tx to Q."""
        x = as_vector(x, dimension=self.T.cols)
        return {"dist_C": self.C.distance(x), "dist_Q": self.Q.distance(self.T(x))}


def project(convex_set: ConvexSet, p: VectorLike) -> Vector:
    return convex_set.project(p)


class ScfpOperator(Mapping):
    """The fixed-point operator L of a split feasibility problem."""

    kind = "scfp_operator"

    def __init__(self, problem: ScfpProblem):
        super().__init__(problem.domain)
        self.problem = problem
        self.step = 1.0 / problem.norm_estimate ** 2

    def _apply(self, p: Vector) -> np.ndarray:
        C, Q, T = self.problem.C, self.problem.Q, self.problem.T
        Tp = T(p)
        return C.project(p + self.step * T.adjoint(Q.project(Tp) - Tp))

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "C": self.problem.C.describe(),
            "Q": self.problem.Q.describe(),
            "norm_estimate": self.problem.norm_estimate,
        }


def build_L(problem: ScfpProblem) -> ScfpOperator:
    return ScfpOperator(problem)


@dataclass
class ScfpResult:
    trace: IterationTrace
    dist_C: float
    dist_Q: float
    norm_estimate: float
    lam: float

    @property
    def x(self) -> Vector:
        return self.trace.final

    def feasible(self, tol: float) -> bool:
        return self.dist_C < tol and self.dist_Q < tol

    def to_solution(self) -> ScfpSolution:
        return ScfpSolution(
            x=self.x.tolist(),
            iterations=self.trace.iterations,
            dist_C=self.dist_C,
            dist_Q=self.dist_Q,
            status=self.trace.status.value,
            norm_estimate=self.norm_estimate,
            lam=self.lam,
        )


def solve_scfp(problem: ScfpProblem, config: IterationConfig, p0: VectorLike) -> ScfpResult:
    """Krasnoselskij iteration on L followed by a feasibility report at the final iterate."""
    trace = krasnoselskij(build_L(problem), config, p0)
    dist = problem.feasibility(trace.final)
    if not trace.converged:
        logger.warning(
            f"SCFP run ended with status {trace.status.value}: dist_C={dist['dist_C']:.3e}, dist_Q={dist['dist_Q']:.3e}"
        )
    return ScfpResult(trace=trace, lam=config.lam, norm_estimate=problem.norm_estimate, **dist)


def default_scfp_lambda(k: Optional[float] = None) -> float:
    """1/(k+1) when a shift k is known, otherwise the configured midpoint."""
    if k is None:
        return settings.SCFP_LAMBDA
    return lambda_from_k(k)
