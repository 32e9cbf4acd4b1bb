from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Optional

import numpy as np
from loguru import logger

from app.core.errors import UsageError
from app.services.normed_spaces import (
    NormedSpace,
    NormKind,
    Vector,
    VectorLike,
    affine_combine,
    as_vector,
    freeze,
)


class Mapping(ABC):
    """Base class for self-maps R of a normed space.

    Subclasses implement :meth:`_apply` on a vector already known to belong to
    ``space``. Instances are immutable after construction.
    """

    kind: str = "mapping"

    def __init__(self, space: NormedSpace):
        self.space = space

    def apply(self, p: VectorLike) -> Vector:
        p = as_vector(p)
        self.space.check(p)
        return freeze(self._apply(p))

    def __call__(self, p: VectorLike) -> Vector:
        return self.apply(p)

    @abstractmethod
    def _apply(self, p: Vector) -> np.ndarray:
        """Evaluate the map at ``p``."""

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "dim": self.space.dimension, "norm": self.space.norm_kind.value}

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.describe().items() if k != "kind")
        return f"{self.__class__.__name__}({args})"


class ScaleMapping(Mapping):
    """R p = alpha * p."""

    kind = "scale"

    def __init__(self, space: NormedSpace, alpha: float):
        super().__init__(space)
        self.alpha = float(alpha)

    def _apply(self, p: Vector) -> np.ndarray:
        return self.alpha * p

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "alpha": self.alpha}


class QuarterTurnMapping(Mapping):
    """Rotation of the plane by a quarter turn, R(x, y) = (-y, x)."""

    kind = "quarter_turn"

    def __init__(self, space: Optional[NormedSpace] = None):
        space = space or NormedSpace(dimension=2, norm_kind=NormKind.L2)
        if space.dimension != 2:
            raise UsageError(f"quarter_turn needs a 2-dimensional space, got {space.dimension}")
        super().__init__(space)

    def _apply(self, p: Vector) -> np.ndarray:
        return np.array([-p[1], p[0]])


class AffineMapping(Mapping):
    """R p = A p + b for a square matrix A."""

    kind = "affine"

    def __init__(self, space: NormedSpace, A: Any, b: Optional[VectorLike] = None):
        super().__init__(space)
        try:
            matrix = np.array(A, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise UsageError(f"affine map needs a rectangular numeric matrix: {e}") from e
        d = space.dimension
        if matrix.shape != (d, d):
            raise UsageError(f"affine map needs a {d}x{d} matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise UsageError("affine map matrix must have finite entries")
        matrix.setflags(write=False)
        self.A = matrix
        self.b = as_vector(np.zeros(d) if b is None else b, dimension=d)

    def _apply(self, p: Vector) -> np.ndarray:
        return self.A @ p + self.b

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "A": self.A.tolist(), "b": self.b.tolist()}


class AveragedMapping(Mapping):
    """The averaged map p -> (1 - lam) p + lam R p; shares Fix with R."""

    kind = "composite_averaged"

    def __init__(self, inner: Mapping, lam: float):
        if not 0.0 < lam <= 1.0:
            raise UsageError(f"Averaging parameter must lie in (0, 1], got {lam}")
        super().__init__(inner.space)
        self.inner = inner
        self.lam = float(lam)

    def _apply(self, p: Vector) -> np.ndarray:
        return affine_combine(self.lam, p, self.inner.apply(p))

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "lambda": self.lam, "inner": self.inner.describe()}


def apply(mapping: Mapping, p: VectorLike) -> Vector:
    """Evaluate ``mapping`` at ``p``."""
    return mapping.apply(p)


def averaged(mapping: Mapping, lam: float) -> Mapping:
    """Return the averaged map R_lam; lam = 1 gives back ``mapping`` itself."""
    if not 0.0 < lam <= 1.0:
        raise UsageError(f"Averaging parameter must lie in (0, 1], got {lam}")
    if lam == 1.0:
        return mapping
    return AveragedMapping(mapping, lam)


def fix_residual(mapping: Mapping, p: VectorLike) -> float:
    """Return ||p - R p|| in the map's norm; zero exactly at fixed points."""
    p = as_vector(p)
    return mapping.space.norm(p - mapping.apply(p))


# Catalog of reference maps.

def halving_map() -> ScaleMapping:
    """R z = -z/2 on R^3 with the l1 norm."""
    return ScaleMapping(NormedSpace(dimension=3, norm_kind=NormKind.L1), -0.5)


def matrix_quarter_map() -> ScaleMapping:
    """R A = -A/4 on 2x2 matrices with the max-entry norm."""
    return ScaleMapping(NormedSpace.matrices(2, 2), -0.25)


def quarter_turn() -> QuarterTurnMapping:
    """Quarter-turn rotation of the Euclidean plane."""
    return QuarterTurnMapping()


def shear_map() -> AffineMapping:
    """A contractive affine map on R^2 with the l-infinity norm, fixed point (2, -1)."""
    A = np.array([[0.5, 0.25], [0.0, -0.5]])
    fixed = np.array([2.0, -1.0])
    b = fixed - A @ fixed
    return AffineMapping(NormedSpace(dimension=2, norm_kind=NormKind.LINF), A, b)


CATALOG: Dict[str, Callable[[], Mapping]] = {
    "halving": halving_map,
    "matrix_quarter": matrix_quarter_map,
    "quarter_turn": quarter_turn,
    "shear": shear_map,
}


def catalog_map(name: str) -> Mapping:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise UsageError(f"Unknown catalog map {name!r}; choose one of {sorted(CATALOG)}") from None
    mapping = factory()
    logger.debug(f"Built catalog map {name}: {mapping!r}")
    return mapping
