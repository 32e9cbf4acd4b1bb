from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

import numpy as np
import numpy.typing as npt

from app.core.errors import UsageError

# Vectors are one-dimensional, read-only float64 arrays.
Vector = npt.NDArray[np.float64]
VectorLike = Union[Vector, Iterable[float]]


class NormKind(str, Enum):
    """Norms available on a coordinate space."""

    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    MATRIX_MAX = "matrix_max"


def as_vector(values: VectorLike, dimension: Optional[int] = None) -> Vector:
    """Build an immutable vector from ``values``.

    Matrices passed as nested lists are flattened in row-major order.
    """
    try:
        arr = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise UsageError(f"Cannot build a vector from {values!r}: {e}") from e
    arr = arr.reshape(-1)
    if arr.size == 0:
        raise UsageError("Vectors need at least one component")
    if dimension is not None and arr.size != dimension:
        raise UsageError(f"Expected a vector of dimension {dimension}, got {arr.size}")
    arr.setflags(write=False)
    return arr


def freeze(arr: npt.NDArray) -> Vector:
    """Mark a freshly computed array as a read-only vector."""
    arr = np.asarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def check_same_dimension(p: Vector, q: Vector) -> None:
    if p.shape != q.shape:
        raise UsageError(f"Dimension mismatch: {p.size} vs {q.size}")


@dataclass(frozen=True)
class NormedSpace:
    """A finite-dimensional coordinate space with a chosen norm.

    ``matrix_max`` spaces hold ``rows x cols`` matrices stored flattened and
    use the max-abs-entry norm.
    """

    dimension: int
    norm_kind: NormKind = NormKind.L2
    rows: Optional[int] = None
    cols: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))
        if self.dimension < 1:
            raise UsageError(f"Space dimension must be >= 1, got {self.dimension}")
        if self.norm_kind is NormKind.MATRIX_MAX:
            if self.rows is None or self.cols is None:
                raise UsageError("matrix_max norm needs rows and cols")
            if self.rows * self.cols != self.dimension:
                raise UsageError(
                    f"matrix_max {self.rows}x{self.cols} does not match dimension {self.dimension}"
                )

    @classmethod
    def matrices(cls, rows: int, cols: int) -> "NormedSpace":
        """Space of ``rows x cols`` real matrices with the max-entry norm."""
        return cls(dimension=rows * cols, norm_kind=NormKind.MATRIX_MAX, rows=rows, cols=cols)

    def check(self, v: Vector) -> None:
        if v.ndim != 1 or v.size != self.dimension:
            raise UsageError(
                f"Vector of dimension {v.size} does not belong to a space of dimension {self.dimension}"
            )

    def norm(self, v: Vector) -> float:
        self.check(v)
        if self.norm_kind is NormKind.L1:
            return float(np.sum(np.abs(v)))
        if self.norm_kind is NormKind.L2:
            return float(np.linalg.norm(v))
        # linf and matrix_max coincide on the flattened representation
        return float(np.max(np.abs(v)))

    def distance(self, p: Vector, q: Vector) -> float:
        check_same_dimension(p, q)
        return self.norm(p - q)


def norm(space: NormedSpace, v: Vector) -> float:
    """Norm of ``v`` in ``space``."""
    return space.norm(v)


def affine_combine(lam: float, p: Vector, q: Vector) -> Vector:
    """Return ``(1 - lam) * p + lam * q``."""
    if not 0.0 <= lam <= 1.0:
        raise UsageError(f"Combination weight must lie in [0, 1], got {lam}")
    check_same_dimension(p, q)
    return freeze((1.0 - lam) * p + lam * q)
