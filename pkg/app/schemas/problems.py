from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Type, TypeVar, Union

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, ValidationError

from app.core.errors import UsageError
from app.services.comparison_functions import ComparisonFn
from app.services.contraction_verifier import BoxSampler, ContractionParams
from app.services.mappings import (
    AffineMapping,
    Mapping,
    QuarterTurnMapping,
    ScaleMapping,
    catalog_map,
)
from app.services.normed_spaces import NormedSpace, NormKind
from app.services.scfp_solver import (
    BallSet,
    BoxSet,
    ConvexSet,
    HalfspaceSet,
    HyperplaneSet,
    LinearOperator,
    ScfpProblem,
)


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


def _rectangular(rows: List[List[float]]) -> List[List[float]]:
    if not rows or not rows[0]:
        raise ValueError("matrix must have at least one nonempty row")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise ValueError(f"matrix rows must all have the same length, got lengths {sorted(widths)}")
    return rows


Matrix = Annotated[List[List[float]], AfterValidator(_rectangular)]


# Comparison functions

class LinearZetaSpec(_Spec):
    kind: Literal["linear"]
    c: float = Field(..., ge=0.0, lt=1.0, description="zeta(t) = c * t")

    def build(self) -> ComparisonFn:
        return ComparisonFn.linear(self.c)


class PowerZetaSpec(_Spec):
    kind: Literal["power_scaled"]
    c: float = Field(..., ge=0.0)
    p: float = Field(..., gt=0.0, description="zeta(t) = c * t**p")

    def build(self) -> ComparisonFn:
        return ComparisonFn.power_scaled(self.c, self.p)


ZetaSpec = Annotated[Union[LinearZetaSpec, PowerZetaSpec], Field(discriminator="kind")]


# Mappings

class _SpaceSpec(_Spec):
    norm: NormKind = Field(NormKind.L2, description="Norm of the underlying space")
    rows: Optional[int] = Field(None, ge=1, description="Matrix rows for the matrix_max norm")
    cols: Optional[int] = Field(None, ge=1, description="Matrix columns for the matrix_max norm")

    def space(self, dimension: int) -> NormedSpace:
        return NormedSpace(dimension=dimension, norm_kind=self.norm, rows=self.rows, cols=self.cols)


class ScaleSpec(_SpaceSpec):
    kind: Literal["scale"]
    alpha: float
    dim: int = Field(..., ge=1)

    def build(self) -> Mapping:
        return ScaleMapping(self.space(self.dim), self.alpha)


class QuarterTurnSpec(_SpaceSpec):
    kind: Literal["quarter_turn"]

    def build(self) -> Mapping:
        return QuarterTurnMapping(self.space(2))


class AffineSpec(_SpaceSpec):
    kind: Literal["affine"]
    A: Matrix
    b: Optional[List[float]] = None

    def build(self) -> Mapping:
        return AffineMapping(self.space(len(self.A)), self.A, self.b)


class CatalogSpec(_Spec):
    kind: Literal["catalog"]
    name: str

    def build(self) -> Mapping:
        return catalog_map(self.name)


MappingSpec = Annotated[
    Union[ScaleSpec, QuarterTurnSpec, AffineSpec, CatalogSpec], Field(discriminator="kind")
]


# Convex sets

class BoxSpec(_Spec):
    kind: Literal["box"]
    lo: List[float]
    hi: List[float]

    def build(self) -> ConvexSet:
        return BoxSet(self.lo, self.hi)


class BallSpec(_Spec):
    kind: Literal["ball"]
    center: List[float]
    radius: float = Field(..., gt=0.0)

    def build(self) -> ConvexSet:
        return BallSet(self.center, self.radius)


class HalfspaceSpec(_Spec):
    kind: Literal["halfspace"]
    normal: List[float]
    offset: float

    def build(self) -> ConvexSet:
        return HalfspaceSet(self.normal, self.offset)


class HyperplaneSpec(_Spec):
    kind: Literal["hyperplane"]
    normal: List[float]
    offset: float

    def build(self) -> ConvexSet:
        return HyperplaneSet(self.normal, self.offset)


SetSpec = Annotated[
    Union[BoxSpec, BallSpec, HalfspaceSpec, HyperplaneSpec], Field(discriminator="kind")
]


# Problem files

class _RunSpec(_Spec):
    lam: Optional[float] = Field(None, alias="lambda", gt=0.0, le=1.0)
    k: Optional[float] = Field(None, ge=0.0, description="Shift of the enriched condition; lambda = 1/(k+1)")
    tol: Optional[float] = Field(None, gt=0.0)
    max_iters: Optional[int] = Field(None, ge=1)


class IterateProblem(_RunSpec):
    """Input of ``kfix iterate``."""
    mapping: MappingSpec
    S: Optional[MappingSpec] = Field(None, description="Second map; runs the alternating scheme")
    p0: List[float]
    picard: bool = False
    cycle_window: Optional[int] = Field(None, ge=0)


class ParamsSpec(_Spec):
    a: float
    b: float
    c: float
    k: float = 0.0

    def build(self) -> ContractionParams:
        return ContractionParams(a=self.a, b=self.b, c=self.c, k=self.k)


class SamplerSpec(_Spec):
    lo: Union[float, List[float]]
    hi: Union[float, List[float]]
    n_pairs: int = Field(..., ge=1)
    seed: Optional[int] = None
    pairs: List[Tuple[List[float], List[float]]] = Field(
        default_factory=list,
        description="Pairs checked before the n_pairs random ones; the report counts both",
    )

    def build(self, seed: Optional[int] = None) -> BoxSampler:
        kwargs = {}
        chosen = seed if seed is not None else self.seed
        if chosen is not None:
            kwargs["seed"] = chosen
        return BoxSampler(
            lo=self.lo,
            hi=self.hi,
            n_pairs=self.n_pairs,
            pairs=tuple((tuple(p), tuple(q)) for p, q in self.pairs),
            **kwargs,
        )


class VerifyProblem(_Spec):
    """Input of ``kfix verify``."""
    mapping: MappingSpec
    S: Optional[MappingSpec] = Field(None, description="Second map for the common-pair condition")
    params: ParamsSpec
    zeta: ZetaSpec
    sampler: SamplerSpec
    fix_tol: Optional[float] = Field(None, gt=0.0)
    membership: bool = Field(False, description="Attach a sampled membership certificate for zeta")


class ScfpProblemSpec(_RunSpec):
    """Input of ``kfix scfp``."""
    C: SetSpec
    Q: SetSpec
    T: Matrix
    norm_estimate: Optional[float] = Field(None, gt=0.0)
    p0: Optional[List[float]] = None

    def build(self) -> ScfpProblem:
        return ScfpProblem(
            C=self.C.build(),
            Q=self.Q.build(),
            T=LinearOperator(self.T),
            norm_estimate=self.norm_estimate,
        )


Problem = TypeVar("Problem", bound=BaseModel)


def _describe_errors(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_problem(text: str, model: Type[Problem]) -> Problem:
    """Validate a JSON document; errors name the offending field."""
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        raise UsageError(f"Invalid {model.__name__}: {_describe_errors(e)}") from e


def load_problem(path: Union[str, Path], model: Type[Problem]) -> Problem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"Cannot read problem file {path}: {e}") from e
    return parse_problem(text, model)
