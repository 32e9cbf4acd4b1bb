"""Sampled checks of interpolative Matkowski-type contraction inequalities.

For parameters (a, b, c, k) and a comparison function zeta the enriched
condition on a pair (p, q) outside Fix(R) reads

    ||k(p-q) + Rp - Rq|| <= zeta[ ||(k+1)(p-q)||^b ||p-Rp||^a ||q-Rq||^c
                                  * (1/2 (||(k+1)(p-q) + q - Rq||
                                          + ||(k+1)(q-p) + p - Rp||))^(1-a-b-c) ]

k = 0 recovers the plain interpolative condition. The two-map variant
replaces Rq by Sq and is used for common fixed points.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import UsageError
from app.schemas.reports import INEQUALITY_SLACK, PairCheck, VerificationReport
from app.services.comparison_functions import ComparisonFn, evaluate
from app.services.iteration_engine import lambda_from_k
from app.services.mappings import Mapping, fix_residual
from app.services.normed_spaces import Vector, VectorLike, as_vector, check_same_dimension


@dataclass(frozen=True)
class ContractionParams:
    a: float
    b: float
    c: float
    k: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise UsageError(f"Exponent {name} must lie in (0, 1), got {value}")
        if not self.a + self.b + self.c < 1.0:
            raise UsageError(f"Exponents must satisfy a + b + c < 1, got {self.a + self.b + self.c}")
        if not self.k >= 0.0:
            raise UsageError(f"Shift k must be >= 0, got {self.k}")

    @property
    def d(self) -> float:
        """Exponent of the mean-distance factor."""
        return 1.0 - self.a - self.b - self.c


def _power(base: float, exponent: float) -> float:
    # 0^0 is taken as 1
    if exponent == 0.0:
        return 1.0
    return base ** exponent


def _prepare(mapping: Mapping, p: VectorLike, q: VectorLike) -> Tuple[Vector, Vector]:
    p, q = as_vector(p), as_vector(q)
    check_same_dimension(p, q)
    mapping.space.check(p)
    return p, q


def lhs_common(params: ContractionParams, map_r: Mapping, map_s: Mapping, p: VectorLike, q: VectorLike) -> float:
    """||k(p-q) + Rp - Sq||."""
    p, q = _prepare(map_r, p, q)
    return map_r.space.norm(params.k * (p - q) + (map_r.apply(p) - map_s.apply(q)))


def rhs_common(
    params: ContractionParams,
    zeta: ComparisonFn,
    map_r: Mapping,
    map_s: Mapping,
    p: VectorLike,
    q: VectorLike,
) -> float:
    """Right side of the two-map condition; R acts on p and S on q."""
    p, q = _prepare(map_r, p, q)
    norm = map_r.space.norm
    s = params.k + 1.0
    p_res = p - map_r.apply(p)
    q_res = q - map_s.apply(q)
    mean = 0.5 * (norm(s * (p - q) + q_res) + norm(s * (q - p) + p_res))
    product = (
        _power(norm(s * (p - q)), params.b)
        * _power(norm(p_res), params.a)
        * _power(norm(q_res), params.c)
        * _power(mean, params.d)
    )
    return evaluate(zeta, product)


def lhs_enriched(params: ContractionParams, mapping: Mapping, p: VectorLike, q: VectorLike) -> float:
    """||k(p-q) + Rp - Rq||."""
    return lhs_common(params, mapping, mapping, p, q)


def rhs_enriched(params: ContractionParams, zeta: ComparisonFn, mapping: Mapping, p: VectorLike, q: VectorLike) -> float:
    return rhs_common(params, zeta, mapping, mapping, p, q)


def interpolative_factors(params: ContractionParams, mapping: Mapping, p: VectorLike, q: VectorLike) -> List[float]:
    """The four powered factors of the plain (k-free) condition, in the order
    ||p-q||^b, ||p-Rp||^a, ||q-Rq||^c, mean^(1-a-b-c)."""
    p, q = _prepare(mapping, p, q)
    norm = mapping.space.norm
    rp, rq = mapping.apply(p), mapping.apply(q)
    mean = 0.5 * (norm(p - rq) + norm(q - rp))
    return [
        _power(norm(p - q), params.b),
        _power(norm(p - rp), params.a),
        _power(norm(q - rq), params.c),
        _power(mean, params.d),
    ]


def lhs_interpolative(mapping: Mapping, p: VectorLike, q: VectorLike) -> float:
    """||Rp - Rq||."""
    p, q = _prepare(mapping, p, q)
    return mapping.space.norm(mapping.apply(p) - mapping.apply(q))


def rhs_interpolative(params: ContractionParams, zeta: ComparisonFn, mapping: Mapping, p: VectorLike, q: VectorLike) -> float:
    """Right side of the plain condition; ``params.k`` is ignored."""
    return evaluate(zeta, float(np.prod(interpolative_factors(params, mapping, p, q))))


def averaged_bound(params: ContractionParams, zeta: ComparisonFn, mapping: Mapping, p: VectorLike, q: VectorLike) -> float:
    """lam * rhs_enriched with lam = 1/(k+1), a bound on ||R_lam p - R_lam q||."""
    return lambda_from_k(params.k) * rhs_enriched(params, zeta, mapping, p, q)


def check_pair(
    params: ContractionParams,
    zeta: ComparisonFn,
    mapping: Mapping,
    p: VectorLike,
    q: VectorLike,
    fix_tol: Optional[float] = None,
    map_s: Optional[Mapping] = None,
    index: int = 0,
) -> PairCheck:
    """Evaluate one pair; pairs touching the fixed-point set are skipped."""
    fix_tol = settings.FIX_TOL if fix_tol is None else fix_tol
    map_s = map_s or mapping
    p, q = _prepare(mapping, p, q)
    base = PairCheck(index=index, p=p.tolist(), q=q.tolist())
    if fix_residual(mapping, p) < fix_tol or fix_residual(map_s, q) < fix_tol:
        return base.model_copy(update={"skipped": True})
    lhs = lhs_common(params, mapping, map_s, p, q)
    rhs = rhs_common(params, zeta, mapping, map_s, p, q)
    return base.model_copy(update={"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + INEQUALITY_SLACK})


@dataclass(frozen=True)
class BoxSampler:
    """Uniform pairs from the box [lo, hi], plus optional injected pairs.

    ``lo``/``hi`` are scalars (same bound in every coordinate) or vectors.
    Injected pairs are checked first, on top of the ``n_pairs`` random ones, so
    the report counts ``n_pairs + len(pairs)`` pairs.
    """

    lo: Union[float, Sequence[float]]
    hi: Union[float, Sequence[float]]
    n_pairs: int
    seed: int = field(default_factory=lambda: settings.SEED)
    pairs: Tuple[Tuple[Sequence[float], Sequence[float]], ...] = ()

    def __post_init__(self):
        if self.n_pairs < 1:
            raise UsageError(f"n_pairs must be >= 1, got {self.n_pairs}")

    def bounds(self, dimension: int) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.broadcast_to(np.asarray(self.lo, dtype=np.float64), (dimension,))
        hi = np.broadcast_to(np.asarray(self.hi, dtype=np.float64), (dimension,))
        if np.any(~(hi > lo)):
            raise UsageError(f"Sampling box [{lo.tolist()}, {hi.tolist()}] has zero volume")
        return lo, hi

    def draw(self, dimension: int) -> List[Tuple[Vector, Vector]]:
        lo, hi = self.bounds(dimension)
        rng = np.random.default_rng(self.seed)
        ps = rng.uniform(lo, hi, size=(self.n_pairs, dimension))
        qs = rng.uniform(lo, hi, size=(self.n_pairs, dimension))
        injected = [(as_vector(p, dimension), as_vector(q, dimension)) for p, q in self.pairs]
        return injected + [(as_vector(p), as_vector(q)) for p, q in zip(ps, qs)]


def sample_verify(
    params: ContractionParams,
    zeta: ComparisonFn,
    mapping: Mapping,
    sampler: BoxSampler,
    fix_tol: Optional[float] = None,
    map_s: Optional[Mapping] = None,
    workers: Optional[int] = None,
    max_witnesses: Optional[int] = None,
) -> VerificationReport:
    """Check the condition over sampled pairs; deterministic for a given seed.

    With ``workers > 1`` pairs are evaluated on a thread pool; results are
    collected in sample order either way.
    """
    workers = workers or settings.VERIFY_WORKERS
    max_witnesses = settings.MAX_WITNESSES if max_witnesses is None else max_witnesses
    pairs = sampler.draw(mapping.space.dimension)
    logger.debug(f"Verifying {len(pairs)} pairs for {mapping!r} with {params} on {workers} worker(s)")

    def check(indexed: Tuple[int, Tuple[Vector, Vector]]) -> PairCheck:
        i, (p, q) = indexed
        return check_pair(params, zeta, mapping, p, q, fix_tol=fix_tol, map_s=map_s, index=i)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(check, enumerate(pairs)))
    else:
        results = [check(item) for item in enumerate(pairs)]

    checked = [r for r in results if not r.skipped]
    violations = [r for r in checked if not r.holds]
    worst_margin = min((r.margin for r in checked), default=0.0)
    report = VerificationReport(
        n_pairs=len(results),
        n_skipped=len(results) - len(checked),
        n_violations=len(violations),
        worst_margin=worst_margin,
        witnesses=sorted(violations, key=lambda r: r.index)[:max_witnesses],
    )
    logger.info(
        f"Verified {report.n_pairs} pairs: {report.n_violations} violations, "
        f"{report.n_skipped} skipped, worst margin {report.worst_margin:.6g}"
    )
    return report
