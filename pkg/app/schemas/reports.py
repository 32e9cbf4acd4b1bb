from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

# Slack absorbed when comparing the two sides of a contraction inequality.
INEQUALITY_SLACK = 1e-12


class MembershipReport(BaseModel):
    """Sampled certificate that a function behaves like a comparison function."""
    certificate: str = Field("sampled certificate", description="Always a sampled certificate, never a proof")
    nondecreasing_ok: bool = Field(..., description="Monotone over the sorted grid")
    iterates_vanish_ok: bool = Field(..., description="n_max-fold iterates fall below tol on the grid")
    strict_below_identity_ok: bool = Field(..., description="zeta(t) < t on the grid")
    worst_violation: Optional[Tuple[float, float]] = Field(
        None,
        description="(t, detail) of the worst failure of the first failing check",
    )
    violated_check: Optional[str] = Field(None, description="Name of the check the witness belongs to")
    grid_size: int = Field(..., ge=1)
    n_max: int = Field(..., ge=1)
    tol: float = Field(..., gt=0.0)

    @property
    def passed(self) -> bool:
        return self.nondecreasing_ok and self.iterates_vanish_ok and self.strict_below_identity_ok

    @model_validator(mode="after")
    def _witness_iff_failure(self):
        if self.passed != (self.worst_violation is None):
            raise ValueError("worst_violation must be present exactly when a check fails")
        return self


class PairCheck(BaseModel):
    """One pair evaluated against a contraction inequality."""
    index: int = Field(0, ge=0, description="Sample index of the pair")
    p: List[float]
    q: List[float]
    lhs: float = Field(0.0, ge=0.0)
    rhs: float = Field(0.0, ge=0.0)
    holds: bool = True
    skipped: bool = False

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


class VerificationReport(BaseModel):
    """Aggregate of a sampled sweep of a contraction inequality."""
    n_pairs: int = Field(..., ge=1)
    n_skipped: int = Field(..., ge=0)
    n_violations: int = Field(..., ge=0)
    worst_margin: float = Field(..., description="min over checked pairs of rhs - lhs")
    witnesses: List[PairCheck] = Field(default_factory=list, description="Violating pairs, by sample index")
    membership: Optional[MembershipReport] = Field(None, description="Optional certificate for zeta")

    @model_validator(mode="after")
    def _violations_match_margin(self):
        if (self.n_violations == 0) != (self.worst_margin >= -INEQUALITY_SLACK):
            raise ValueError("n_violations must be zero exactly when worst_margin >= -slack")
        return self

    def to_json_dict(self) -> Dict:
        data = self.model_dump(exclude_none=True)
        data["witnesses"] = [
            {"p": w.p, "q": w.q, "lhs": w.lhs, "rhs": w.rhs} for w in self.witnesses
        ]
        return data


class ScfpSolution(BaseModel):
    """Result of a split feasibility solve."""
    x: List[float]
    iterations: int = Field(..., ge=0)
    dist_C: float = Field(..., ge=0.0)
    dist_Q: float = Field(..., ge=0.0)
    status: str
    norm_estimate: float = Field(..., gt=0.0)
    lam: float = Field(..., gt=0.0, le=1.0)
