"""Result models for elpd estimates and model comparisons."""

import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class EstimatorKind(str, Enum):
    """Which survey estimator produced an estimate."""
    DIFFERENCE = "diff"
    HANSEN_HURWITZ = "hh"


class ElpdEstimate(BaseModel):
    """Subsampled elpd_loo estimate for one model, on the total (sum over n) scale."""
    model_config = ConfigDict(frozen=True)

    elpd_hat: float
    se_subsampling: float = Field(ge=0.0)
    sigma_loo_hat: Optional[float] = Field(default=None, ge=0.0)
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    estimator: EstimatorKind
    surrogate_method: str
    scheme: str
    # raw sigma^2_loo estimate was negative and has been clamped to 0
    sigma_loo_degenerate: bool = False

    @model_validator(mode="after")
    def _check_sizes(self) -> "ElpdEstimate":
        if self.scheme == "srs_wor" and self.m > self.n:
            raise ValueError(f"m={self.m} exceeds n={self.n} for a without-replacement plan")
        return self

    @property
    def elpd_mean(self) -> float:
        """elpd on the per-observation scale."""
        return self.elpd_hat / self.n

    @property
    def sigma_loo_total(self) -> Optional[float]:
        """Standard deviation of elpd_loo on the total scale, sqrt(n) * sigma_loo_hat."""
        if self.sigma_loo_hat is None:
            return None
        return math.sqrt(self.n) * self.sigma_loo_hat


class ComparisonResult(BaseModel):
    """Difference in elpd_loo between model A and model B from one shared subsample."""
    model_config = ConfigDict(frozen=True)

    elpd_d_hat: float
    se_d: float = Field(ge=0.0)
    sigma_d_hat: float = Field(ge=0.0)
    naive_sigma_d: float = Field(ge=0.0)
    per_model: List[ElpdEstimate]
    sigma_d_degenerate: bool = False

    @property
    def sigma_d_total(self) -> float:
        return math.sqrt(self.per_model[0].n) * self.sigma_d_hat
