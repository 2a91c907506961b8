"""Training and structure-selection settings."""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pemid.models.init import InitOptions


class AdamOptions(BaseModel):
    """Full-batch Adam warm start."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    iters: int = Field(default=1000, ge=0, description="Iterations (0 skips the warm start)")
    eta: float = Field(default=1e-3, gt=0, description="Step size")
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.99, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)


class QnOptions(BaseModel):
    """Bound-constrained limited-memory quasi-Newton (L-BFGS-B)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iters: int = Field(default=10_000, ge=0)
    memory: int = Field(default=10, ge=1, description="Stored curvature pairs")
    grad_tol: float = Field(
        default=1e-8, ge=0, description="Infinity norm of the projected gradient"
    )
    step_tol: float = Field(default=1e-12, ge=0, description="Relative objective change")
    max_fun: Optional[int] = Field(
        default=None, ge=1, description="Objective evaluations (default 2*max_iters+100)"
    )
    max_line_search: int = Field(default=20, ge=1)

    @property
    def max_evaluations(self) -> int:
        return self.max_fun if self.max_fun is not None else 2 * self.max_iters + 100


SelectionSplit = Literal["test", "validation", "train"]


class TrainConfig(BaseModel):
    """Regularization weights, optimizer settings and the multistart protocol."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    rho_theta: float = Field(default=2e-4, ge=0, description="l2 weight on theta")
    tau: float = Field(default=0.0, ge=0, description="l1 weight on theta")
    rho_w: float = Field(default=2e-8, ge=0, description="l2 weight on the initial state")
    tau_g: float = Field(default=0.0, ge=0, description="Group-lasso weight")
    adam: AdamOptions = Field(default_factory=AdamOptions)
    qn: QnOptions = Field(default_factory=QnOptions)
    init: InitOptions = Field(default_factory=InitOptions)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    multistart: int = Field(default=1, ge=1, description="Number of training runs")
    n_jobs: int = Field(default=1, description="Parallel multistart workers (joblib)")
    selection_split: SelectionSplit = Field(
        default="test", description="Dataset used to pick the best multistart run"
    )
    validation_fraction: float = Field(default=0.2, gt=0, lt=1)
    bootstrap: bool = Field(default=False, description="Train the plant alone first")
    burn_in: Optional[int] = Field(
        default=None, ge=1, description="Initial-state reconstruction prefix length"
    )
    state_saturation: Optional[float] = Field(
        default=1e3, gt=0, description="Clip states during training rollouts"
    )

    @field_validator("seeds")
    @classmethod
    def check_seeds(cls, v: List[int]) -> List[int]:
        if len(set(v)) != len(v):
            raise ValueError(f"Seeds must be distinct, got {v}")
        return v

    def run_seeds(self) -> List[int]:
        """One seed per multistart run; missing seeds continue after the largest given."""
        seeds = list(self.seeds[: self.multistart])
        start = max(self.seeds) + 1
        seeds += list(range(start, start + self.multistart - len(seeds)))
        return seeds

    def burn_in_for(self, n_samples: int) -> int:
        if self.burn_in is not None:
            return min(self.burn_in, n_samples)
        return max(1, min(100, n_samples // 10))


class SelectionConfig(BaseModel):
    """Group-lasso structure selection."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    eps_g: Optional[float] = Field(
        default=None, gt=0, description="Absolute pruning threshold (default relative)"
    )
    eps_g_relative: float = Field(
        default=1e-3, gt=0, lt=1, description="Threshold as a fraction of the largest group norm"
    )
    reweight: bool = Field(default=False, description="Iteratively reweight the groups")
    reweight_iters: int = Field(default=3, ge=1)
    reweight_delta: float = Field(default=1e-6, gt=0)
    loss_tolerance: Optional[float] = Field(
        default=None,
        gt=0,
        description="Keep dropping the smallest groups while the re-estimated loss "
        "stays within this relative increase",
    )
    restarts: int = Field(
        default=0, ge=0, description="Extra fresh draws when re-estimating a reduced model"
    )
    group_weights: Dict[str, float] = Field(
        default_factory=dict, description="Fixed weights per group (default 1)"
    )

    @model_validator(mode="after")
    def check_weights(self) -> "SelectionConfig":
        negative = [k for k, w in self.group_weights.items() if w < 0]
        if negative:
            raise ValueError(f"Group weights must be nonnegative: {negative}")
        return self

    def threshold(self, largest_norm: float) -> float:
        return self.eps_g if self.eps_g is not None else self.eps_g_relative * largest_norm
