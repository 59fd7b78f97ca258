"""Pydantic request/response models for the HTTP API.

Requests validate ranges up front (pydantic turns violations into 422s);
conversion helpers produce the core domain objects.  Response rows mirror
the CSV schemas field for field so the thin CLI client can write files
without reshaping anything.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from ..field import GridSpec, Thresholds
from ..flow import IntegratorConfig, Method
from ..loss import DOMAIN_FLOOR

BetaField = Field(default=0.1, ge=0.01, le=2.0, description="margin temperature")


class GridModel(BaseModel):
    x1_min: float = Field(default=0.01, ge=DOMAIN_FLOOR)
    x1_max: float = 2.0
    x2_min: float = Field(default=0.01, ge=DOMAIN_FLOOR)
    x2_max: float = 2.0
    n1: int = Field(default=50, ge=2)
    n2: int = Field(default=50, ge=2)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _ranges(self) -> "GridModel":
        if self.x1_max <= self.x1_min or self.x2_max <= self.x2_min:
            raise ValueError("grid maxes must exceed mins")
        return self

    def to_spec(self) -> GridSpec:
        return GridSpec(
            self.x1_min, self.x1_max, self.x2_min, self.x2_max,
            self.n1, self.n2, self.spacing,
        )


class ThresholdsModel(BaseModel):
    low: float
    high: float

    @model_validator(mode="after")
    def _order(self) -> "ThresholdsModel":
        if not self.low < self.high:
            raise ValueError("low must be < high")
        return self

    def to_spec(self) -> Thresholds:
        return Thresholds(self.low, self.high)


class IntegratorModel(BaseModel):
    method: Literal["euler", "rk4"] = "rk4"
    step: float = Field(default=1e-3, gt=0.0)
    max_steps: int = Field(default=1_000_000, ge=1)
    stop_loss: float = Field(default=1e-4, ge=0.0)
    floor: float = Field(default=DOMAIN_FLOOR, ge=DOMAIN_FLOOR)
    record_every: int = Field(default=1, ge=1)

    def to_spec(self) -> IntegratorConfig:
        return IntegratorConfig(
            method=Method(self.method),
            step=self.step,
            max_steps=self.max_steps,
            stop_loss=self.stop_loss,
            floor=self.floor,
            record_every=self.record_every,
        )


class LandscapeRequest(BaseModel):
    beta: float = BetaField
    grid: GridModel = GridModel()


class LandscapeRow(BaseModel):
    x1: float
    x2: float
    loss: float


class LandscapeResponse(BaseModel):
    schema_version: str
    beta: float
    rows: list[LandscapeRow]


class FieldRequest(BaseModel):
    beta: float = BetaField
    grid: GridModel = GridModel()
    thresholds: Optional[ThresholdsModel] = None


class FieldRow(BaseModel):
    x1: float
    x2: float
    loss: float
    g_x1: float
    g_x2: float
    grad_norm: float
    dir_x1: float
    dir_x2: float
    ratio: float
    region: str


class FieldResponse(BaseModel):
    schema_version: str
    beta: float
    thresholds: ThresholdsModel
    rows: list[FieldRow]


class FlowRequest(BaseModel):
    beta: float = BetaField
    x1: float = Field(default=1.0, gt=0.0)
    x2: float = Field(default=1.0, gt=0.0)
    integrator: IntegratorModel = IntegratorModel()


class TrajectoryRow(BaseModel):
    t: float
    x1: float
    x2: float
    loss: float
    g_x1: float
    g_x2: float
    grad_norm: float
    ratio: float


class FlowResponse(BaseModel):
    schema_version: str
    beta: float
    termination: str
    steps_taken: int
    rows: list[TrajectoryRow]


class SweepRequest(BaseModel):
    beta: float = BetaField
    grid: GridModel = GridModel(x1_min=0.05, x1_max=1.9, x2_min=0.05, x2_max=1.9, n1=10, n2=10)
    integrator: IntegratorModel = IntegratorModel()
    slow_eps: float = Field(default=0.05, ge=0.0)
    thresholds: Optional[ThresholdsModel] = None


class SweepRow(BaseModel):
    x1_0: float
    x2_0: float
    region: str
    steps_to_stop: int
    termination: str
    final_x1: float
    final_x2: float
    slow_time: float


class SweepResponse(BaseModel):
    schema_version: str
    beta: float
    rows: list[SweepRow]


class TripleModel(BaseModel):
    prompt: str = "prompt-0"
    y_w: Union[int, list[int]] = 0
    y_l: Union[int, list[int]] = 1


class PolicyModel(BaseModel):
    mode: Literal["atomic", "autoregressive"] = "atomic"
    num_responses: int = Field(default=4, ge=2)
    vocab_size: int = Field(default=4, ge=2)
    seq_len: int = Field(default=4, ge=1)
    preset: Optional[str] = None
    targets: Optional[tuple[float, float]] = None

    @model_validator(mode="after")
    def _preset_rules(self) -> "PolicyModel":
        if self.preset is not None and self.targets is not None:
            raise ValueError("give either preset or targets, not both")
        if self.mode == "autoregressive" and (self.preset or self.targets):
            raise ValueError("presets and targets are defined for atomic policies only")
        return self


class TrainRequest(BaseModel):
    beta: float = BetaField
    lr: float = Field(default=0.1, ge=0.0)
    steps: int = Field(default=200, ge=0)
    policy: PolicyModel = PolicyModel()
    dataset: Optional[list[TripleModel]] = None

    @model_validator(mode="after")
    def _dataset_rules(self) -> "TrainRequest":
        if self.dataset is not None and not self.dataset:
            raise ValueError("dataset, when given, must be nonempty")
        if self.dataset and (self.policy.preset or self.policy.targets):
            raise ValueError("a preset defines its own triple; drop the dataset or the preset")
        return self


class TraceRow(BaseModel):
    step: int
    loss: float
    pi_w: float
    pi_l: float
    x1: float
    x2: float
    margin: float
    rest_mass: float
    grad_norm: float
    d_pi_w: float
    d_pi_l: float


class RateReportModel(BaseModel):
    steps: int
    fraction_dispreferred_faster: float
    slack: float
    steps_checked: int
    violations: list[int]
    asymmetry_holds: bool
    degenerate: bool
    cum_pi_w_gain: list[float]
    cum_pi_l_drop: list[float]


class TrainResponse(BaseModel):
    schema_version: str
    beta: float
    lr: float
    mode: str
    rows: list[TraceRow]
    rate_report: RateReportModel


class CheckGradRequest(BaseModel):
    beta: float = BetaField
    samples: int = Field(default=1000, ge=1)
    seed: int = 0
    h: float = Field(default=1e-6, gt=0.0)
    tol: float = Field(default=1e-6, gt=0.0)


class CheckGradResponse(BaseModel):
    schema_version: str
    beta: float
    samples: int
    seed: int
    h: float
    tol: float
    max_rel_err: float
    worst_x1: float
    worst_x2: float
    passed: bool


class HealthResponse(BaseModel):
    status: str
    version: str
    schema_version: str
