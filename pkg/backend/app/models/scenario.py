"""
Scenario configuration models.

Scenario files are JSON objects; unknown keys are rejected everywhere so a
misspelt field cannot silently fall back to its default.
"""
import math
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Tolerance for "is an integer multiple of h"
MULTIPLE_TOL = 1e-9


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- Disturbances -----------------------------------------------------------

class ConstantSpec(StrictModel):
    kind: Literal["constant"] = "constant"
    value: float


class StepSpec(StrictModel):
    kind: Literal["step"] = "step"
    t0: float = Field(..., ge=0)
    before: float
    after: float


class PulseSpec(StrictModel):
    kind: Literal["pulse"] = "pulse"
    t0: float = Field(..., ge=0)
    width: float = Field(..., gt=0)
    base: float
    level: float


class SinusoidSpec(StrictModel):
    kind: Literal["sinusoid"] = "sinusoid"
    base: float
    amplitude: float
    period: float = Field(..., gt=0)
    noise_sigma: float = Field(0.0, ge=0)


class PiecewiseRandomSpec(StrictModel):
    kind: Literal["piecewise_random"] = "piecewise_random"
    mean: float
    spread: float = Field(..., ge=0)
    dwell: float = Field(..., gt=0)


class PeriodicPulseSpec(StrictModel):
    """Recurring peak: `level` during [t0 + kP, t0 + kP + width), else `base`."""
    kind: Literal["periodic_pulse"] = "periodic_pulse"
    base: float
    level: float
    period: float = Field(..., gt=0)
    t0: float = Field(0.0, ge=0)
    width: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _width_fits(self):
        if self.width > self.period:
            raise ValueError("width must not exceed period")
        return self


DisturbanceSpec = Annotated[
    Union[
        ConstantSpec,
        StepSpec,
        PulseSpec,
        SinusoidSpec,
        PiecewiseRandomSpec,
        PeriodicPulseSpec,
    ],
    Field(discriminator="kind"),
]


def signal_range(spec) -> tuple:
    """Smallest and largest noise-free value a spec can produce."""
    if isinstance(spec, ConstantSpec):
        values = [spec.value]
    elif isinstance(spec, StepSpec):
        values = [spec.before, spec.after]
    elif isinstance(spec, (PulseSpec, PeriodicPulseSpec)):
        values = [spec.base, spec.level]
    elif isinstance(spec, SinusoidSpec):
        values = [spec.base - abs(spec.amplitude), spec.base + abs(spec.amplitude)]
    else:
        values = [spec.mean - spec.spread, spec.mean + spec.spread]
    return min(values), max(values)


# --- Layers -----------------------------------------------------------------

class PlantParams(StrictModel):
    rate_per_cu: float = Field(10.0, gt=0, description="Requests/second per CU at efficiency 1")
    cu_max: int = Field(10, ge=1, description="Initial provisioned CU ceiling")
    cu_initial: Optional[float] = Field(None, ge=0, description="Initial allocation; default cu_max / 2")
    queue_initial: float = Field(0.0, ge=0)


class PIParams(StrictModel):
    kp: float = Field(2.0, gt=0)
    ki: float = Field(0.5, gt=0)
    k_t: Optional[float] = Field(None, gt=0, description="Tracking gain; default 1 / (10 * T_ct)")


class AnalyzerParams(StrictModel):
    theta_up: float = 0.1
    theta_down: float = -0.5
    persistence: float = Field(30.0, gt=0, description="Persistence window D (s)")
    fraction: float = Field(0.8, gt=0.5, le=1.0, description="Required fraction phi")
    keep_periods: int = Field(5, ge=1, description="History horizon in MAPE periods")

    @model_validator(mode="after")
    def _thresholds_ordered(self):
        if self.theta_down >= self.theta_up:
            raise ValueError("theta_down must be below theta_up")
        return self


class PlannerParams(StrictModel):
    margin: float = Field(0.1, ge=0)
    r_min: float = Field(0.02, gt=0, description="Smallest per-tier set point (s)")
    alpha_w: float = Field(0.3, gt=0, le=1, description="Set-point weight smoothing")
    eps_w: float = Field(1e-3, gt=0, description="Weight floor")
    forecast_horizon: float = Field(120.0, gt=0, description="Look-ahead of the proactive floor (s)")
    max_sizing_need: float = Field(1.0, gt=0, description="Largest mean need a sustained overload is sized by")


class GoalSpec(StrictModel):
    sla_response_time: float = Field(1.0, gt=0, description="End-to-end response time (s)")
    budget_cap: int = Field(120, ge=1, description="Total CU budget")
    penalty_rate: float = Field(1.0, ge=0, description="Cost per second of SLA violation")
    cu_price: float = Field(0.01, ge=0, description="Cost per CU-second")
    weights: Optional[List[float]] = Field(None, description="Initial set-point split")


class ForecasterParams(StrictModel):
    period: float = Field(600.0, gt=0)
    bins: int = Field(24, ge=1)
    alpha_r: float = Field(0.3, gt=0, lt=1)
    alpha_e: float = Field(0.2, gt=0, lt=1)


def _is_multiple(value: float, step: float) -> bool:
    ratio = value / step
    return abs(ratio - round(ratio)) <= MULTIPLE_TOL * max(1.0, ratio)


class ScenarioConfig(StrictModel):
    """One experiment: plant, controllers, supervisor, learners and inputs."""
    n_tiers: int = Field(3, ge=1)
    duration: float = Field(600.0, ge=0)
    h: float = Field(0.05, gt=0)
    T_ct: float = Field(0.5, gt=0)
    T_mape: float = Field(60.0, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)

    plant: Union[PlantParams, List[PlantParams]] = Field(default_factory=PlantParams)
    pi: Union[PIParams, List[PIParams]] = Field(default_factory=PIParams)
    analyzer: AnalyzerParams = Field(default_factory=AnalyzerParams)
    planner: PlannerParams = Field(default_factory=PlannerParams)
    goal: GoalSpec = Field(default_factory=GoalSpec)
    forecaster: ForecasterParams = Field(default_factory=ForecasterParams)

    load: DisturbanceSpec = Field(default_factory=lambda: ConstantSpec(value=50.0))
    efficiency: Union[DisturbanceSpec, List[DisturbanceSpec]] = Field(
        default_factory=lambda: ConstantSpec(value=1.0)
    )

    mape_enabled: bool = True
    ml_enabled: bool = False

    @model_validator(mode="after")
    def _check_invariants(self):
        n = self.n_tiers
        if not (self.h <= self.T_ct <= self.T_mape):
            raise ValueError("time scales must satisfy 0 < h <= T_ct <= T_mape")
        if not _is_multiple(self.T_ct, self.h):
            raise ValueError(f"T_ct={self.T_ct} is not an integer multiple of h={self.h}")
        if not _is_multiple(self.T_mape, self.h):
            raise ValueError(f"T_mape={self.T_mape} is not an integer multiple of h={self.h}")
        for name in ("plant", "pi", "efficiency"):
            value = getattr(self, name)
            if isinstance(value, list) and len(value) != n:
                raise ValueError(f"{name} lists must have n_tiers={n} entries, got {len(value)}")
        if self.goal.budget_cap < n:
            raise ValueError(f"goal.budget_cap={self.goal.budget_cap} is below n_tiers={n}")
        if sum(p.cu_max for p in self.plant_for_tiers()) > self.goal.budget_cap:
            raise ValueError("initial cu_max values exceed goal.budget_cap")
        for p in self.plant_for_tiers():
            if p.cu_initial is not None and p.cu_initial > p.cu_max:
                raise ValueError("plant.cu_initial must not exceed plant.cu_max")
        weights = self.goal.weights
        if weights is not None and (len(weights) != n or any(w <= 0 for w in weights)):
            raise ValueError(f"goal.weights must be {n} positive numbers")
        if n * self.planner.r_min > self.goal.sla_response_time:
            raise ValueError("planner.r_min * n_tiers exceeds goal.sla_response_time")
        if self.analyzer.persistence > self.analyzer.keep_periods * self.T_mape:
            raise ValueError(
                f"analyzer.persistence={self.analyzer.persistence} exceeds the kept history "
                f"of keep_periods * T_mape = {self.analyzer.keep_periods * self.T_mape}"
            )
        if signal_range(self.load)[0] < 0:
            raise ValueError("load can become negative")
        for spec in self.efficiency_for_tiers():
            low, high = signal_range(spec)
            if low <= 0 or high > 1 or not math.isfinite(low):
                raise ValueError("efficiency must stay within (0, 1]")
        return self

    def plant_for_tiers(self) -> List[PlantParams]:
        if isinstance(self.plant, list):
            return list(self.plant)
        return [self.plant] * self.n_tiers

    def pi_for_tiers(self) -> List[PIParams]:
        if isinstance(self.pi, list):
            return list(self.pi)
        return [self.pi] * self.n_tiers

    def efficiency_for_tiers(self) -> list:
        if isinstance(self.efficiency, list):
            return list(self.efficiency)
        return [self.efficiency] * self.n_tiers

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.h))

    @property
    def ct_every(self) -> int:
        return int(round(self.T_ct / self.h))

    @property
    def mape_every(self) -> int:
        return int(round(self.T_mape / self.h))
