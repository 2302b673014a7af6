"""
Run outputs: per-tick trace records, run summary and comparison report.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

# Per-tier CSV columns, in order, suffixed with the 1-based tier index
TIER_COLUMNS = ("q", "r_time", "cu", "cu_max", "need", "eta", "eta_hat")


def trace_columns(n_tiers: int) -> List[str]:
    columns = ["t", "r_in"]
    for i in range(1, n_tiers + 1):
        columns.extend(f"{name}_{i}" for name in TIER_COLUMNS)
    columns.extend(["r_end", "cost", "reconfigs"])
    return columns


@dataclass(frozen=True, slots=True)
class TraceRecord:
    """Observable state at one CT tick."""
    t: float
    r_in: float
    queue: Tuple[float, ...]
    response_time: Tuple[float, ...]
    cu_allocated: Tuple[float, ...]
    cu_max: Tuple[int, ...]
    need: Tuple[float, ...]
    efficiency: Tuple[float, ...]
    eta_hat: Tuple[float, ...]
    r_end: float
    setpoints: Tuple[float, ...]
    accrued_cost: float
    reconfig_count: int
    accrued_penalty: float = 0.0

    def as_row(self) -> Dict[str, float]:
        row = {"t": self.t, "r_in": self.r_in}
        per_tier = zip(
            self.queue,
            self.response_time,
            self.cu_allocated,
            self.cu_max,
            self.need,
            self.efficiency,
            self.eta_hat,
        )
        for i, values in enumerate(per_tier, start=1):
            for name, value in zip(TIER_COLUMNS, values):
                row[f"{name}_{i}"] = value
        row["r_end"] = self.r_end
        row["cost"] = self.accrued_cost
        row["reconfigs"] = self.reconfig_count
        return row


@dataclass(frozen=True, slots=True)
class ForecastPair:
    """Forecast and naive prediction of mean load over [t, t + horizon)."""
    t: float
    horizon: float
    forecast: float
    naive: float
    actual: float


class RunSummary(BaseModel):
    sla_compliance_fraction: float = Field(..., ge=0, le=1)
    total_cost: float = 0.0
    penalty_cost: float = Field(0.0, description="Share of total_cost charged for SLA violations")
    reconfig_count: int = 0
    need_mean: List[float] = Field(default_factory=list)
    need_max: List[float] = Field(default_factory=list)
    forecaster_mae: Optional[float] = None
    naive_mae: Optional[float] = None
    max_mass_residual: float = 0.0
    records: int = 0


class VariantDelta(BaseModel):
    sla: float = Field(..., description="Compliance difference vs. baseline")
    cost: float = Field(..., description="Cost difference vs. baseline")


class CompareReport(BaseModel):
    variants: Dict[str, RunSummary]
    deltas: Dict[str, VariantDelta]
