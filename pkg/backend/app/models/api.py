"""
Request and response bodies of the scenario API.
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.trace import RunSummary


class ScenarioRequest(BaseModel):
    """Scenario object as it would appear in a scenario file."""
    scenario: Dict[str, Any] = Field(default_factory=dict)
    overrides: List[str] = Field(default_factory=list, description="Dotted key=value overrides")


class RunRequest(ScenarioRequest):
    include_trace: bool = Field(False, description="Return the per-tick trace rows")


class ValidateResponse(BaseModel):
    ok: bool
    config: Dict[str, Any]


class RunResponse(BaseModel):
    summary: RunSummary
    trace: Optional[List[Dict[str, float]]] = None
