"""
Scenario routes: validate, run and compare experiments over HTTP.
"""
import logging

from fastapi import APIRouter, HTTPException, status
from fastapi.concurrency import run_in_threadpool

from app.cli import build_report, compare_variants
from app.config import settings
from app.errors import ConfigError, SimulationError
from app.models.api import RunRequest, RunResponse, ScenarioRequest, ValidateResponse
from app.models.scenario import ScenarioConfig
from app.models.trace import CompareReport
from app.services.scenarios import config_from_dict
from app.services.sim_engine import simulate

logger = logging.getLogger(__name__)

router = APIRouter()


def _load(request: ScenarioRequest, apply_seed: bool = True) -> ScenarioConfig:
    try:
        config = config_from_dict(request.scenario, request.overrides)
    except ConfigError as exc:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail={"message": str(exc), "field": exc.field},
        )
    if apply_seed and settings.SEED is not None:
        config = config.model_copy(update={"seed": settings.SEED})
    return config


@router.post("/validate", response_model=ValidateResponse)
async def validate_scenario(request: ScenarioRequest):
    """Parse and validate a scenario; echoes the config with defaults filled in."""
    config = _load(request, apply_seed=False)
    return ValidateResponse(ok=True, config=config.model_dump(mode="json"))


@router.post("/run", response_model=RunResponse)
async def run_scenario(request: RunRequest):
    """Run one scenario and return its summary (and optionally its trace)."""
    config = _load(request)
    logger.info("[API] run: %d tiers, %.1f s", config.n_tiers, config.duration)
    try:
        result = await run_in_threadpool(simulate, config)
    except SimulationError as exc:
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail={"message": str(exc), "field": exc.field},
        )
    trace = [record.as_row() for record in result.trace] if request.include_trace else None
    return RunResponse(summary=result.summary, trace=trace)


@router.post("/compare", response_model=CompareReport)
async def compare_scenario(request: ScenarioRequest):
    """Run the CT-only, MAPE and MAPE+ML variants on one seed."""
    config = _load(request)
    try:
        results = await run_in_threadpool(compare_variants, config)
    except SimulationError as exc:
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail={"message": str(exc), "field": exc.field},
        )
    return build_report(results)
