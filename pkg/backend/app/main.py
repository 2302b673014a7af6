"""
FastAPI application entry point.

    uvicorn app.main:app --port 8000
"""
from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware

from app.config import configure_logging, settings
from app.routes import scenarios

configure_logging()

app = FastAPI(
    title="HierSim API",
    description="Multi-tier cloud application simulator with MAPE-K supervision, PI control and online forecasting",
    version="1.0.0",
)

# Plot front ends run on other origins
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)

app.include_router(scenarios.router, prefix="/scenarios", tags=["Scenarios"])


@app.get("/")
async def root():
    return {
        "status": "ok",
        "message": "HierSim API is running",
        "endpoints": ["/scenarios/validate", "/scenarios/run", "/scenarios/compare"],
    }


@app.get("/health")
async def health_check():
    return {"status": "healthy", "log_level": settings.LOG_LEVEL}


@app.get("/favicon.ico", include_in_schema=False)
async def favicon():
    return Response(status_code=204)
