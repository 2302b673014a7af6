# Models package
from app.models.scenario import ScenarioConfig, GoalSpec, AnalyzerParams, PlannerParams
from app.models.trace import TraceRecord, RunSummary, CompareReport
