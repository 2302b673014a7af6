"""
Deterministic multirate scenario runner.

The plant is integrated with fixed step h; controllers tick every T_ct and
the supervisory loop every T_mape. All three clocks are derived from one step
counter, so MAPE ticks coincide with CT ticks and CT ticks with plant steps.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import ModelFault, RunAbort
from app.models.scenario import ScenarioConfig
from app.models.trace import ForecastPair, RunSummary, TraceRecord
from app.services import ct_layer, mape_layer, ml_layer
from app.services.disturbances import efficiency_at, load_at
from app.services.mape_layer import KnowledgeModel, TechnicalGoals
from app.services.plant import (
    TierObservation,
    TierState,
    estimate_response_time,
    step_chain,
)
from app.utils.rng import CounterStream

logger = logging.getLogger(__name__)

# Relative slack when comparing the end-to-end response time with its target
SLA_TOLERANCE = 1e-9


@dataclass
class RunResult:
    trace: List[TraceRecord]
    summary: RunSummary
    adaptations: List[Dict] = field(default_factory=list)
    forecast_pairs: List[ForecastPair] = field(default_factory=list)


def _initial_chain(config: ScenarioConfig, eff_streams) -> Tuple[TierState, ...]:
    tiers = []
    for params, spec, stream in zip(
        config.plant_for_tiers(), config.efficiency_for_tiers(), eff_streams
    ):
        cu_initial = params.cu_initial if params.cu_initial is not None else params.cu_max / 2.0
        tiers.append(
            TierState(
                queue_level=params.queue_initial,
                cu_allocated=float(cu_initial),
                cu_max=params.cu_max,
                efficiency=efficiency_at(spec, 0.0, stream),
                rate_per_cu=params.rate_per_cu,
            )
        )
    return tuple(tiers)


def _initial_controllers(
    config: ScenarioConfig, chain: Sequence[TierState], goals: TechnicalGoals
) -> List[ct_layer.PIControllerState]:
    controllers = []
    for params, tier, setpoint in zip(config.pi_for_tiers(), chain, goals.per_tier_setpoints):
        k_t = params.k_t if params.k_t is not None else 1.0 / (10.0 * config.T_ct)
        controllers.append(
            ct_layer.PIControllerState(
                kp=params.kp,
                ki=params.ki,
                integral=tier.cu_allocated,
                setpoint=setpoint,
                tracking_gain=k_t,
                sample_period=config.T_ct,
                last_cu_desired=tier.cu_allocated,
                last_cu_allocated=tier.cu_allocated,
            )
        )
    return controllers


def _snapshot(tier: TierState, last: Optional[TierObservation], response_time: float) -> TierObservation:
    """Observation of a tier as seen at a controller tick."""
    inflow = last.inflow if last else 0.0
    outflow = last.outflow if last else 0.0
    return TierObservation(
        inflow=inflow,
        outflow=outflow,
        queue_level=tier.queue_level,
        response_time=response_time,
        capacity=tier.capacity,
    )


def _realize_pairs(
    pending: List[Tuple[float, float, float, float]],
    load_log: List[Tuple[float, float]],
    duration: float,
) -> List[ForecastPair]:
    if not load_log:
        return []
    times = np.array([t for t, _ in load_log])
    loads = np.array([v for _, v in load_log])
    pairs = []
    for t, horizon, forecast, naive in pending:
        if t + horizon > duration + 1e-9:
            continue
        mask = (times >= t - 1e-9) & (times < t + horizon - 1e-9)
        if not mask.any():
            continue
        pairs.append(ForecastPair(t, horizon, forecast, naive, float(loads[mask].mean())))
    return pairs


def summarize(
    trace: Sequence[TraceRecord],
    goals: TechnicalGoals,
    forecast_pairs: Optional[Sequence[ForecastPair]] = None,
    max_mass_residual: float = 0.0,
) -> RunSummary:
    """Aggregate a trace into SLA compliance, cost and need statistics."""
    if not trace:
        return RunSummary(sla_compliance_fraction=0.0, max_mass_residual=max_mass_residual)

    limit = goals.end_to_end_target * (1.0 + SLA_TOLERANCE)
    compliant = sum(1 for rec in trace if rec.r_end <= limit)
    needs = np.array([rec.need for rec in trace])
    final = trace[-1]

    forecaster_mae = naive_mae = None
    if forecast_pairs:
        forecaster_mae = float(np.mean([abs(p.forecast - p.actual) for p in forecast_pairs]))
        naive_mae = float(np.mean([abs(p.naive - p.actual) for p in forecast_pairs]))

    return RunSummary(
        sla_compliance_fraction=compliant / len(trace),
        total_cost=final.accrued_cost,
        penalty_cost=final.accrued_penalty,
        reconfig_count=final.reconfig_count,
        need_mean=[float(v) for v in needs.mean(axis=0)],
        need_max=[float(v) for v in needs.max(axis=0)],
        forecaster_mae=forecaster_mae,
        naive_mae=naive_mae,
        max_mass_residual=max_mass_residual,
        records=len(trace),
    )


def simulate(config: ScenarioConfig) -> RunResult:
    """Run one scenario and keep every output the writers need."""
    n = config.n_tiers
    goals = mape_layer.translate_goals(config.goal, n, r_min=config.planner.r_min)
    load_stream = CounterStream(config.seed, "load")
    eff_specs = config.efficiency_for_tiers()
    eff_streams = [CounterStream(config.seed, f"efficiency.{i + 1}") for i in range(n)]

    chain = _initial_chain(config, eff_streams)
    controllers = _initial_controllers(config, chain, goals)
    knowledge = KnowledgeModel.create(
        goals,
        [tier.cu_max for tier in chain],
        [tier.rate_per_cu for tier in chain],
        persistence=config.analyzer.persistence,
        keep_horizon=config.analyzer.keep_periods * config.T_mape,
    )
    fc = config.forecaster
    forecaster = ml_layer.SeasonalForecaster.create(fc.period, fc.bins, fc.alpha_r)
    estimators = [ml_layer.EfficiencyEstimator(alpha_e=fc.alpha_e) for _ in range(n)]

    trace: List[TraceRecord] = []
    adaptations: List[Dict] = []
    pending_pairs: List[Tuple[float, float, float, float]] = []
    load_log: List[Tuple[float, float]] = []
    last_obs: List[Optional[TierObservation]] = [None] * n
    needs = [ct_layer.NeedIndex(0.0)] * n
    max_residual = 0.0

    logger.info(
        "[RUN] %d tiers, %.1f s, seed=%d, mape=%s, ml=%s",
        n, config.duration, config.seed, config.mape_enabled, config.ml_enabled,
    )

    for step in range(config.steps):
        t = step * config.h
        try:
            if step > 0 and step % config.mape_every == 0:
                r_end_now = math.fsum(estimate_response_time(tier) for tier in chain)
                forecast = None
                if config.ml_enabled:
                    horizon = config.planner.forecast_horizon
                    forecast = ml_layer.predict_load(forecaster, t, horizon)
                    if forecast is not None and load_log:
                        naive = ml_layer.naive_predict([v for _, v in load_log[-1:]])
                        pending_pairs.append((t, horizon, forecast.mean_load, naive))
                knowledge.latest_forecast = forecast
                if config.mape_enabled:
                    knowledge.eta_hat = [e.eta_hat for e in estimators]
                    analysis = mape_layer.analyze(knowledge, config.analyzer)
                    adaptation = mape_layer.plan(analysis, knowledge, forecast, config.planner)
                    chain, controllers = mape_layer.execute(adaptation, chain, controllers, knowledge)
                    logger.debug(
                        "[MAPE] t=%.1f classes=%s cu_max=%s setpoints=%s",
                        t, [c.value for c in analysis], list(adaptation.new_cu_max),
                        [round(sp, 4) for sp in adaptation.new_setpoints],
                    )
                    adaptations.append({
                        "t": t,
                        "classes": [c.value for c in adaptation.triggered_by],
                        "cu_max": list(adaptation.new_cu_max),
                        "setpoints": list(adaptation.new_setpoints),
                        "forecast_peak": forecast.peak_load if forecast else None,
                        "reconfig_count": knowledge.reconfig_count,
                    })
                mape_layer.accrue_cost(knowledge, config.T_mape, r_end_now)

            if step % config.ct_every == 0:
                r_in = load_at(config.load, t, load_stream)
                measured = [estimate_response_time(tier) for tier in chain]
                if config.ml_enabled:
                    forecaster = ml_layer.observe_load(forecaster, t, r_in)
                    load_log.append((t, r_in))
                    for i, tier in enumerate(chain):
                        if last_obs[i] is not None:
                            estimators[i] = ml_layer.update_efficiency(
                                estimators[i], last_obs[i], tier.cu_allocated, tier.rate_per_cu
                            )

                new_chain = []
                for i, tier in enumerate(chain):
                    ctrl, allocated, desired = ct_layer.pi_update(controllers[i], measured[i], tier.cu_max)
                    controllers[i] = ctrl
                    needs[i] = ct_layer.need_index(desired, tier.cu_max)
                    new_chain.append(replace(tier, cu_allocated=allocated))
                r_end = math.fsum(measured)
                if config.mape_enabled:
                    snapshots = [_snapshot(tier, last_obs[i], measured[i]) for i, tier in enumerate(chain)]
                    mape_layer.monitor(knowledge, t, needs, snapshots, r_end)
                chain = tuple(new_chain)

                trace.append(
                    TraceRecord(
                        t=t,
                        r_in=r_in,
                        queue=tuple(tier.queue_level for tier in chain),
                        response_time=tuple(measured),
                        cu_allocated=tuple(tier.cu_allocated for tier in chain),
                        cu_max=tuple(tier.cu_max for tier in chain),
                        need=tuple(need.value for need in needs),
                        efficiency=tuple(tier.efficiency for tier in chain),
                        eta_hat=tuple(e.eta_hat for e in estimators),
                        r_end=r_end,
                        setpoints=tuple(ctrl.setpoint for ctrl in controllers),
                        accrued_cost=knowledge.accrued_cost,
                        reconfig_count=knowledge.reconfig_count,
                        accrued_penalty=knowledge.accrued_penalty,
                    )
                )

            r_in = load_at(config.load, t, load_stream)
            chain = tuple(
                replace(tier, efficiency=eta) if eta != tier.efficiency else tier
                for tier, eta in (
                    (tier, efficiency_at(spec, t, stream))
                    for tier, spec, stream in zip(chain, eff_specs, eff_streams)
                )
            )
            before = [tier.queue_level for tier in chain]
            chain, observations, _ = step_chain(chain, r_in, config.h)
        except ModelFault as exc:
            raise RunAbort(f"tick {step} (t={t:.3f} s): {exc}", field=exc.field or "state", tick=step, t=t) from exc

        for i, obs in enumerate(observations):
            if not math.isfinite(obs.queue_level):
                raise RunAbort(
                    f"tick {step} (t={t:.3f} s): queue_level of tier {i + 1} is not finite",
                    field=f"queue_level_{i + 1}", tick=step, t=t,
                )
            residual = abs(obs.queue_level - before[i] - (obs.inflow - obs.outflow) * config.h)
            if residual > max_residual:
                max_residual = residual
        last_obs = observations

    pairs = _realize_pairs(pending_pairs, load_log, config.duration)
    summary = summarize(trace, goals, pairs if config.ml_enabled else None, max_residual)
    logger.info(
        "[RUN] done: %d records, sla=%.3f, cost=%.2f, reconfigs=%d",
        summary.records, summary.sla_compliance_fraction, summary.total_cost, summary.reconfig_count,
    )
    return RunResult(trace=trace, summary=summary, adaptations=adaptations, forecast_pairs=pairs)


def run_scenario(config: ScenarioConfig) -> Tuple[List[TraceRecord], RunSummary]:
    """Run one scenario; returns the per-tick trace and its summary."""
    result = simulate(config)
    return result.trace, result.summary
