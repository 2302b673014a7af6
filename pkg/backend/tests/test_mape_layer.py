from dataclasses import replace

import pytest

from app.errors import ModelFault
from app.models.scenario import AnalyzerParams, GoalSpec, PlannerParams
from app.services.ct_layer import NeedIndex, PIControllerState
from app.services.mape_layer import (
    AdaptationPlan,
    Classification,
    KnowledgeModel,
    accrue_cost,
    analyze,
    execute,
    monitor,
    plan,
    repair_budget,
    split_budget,
    translate_goals,
)
from app.services.ml_layer import Forecast
from app.services.plant import TierObservation, TierState

ANALYZER = AnalyzerParams()
PLANNER = PlannerParams()


def knowledge(n=3, cu_max=10, budget_cap=120, sla=1.0, **goal):
    goals = translate_goals(GoalSpec(sla_response_time=sla, budget_cap=budget_cap, **goal), n)
    return KnowledgeModel.create(goals, [cu_max] * n, [10.0] * n, persistence=30.0, keep_horizon=300.0)


def obs(r=0.3, inflow=50.0):
    return TierObservation(inflow=inflow, outflow=inflow, queue_level=1.0, response_time=r, capacity=60.0)


def feed(k, needs_at, t0=0.0, t1=30.0, dt=0.5, response=None, inflow=None):
    """Monitor samples on [t0, t1]; `needs_at(t)` gives the per-tier need values."""
    response = response or [0.3] * k.n_tiers
    inflow = inflow or [50.0] * k.n_tiers
    steps = int(round((t1 - t0) / dt))
    for s in range(steps + 1):
        t = t0 + s * dt
        needs = [NeedIndex(v) for v in needs_at(t)]
        monitor(k, t, needs, [obs(r, lam) for r, lam in zip(response, inflow)], sum(response))
    return k


def constant(*values):
    return lambda t: values


# --- goal translation -------------------------------------------------------

def test_translate_goals_examples():
    assert translate_goals(GoalSpec(sla_response_time=1.0), 1).per_tier_setpoints == (1.0,)
    assert translate_goals(GoalSpec(sla_response_time=0.9), 3).per_tier_setpoints == pytest.approx((0.3, 0.3, 0.3))
    weighted = translate_goals(GoalSpec(sla_response_time=1.0), 2, weights=[1.0, 3.0])
    assert weighted.per_tier_setpoints == pytest.approx((0.25, 0.75))


def test_translate_goals_rejects_non_positive_weight():
    with pytest.raises(ModelFault):
        translate_goals(GoalSpec(), 2, weights=[1.0, 0.0])


def test_split_budget_lifts_small_shares_to_minimum():
    shares = split_budget(1.0, [1.0, 100.0, 100.0], r_min=0.02)
    assert shares[0] == pytest.approx(0.02)
    assert shares[1] == pytest.approx(0.49)
    assert sum(shares) == pytest.approx(1.0)


# --- monitor / analyze ------------------------------------------------------

def test_monitor_first_sample():
    k = monitor(knowledge(), 0.0, [NeedIndex(0.0)] * 3, [obs()] * 3, 0.9)
    assert [len(h) for h in k.need_history] == [1, 1, 1]
    assert len(k.end_to_end_history) == 1


def test_monitor_evicts_beyond_keep_horizon():
    k = knowledge()
    k.keep_horizon = 10.0
    feed(k, constant(0.0, 0.0, 0.0), t1=10.0, dt=1.0)
    assert len(k.need_history[0]) == 11
    monitor(k, 11.0, [NeedIndex(0.0)] * 3, [obs()] * 3, 0.9)
    assert len(k.need_history[0]) == 11
    assert k.need_history[0][0][0] == 1.0


def test_monitor_rejects_out_of_order_samples():
    k = monitor(knowledge(), 5.0, [NeedIndex(0.0)] * 3, [obs()] * 3, 0.9)
    with pytest.raises(ModelFault):
        monitor(k, 4.0, [NeedIndex(0.0)] * 3, [obs()] * 3, 0.9)


def test_analyze_classifications():
    k = feed(knowledge(), lambda t: (0.0, 0.5, 0.5 if t == 15.0 else 0.0))
    assert analyze(k, ANALYZER) == [
        Classification.OK,
        Classification.SUSTAINED_OVERLOAD,
        Classification.TRANSIENT_OVERLOAD,
    ]


def test_analyze_underuse_needs_full_window():
    short = feed(knowledge(), constant(-0.7, -0.7, -0.7), t1=20.0)
    assert analyze(short, ANALYZER) == [Classification.OK] * 3

    full = feed(knowledge(), constant(-0.7, -0.7, -0.7), t1=30.0)
    assert analyze(full, ANALYZER) == [Classification.SUSTAINED_UNDERUSE] * 3


def test_short_overload_is_transient_only():
    k = feed(knowledge(), constant(0.5, 0.0, 0.0), t1=20.0)
    assert analyze(k, ANALYZER)[0] is Classification.TRANSIENT_OVERLOAD


def test_overload_wins_over_underuse_in_mixed_window():
    # 85% of samples far above theta_up, the rest far below theta_down
    k = feed(knowledge(), lambda t: (0.5 if t >= 4.5 else -0.9, 0.0, 0.0))
    assert analyze(k, ANALYZER)[0] is Classification.SUSTAINED_OVERLOAD


@pytest.mark.parametrize("needs", [
    (-0.5 - 1e-12, -0.5, -0.5 + 1e-12),
    (0.1 + 1e-12, 0.1, 0.1 - 1e-12),
])
def test_need_sitting_on_a_threshold_is_ok(needs):
    k = feed(knowledge(), constant(*needs), t1=60.0)
    assert analyze(k, ANALYZER) == [Classification.OK] * 3


# --- plan -------------------------------------------------------------------

def test_all_ok_without_forecast_is_identity():
    k = feed(knowledge(), constant(0.0, 0.0, 0.0))
    result = plan(analyze(k, ANALYZER), k, None, PLANNER)
    assert result.new_cu_max == (10, 10, 10)
    assert result.new_setpoints == k.goals.per_tier_setpoints


def test_sustained_overload_sizing():
    k = feed(knowledge(), constant(0.0, 0.5, 0.0), inflow=[50.0, 150.0, 50.0])
    result = plan(analyze(k, ANALYZER), k, None, PLANNER)
    assert result.new_cu_max == (10, 17, 10)


def test_sustained_underuse_sizing():
    k = feed(knowledge(), constant(0.0, 0.0, -0.6))
    result = plan(analyze(k, ANALYZER), k, None, PLANNER)
    assert result.new_cu_max == (10, 10, 5)


def test_repair_cuts_lowest_need_first():
    assert repair_budget([17, 17, 17], [10, 10, 10], [0.5, 0.4, 0.3], 45) == [17, 15, 13]


def test_repair_falls_back_to_one_cu():
    repaired = repair_budget([20, 5, 5], [10, 5, 5], [1.0, 0.0, 0.0], 12)
    assert sum(repaired) == 12
    assert min(repaired) >= 1


def test_plan_respects_budget_cap():
    k = feed(knowledge(budget_cap=45), constant(0.5, 0.4, 0.3), inflow=[150.0] * 3)
    result = plan(analyze(k, ANALYZER), k, None, PLANNER)
    assert result.new_cu_max == (17, 15, 13)


def test_forecast_floor_raises_every_tier():
    k = feed(knowledge(), constant(0.0, 0.0, 0.0))
    forecast = Forecast(horizon=120.0, mean_load=90.0, peak_load=120.0)
    result = plan(analyze(k, ANALYZER), k, forecast, PLANNER)
    assert result.new_cu_max == (14, 14, 14)


def test_forecast_floor_uses_estimated_efficiency():
    k = feed(knowledge(), constant(0.0, 0.0, 0.0))
    k.eta_hat = [1.0, 0.5, 1.0]
    forecast = Forecast(horizon=120.0, mean_load=40.0, peak_load=50.0)
    result = plan(analyze(k, ANALYZER), k, forecast, PLANNER)
    assert result.new_cu_max == (10, 11, 10)


def test_sustained_class_re_splits_setpoints():
    k = feed(knowledge(), constant(0.5, 0.0, 0.0), response=[0.8, 0.1, 0.1])
    result = plan(analyze(k, ANALYZER), k, None, PLANNER)
    assert sum(result.new_setpoints) == pytest.approx(1.0)
    assert result.new_setpoints[0] > result.new_setpoints[1]
    assert min(result.new_setpoints) >= PLANNER.r_min


def test_plan_rejects_budget_below_tier_count():
    k = feed(knowledge(), constant(0.0, 0.0, 0.0))
    k.goals = replace(k.goals, budget_cap=2)
    with pytest.raises(ModelFault):
        plan(analyze(k, ANALYZER), k, None, PLANNER)


def test_overload_sizing_clips_mean_need():
    k = feed(knowledge(), constant(6.0, 0.0, 0.0), inflow=[150.0, 100.0, 100.0])
    assert plan(analyze(k, ANALYZER), k, None, PLANNER).new_cu_max == (22, 17, 17)

    tight = PlannerParams(max_sizing_need=0.5)
    assert plan(analyze(k, ANALYZER), k, None, tight).new_cu_max == (17, 17, 17)


def test_overloaded_tier_carrying_its_inflow_keeps_its_size():
    k = feed(knowledge(), constant(0.0, 0.8, 0.0))
    result = plan(analyze(k, ANALYZER), k, None, PLANNER)
    assert result.triggered_by[1] is Classification.SUSTAINED_OVERLOAD
    assert result.new_cu_max == (10, 10, 10)


def test_overload_lifts_every_tier_to_the_arrival_rate():
    k = feed(knowledge(), constant(0.3, 0.0, 0.0), inflow=[150.0, 100.0, 100.0])
    k.eta_hat = [1.0, 0.5, 1.0]
    assert plan(analyze(k, ANALYZER), k, None, PLANNER).new_cu_max == (17, 33, 17)


def test_arrival_floor_needs_a_sustained_overload():
    k = feed(knowledge(), constant(0.0, 0.0, 0.0), inflow=[150.0, 100.0, 100.0])
    assert plan(analyze(k, ANALYZER), k, None, PLANNER).new_cu_max == (10, 10, 10)


# --- execute / cost ---------------------------------------------------------

def chain_and_controllers(allocated=(5.0, 5.0, 5.0)):
    chain = tuple(
        TierState(queue_level=0.0, cu_allocated=a, cu_max=10, efficiency=1.0, rate_per_cu=10.0)
        for a in allocated
    )
    controllers = [
        PIControllerState(kp=2.0, ki=0.5, integral=a, setpoint=1.0 / 3, tracking_gain=0.2,
                          sample_period=0.5, last_cu_allocated=a)
        for a in allocated
    ]
    return chain, controllers


def test_execute_noop_plan():
    k = knowledge()
    chain, controllers = chain_and_controllers()
    noop = AdaptationPlan((10, 10, 10), k.goals.per_tier_setpoints, (Classification.OK,) * 3)
    new_chain, new_controllers = execute(noop, chain, controllers, k)
    assert new_chain == chain
    assert new_controllers == controllers
    assert k.reconfig_count == 0


def test_execute_resizes_one_tier():
    k = knowledge()
    chain, controllers = chain_and_controllers()
    grow = AdaptationPlan((10, 17, 10), k.goals.per_tier_setpoints, (Classification.OK,) * 3)
    new_chain, _ = execute(grow, chain, controllers, k)
    assert [t.cu_max for t in new_chain] == [10, 17, 10]
    assert new_chain[0] == chain[0]
    assert k.reconfig_count == 1
    assert k.current_cu_max == [10, 17, 10]


def test_execute_clamps_allocation_on_shrink():
    k = knowledge()
    chain, controllers = chain_and_controllers(allocated=(7.0, 5.0, 5.0))
    shrink = AdaptationPlan((4, 10, 10), k.goals.per_tier_setpoints, (Classification.OK,) * 3)
    new_chain, new_controllers = execute(shrink, chain, controllers, k)
    assert new_chain[0].cu_allocated == 4.0
    assert new_controllers[0].last_cu_allocated == 4.0
    assert new_controllers[0].integral == 7.0


def test_execute_rejects_plan_over_budget():
    k = knowledge(budget_cap=30)
    chain, controllers = chain_and_controllers()
    greedy = AdaptationPlan((10, 17, 10), k.goals.per_tier_setpoints, (Classification.OK,) * 3)
    with pytest.raises(ModelFault):
        execute(greedy, chain, controllers, k)


def test_accrue_cost_examples():
    free = knowledge(cu_price=0.0, penalty_rate=0.0)
    assert accrue_cost(free, 60.0, 5.0).accrued_cost == 0.0

    k = knowledge(cu_price=0.01, penalty_rate=1.0)
    assert accrue_cost(k, 60.0, 0.9).accrued_cost == pytest.approx(18.0)
    assert accrue_cost(k, 60.0, 1.2).accrued_cost == pytest.approx(18.0 + 78.0)
    assert k.accrued_penalty == pytest.approx(60.0)
