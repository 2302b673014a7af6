"""
Supervisory MAPE-K loop over the per-tier controllers.

The loop translates owner goals into technical goals, keeps a sliding
knowledge of need indices and response times, separates sustained from
transient infeasibility, re-provisions cu_max within the CU budget, re-splits
the end-to-end response-time budget into per-tier set points and accrues cost.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Deque, List, Optional, Sequence, Tuple

from app.errors import ModelFault
from app.models.scenario import AnalyzerParams, GoalSpec, PlannerParams
from app.services.ct_layer import NeedIndex, PIControllerState, update_setpoint
from app.services.ml_layer import Forecast
from app.services.plant import TierObservation, TierState

logger = logging.getLogger(__name__)

SUM_TOL = 1e-9
# Slack on window edges and on ceil() of products that are integral in exact arithmetic
TIME_EPS = 1e-9
CEIL_EPS = 1e-9
# Need samples within this distance of a threshold count as sitting on it
NEED_TOL = 1e-3


class Classification(str, Enum):
    OK = "Ok"
    TRANSIENT_OVERLOAD = "TransientOverload"
    SUSTAINED_OVERLOAD = "SustainedOverload"
    SUSTAINED_UNDERUSE = "SustainedUnderuse"


SUSTAINED = (Classification.SUSTAINED_OVERLOAD, Classification.SUSTAINED_UNDERUSE)


@dataclass(frozen=True)
class TechnicalGoals:
    end_to_end_target: float
    per_tier_setpoints: Tuple[float, ...]
    budget_cap: int
    penalty_rate: float
    cu_price: float


@dataclass(frozen=True)
class AdaptationPlan:
    new_cu_max: Tuple[int, ...]
    new_setpoints: Tuple[float, ...]
    triggered_by: Tuple[Classification, ...]
    weights: Tuple[float, ...] = ()


Sample = Tuple[float, float]


@dataclass
class KnowledgeModel:
    """
    Runtime model shared by the MAPE phases. Owned by the simulation loop.

    Histories hold (t, value) samples no older than `keep_horizon` seconds.
    """
    goals: TechnicalGoals
    current_cu_max: List[int]
    rate_per_cu: List[float]
    persistence: float
    keep_horizon: float
    need_history: List[Deque[Sample]] = field(default_factory=list)
    response_history: List[Deque[Sample]] = field(default_factory=list)
    inflow_history: List[Deque[Sample]] = field(default_factory=list)
    end_to_end_history: Deque[Sample] = field(default_factory=deque)
    eta_hat: List[float] = field(default_factory=list)
    setpoint_weights: List[float] = field(default_factory=list)
    accrued_cost: float = 0.0
    accrued_penalty: float = 0.0
    reconfig_count: int = 0
    latest_forecast: Optional[Forecast] = None

    @classmethod
    def create(
        cls,
        goals: TechnicalGoals,
        cu_max: Sequence[int],
        rate_per_cu: Sequence[float],
        persistence: float,
        keep_horizon: float,
    ) -> "KnowledgeModel":
        n = len(cu_max)
        return cls(
            goals=goals,
            current_cu_max=list(cu_max),
            rate_per_cu=list(rate_per_cu),
            persistence=persistence,
            keep_horizon=keep_horizon,
            need_history=[deque() for _ in range(n)],
            response_history=[deque() for _ in range(n)],
            inflow_history=[deque() for _ in range(n)],
            eta_hat=[1.0] * n,
            setpoint_weights=list(goals.per_tier_setpoints),
        )

    @property
    def n_tiers(self) -> int:
        return len(self.current_cu_max)

    def window(self, history: Deque[Sample]) -> List[float]:
        """Values of the samples in the last `persistence` seconds."""
        if not history:
            return []
        start = history[-1][0] - self.persistence - TIME_EPS
        return [value for t, value in history if t >= start]

    def spans_persistence(self, history: Deque[Sample]) -> bool:
        return bool(history) and history[0][0] <= history[-1][0] - self.persistence + TIME_EPS

    def mean_need(self, tier: int) -> float:
        return _mean(self.window(self.need_history[tier]))

    def mean_inflow(self, tier: int) -> float:
        return _mean(self.window(self.inflow_history[tier]))

    def capacity_per_cu(self, tier: int) -> float:
        return self.eta_hat[tier] * self.rate_per_cu[tier]


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


# --- Goal translation -------------------------------------------------------

def split_budget(target: float, weights: Sequence[float], r_min: float) -> Tuple[float, ...]:
    """Proportional split of `target`, lifting shares below r_min and renormalizing the rest."""
    n = len(weights)
    fixed = [False] * n
    while True:
        free = [i for i in range(n) if not fixed[i]]
        if not free:
            return tuple(target / n for _ in range(n))
        budget = target - r_min * (n - len(free))
        total = math.fsum(weights[i] for i in free)
        shares = [r_min if fixed[i] else budget * weights[i] / total for i in range(n)]
        low = [i for i in free if shares[i] < r_min]
        if not low:
            return tuple(shares)
        for i in low:
            fixed[i] = True


def translate_goals(
    spec: GoalSpec,
    n: int,
    weights: Optional[Sequence[float]] = None,
    r_min: float = 0.0,
) -> TechnicalGoals:
    """Turn owner goals into an end-to-end target and per-tier set points."""
    if n < 1:
        raise ModelFault(f"tier count must be >= 1, got {n}", field="n")
    if weights is None:
        weights = spec.weights if spec.weights is not None else [1.0] * n
    if len(weights) != n:
        raise ModelFault(f"expected {n} weights, got {len(weights)}", field="weights")
    if any(not (w > 0) for w in weights):
        raise ModelFault("weights must be positive", field="weights")
    target = spec.sla_response_time
    return TechnicalGoals(
        end_to_end_target=target,
        per_tier_setpoints=split_budget(target, weights, r_min),
        budget_cap=spec.budget_cap,
        penalty_rate=spec.penalty_rate,
        cu_price=spec.cu_price,
    )


# --- Monitor / Analyze ------------------------------------------------------

def monitor(
    k: KnowledgeModel,
    t: float,
    needs: Sequence[NeedIndex],
    observations: Sequence[TierObservation],
    r_end: float,
) -> KnowledgeModel:
    """Append one sample per tier and evict samples older than the keep horizon."""
    if len(needs) != k.n_tiers or len(observations) != k.n_tiers:
        raise ModelFault("monitor needs one sample per tier", field="needs")
    if k.end_to_end_history and t < k.end_to_end_history[-1][0]:
        raise ModelFault(
            f"sample at t={t} precedes last sample at t={k.end_to_end_history[-1][0]}",
            field="t",
        )
    horizon = t - k.keep_horizon
    for i in range(k.n_tiers):
        k.need_history[i].append((t, needs[i].value))
        k.response_history[i].append((t, observations[i].response_time))
        k.inflow_history[i].append((t, observations[i].inflow))
        for history in (k.need_history[i], k.response_history[i], k.inflow_history[i]):
            _evict(history, horizon)
    k.end_to_end_history.append((t, r_end))
    _evict(k.end_to_end_history, horizon)
    return k


def _evict(history: Deque[Sample], horizon: float) -> None:
    while history and history[0][0] < horizon - TIME_EPS:
        history.popleft()


def analyze(k: KnowledgeModel, params: AnalyzerParams) -> List[Classification]:
    """Classify each tier from the need samples in the persistence window."""
    result = []
    for i, history in enumerate(k.need_history):
        if not history:
            raise ModelFault(f"tier {i + 1} has no need samples", field="need_history")
        values = k.window(history)
        spans = k.spans_persistence(history)
        over = sum(1 for v in values if v > params.theta_up + NEED_TOL)
        under = sum(1 for v in values if v < params.theta_down - NEED_TOL)
        if spans and over >= params.fraction * len(values):
            result.append(Classification.SUSTAINED_OVERLOAD)
        elif over > 0:
            result.append(Classification.TRANSIENT_OVERLOAD)
        elif spans and under >= params.fraction * len(values):
            result.append(Classification.SUSTAINED_UNDERUSE)
        else:
            result.append(Classification.OK)
    return result


# --- Plan -------------------------------------------------------------------

def _ceil(x: float) -> int:
    return math.ceil(x - CEIL_EPS)


def _load_floor(k: KnowledgeModel, tier: int, load: float) -> int:
    """Fewest CUs that serve `load` req/s at the tier's estimated efficiency."""
    return max(1, _ceil(load / k.capacity_per_cu(tier)))


def repair_budget(
    proposed: Sequence[int],
    current: Sequence[int],
    mean_needs: Sequence[float],
    budget_cap: int,
) -> List[int]:
    """
    Cut CUs until the total fits the budget.

    Tiers are visited in ascending (mean need, index): first trimmed towards
    their unmargined demand ceil(current * (1 + need)), then towards 1.
    """
    new = list(proposed)
    excess = sum(new) - budget_cap
    if excess <= 0:
        return new
    order = sorted(range(len(new)), key=lambda i: (mean_needs[i], i))
    demand = [max(1, _ceil(current[i] * (1.0 + mean_needs[i]))) for i in range(len(new))]
    for floor_of in (lambda i: demand[i], lambda i: 1):
        for i in order:
            if excess <= 0:
                return new
            cut = min(excess, max(0, new[i] - floor_of(i)))
            new[i] -= cut
            excess -= cut
    return new


def plan(
    analysis: Sequence[Classification],
    k: KnowledgeModel,
    forecast: Optional[Forecast],
    params: PlannerParams,
) -> AdaptationPlan:
    """
    Size cu_max per tier, apply the load floors, repair the budget and re-split set points.

    A SustainedOverload tier grows by its mean need, clipped to
    `max_sizing_need`, unless its current capacity already carries its
    observed inflow with margin (it is draining a backlog, not short of CUs).
    Any SustainedOverload also lifts every tier to the capacity that carries
    the observed arrival rate, so downstream tiers are sized in the same
    period as the tier that first saturates.
    """
    n = k.n_tiers
    if len(analysis) != n:
        raise ModelFault(f"analysis has {len(analysis)} entries for {n} tiers", field="analysis")
    if k.goals.budget_cap < n:
        raise ModelFault(
            f"budget_cap={k.goals.budget_cap} cannot give every tier one CU", field="budget_cap"
        )

    mean_needs = [k.mean_need(i) for i in range(n)]
    current = list(k.current_cu_max)
    new = list(current)
    scale = 1.0 + params.margin
    for i, cls in enumerate(analysis):
        if cls is Classification.SUSTAINED_OVERLOAD:
            carried = current[i] * k.capacity_per_cu(i) >= k.mean_inflow(i) * scale
            if not carried:
                need = min(mean_needs[i], params.max_sizing_need)
                new[i] = max(current[i], _ceil(current[i] * (1.0 + need) * scale))
        elif cls is Classification.SUSTAINED_UNDERUSE:
            new[i] = min(current[i], max(1, _ceil(current[i] * (1.0 + mean_needs[i]) * scale)))

    if Classification.SUSTAINED_OVERLOAD in analysis:
        arrivals = k.mean_inflow(0)
        new = [max(c, _load_floor(k, i, arrivals * scale)) for i, c in enumerate(new)]

    if forecast is not None:
        new = [max(c, _load_floor(k, i, forecast.peak_load * scale)) for i, c in enumerate(new)]

    new = repair_budget(new, current, mean_needs, k.goals.budget_cap)

    setpoints = k.goals.per_tier_setpoints
    weights = tuple(k.setpoint_weights)
    if any(cls in SUSTAINED for cls in analysis):
        target = k.goals.end_to_end_target
        smoothed = []
        for i in range(n):
            recent = k.window(k.response_history[i])
            observed = min(math.fsum(recent) / len(recent), target) if recent else weights[i]
            w = params.alpha_w * observed + (1.0 - params.alpha_w) * weights[i]
            smoothed.append(max(w, params.eps_w))
        weights = tuple(smoothed)
        setpoints = split_budget(target, weights, params.r_min)

    return AdaptationPlan(
        new_cu_max=tuple(new),
        new_setpoints=tuple(setpoints),
        triggered_by=tuple(analysis),
        weights=weights,
    )


# --- Execute / cost ---------------------------------------------------------

def check_plan(plan_: AdaptationPlan, goals: TechnicalGoals) -> None:
    if any(c < 1 for c in plan_.new_cu_max):
        raise ModelFault("every tier needs at least one CU", field="new_cu_max")
    if sum(plan_.new_cu_max) > goals.budget_cap:
        raise ModelFault("plan exceeds the CU budget", field="new_cu_max")
    if abs(math.fsum(plan_.new_setpoints) - goals.end_to_end_target) > SUM_TOL:
        raise ModelFault("set points do not add up to the end-to-end target", field="new_setpoints")


def execute(
    plan_: AdaptationPlan,
    chain: Sequence[TierState],
    controllers: Sequence[PIControllerState],
    k: KnowledgeModel,
) -> Tuple[Tuple[TierState, ...], List[PIControllerState]]:
    """Apply a plan to the plant, the controllers and the knowledge."""
    check_plan(plan_, k.goals)
    new_chain = []
    new_controllers = []
    for tier, ctrl, cu_max, setpoint in zip(
        chain, controllers, plan_.new_cu_max, plan_.new_setpoints
    ):
        if tier.cu_max != cu_max:
            tier = replace(tier, cu_max=cu_max, cu_allocated=min(tier.cu_allocated, float(cu_max)))
        ctrl = update_setpoint(ctrl, setpoint)
        if ctrl.last_cu_allocated > cu_max:
            ctrl = replace(ctrl, last_cu_allocated=float(cu_max))
        new_chain.append(tier)
        new_controllers.append(ctrl)

    if list(plan_.new_cu_max) != k.current_cu_max:
        k.reconfig_count += 1
        logger.info(
            "[MAPE] reconfigure cu_max %s -> %s (%s)",
            k.current_cu_max,
            list(plan_.new_cu_max),
            ", ".join(c.value for c in plan_.triggered_by),
        )
    k.current_cu_max = list(plan_.new_cu_max)
    k.goals = replace(k.goals, per_tier_setpoints=tuple(plan_.new_setpoints))
    if plan_.weights:
        k.setpoint_weights = list(plan_.weights)
    return tuple(new_chain), new_controllers


def accrue_cost(k: KnowledgeModel, dt: float, r_end: float) -> KnowledgeModel:
    """Charge resources for `dt` seconds plus the SLA penalty when violated."""
    if dt <= 0:
        raise ModelFault(f"dt must be positive, got {dt}", field="dt")
    penalty = k.goals.penalty_rate * dt if r_end > k.goals.end_to_end_target else 0.0
    k.accrued_cost += k.goals.cu_price * sum(k.current_cu_max) * dt + penalty
    k.accrued_penalty += penalty
    return k
