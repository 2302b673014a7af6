"""
Fluid model of the managed system: chained queue-plus-server tiers.

Each tier drains at most its capacity `cu_allocated * efficiency * rate_per_cu`
per second; the explicit-Euler update keeps queues non-negative and conserves
mass exactly up to float rounding.
"""
import math
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

from app.errors import ModelFault

# Below this capacity (req/s) a tier is treated as stopped
EPS_CAPACITY = 1e-6
# Response time reported for a stopped tier (s)
R_CAP = 100.0


@dataclass(frozen=True, slots=True)
class TierState:
    """Queue level and CU allocation of one tier."""
    queue_level: float
    cu_allocated: float
    cu_max: int
    efficiency: float
    rate_per_cu: float

    @property
    def capacity(self) -> float:
        return self.cu_allocated * self.efficiency * self.rate_per_cu


@dataclass(frozen=True, slots=True)
class TierObservation:
    inflow: float
    outflow: float
    queue_level: float
    response_time: float
    capacity: float


# Tier order is fixed for a run; tier i is fed by tier i-1
ChainState = Tuple[TierState, ...]


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ModelFault(f"{name} is not finite: {value!r}", field=name)


def estimate_response_time(state: TierState) -> float:
    """Queue drain time plus one service time, capped for stopped tiers."""
    capacity = state.capacity
    if capacity <= EPS_CAPACITY:
        return R_CAP
    return (state.queue_level + 1.0) / capacity


def step_tier(
    state: TierState, inflow: float, dt: float
) -> Tuple[TierState, TierObservation]:
    """Advance one tier by `dt` seconds under arrival rate `inflow`."""
    _require_finite(
        inflow=inflow,
        dt=dt,
        queue_level=state.queue_level,
        cu_allocated=state.cu_allocated,
        efficiency=state.efficiency,
    )
    if dt <= 0:
        raise ModelFault(f"dt must be positive, got {dt}", field="dt")
    if inflow < 0:
        raise ModelFault(f"inflow must be non-negative, got {inflow}", field="inflow")

    capacity = state.capacity
    drain = min(capacity, inflow + state.queue_level / dt)
    queue = state.queue_level + (inflow - drain) * dt
    # drain never exceeds what is present, so this only absorbs rounding
    if queue < 0.0:
        queue = 0.0

    new_state = replace(state, queue_level=queue)
    observation = TierObservation(
        inflow=inflow,
        outflow=drain,
        queue_level=queue,
        response_time=estimate_response_time(new_state),
        capacity=capacity,
    )
    return new_state, observation


def step_chain(
    chain: Sequence[TierState], r_in: float, dt: float
) -> Tuple[ChainState, List[TierObservation], float]:
    """Step every tier once, feeding each the outflow of its predecessor."""
    tiers = []
    observations = []
    inflow = r_in
    for tier in chain:
        tier, obs = step_tier(tier, inflow, dt)
        tiers.append(tier)
        observations.append(obs)
        inflow = obs.outflow
    end_to_end = math.fsum(obs.response_time for obs in observations)
    return tuple(tiers), observations, end_to_end
