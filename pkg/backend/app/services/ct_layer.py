"""
Per-tier PI controllers allotting Computational Units (CUs).

The controller tracks a response-time set point. Besides the saturated
allocation it reports the unsaturated demand `cu_desired`, from which the
resource need index is derived for the supervisory loop.
"""
import math
from dataclasses import dataclass, replace
from typing import Tuple

from app.errors import ModelFault


@dataclass(frozen=True, slots=True)
class PIControllerState:
    """
    Discrete PI controller with back-calculation anti-windup.

    Attributes:
        kp: Proportional gain (CU per second of error).
        ki: Integral gain (CU per second of error per second).
        integral: Integrator state (CU).
        setpoint: Target response time (s).
        tracking_gain: Back-calculation gain k_t (1/s).
        sample_period: Controller period T_ct (s).
        last_cu_desired: Unsaturated output of the latest update.
        last_cu_allocated: Saturated output of the latest update.
    """
    kp: float
    ki: float
    integral: float
    setpoint: float
    tracking_gain: float
    sample_period: float
    last_cu_desired: float = 0.0
    last_cu_allocated: float = 0.0

    def __post_init__(self):
        for name in ("kp", "ki", "setpoint", "tracking_gain", "sample_period"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ModelFault(f"{name} must be positive, got {value}", field=name)


@dataclass(frozen=True, slots=True)
class NeedIndex:
    value: float


def pi_update(
    ctrl: PIControllerState, measured_r: float, cu_maxavail: float
) -> Tuple[PIControllerState, float, float]:
    """
    Run one controller period.

    Returns:
        (new state, cu_allocated, cu_desired)
    """
    if not math.isfinite(measured_r):
        raise ModelFault(f"measured response time is not finite: {measured_r!r}", field="measured_R")
    if cu_maxavail < 1:
        raise ModelFault(f"cu_maxavail must be >= 1, got {cu_maxavail}", field="cu_maxavail")

    error = measured_r - ctrl.setpoint
    u_raw = ctrl.kp * error + ctrl.integral
    allocated = min(max(u_raw, 0.0), float(cu_maxavail))
    integral = (
        ctrl.integral
        + ctrl.ki * ctrl.sample_period * error
        + ctrl.tracking_gain * ctrl.sample_period * (allocated - u_raw)
    )
    new_ctrl = replace(
        ctrl,
        integral=integral,
        last_cu_desired=u_raw,
        last_cu_allocated=allocated,
    )
    return new_ctrl, allocated, u_raw


def need_index(cu_desired: float, cu_maxavail: float) -> NeedIndex:
    """Relative CU shortfall: (desired - available) / available."""
    if cu_maxavail < 1:
        raise ModelFault(f"cu_maxavail must be >= 1, got {cu_maxavail}", field="cu_maxavail")
    return NeedIndex((cu_desired - cu_maxavail) / cu_maxavail)


def update_setpoint(ctrl: PIControllerState, new_setpoint: float) -> PIControllerState:
    """Replace the set point; the integrator is kept (bumpless transfer)."""
    if not (math.isfinite(new_setpoint) and new_setpoint > 0):
        raise ModelFault(f"setpoint must be positive, got {new_setpoint}", field="setpoint")
    if new_setpoint == ctrl.setpoint:
        return ctrl
    return replace(ctrl, setpoint=new_setpoint)
