"""
Load and efficiency signals driving the plant.
"""
import math

from app.models.scenario import (
    ConstantSpec,
    PeriodicPulseSpec,
    PiecewiseRandomSpec,
    PulseSpec,
    SinusoidSpec,
    StepSpec,
)
from app.utils.rng import CounterStream

# Noise draws are addressed by time in microseconds
NOISE_TICKS_PER_SECOND = 1_000_000
ETA_FLOOR = 1e-3


def gen_disturbance(spec, t: float, stream: CounterStream) -> float:
    """Raw signal value of `spec` at time t (not clamped)."""
    if isinstance(spec, ConstantSpec):
        return spec.value
    if isinstance(spec, StepSpec):
        return spec.after if t >= spec.t0 else spec.before
    if isinstance(spec, PulseSpec):
        return spec.level if spec.t0 <= t < spec.t0 + spec.width else spec.base
    if isinstance(spec, PeriodicPulseSpec):
        if t < spec.t0:
            return spec.base
        phase = math.fmod(t - spec.t0, spec.period)
        return spec.level if phase < spec.width else spec.base
    if isinstance(spec, SinusoidSpec):
        value = spec.base + spec.amplitude * math.sin(2.0 * math.pi * t / spec.period)
        if spec.noise_sigma > 0:
            value += stream.normal(round(t * NOISE_TICKS_PER_SECOND), spec.noise_sigma)
        return value
    if isinstance(spec, PiecewiseRandomSpec):
        interval = math.floor(t / spec.dwell)
        return spec.mean + stream.uniform(interval, -spec.spread, spec.spread)
    raise TypeError(f"unknown disturbance spec {type(spec).__name__}")


def load_at(spec, t: float, stream: CounterStream) -> float:
    return max(0.0, gen_disturbance(spec, t, stream))


def efficiency_at(spec, t: float, stream: CounterStream) -> float:
    return min(1.0, max(ETA_FLOOR, gen_disturbance(spec, t, stream)))
