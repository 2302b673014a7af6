"""
Online learners modelling the environment for the supervisory loop.

- SeasonalForecaster: binned running mean of load over a repeating period,
  corrected by an exponentially smoothed residual.
- EfficiencyEstimator: smoothed capacity factor, observable only while a tier
  is capacity-limited.
"""
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from app.errors import ModelFault
from app.services.plant import TierObservation

# Allocations below this are treated as "no CUs running"
EPS_ALLOCATION = 1e-6
ETA_MIN = 1e-3


@dataclass(frozen=True, slots=True)
class Forecast:
    horizon: float
    mean_load: float
    peak_load: float


@dataclass(frozen=True, slots=True)
class SeasonalForecaster:
    period: float
    bins: int
    bin_means: np.ndarray
    bin_counts: np.ndarray
    alpha_r: float
    last_residual: float = 0.0

    @classmethod
    def create(cls, period: float, bins: int, alpha_r: float) -> "SeasonalForecaster":
        if period <= 0 or bins < 1 or not 0 < alpha_r < 1:
            raise ModelFault("forecaster needs period > 0, bins >= 1, 0 < alpha_r < 1", field="forecaster")
        return cls(
            period=period,
            bins=bins,
            bin_means=np.zeros(bins),
            bin_counts=np.zeros(bins, dtype=np.int64),
            alpha_r=alpha_r,
        )

    def bin_of(self, t: float) -> int:
        phase = math.fmod(t, self.period)
        if phase < 0:
            phase += self.period
        return min(int(phase / self.period * self.bins), self.bins - 1)

    @property
    def trained(self) -> bool:
        return bool(self.bin_counts.any())


@dataclass(frozen=True, slots=True)
class EfficiencyEstimator:
    eta_hat: float = 1.0
    alpha_e: float = 0.2


def observe_load(f: SeasonalForecaster, t: float, load: float) -> SeasonalForecaster:
    """Fold one load sample into its bin and update the residual."""
    if not math.isfinite(load) or load < 0:
        raise ModelFault(f"load must be a non-negative number, got {load!r}", field="load")
    b = f.bin_of(t)
    counts = f.bin_counts.copy()
    means = f.bin_means.copy()
    counts[b] += 1
    means[b] += (load - means[b]) / counts[b]
    residual = f.alpha_r * (load - means[b]) + (1.0 - f.alpha_r) * f.last_residual
    return replace(f, bin_means=means, bin_counts=counts, last_residual=float(residual))


def _covered_bins(f: SeasonalForecaster, t_now: float, horizon: float) -> np.ndarray:
    if horizon >= f.period:
        return np.arange(f.bins)
    first = math.floor(t_now / f.period * f.bins)
    last = math.floor((t_now + horizon) / f.period * f.bins)
    return np.unique(np.arange(first, last + 1) % f.bins)


def predict_load(f: SeasonalForecaster, t_now: float, horizon: float) -> Optional[Forecast]:
    """
    Forecast mean and peak load over [t_now, t_now + horizon].

    Returns None while no bin has been trained.
    """
    if horizon <= 0:
        raise ModelFault(f"horizon must be positive, got {horizon}", field="horizon")
    trained = f.bin_counts > 0
    if not trained.any():
        return None

    covered = _covered_bins(f, t_now, horizon)
    covered = covered[trained[covered]]
    if covered.size:
        values = f.bin_means[covered] + f.last_residual
        mean, peak = float(values.mean()), float(values.max())
    else:
        # nothing known about this part of the period yet
        mean = peak = float(f.bin_means[trained].mean()) + f.last_residual
    mean, peak = max(mean, 0.0), max(peak, 0.0)
    return Forecast(horizon=horizon, mean_load=mean, peak_load=max(peak, mean))


def update_efficiency(
    e: EfficiencyEstimator,
    tier_obs: TierObservation,
    cu_allocated: float,
    rate_per_cu: float,
) -> EfficiencyEstimator:
    """Smooth in the observed efficiency when the tier ran at capacity."""
    if tier_obs.queue_level <= 0 or cu_allocated <= EPS_ALLOCATION:
        return e
    eta_obs = tier_obs.outflow / (cu_allocated * rate_per_cu)
    eta_obs = min(max(eta_obs, ETA_MIN), 1.0)
    eta_hat = e.alpha_e * eta_obs + (1.0 - e.alpha_e) * e.eta_hat
    return replace(e, eta_hat=min(max(eta_hat, ETA_MIN), 1.0))


def naive_predict(history: Sequence[float]) -> float:
    """Last-value baseline."""
    if len(history) == 0:
        raise ModelFault("naive prediction needs at least one sample", field="history")
    return float(history[-1])
