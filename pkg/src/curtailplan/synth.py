"""Seeded synthetic years of wind and solar traces.

Wind follows a log-normal AR(1) process around a seasonal weekly mean and is
soft-capped at a fleet maximum. Solar is a clear-sky diurnal shape for a
given latitude, modulated by an AR(1) cloud factor. Both are renormalised
to unit annual means, so the output is a valid WeeklyTraceSet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
from scipy.signal import lfilter

from .ingest import SLOT_HOURS, SLOTS_PER_WEEK, WEEKS, YEAR_SLOTS, Baselines, WeeklyTraceSet


@dataclass(frozen=True)
class SynthSpec:
    wind_variability: float = 0.75
    wind_seasonal_amplitude: float = 0.3
    wind_weekly_means: tuple[float, ...] | None = None
    wind_correlation_hours: float = 30.0
    wind_cap: float = 2.6
    solar_cloud_variability: float = 0.35
    solar_correlation_hours: float = 6.0
    latitude_deg: float = 52.0
    start: datetime = datetime(2017, 1, 1, tzinfo=timezone.utc)

    def __post_init__(self):
        if self.wind_variability < 0 or self.solar_cloud_variability < 0:
            raise ValueError("variability parameters must be >= 0")
        if not 0 <= self.wind_seasonal_amplitude < 1:
            raise ValueError("wind_seasonal_amplitude must be in [0, 1)")
        if self.wind_correlation_hours <= 0 or self.solar_correlation_hours <= 0:
            raise ValueError("correlation times must be positive")
        if self.wind_cap <= 0:
            raise ValueError("wind_cap must be positive")
        if self.wind_weekly_means is not None:
            if len(self.wind_weekly_means) != WEEKS or min(self.wind_weekly_means) <= 0:
                raise ValueError(f"wind_weekly_means needs {WEEKS} positive values")
        if not -66 < self.latitude_deg < 66:
            raise ValueError("latitude outside the range with a daily sunrise")

    def weekly_means(self) -> np.ndarray:
        if self.wind_weekly_means is not None:
            return np.asarray(self.wind_weekly_means, dtype=np.float64)
        # windiest in early January, calmest mid-year
        phase = 2 * math.pi * (np.arange(WEEKS) + 0.5) / WEEKS
        return 1.0 + self.wind_seasonal_amplitude * np.cos(phase)


def _ar1(rng: np.random.Generator, n: int, correlation_hours: float) -> np.ndarray:
    """Stationary unit-variance AR(1) sampled every slot."""
    phi = math.exp(-SLOT_HOURS / correlation_hours)
    noise = rng.standard_normal(n)
    x0 = rng.standard_normal()
    return lfilter([math.sqrt(1 - phi * phi)], [1.0, -phi], noise, zi=[phi * x0])[0]


def _clear_sky(spec: SynthSpec) -> np.ndarray:
    hours = np.arange(YEAR_SLOTS) * SLOT_HOURS + (spec.start.hour + spec.start.minute / 60)
    day = spec.start.timetuple().tm_yday - 1 + hours / 24.0
    decl = np.radians(23.44) * np.sin(2 * np.pi * (day - 80) / 365.0)
    hour_angle = np.radians(15.0) * (np.mod(hours, 24.0) - 12.0)
    lat = math.radians(spec.latitude_deg)
    sin_elev = math.sin(lat) * np.sin(decl) + math.cos(lat) * np.cos(decl) * np.cos(hour_angle)
    return np.clip(sin_elev, 0.0, None) ** 1.3


def synthesize_year(
    spec: SynthSpec | None = None, seed: int = 0, baselines: Baselines | None = None
) -> WeeklyTraceSet:
    spec = spec or SynthSpec()
    rng = np.random.default_rng(seed)

    sigma = spec.wind_variability
    latent = _ar1(rng, YEAR_SLOTS, spec.wind_correlation_hours)
    level = np.repeat(spec.weekly_means(), SLOTS_PER_WEEK)
    wind = level * np.exp(sigma * latent - 0.5 * sigma * sigma)
    wind = spec.wind_cap * -np.expm1(-wind / spec.wind_cap)

    clouds = _ar1(rng, YEAR_SLOTS, spec.solar_correlation_hours)
    cloud_factor = np.clip(0.7 + spec.solar_cloud_variability * clouds, 0.05, 1.0)
    solar = _clear_sky(spec) * cloud_factor

    return WeeklyTraceSet.from_profiles(wind, solar, baselines, spec.start)
