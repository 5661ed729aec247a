"""Weekly dynamics: deficits, excess generation, slew rates and storage adequacy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ingest import SLOT_MINUTES, WEEKS, WeeklyTraceSet
from .model import Scenario, SlotSeries, per_slot_series

MACKAY_COEFFICIENT = 0.37  # GW/h of slew per GW of available wind
MIN_SLEW_MINUTES = 5
MAX_SLEW_MINUTES = 240


@dataclass(frozen=True)
class SlewEvent:
    rate: float  # GW/h, positive for a fall unless direction="up"
    start: int  # slot index within the analysed series
    end: int


def detect_max_down_slew(
    values: Sequence[float] | np.ndarray,
    slot_minutes: float = SLOT_MINUTES,
    min_window: float = MIN_SLEW_MINUTES,
    max_window: float = MAX_SLEW_MINUTES,
    direction: str = "down",
) -> SlewEvent:
    """Steepest average fall (or rise) over windows of ``min_window``..``max_window`` minutes.

    Ties go to the earliest start, then the shortest window.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError("need at least two samples")
    if direction not in ("down", "up"):
        raise ValueError(f"direction must be 'down' or 'up', got {direction!r}")
    if direction == "up":
        v = -v
    k_min = max(1, math.ceil(min_window / slot_minutes))
    k_max = min(v.size - 1, int(max_window // slot_minutes))
    best = SlewEvent(0.0, 0, 0)
    for k in range(k_min, k_max + 1):
        rates = (v[:-k] - v[k:]) / (k * slot_minutes / 60.0)
        i = int(np.argmax(rates))
        r = float(rates[i])
        if r > best.rate or (r == best.rate and r > 0 and i < best.start):
            best = SlewEvent(r, i, i + k)
    return best


def mackay_slew_estimate(available: float, coefficient: float = MACKAY_COEFFICIENT) -> float:
    if available < 0:
        raise ValueError("available generation must be >= 0")
    return coefficient * available


def prudent_reserve(max_deficit: float, step: float = 10.0) -> float:
    """Reserve fleet figure: peak deficit rounded up to the next ``step`` GW."""
    return math.ceil(max_deficit / step) * step


@dataclass(frozen=True)
class WeeklyDynamics:
    week: int | None
    mean_deficit: float
    max_deficit: float
    mean_excess: float
    max_excess: float
    deficit_energy: float  # GWh
    excess_energy: float  # GWh
    max_down_slew: float  # GW/h of combined wind + solar
    slew_window: tuple[int, int]  # absolute slot indices
    span_hours: float


def analyze_week(series: SlotSeries, week: int | None = None) -> WeeklyDynamics:
    if len(series) == 0:
        raise ValueError("empty series")
    excess = series.curtailed
    slew = detect_max_down_slew(series.available, series.slot_hours * 60.0)
    return WeeklyDynamics(
        week=week,
        mean_deficit=float(series.deficit.mean()),
        max_deficit=float(series.deficit.max()),
        mean_excess=float(excess.mean()),
        max_excess=float(excess.max()),
        deficit_energy=float(series.deficit.sum() * series.slot_hours),
        excess_energy=float(excess.sum() * series.slot_hours),
        max_down_slew=slew.rate,
        slew_window=(series.first_slot + slew.start, series.first_slot + slew.end),
        span_hours=series.span_hours,
    )


def analyze_year(traces: WeeklyTraceSet, scenario: Scenario) -> list[WeeklyDynamics]:
    return [analyze_week(per_slot_series(traces, scenario, w), w) for w in range(1, WEEKS + 1)]


DEFAULT_STORAGE = {
    "grid_storage": 140.0,
    "pumped_hydro": 27.0,
    "scottish_hydro_potential": 400.0,
    "ev_v2g": 1050.0,
}


@dataclass(frozen=True)
class StorageLedger:
    capacities: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_STORAGE))

    def __post_init__(self):
        for name, cap in self.capacities.items():
            if cap < 0:
                raise ValueError(f"storage {name} has negative capacity {cap}")

    @property
    def total(self) -> float:
        return float(sum(self.capacities.values()))


@dataclass(frozen=True)
class CoverageReport:
    deficit_energy: float
    per_source: Mapping[str, float | None]
    total: float | None

    @property
    def applicable(self) -> bool:
        return self.total is not None


def storage_adequacy(deficit_energy: float, ledger: StorageLedger | None = None) -> CoverageReport:
    """Fraction of a deficit (GWh) each storage source could cover; None when there is no deficit."""
    ledger = ledger or StorageLedger()
    if deficit_energy < 0:
        raise ValueError("deficit energy must be >= 0")
    if deficit_energy == 0:
        return CoverageReport(0.0, {k: None for k in ledger.capacities}, None)
    per = {k: v / deficit_energy for k, v in ledger.capacities.items()}
    return CoverageReport(deficit_energy, per, ledger.total / deficit_energy)
