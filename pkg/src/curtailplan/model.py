"""Curtailment model: how much wind plus solar a flat headroom can absorb.

Each 5-minute slot offers ``wm * wind_base * wind_unit + sm * solar_base * solar_unit``
GW; the system accommodates at most ``hdrm`` of it and curtails the rest.
Weekly means are averaged into the annual figure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import SLOT_HOURS, SLOTS_PER_WEEK, WEEKS, WeeklyTraceSet


@dataclass(frozen=True)
class Scenario:
    hdrm: float
    wm: float
    sm: float

    def __post_init__(self):
        if not (math.isfinite(self.hdrm) and self.hdrm > 0):
            raise ValueError(f"hdrm must be positive, got {self.hdrm}")
        for name in ("wm", "sm"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    def with_(self, **changes: float) -> Scenario:
        values = {"hdrm": self.hdrm, "wm": self.wm, "sm": self.sm}
        values.update(changes)
        return Scenario(**values)


@dataclass(frozen=True, eq=False)
class EvalResult:
    scenario: Scenario
    accommodated: float
    available: float
    curtailed: float
    dispatchable: float
    weekly_accommodated: np.ndarray


def available_power(traces: WeeklyTraceSet, scenario: Scenario) -> np.ndarray:
    """Per-slot available wind plus solar (GW), shaped (52, 2016)."""
    wb = scenario.wm * traces.baselines.wind_base
    sb = scenario.sm * traces.baselines.solar_base
    return wb * traces.wind + sb * traces.solar


def accommodated(traces: WeeklyTraceSet, scenario: Scenario) -> float:
    """Annual mean accommodated GW, without building a full EvalResult."""
    acc = np.minimum(available_power(traces, scenario), scenario.hdrm)
    return float(acc.mean(axis=1).mean())


def evaluate(traces: WeeklyTraceSet, scenario: Scenario) -> EvalResult:
    available = available_power(traces, scenario)
    acc = np.minimum(available, scenario.hdrm)
    weekly = acc.mean(axis=1)
    weekly.setflags(write=False)
    accommodated_gw = float(weekly.mean())
    available_gw = float(available.mean(axis=1).mean())
    curtailed_gw = float((available - acc).mean(axis=1).mean())
    return EvalResult(
        scenario=scenario,
        accommodated=accommodated_gw,
        available=available_gw,
        curtailed=curtailed_gw,
        dispatchable=max(scenario.hdrm - accommodated_gw, 0.0),
        weekly_accommodated=weekly,
    )


@dataclass(frozen=True, eq=False)
class SlotSeries:
    """Per-slot power flows for a contiguous run of slots (GW)."""

    hdrm: float
    available: np.ndarray
    accommodated: np.ndarray
    curtailed: np.ndarray
    deficit: np.ndarray
    first_slot: int = 0
    slot_hours: float = SLOT_HOURS

    @classmethod
    def from_available(
        cls, available: np.ndarray, hdrm: float, first_slot: int = 0, slot_hours: float = SLOT_HOURS
    ) -> SlotSeries:
        available = np.asarray(available, dtype=np.float64)
        acc = np.minimum(available, hdrm)
        return cls(
            hdrm=hdrm,
            available=available,
            accommodated=acc,
            curtailed=available - acc,
            deficit=np.maximum(hdrm - available, 0.0),
            first_slot=first_slot,
            slot_hours=slot_hours,
        )

    def __len__(self) -> int:
        return len(self.available)

    @property
    def span_hours(self) -> float:
        return len(self) * self.slot_hours


def per_slot_series(traces: WeeklyTraceSet, scenario: Scenario, week: int) -> SlotSeries:
    """Slot-by-slot flows for one week (1-based)."""
    if not 1 <= week <= WEEKS:
        raise ValueError(f"week must be in 1..{WEEKS}, got {week}")
    available = available_power(traces, scenario)[week - 1]
    return SlotSeries.from_available(available, scenario.hdrm, (week - 1) * SLOTS_PER_WEEK)


def window_series(
    traces: WeeklyTraceSet, scenario: Scenario, first_slot: int, n_slots: int
) -> SlotSeries:
    """Flows for an arbitrary slot window, e.g. a lull spanning two weeks."""
    flat = available_power(traces, scenario).ravel()
    if first_slot < 0 or n_slots < 1 or first_slot + n_slots > flat.size:
        raise ValueError(f"slot window [{first_slot}, {first_slot + n_slots}) outside the year")
    return SlotSeries.from_available(
        flat[first_slot : first_slot + n_slots].copy(), scenario.hdrm, first_slot
    )
