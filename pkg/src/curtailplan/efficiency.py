"""Incremental wind and solar efficiencies (IWE / ISE).

Both are forward-difference slopes of annual accommodated generation with
respect to the fleet's own output: the fraction of a small extra slice of
wind (or solar) that the system actually absorbs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ingest import WeeklyTraceSet
from .model import Scenario, accommodated

DEFAULT_DELTA = 0.01


@dataclass(frozen=True)
class EfficiencyPoint:
    scenario: Scenario
    iwe: float
    ise: float
    delta_wm: float
    delta_sm: float


def _check_delta(name: str, delta: float) -> None:
    if not delta > 0:
        raise ValueError(f"{name} must be positive, got {delta}")


def incremental_wind_efficiency(
    traces: WeeklyTraceSet,
    scenario: Scenario,
    delta_wm: float = DEFAULT_DELTA,
    base: float | None = None,
) -> float:
    """``base`` lets callers reuse an already computed accommodated value."""
    _check_delta("delta_wm", delta_wm)
    if base is None:
        base = accommodated(traces, scenario)
    bumped = accommodated(traces, scenario.with_(wm=scenario.wm + delta_wm))
    return (bumped - base) / (delta_wm * traces.baselines.wind_base)


def incremental_solar_efficiency(
    traces: WeeklyTraceSet,
    scenario: Scenario,
    delta_sm: float = DEFAULT_DELTA,
    base: float | None = None,
) -> float:
    _check_delta("delta_sm", delta_sm)
    if base is None:
        base = accommodated(traces, scenario)
    bumped = accommodated(traces, scenario.with_(sm=scenario.sm + delta_sm))
    return (bumped - base) / (delta_sm * traces.baselines.solar_base)


def efficiency_point(
    traces: WeeklyTraceSet,
    scenario: Scenario,
    delta_wm: float = DEFAULT_DELTA,
    delta_sm: float = DEFAULT_DELTA,
) -> EfficiencyPoint:
    base = accommodated(traces, scenario)
    return EfficiencyPoint(
        scenario,
        incremental_wind_efficiency(traces, scenario, delta_wm, base),
        incremental_solar_efficiency(traces, scenario, delta_sm, base),
        delta_wm,
        delta_sm,
    )
