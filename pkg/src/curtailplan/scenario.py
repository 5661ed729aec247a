"""Emissions and decarbonisation analysis of candidate fleet configurations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .efficiency import DEFAULT_DELTA, efficiency_point
from .errors import DataError, RangeError
from .ingest import Baselines, WeeklyTraceSet
from .model import Scenario, accommodated
from .tables import EfficiencyGrid, interp_gw_ws

CCGT_INTENSITY = 4.87  # Mt CO2 per annum per GW of average ccgt output

AccommodatedSource = Callable[[Scenario], float]


@dataclass(frozen=True)
class EmissionsConfig:
    ccgt_intensity: float = CCGT_INTENSITY
    baselines: Baselines = Baselines()

    def __post_init__(self):
        if not self.ccgt_intensity > 0:
            raise ValueError(f"ccgt_intensity must be positive, got {self.ccgt_intensity}")


@dataclass(frozen=True)
class ScenarioReport:
    label: str
    target: float | None
    hdrm: float
    wm: float
    gw_wind: float
    sm: float
    gw_solar: float
    available: float
    accommodated: float
    curtailed: float
    dispatchable: float
    emissions: float
    iwe: float | None = None
    ise: float | None = None


@dataclass(frozen=True)
class DecarbStep:
    from_label: str
    to_label: str
    emission_reduction: float
    added_generation: float
    efficiency: float


def model_source(traces: WeeklyTraceSet) -> AccommodatedSource:
    """Accommodated GW from a direct model run."""
    return lambda sc: accommodated(traces, sc)


def grid_source(grid: EfficiencyGrid) -> AccommodatedSource:
    """Accommodated GW by trilinear interpolation in a GW w+s array."""

    def source(sc: Scenario) -> float:
        if sc.wm == 0 and sc.sm == 0:
            return 0.0
        return interp_gw_ws(grid, sc)

    return source


def analyze_scenario(
    hdrm: float,
    wm: float,
    sm: float,
    accommodated_source: AccommodatedSource | float,
    config: EmissionsConfig | None = None,
    label: str = "",
    target: float | None = None,
    traces: WeeklyTraceSet | None = None,
    delta: float = DEFAULT_DELTA,
) -> ScenarioReport:
    """Build a report; ``traces`` (optional) adds recalculated IWE and ISE."""
    config = config or EmissionsConfig()
    sc = Scenario(hdrm, wm, sm)
    if callable(accommodated_source):
        acc = float(accommodated_source(sc))
    else:
        acc = float(accommodated_source)
    if acc > hdrm + 1e-9:
        raise DataError(f"accommodated {acc:.3f} GW exceeds headroom {hdrm} GW")
    if acc < 0:
        raise DataError(f"accommodated {acc:.3f} GW is negative")
    gw_wind = wm * config.baselines.wind_base
    gw_solar = sm * config.baselines.solar_base
    available = gw_wind + gw_solar
    dispatchable = hdrm - acc
    iwe = ise = None
    if traces is not None:
        pt = efficiency_point(traces, sc, delta, delta)
        iwe, ise = pt.iwe, pt.ise
    return ScenarioReport(
        label=label,
        target=target,
        hdrm=hdrm,
        wm=wm,
        gw_wind=gw_wind,
        sm=sm,
        gw_solar=gw_solar,
        available=available,
        accommodated=acc,
        curtailed=available - acc,
        dispatchable=dispatchable,
        emissions=config.ccgt_intensity * dispatchable,
        iwe=iwe,
        ise=ise,
    )


def decarb_ladder(reports: Sequence[ScenarioReport]) -> list[DecarbStep]:
    """Emission reduction per GW of extra available generation between consecutive reports."""
    if len(reports) < 2:
        raise ValueError("need at least two reports")
    steps = []
    for a, b in zip(reports, reports[1:]):
        added = b.available - a.available
        if added == 0:
            raise RangeError(f"no added generation between {a.label} and {b.label}")
        reduction = a.emissions - b.emissions
        steps.append(DecarbStep(a.label, b.label, reduction, added, reduction / added))
    return steps


def capacity_to_wm(
    onshore_gw: float,
    onshore_lf: float,
    offshore_gw: float,
    offshore_lf: float,
    wind_base: float = Baselines.wind_base,
) -> float:
    """Installed capacity and load factors to a wind multiple."""
    if not wind_base > 0:
        raise ValueError(f"wind_base must be positive, got {wind_base}")
    if onshore_gw < 0 or offshore_gw < 0:
        raise ValueError("capacities must be >= 0")
    for lf in (onshore_lf, offshore_lf):
        if not 0 < lf <= 1:
            raise ValueError(f"load factor must be in (0, 1], got {lf}")
    return (onshore_gw * onshore_lf + offshore_gw * offshore_lf) / wind_base
