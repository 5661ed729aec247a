"""Curtailment modelling and investment planning tables for wind and solar fleets."""

from .efficiency import efficiency_point, incremental_solar_efficiency, incremental_wind_efficiency
from .errors import DataError, RangeError
from .ingest import Baselines, WeeklyTraceSet, fill_gaps, normalize, parse_records
from .model import EvalResult, Scenario, evaluate, per_slot_series
from .synth import SynthSpec, synthesize_year

__all__ = [
    "Baselines",
    "DataError",
    "EvalResult",
    "RangeError",
    "Scenario",
    "SynthSpec",
    "WeeklyTraceSet",
    "efficiency_point",
    "evaluate",
    "fill_gaps",
    "incremental_solar_efficiency",
    "incremental_wind_efficiency",
    "normalize",
    "parse_records",
    "per_slot_series",
    "synthesize_year",
]
