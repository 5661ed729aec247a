"""Parse, validate and normalise 5-minute generation records.

A year of records is reduced to 52 weeks of 2016 slots each. Wind and solar
are stored per-unit of their annual means, so a fleet multiple ``wm`` maps to
``wm * wind_base * wind_unit`` GW.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import DataError

SLOT_MINUTES = 5
SLOT_HOURS = SLOT_MINUTES / 60.0
SLOT = timedelta(minutes=SLOT_MINUTES)
SLOTS_PER_WEEK = 7 * 24 * 60 // SLOT_MINUTES  # 2016
WEEKS = 52
YEAR_SLOTS = WEEKS * SLOTS_PER_WEEK  # 104,832
MAX_GAP_SLOTS = 12

RECORD_HEADER = ("timestamp", "demand_gw", "wind_gw", "solar_gw", "nuclear_gw")
CACHE_HEADER = ("week", "slot", "wind_unit", "solar_unit")

_MEAN_TOL = 1e-9


@dataclass(frozen=True)
class RawRecord:
    timestamp: datetime
    demand: float
    wind: float
    solar: float
    nuclear: float


@dataclass(frozen=True)
class Baselines:
    """Annual average wind and solar output (GW) that ``wm = sm = 1`` represents."""

    wind_base: float = 6.045
    solar_base: float = 1.16

    def __post_init__(self):
        if not (self.wind_base > 0 and self.solar_base > 0):
            raise ValueError(
                f"baselines must be positive, got wind={self.wind_base}, solar={self.solar_base}"
            )


@dataclass(frozen=True, eq=False)
class WeeklyTraceSet:
    """52 x 2016 per-unit wind and solar traces.

    ``wind`` and ``solar`` may be passed flat (104,832 values) or already
    shaped ``(52, 2016)``; they are stored read-only in the latter shape.
    """

    wind: np.ndarray
    solar: np.ndarray
    baselines: Baselines = field(default_factory=Baselines)
    start: datetime | None = None

    def __post_init__(self):
        for name in ("wind", "solar"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.size != YEAR_SLOTS:
                raise DataError(f"{name} trace has {arr.size} samples, expected {YEAR_SLOTS}")
            arr = arr.reshape(WEEKS, SLOTS_PER_WEEK)
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} trace contains non-finite values")
            if np.any(arr < 0):
                raise DataError(f"{name} trace contains negative values")
            mean = float(arr.mean())
            if abs(mean - 1.0) > _MEAN_TOL:
                raise DataError(f"{name} trace mean is {mean!r}, expected 1 (per-unit)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_profiles(
        cls,
        wind: Sequence[float] | np.ndarray,
        solar: Sequence[float] | np.ndarray,
        baselines: Baselines | None = None,
        start: datetime | None = None,
    ) -> WeeklyTraceSet:
        """Build from arbitrary non-negative profiles, rescaling each to unit mean."""
        w = np.asarray(wind, dtype=np.float64)
        s = np.asarray(solar, dtype=np.float64)
        return cls(_unit_mean(w, "wind"), _unit_mean(s, "solar"), baselines or Baselines(), start)

    def slot_time(self, index: int) -> datetime | None:
        if self.start is None:
            return None
        return self.start + index * SLOT


def _unit_mean(values: np.ndarray, name: str) -> np.ndarray:
    mean = float(np.mean(values))
    if not mean > 0:
        raise DataError(f"{name} has zero mean; cannot normalise")
    return values / mean


def _parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_records(source: Iterable[str]) -> list[RawRecord]:
    """Parse the 5-column generation CSV.

    Raises DataError naming the offending line for a bad header, missing or
    unparsable fields, negative or non-finite values, and timestamps that do
    not strictly increase.
    """
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None:
        raise DataError("empty input: no header line")
    if tuple(h.strip() for h in header) != RECORD_HEADER:
        raise DataError(f"line 1: expected header {','.join(RECORD_HEADER)}, got {','.join(header)}")

    records: list[RawRecord] = []
    prev: datetime | None = None
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(RECORD_HEADER) or any(not cell.strip() for cell in row):
            raise DataError(f"line {line}: expected {len(RECORD_HEADER)} fields, got {row!r}")
        try:
            ts = _parse_timestamp(row[0])
        except ValueError as exc:
            raise DataError(f"line {line}: bad timestamp {row[0]!r}") from exc
        values = []
        for name, cell in zip(RECORD_HEADER[1:], row[1:]):
            try:
                v = float(cell)
            except ValueError as exc:
                raise DataError(f"line {line}: {name} is not a number: {cell!r}") from exc
            if not math.isfinite(v) or v < 0:
                raise DataError(f"line {line}: {name} must be finite and >= 0, got {cell.strip()}")
            values.append(v)
        if prev is not None and ts <= prev:
            raise DataError(f"line {line}: timestamp {row[0]} does not follow {prev.isoformat()}")
        prev = ts
        records.append(RawRecord(ts, *values))
    return records


def read_records(path: str | Path) -> list[RawRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_records(fh)


def write_records(records: Iterable[RawRecord], stream: IO[str]) -> None:
    """Emit records in the input CSV format; floats use repr so parsing round-trips exactly."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for r in records:
        ts = r.timestamp.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        writer.writerow([ts, repr(r.demand), repr(r.wind), repr(r.solar), repr(r.nuclear)])


def fill_gaps(records: Sequence[RawRecord]) -> list[RawRecord]:
    """Linearly interpolate missing 5-minute slots; gaps longer than an hour are errors."""
    if not records:
        return []
    out = [records[0]]
    for prev, cur in zip(records, records[1:]):
        step = cur.timestamp - prev.timestamp
        if step <= timedelta(0) or step % SLOT:
            raise DataError(
                f"records at {prev.timestamp.isoformat()} and {cur.timestamp.isoformat()} "
                f"are not on the {SLOT_MINUTES}-minute cadence"
            )
        missing = step // SLOT - 1
        if missing > MAX_GAP_SLOTS:
            raise DataError(
                f"gap of {missing} slots between {prev.timestamp.isoformat()} and "
                f"{cur.timestamp.isoformat()} exceeds {MAX_GAP_SLOTS} slots (1 hour)"
            )
        n = missing + 1
        for k in range(1, n):
            f = k / n
            out.append(
                RawRecord(
                    prev.timestamp + k * SLOT,
                    prev.demand + (cur.demand - prev.demand) * f,
                    prev.wind + (cur.wind - prev.wind) * f,
                    prev.solar + (cur.solar - prev.solar) * f,
                    prev.nuclear + (cur.nuclear - prev.nuclear) * f,
                )
            )
        out.append(cur)
    return out


def normalize(records: Sequence[RawRecord], baselines: Baselines | None = None) -> WeeklyTraceSet:
    """Keep the first 52 whole weeks and rescale wind and solar to unit annual means."""
    baselines = baselines or Baselines()
    if len(records) < YEAR_SLOTS:
        raise DataError(f"need at least {YEAR_SLOTS} records, got {len(records)}")
    kept = records[:YEAR_SLOTS]
    for prev, cur in zip(kept, kept[1:]):
        if cur.timestamp - prev.timestamp != SLOT:
            raise DataError(
                f"records are not on a continuous {SLOT_MINUTES}-minute cadence at "
                f"{cur.timestamp.isoformat()}; run fill_gaps first"
            )
    wind = np.fromiter((r.wind for r in kept), dtype=np.float64, count=YEAR_SLOTS)
    solar = np.fromiter((r.solar for r in kept), dtype=np.float64, count=YEAR_SLOTS)
    return WeeklyTraceSet(
        _unit_mean(wind, "wind"), _unit_mean(solar, "solar"), baselines, kept[0].timestamp
    )


def traces_to_records(
    traces: WeeklyTraceSet,
    demand_gw: float = 30.0,
    nuclear_gw: float = 4.0,
    start: datetime | None = None,
) -> list[RawRecord]:
    """Re-emit a trace set as raw GW records (flat demand and nuclear columns)."""
    start = start or traces.start or datetime(2017, 1, 1, tzinfo=timezone.utc)
    wb, sb = traces.baselines.wind_base, traces.baselines.solar_base
    wind = (traces.wind * wb).ravel().tolist()
    solar = (traces.solar * sb).ravel().tolist()
    return [
        RawRecord(start + i * SLOT, demand_gw, w, s, nuclear_gw)
        for i, (w, s) in enumerate(zip(wind, solar))
    ]


def write_trace_cache(traces: WeeklyTraceSet, stream: IO[str]) -> None:
    """Write the normalised cache (``week,slot,wind_unit,solar_unit``) at 9 significant digits."""
    stream.write(",".join(CACHE_HEADER) + "\n")
    for w in range(WEEKS):
        wind = traces.wind[w]
        solar = traces.solar[w]
        lines = [
            f"{w + 1},{slot},{wind[slot]:.9g},{solar[slot]:.9g}\n" for slot in range(SLOTS_PER_WEEK)
        ]
        stream.writelines(lines)


def read_trace_cache(source: Iterable[str], baselines: Baselines | None = None) -> WeeklyTraceSet:
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CACHE_HEADER:
        raise DataError(f"trace cache must start with header {','.join(CACHE_HEADER)}")
    wind = np.empty(YEAR_SLOTS)
    solar = np.empty(YEAR_SLOTS)
    i = 0
    for row in reader:
        if not row:
            continue
        line = reader.line_num
        try:
            week, slot = int(row[0]), int(row[1])
            w, s = float(row[2]), float(row[3])
        except (ValueError, IndexError) as exc:
            raise DataError(f"trace cache line {line}: malformed row {row!r}") from exc
        if i >= YEAR_SLOTS or (week, slot) != (i // SLOTS_PER_WEEK + 1, i % SLOTS_PER_WEEK):
            raise DataError(f"trace cache line {line}: unexpected week/slot {week},{slot}")
        wind[i], solar[i] = w, s
        i += 1
    if i != YEAR_SLOTS:
        raise DataError(f"trace cache has {i} rows, expected {YEAR_SLOTS}")
    return WeeklyTraceSet(wind, solar, baselines or Baselines())
