"""Efficiency arrays, planning tables and lookup tables.

The pipeline runs in two interpolation stages:

1. Along each IWE column of the (hdrm, wm, sm) lattice, find the ``wm`` where
   IWE hits a target, then measure ISE there (the planning table).
2. Along each planning-table row, find the pair of ``sm`` grid values whose
   ISE straddles the same target and interpolate ``wm`` and ``sm`` jointly
   (the lookup table). Other headroom values come from linear interpolation
   or extrapolation between the base columns.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .efficiency import DEFAULT_DELTA, efficiency_point, incremental_solar_efficiency
from .errors import DataError, RangeError
from .ingest import WeeklyTraceSet
from .model import Scenario, accommodated

DEFAULT_HDRM_AXIS = (30.0, 40.0, 50.0)
DEFAULT_WM_AXIS = tuple(float(w) for w in range(1, 11))
DEFAULT_SM_AXIS = (0.0, 2.0, 4.0, 6.0, 8.0)
DEFAULT_TARGETS = (0.7, 0.5, 0.3)
LOOKUP_HDRMS = (30.0, 40.0, 50.0, 35.0, 45.0, 55.0, 60.0)
HDRM_EXTRAPOLATION_LIMIT = 60.0


def _axis(values: Iterable[float], name: str) -> tuple[float, ...]:
    axis = tuple(float(v) for v in values)
    if not axis:
        raise ValueError(f"{name} axis is empty")
    if any(b <= a for a, b in zip(axis, axis[1:])):
        raise ValueError(f"{name} axis must be strictly increasing: {axis}")
    return axis


@dataclass(frozen=True, eq=False)
class EfficiencyGrid:
    """Accommodated GW and IWE over an (hdrm, wm, sm) lattice.

    Arrays are indexed ``[hdrm, wm, sm]``. Either array may be None when a
    grid is loaded from a single exported file.
    """

    hdrm_axis: tuple[float, ...]
    wm_axis: tuple[float, ...]
    sm_axis: tuple[float, ...]
    gw_ws: np.ndarray | None = None
    iwe: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "hdrm_axis", _axis(self.hdrm_axis, "hdrm"))
        object.__setattr__(self, "wm_axis", _axis(self.wm_axis, "wm"))
        object.__setattr__(self, "sm_axis", _axis(self.sm_axis, "sm"))
        for name in ("gw_ws", "iwe"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.array(arr, dtype=np.float64)
            if arr.shape != self.shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {self.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.hdrm_axis), len(self.wm_axis), len(self.sm_axis)

    def _index(self, axis: tuple[float, ...], value: float, name: str) -> int:
        try:
            return axis.index(float(value))
        except ValueError:
            raise RangeError(f"{name}={value} is not on the grid axis {axis}") from None

    def iwe_column(self, hdrm: float, sm: float) -> np.ndarray:
        if self.iwe is None:
            raise DataError("grid has no IWE array")
        return self.iwe[self._index(self.hdrm_axis, hdrm, "hdrm"), :, self._index(self.sm_axis, sm, "sm")]


def build_grid(
    traces: WeeklyTraceSet,
    hdrm_axis: Sequence[float] = DEFAULT_HDRM_AXIS,
    wm_axis: Sequence[float] = DEFAULT_WM_AXIS,
    sm_axis: Sequence[float] = DEFAULT_SM_AXIS,
    delta_wm: float = DEFAULT_DELTA,
    workers: int | None = None,
) -> EfficiencyGrid:
    hdrm_axis = _axis(hdrm_axis, "hdrm")
    wm_axis = _axis(wm_axis, "wm")
    sm_axis = _axis(sm_axis, "sm")
    if not delta_wm > 0:
        raise ValueError(f"delta_wm must be positive, got {delta_wm}")
    wb = traces.baselines.wind_base

    def point(idx: tuple[int, int, int]) -> tuple[float, float]:
        h, w, s = idx
        sc = Scenario(hdrm_axis[h], wm_axis[w], sm_axis[s])
        base = accommodated(traces, sc)
        bumped = accommodated(traces, sc.with_(wm=sc.wm + delta_wm))
        return base, (bumped - base) / (delta_wm * wb)

    shape = (len(hdrm_axis), len(wm_axis), len(sm_axis))
    indices = list(np.ndindex(*shape))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(point, indices))
    else:
        results = [point(i) for i in indices]
    gw = np.array([r[0] for r in results]).reshape(shape)
    iwe = np.array([r[1] for r in results]).reshape(shape)
    return EfficiencyGrid(hdrm_axis, wm_axis, sm_axis, gw, iwe)


def wm_for_target_iwe(column: Sequence[float], wm_axis: Sequence[float], target: float) -> float:
    """Linearly interpolate the wm at which a (descending) IWE column reaches ``target``.

    The first adjacent pair with ``iwe[k] >= target >= iwe[k+1]``, scanning
    from low wm, is used.
    """
    values = [float(v) for v in column]
    axis = [float(w) for w in wm_axis]
    if len(values) != len(axis):
        raise ValueError("column and wm axis differ in length")
    for k, v in enumerate(values):
        if v == target:
            return axis[k]
    for k in range(len(values) - 1):
        hi, lo = values[k], values[k + 1]
        if hi >= target >= lo:
            frac = (hi - target) / (hi - lo)
            # convex form: exact at both ends of the interval
            return axis[k] * (1.0 - frac) + axis[k + 1] * frac
    raise RangeError(
        f"IWE target {target} outside the achievable range [{min(values):.3f}, {max(values):.3f}]"
    )


@dataclass(frozen=True)
class PlanningCell:
    hdrm: float
    target: float
    sm: float
    wm_star: float | None
    ise: float | None
    note: str = ""

    @property
    def available(self) -> bool:
        return self.wm_star is not None and self.ise is not None


@dataclass(frozen=True)
class PlanningTable:
    hdrm_axis: tuple[float, ...]
    sm_axis: tuple[float, ...]
    targets: tuple[float, ...]
    cells: Mapping[tuple[float, float, float], PlanningCell]

    def cell(self, hdrm: float, target: float, sm: float) -> PlanningCell:
        return self.cells[(float(hdrm), float(target), float(sm))]

    def row(self, hdrm: float, target: float) -> list[PlanningCell]:
        return [self.cell(hdrm, target, s) for s in self.sm_axis]


IseValues = Mapping[tuple[float, float, float], float]


def build_planning_table(
    grid: EfficiencyGrid,
    targets: Sequence[float] = DEFAULT_TARGETS,
    *,
    traces: WeeklyTraceSet | None = None,
    ise_values: IseValues | None = None,
    delta_sm: float = DEFAULT_DELTA,
) -> PlanningTable:
    """Planning table from an IWE grid.

    ISE at each ``wm_star`` comes from the model when ``traces`` is given, or
    from ``ise_values`` keyed ``(hdrm, target, sm)`` (e.g. a transcribed table)
    otherwise. Cells whose target IWE is out of reach are kept but marked
    unavailable.
    """
    if (traces is None) == (ise_values is None):
        raise ValueError("pass exactly one of traces or ise_values")
    targets = tuple(float(t) for t in targets)
    cells: dict[tuple[float, float, float], PlanningCell] = {}
    for h in grid.hdrm_axis:
        for t in targets:
            for s in grid.sm_axis:
                key = (h, t, s)
                try:
                    wm_star = wm_for_target_iwe(grid.iwe_column(h, s), grid.wm_axis, t)
                except RangeError as exc:
                    cells[key] = PlanningCell(h, t, s, None, None, str(exc))
                    continue
                if traces is not None:
                    ise = incremental_solar_efficiency(traces, Scenario(h, wm_star, s), delta_sm)
                    note = ""
                else:
                    ise = ise_values.get(key)
                    note = "" if ise is not None else "no ISE value supplied"
                cells[key] = PlanningCell(h, t, s, wm_star, ise, note)
    return PlanningTable(grid.hdrm_axis, grid.sm_axis, targets, cells)


@dataclass(frozen=True)
class StraddlePair:
    sm_n: float
    sm_n1: float
    wm_n: float
    wm_n1: float
    ise_n: float
    ise_n1: float


def lookup_entry(straddle: StraddlePair, target_ise: float) -> tuple[float, float]:
    """Joint (wm, sm) where ISE reaches ``target_ise`` between two planning cells."""
    p = straddle
    if p.ise_n == p.ise_n1:
        raise RangeError(f"degenerate straddle: both ISE values are {p.ise_n}")
    lo, hi = min(p.ise_n, p.ise_n1), max(p.ise_n, p.ise_n1)
    if not (p.ise_n1 <= target_ise <= p.ise_n):
        raise RangeError(f"ISE target {target_ise} outside the straddle [{lo}, {hi}]")
    ratio = (target_ise - p.ise_n1) / (p.ise_n - p.ise_n1)
    # Same as sm_n1 - (sm_n1 - sm_n)*ratio and wm_n1 + (wm_n - wm_n1)*ratio,
    # written so that ratio 0 and 1 return the endpoints bit-for-bit.
    sm = p.sm_n1 * (1.0 - ratio) + p.sm_n * ratio
    wm = p.wm_n1 * (1.0 - ratio) + p.wm_n * ratio
    return wm, sm


def find_straddle(planning: PlanningTable, hdrm: float, target: float) -> StraddlePair:
    row = planning.row(hdrm, target)
    for a, b in zip(row, row[1:]):
        if a.available and b.available and a.ise >= target >= b.ise and a.ise != b.ise:
            return StraddlePair(a.sm, b.sm, a.wm_star, b.wm_star, a.ise, b.ise)
    known = [c.ise for c in row if c.available]
    span = f"[{min(known):.3f}, {max(known):.3f}]" if known else "no available cells"
    raise RangeError(f"no ISE straddle of {target} for hdrm={hdrm} (available ISE {span})")


@dataclass(frozen=True)
class LookupEntry:
    hdrm: float
    wm: float
    sm: float
    iwe: float | None = None
    ise: float | None = None
    kind: str = "base"


@dataclass(frozen=True)
class LookupTable:
    """Per target, one entry per headroom value in presentation order."""

    targets: tuple[float, ...]
    entries: Mapping[float, tuple[LookupEntry, ...]] = field(default_factory=dict)

    def column(self, target: float) -> tuple[LookupEntry, ...]:
        try:
            return self.entries[float(target)]
        except KeyError:
            raise RangeError(f"no lookup table for target {target}") from None

    def entry(self, target: float, hdrm: float) -> LookupEntry:
        for e in self.column(target):
            if e.hdrm == float(hdrm):
                return e
        raise RangeError(f"no lookup entry for target {target}, hdrm {hdrm}")

    def sorted_column(self, target: float) -> list[LookupEntry]:
        return sorted(self.column(target), key=lambda e: e.hdrm)


def _line_through(
    bases: Sequence[tuple[float, float, float]], hdrm: float
) -> tuple[float, float, str]:
    """Linear interpolation (or end extrapolation) of (wm, sm) between base columns."""
    hs = [b[0] for b in bases]
    if hdrm in hs:
        b = bases[hs.index(hdrm)]
        return b[1], b[2], "base"
    if len(bases) < 2:
        raise RangeError("need two base columns to interpolate in hdrm")
    if hdrm < hs[0]:
        a, b, kind = bases[0], bases[1], "extrapolated"
    elif hdrm > hs[-1]:
        a, b, kind = bases[-2], bases[-1], "extrapolated"
    else:
        k = max(i for i, h in enumerate(hs) if h < hdrm)
        a, b, kind = bases[k], bases[k + 1], "interpolated"
    f = (hdrm - a[0]) / (b[0] - a[0])
    return a[1] + (b[1] - a[1]) * f, a[2] + (b[2] - a[2]) * f, kind


def build_lookup_table(
    planning: PlanningTable,
    traces: WeeklyTraceSet | None = None,
    hdrms: Sequence[float] = LOOKUP_HDRMS,
    targets: Sequence[float] | None = None,
    delta_wm: float = DEFAULT_DELTA,
    delta_sm: float = DEFAULT_DELTA,
) -> LookupTable:
    """Lookup tables for IWE = ISE = target.

    Without ``traces`` the IWE/ISE validation fields stay None.
    """
    targets = tuple(float(t) for t in (targets or planning.targets))
    entries: dict[float, tuple[LookupEntry, ...]] = {}
    for t in targets:
        if t not in planning.targets:
            raise DataError(f"planning table has no IWE={t} block")
        bases = []
        for h in planning.hdrm_axis:
            wm, sm = lookup_entry(find_straddle(planning, h, t), t)
            bases.append((h, wm, sm))
        column = []
        for h in hdrms:
            wm, sm, kind = _line_through(bases, float(h))
            iwe = ise = None
            if traces is not None:
                pt = efficiency_point(traces, Scenario(float(h), wm, sm), delta_wm, delta_sm)
                iwe, ise = pt.iwe, pt.ise
            column.append(LookupEntry(float(h), wm, sm, iwe, ise, kind))
        entries[t] = tuple(column)
    return LookupTable(targets, entries)


def lookup_point(lookup: LookupTable, target: float, hdrm: float) -> tuple[float, float]:
    """(wm, sm) for IWE = ISE = target at any headroom inside the table's range."""
    col = lookup.sorted_column(target)
    hs = [e.hdrm for e in col]
    if not hs[0] <= hdrm <= hs[-1]:
        raise RangeError(f"hdrm {hdrm} outside lookup range [{hs[0]}, {hs[-1]}]")
    wm = float(np.interp(hdrm, hs, [e.wm for e in col]))
    sm = float(np.interp(hdrm, hs, [e.sm for e in col]))
    return wm, sm


def hdrm_for_wind(lookup: LookupTable, target: float, wm_query: float) -> float:
    """Headroom at which ``wm_query`` satisfies IWE = ISE = target (inverse lookup)."""
    col = lookup.sorted_column(target)
    hs = [e.hdrm for e in col]
    wms = [e.wm for e in col]
    for e in col:
        if e.wm == wm_query:
            return e.hdrm
    for (h0, w0), (h1, w1) in zip(zip(hs, wms), zip(hs[1:], wms[1:])):
        if min(w0, w1) <= wm_query <= max(w0, w1) and w0 != w1:
            return h0 + (h1 - h0) * (wm_query - w0) / (w1 - w0)
    raise RangeError(
        f"wm {wm_query} outside the lookup range [{min(wms):.3f}, {max(wms):.3f}] for target {target}"
    )


def _bracket(axis: tuple[float, ...], x: float) -> tuple[int, float]:
    if len(axis) == 1:
        return 0, 0.0
    k = int(np.searchsorted(axis, x, side="right")) - 1
    k = min(max(k, 0), len(axis) - 2)
    return k, (x - axis[k]) / (axis[k + 1] - axis[k])


def interp_gw_ws(
    grid: EfficiencyGrid, scenario: Scenario, hdrm_limit: float = HDRM_EXTRAPOLATION_LIMIT
) -> float:
    """Trilinear interpolation of accommodated GW; hdrm may extrapolate up to ``hdrm_limit``."""
    if grid.gw_ws is None:
        raise DataError("grid has no GW w+s array")
    h_ax, w_ax, s_ax = grid.hdrm_axis, grid.wm_axis, grid.sm_axis
    if not w_ax[0] <= scenario.wm <= w_ax[-1]:
        raise RangeError(f"wm {scenario.wm} outside grid range [{w_ax[0]}, {w_ax[-1]}]")
    if not s_ax[0] <= scenario.sm <= s_ax[-1]:
        raise RangeError(f"sm {scenario.sm} outside grid range [{s_ax[0]}, {s_ax[-1]}]")
    upper = max(h_ax[-1], hdrm_limit) if len(h_ax) > 1 else h_ax[-1]
    if not h_ax[0] <= scenario.hdrm <= upper:
        raise RangeError(f"hdrm {scenario.hdrm} outside [{h_ax[0]}, {upper}]")

    (i, ti), (j, tj), (k, tk) = (
        _bracket(h_ax, scenario.hdrm),
        _bracket(w_ax, scenario.wm),
        _bracket(s_ax, scenario.sm),
    )
    v = grid.gw_ws

    def at(a: int, b: int, c: int) -> float:
        return float(v[min(a, len(h_ax) - 1), min(b, len(w_ax) - 1), min(c, len(s_ax) - 1)])

    def lerp(a: float, b: float, t: float) -> float:
        return a * (1.0 - t) + b * t if t else a

    c00 = lerp(at(i, j, k), at(i, j, k + 1), tk)
    c01 = lerp(at(i, j + 1, k), at(i, j + 1, k + 1), tk)
    c10 = lerp(at(i + 1, j, k), at(i + 1, j, k + 1), tk)
    c11 = lerp(at(i + 1, j + 1, k), at(i + 1, j + 1, k + 1), tk)
    return lerp(lerp(c00, c01, tj), lerp(c10, c11, tj), ti)


# ---------------------------------------------------------------- figure data


def iwe_curves(
    traces: WeeklyTraceSet,
    hdrms: Sequence[float],
    sms: Sequence[float],
    wm_values: Sequence[float],
    delta_wm: float = DEFAULT_DELTA,
) -> list[tuple[float, float, float, float]]:
    """Rows of (hdrm, sm, wm, iwe) for plotting IWE against wm."""
    rows = []
    wb = traces.baselines.wind_base
    for h in hdrms:
        for s in sms:
            for w in wm_values:
                sc = Scenario(float(h), float(w), float(s))
                base = accommodated(traces, sc)
                bumped = accommodated(traces, sc.with_(wm=sc.wm + delta_wm))
                rows.append((sc.hdrm, sc.sm, sc.wm, (bumped - base) / (delta_wm * wb)))
    return rows


def linearity_residual(lookup: LookupTable, target: float) -> float:
    """Max |wm - fitted line| over a lookup column's (hdrm, wm) points."""
    col = lookup.column(target)
    h = np.array([e.hdrm for e in col])
    w = np.array([e.wm for e in col])
    slope, intercept = np.polyfit(h, w, 1)
    return float(np.max(np.abs(w - (slope * h + intercept))))


# ----------------------------------------------------------------------- I/O


def _fmt(v: float | None, digits: int = 3) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.{digits}f}"


def _num(v: float) -> str:
    return f"{v:g}"


def write_array_csv(grid: EfficiencyGrid, which: str, stream: IO[str]) -> None:
    """One block per hdrm, rows wm, columns sm; ``which`` is 'gw_ws' or 'iwe'."""
    arr = getattr(grid, which)
    if arr is None:
        raise DataError(f"grid has no {which} array")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["hdrm", "wm"] + [f"sm={_num(s)}" for s in grid.sm_axis])
    for i, h in enumerate(grid.hdrm_axis):
        for j, w in enumerate(grid.wm_axis):
            writer.writerow([_num(h), _num(w)] + [_fmt(x) for x in arr[i, j]])


def read_array_csv(source: Iterable[str]) -> tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...], np.ndarray]:
    reader = csv.reader(source)
    header = next(reader, None)
    if not header or [h.strip() for h in header[:2]] != ["hdrm", "wm"]:
        raise DataError("array CSV must start with columns hdrm,wm,sm=...")
    try:
        sm_axis = tuple(float(h.strip().split("=", 1)[1]) for h in header[2:])
    except (IndexError, ValueError) as exc:
        raise DataError(f"bad sm column headers {header[2:]}") from exc
    cells: dict[tuple[float, float], list[float]] = {}
    for row in reader:
        if not row:
            continue
        try:
            vals = [float(x) for x in row]
        except ValueError as exc:
            raise DataError(f"array CSV line {reader.line_num}: non-numeric cell in {row}") from exc
        if len(vals) != 2 + len(sm_axis):
            raise DataError(f"array CSV line {reader.line_num}: expected {2 + len(sm_axis)} cells")
        cells[(vals[0], vals[1])] = vals[2:]
    hdrm_axis = tuple(sorted({k[0] for k in cells}))
    wm_axis = tuple(sorted({k[1] for k in cells}))
    if len(cells) != len(hdrm_axis) * len(wm_axis):
        raise DataError("array CSV does not cover a full hdrm x wm lattice")
    arr = np.array([[cells[(h, w)] for w in wm_axis] for h in hdrm_axis])
    return hdrm_axis, wm_axis, sm_axis, arr


def write_planning_csv(planning: PlanningTable, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["hdrm", "iwe_target", "sm", "wm", "ise"])
    for h in planning.hdrm_axis:
        for t in planning.targets:
            for c in planning.row(h, t):
                writer.writerow([_num(h), _num(t), _num(c.sm), _fmt(c.wm_star), _fmt(c.ise)])


def read_planning_ise(source: Iterable[str]) -> dict[tuple[float, float, float], float]:
    """ISE values keyed (hdrm, target, sm) from a planning CSV; blank cells are skipped."""
    out = {}
    for row in csv.DictReader(source):
        ise = (row.get("ise") or "").strip()
        if not ise:
            continue
        try:
            key = (float(row["hdrm"]), float(row["iwe_target"]), float(row["sm"]))
            out[key] = float(ise)
        except (KeyError, ValueError) as exc:
            raise DataError(f"bad planning row {row}") from exc
    return out


def write_lookup_csv(lookup: LookupTable, stream: IO[str], decimals: int = 3) -> None:
    """One block per target with Hdrm, wm, sm, IWE and ISE rows."""
    writer = csv.writer(stream, lineterminator="\n")
    for n, t in enumerate(lookup.targets):
        col = lookup.column(t)
        if n:
            writer.writerow([])
        writer.writerow([f"IWE=ISE={_num(t)}"])
        writer.writerow(["Hdrm"] + [_num(e.hdrm) for e in col])
        writer.writerow(["wm"] + [_fmt(e.wm, decimals) for e in col])
        writer.writerow(["sm"] + [_fmt(e.sm, decimals) for e in col])
        writer.writerow(["IWE"] + [_fmt(e.iwe, decimals) for e in col])
        writer.writerow(["ISE"] + [_fmt(e.ise, decimals) for e in col])


def read_lookup_csv(source: Iterable[str]) -> LookupTable:
    rows = [r for r in csv.reader(source) if r and any(c.strip() for c in r)]
    entries: dict[float, tuple[LookupEntry, ...]] = {}
    i = 0
    while i < len(rows):
        head = rows[i][0].strip()
        if not head.startswith("IWE=ISE="):
            raise DataError(f"expected an IWE=ISE=<target> block header, got {rows[i]}")
        target = float(head.rsplit("=", 1)[1])
        block = {r[0].strip(): r[1:] for r in rows[i + 1 : i + 6]}
        if set(block) != {"Hdrm", "wm", "sm", "IWE", "ISE"}:
            raise DataError(f"lookup block for {target} needs Hdrm, wm, sm, IWE, ISE rows")

        def col(name: str) -> list[float | None]:
            return [float(x) if x.strip() else None for x in block[name]]

        hs, wms, sms, iwes, ises = (col(k) for k in ("Hdrm", "wm", "sm", "IWE", "ISE"))
        entries[target] = tuple(
            LookupEntry(h, w, s, a, b) for h, w, s, a, b in zip(hs, wms, sms, iwes, ises)
        )
        i += 6
    return LookupTable(tuple(entries), entries)

