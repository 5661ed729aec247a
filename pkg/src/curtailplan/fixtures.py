"""Transcribed reference values shipped with the package.

``reference_gw_ws.csv`` and ``reference_iwe.csv`` are full arrays on the
default lattice, ``reference_planning.csv`` holds planning-table ISE rows,
and the remaining files hold reference lookup tables, scenario rows and the
decarbonisation ladder.
"""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

from .tables import EfficiencyGrid, LookupTable, read_array_csv, read_lookup_csv, read_planning_ise


def path(name: str) -> Path:
    return Path(str(resources.files("curtailplan") / "data" / name))


def _open(name: str):
    return open(path(name), newline="", encoding="utf-8")


def reference_grid() -> EfficiencyGrid:
    with _open("reference_gw_ws.csv") as fh:
        h, w, s, gw = read_array_csv(fh)
    with _open("reference_iwe.csv") as fh:
        h2, w2, s2, iwe = read_array_csv(fh)
    assert (h, w, s) == (h2, w2, s2)
    return EfficiencyGrid(h, w, s, gw, iwe)


def reference_planning_ise() -> dict[tuple[float, float, float], float]:
    with _open("reference_planning.csv") as fh:
        return read_planning_ise(fh)


def reference_planning_wm() -> dict[tuple[float, float, float], float]:
    """The few reference planning-table wm values (Hdrm=50, IWE=0.5 block)."""
    with _open("reference_planning.csv") as fh:
        return {
            (float(r["hdrm"]), float(r["iwe_target"]), float(r["sm"])): float(r["wm"])
            for r in csv.DictReader(fh)
            if r["wm"].strip()
        }


def reference_lookup() -> LookupTable:
    with _open("reference_lookup.csv") as fh:
        return read_lookup_csv(fh)


def reference_scenarios() -> list[dict[str, str]]:
    with _open("reference_scenarios.csv") as fh:
        return list(csv.DictReader(fh))


def reference_ladder() -> list[dict[str, str]]:
    with _open("reference_ladder.csv") as fh:
        return list(csv.DictReader(fh))
