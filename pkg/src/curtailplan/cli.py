"""Command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric/range error.
Every command writes CSV files plus a short ``<command>.md`` summary into the
output directory; if a command fails, files it already wrote are removed.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Callable, Iterable

from . import fixtures
from .config import ConfigError, RunConfig, load_config, with_overrides
from .dynamics import (
    analyze_year,
    mackay_slew_estimate,
    prudent_reserve,
    storage_adequacy,
)
from .efficiency import efficiency_point
from .errors import DataError
from .ingest import (
    CACHE_HEADER,
    SLOT_HOURS,
    WeeklyTraceSet,
    fill_gaps,
    normalize,
    parse_records,
    read_trace_cache,
    traces_to_records,
    write_records,
    write_trace_cache,
)
from .model import Scenario, evaluate, per_slot_series
from .scenario import analyze_scenario, decarb_ladder, grid_source, model_source
from .synth import SynthSpec, synthesize_year
from .tables import (
    EfficiencyGrid,
    LookupTable,
    build_grid,
    build_lookup_table,
    build_planning_table,
    iwe_curves,
    linearity_residual,
    lookup_point,
    read_array_csv,
    read_lookup_csv,
    read_planning_ise,
    write_array_csv,
    write_lookup_csv,
    write_planning_csv,
)

REFERENCE = "reference"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class Outputs:
    """Tracks files written by a command so a failure can remove them."""

    def __init__(self, root: Path):
        self.root = root
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / name
        self.written.append(path)
        path.write_text(text, encoding="utf-8", newline="")
        return path

    def rollback(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)
        self.written.clear()


def _csv_text(rows: Iterable[Iterable[object]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _capture(writer: Callable[[io.StringIO], None]) -> str:
    buf = io.StringIO()
    writer(buf)
    return buf.getvalue()


def _round(v: float | None, places: int) -> str:
    # half-up on the shortest repr, so 4.87 * 48.5 prints 236.20 rather than 236.19
    if v is None:
        return ""
    q = Decimal(repr(float(v))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    return f"{q:.{places}f}"


def f2(v: float | None) -> str:
    return _round(v, 2)


def f3(v: float | None) -> str:
    return _round(v, 3)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


# ------------------------------------------------------------------ loading


def load_traces(cfg: RunConfig) -> WeeklyTraceSet:
    if cfg.data_path is not None:
        path = Path(cfg.data_path)
        if not path.is_file():
            raise DataError(f"data file not found: {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            first = fh.readline().strip()
            fh.seek(0)
            if tuple(first.split(",")) == CACHE_HEADER:
                return read_trace_cache(fh, cfg.baselines)
            return normalize(fill_gaps(parse_records(fh)), cfg.baselines)
    if cfg.synth is not None:
        return synthesize_year(cfg.synth, cfg.seed, cfg.baselines)
    raise DataError("no trace data: set [data] path or --data, or [synth] / --seed")


def _array_path(value: str, which: str) -> Path:
    return fixtures.path(f"reference_{which}.csv") if value == REFERENCE else Path(value)


def load_grid_file(value: str, which: str) -> EfficiencyGrid:
    path = _array_path(value, which)
    if not path.is_file():
        raise DataError(f"array file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        h, w, s, arr = read_array_csv(fh)
    return EfficiencyGrid(h, w, s, **{which: arr})


def load_planning_ise(value: str | None, from_array: str) -> dict:
    if value is None and from_array == REFERENCE:
        return fixtures.reference_planning_ise()
    if value is None:
        raise DataError("--from-array needs --planning-ise (ISE values cannot come from an array)")
    path = fixtures.path("reference_planning.csv") if value == REFERENCE else Path(value)
    if not path.is_file():
        raise DataError(f"planning ISE file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        return read_planning_ise(fh)


def _planning(args, cfg: RunConfig, traces: WeeklyTraceSet | None):
    if args.from_array:
        grid = load_grid_file(args.from_array, "iwe")
        ise = load_planning_ise(args.planning_ise, args.from_array)
        return build_planning_table(grid, cfg.targets, ise_values=ise)
    grid = build_grid(traces, cfg.hdrm_axis, cfg.wm_axis, cfg.sm_axis, cfg.delta_wm, cfg.workers)
    return build_planning_table(grid, cfg.targets, traces=traces, delta_sm=cfg.delta_sm)


def _lookup(args, cfg: RunConfig, traces: WeeklyTraceSet | None) -> LookupTable:
    planning = _planning(args, cfg, traces)
    return build_lookup_table(planning, traces, cfg.lookup_hdrms, cfg.targets, cfg.delta_wm, cfg.delta_sm)


def _scenario_arg(args, cfg: RunConfig) -> Scenario:
    return Scenario(
        args.hdrm if args.hdrm is not None else cfg.dynamics_hdrm,
        args.wm if args.wm is not None else cfg.dynamics_wm,
        args.sm if args.sm is not None else cfg.dynamics_sm,
    )


# ----------------------------------------------------------------- commands


def cmd_ingest(args, cfg: RunConfig, out: Outputs) -> list[str]:
    if cfg.data_path is None:
        raise DataError("ingest needs a data file (--data or [data] path)")
    path = Path(cfg.data_path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        records = parse_records(fh)
    filled = fill_gaps(records)
    traces = normalize(filled, cfg.baselines)
    out.write("traces.csv", _capture(lambda b: write_trace_cache(traces, b)))
    return [
        f"- records parsed: {len(records)}",
        f"- slots filled by interpolation: {len(filled) - len(records)}",
        f"- records dropped after 52 weeks: {len(filled) - 52 * 2016}",
        f"- year starts: {traces.start.isoformat() if traces.start else 'unknown'}",
        "- wrote traces.csv",
    ]


def cmd_synth(args, cfg: RunConfig, out: Outputs) -> list[str]:
    spec = cfg.synth or SynthSpec()
    traces = synthesize_year(spec, cfg.seed, cfg.baselines)
    records = traces_to_records(traces, args.demand, args.nuclear)
    out.write("synthetic_year.csv", _capture(lambda b: write_records(records, b)))
    out.write("traces.csv", _capture(lambda b: write_trace_cache(traces, b)))
    return [f"- seed: {cfg.seed}", f"- records: {len(records)}", "- wrote synthetic_year.csv, traces.csv"]


def cmd_eval(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = load_traces(cfg)
    sc = _scenario_arg(args, cfg)
    res = evaluate(traces, sc)
    rows = [
        ("quantity", "value"),
        ("hdrm", f2(sc.hdrm)),
        ("wm", f3(sc.wm)),
        ("sm", f3(sc.sm)),
        ("available", f2(res.available)),
        ("accommodated", f2(res.accommodated)),
        ("curtailed", f2(res.curtailed)),
        ("dispatchable", f2(res.dispatchable)),
    ]
    text = _csv_text(rows)
    out.write("eval.csv", text)
    out.write(
        "eval_weekly.csv",
        _csv_text([("week", "accommodated")] + [(i + 1, f2(v)) for i, v in enumerate(res.weekly_accommodated)]),
    )
    print(text, end="")
    return [f"- {k}: {v}" for k, v in rows[1:]]


def cmd_efficiency(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = load_traces(cfg)
    sc = _scenario_arg(args, cfg)
    pt = efficiency_point(traces, sc, cfg.delta_wm, cfg.delta_sm)
    rows = [
        ("hdrm", "wm", "sm", "iwe", "ise", "delta_wm", "delta_sm"),
        (f2(sc.hdrm), f3(sc.wm), f3(sc.sm), f3(pt.iwe), f3(pt.ise), cfg.delta_wm, cfg.delta_sm),
    ]
    text = _csv_text(rows)
    out.write("efficiency.csv", text)
    print(text, end="")
    return [f"- IWE {f3(pt.iwe)}, ISE {f3(pt.ise)} at hdrm={sc.hdrm}, wm={sc.wm}, sm={sc.sm}"]


def cmd_sweep(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = load_traces(cfg)
    grid = build_grid(traces, cfg.hdrm_axis, cfg.wm_axis, cfg.sm_axis, cfg.delta_wm, cfg.workers)
    out.write("gw_ws.csv", _capture(lambda b: write_array_csv(grid, "gw_ws", b)))
    out.write("iwe.csv", _capture(lambda b: write_array_csv(grid, "iwe", b)))
    n = grid.gw_ws.size
    return [f"- lattice points: {n}", "- wrote gw_ws.csv, iwe.csv"]


def cmd_plan(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = None if args.from_array else load_traces(cfg)
    planning = _planning(args, cfg, traces)
    out.write("planning.csv", _capture(lambda b: write_planning_csv(planning, b)))
    missing = [c for c in planning.cells.values() if not c.available]
    return [f"- cells: {len(planning.cells)}, unavailable: {len(missing)}", "- wrote planning.csv"]


def cmd_lookup(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = None if args.from_array else load_traces(cfg)
    planning = _planning(args, cfg, traces)
    lookup = build_lookup_table(planning, traces, cfg.lookup_hdrms, cfg.targets, cfg.delta_wm, cfg.delta_sm)
    out.write("planning.csv", _capture(lambda b: write_planning_csv(planning, b)))
    text = _capture(lambda b: write_lookup_csv(lookup, b))
    out.write("lookup.csv", text)
    print(text, end="")
    return ["- wrote planning.csv, lookup.csv"]


def cmd_scenario(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = None if args.from_array else load_traces(cfg)
    source = grid_source(load_grid_file(args.from_array, "gw_ws")) if args.from_array else model_source(traces)

    lookup: LookupTable | None = None
    if any(s.wm is None or s.sm is None for s in cfg.scenarios):
        if args.lookup:
            with open(args.lookup, newline="", encoding="utf-8") as fh:
                lookup = read_lookup_csv(fh)
        elif args.from_array and args.from_array != REFERENCE:
            raise DataError("target-based scenarios in array mode need --lookup")
        else:
            pipeline_args = argparse.Namespace(
                from_array=args.from_array, planning_ise=None
            )
            lookup = _lookup(pipeline_args, cfg, traces)

    reports = []
    for spec in cfg.scenarios:
        wm, sm = spec.wm, spec.sm
        if wm is None or sm is None:
            wm, sm = lookup_point(lookup, spec.target, spec.hdrm)
        acc = spec.accommodated if spec.accommodated is not None else source
        reports.append(
            analyze_scenario(
                spec.hdrm, wm, sm, acc, cfg.emissions, spec.label, spec.target, traces, cfg.delta_wm
            )
        )
    header = (
        "scenario", "iwe_ise", "hdrm", "wm", "gw_wind", "sm", "gw_solar", "available",
        "accommodated", "curtailed", "dispatchable", "emissions", "iwe", "ise",
    )  # fmt: skip
    rows = [header] + [
        (
            r.label, f3(r.target), f2(r.hdrm), f3(r.wm), f2(r.gw_wind), f3(r.sm), f2(r.gw_solar),
            f2(r.available), f2(r.accommodated), f2(r.curtailed), f2(r.dispatchable),
            f2(r.emissions), f3(r.iwe), f3(r.ise),
        )  # fmt: skip
        for r in reports
    ]
    out.write("scenarios.csv", _csv_text(rows))
    ordered = sorted(reports, key=lambda r: r.available)
    steps = decarb_ladder(ordered) if len(ordered) > 1 else []
    ladder = [("between", "reduction", "added_generation", "efficiency")] + [
        (f"{s.from_label} & {s.to_label}", f2(s.emission_reduction), f2(s.added_generation), f2(s.efficiency))
        for s in steps
    ]
    out.write("ladder.csv", _csv_text(ladder))
    return [f"- {r.label}: emissions {f2(r.emissions)} Mt/yr, dispatchable {f2(r.dispatchable)} GW" for r in reports]


def cmd_dynamics(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = load_traces(cfg)
    sc = _scenario_arg(args, cfg)
    weeks = analyze_year(traces, sc)

    def when(slot: int) -> str:
        t = traces.slot_time(slot)
        return t.strftime("%Y-%m-%dT%H:%M:%SZ") if t else f"{slot * SLOT_HOURS:.4f}h"

    rows = [(
        "week", "mean_deficit", "max_deficit", "mean_excess", "max_excess", "deficit_energy",
        "excess_energy", "max_down_slew", "slew_start", "slew_end",
    )]  # fmt: skip
    for d in weeks:
        rows.append((
            d.week, f2(d.mean_deficit), f2(d.max_deficit), f2(d.mean_excess), f2(d.max_excess),
            f2(d.deficit_energy), f2(d.excess_energy), f2(d.max_down_slew),
            when(d.slew_window[0]), when(d.slew_window[1]),
        ))  # fmt: skip
    out.write("weekly_dynamics.csv", _csv_text(rows))

    for w in args.plot_weeks or cfg.plot_weeks:
        s = per_slot_series(traces, sc, w)
        plot = [("time", "available", "hdrm", "accommodated", "deficit", "excess")]
        for i in range(len(s)):
            plot.append((
                when(s.first_slot + i), f2(s.available[i]), f2(sc.hdrm), f2(s.accommodated[i]),
                f2(s.deficit[i]), f2(s.curtailed[i]),
            ))  # fmt: skip
        out.write(f"slots_week{w:02d}.csv", _csv_text(plot))

    worst = max(weeks, key=lambda d: d.deficit_energy)
    steepest = max(weeks, key=lambda d: d.max_down_slew)
    annual = evaluate(traces, sc)
    cover = storage_adequacy(worst.deficit_energy, cfg.storage)
    lines = [
        f"- scenario: hdrm={sc.hdrm}, wm={sc.wm}, sm={sc.sm}",
        f"- worst deficit week: {worst.week} ({f2(worst.deficit_energy)} GWh, mean {f2(worst.mean_deficit)} GW)",
        f"- peak deficit: {f2(max(d.max_deficit for d in weeks))} GW; "
        f"prudent reserve {prudent_reserve(max(d.max_deficit for d in weeks)):.0f} GW",
        f"- steepest combined fall: {f2(steepest.max_down_slew)} GW/h in week {steepest.week}",
        f"- slew estimate from annual available {f2(annual.available)} GW: "
        f"{f2(mackay_slew_estimate(annual.available))} GW/h",
    ]
    if cover.applicable:
        lines.append(f"- storage coverage of the worst week: total {f3(cover.total)}")
        lines += [f"  - {k}: {f3(v)}" for k, v in cover.per_source.items()]
    else:
        lines.append("- storage coverage: not applicable (no deficit)")
    return lines


def cmd_figure2(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = load_traces(cfg)
    step = args.wm_step
    if not step > 0:
        raise ValueError("--wm-step must be positive")
    n = int(round((args.wm_max - args.wm_min) / step))
    wms = [args.wm_min + i * step for i in range(n + 1)]
    rows = iwe_curves(traces, _floats(args.hdrm_list), _floats(args.sm_list), wms, cfg.delta_wm)
    out.write(
        "figure2.csv",
        _csv_text([("hdrm", "sm", "wm", "iwe")] + [(f2(h), f3(s), f3(w), f3(i)) for h, s, w, i in rows]),
    )
    return [f"- curves: {len(rows) // len(wms)}, points per curve: {len(wms)}"]


def cmd_figure3(args, cfg: RunConfig, out: Outputs) -> list[str]:
    traces = None if args.from_array else load_traces(cfg)
    lookup = _lookup(args, cfg, traces)
    rows = [("target", "hdrm", "wm", "sm", "kind")]
    for t in lookup.targets:
        for e in lookup.sorted_column(t):
            rows.append((f3(t), f2(e.hdrm), f3(e.wm), f3(e.sm), e.kind))
    out.write("figure3.csv", _csv_text(rows))
    return [f"- IWE=ISE={t}: max residual from a straight line {linearity_residual(lookup, t):.4f}" for t in lookup.targets]


COMMANDS: dict[str, Callable] = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "efficiency": cmd_efficiency,
    "sweep": cmd_sweep,
    "plan": cmd_plan,
    "lookup": cmd_lookup,
    "scenario": cmd_scenario,
    "dynamics": cmd_dynamics,
    "figure2": cmd_figure2,
    "figure3": cmd_figure3,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curtailplan", description="Wind/solar curtailment and investment planning tables.")
    parser.add_argument("--config", help="key=value config file with sections")
    parser.add_argument("--out", help="output directory (default from config, else ./out)")
    parser.add_argument("--data", help="raw 5-minute CSV or normalised trace cache")
    parser.add_argument("--seed", type=int, help="use a synthetic year with this seed")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def scenario_opts(p):
        p.add_argument("--hdrm", type=float)
        p.add_argument("--wm", type=float)
        p.add_argument("--sm", type=float)

    def array_opts(p, which):
        p.add_argument("--from-array", metavar="FILE", help=f"{which} array CSV, or 'reference' for the shipped fixture")

    p = sub.add_parser("ingest", help="validate and cache normalised traces")
    p = sub.add_parser("synth", help="generate a synthetic year")
    p.add_argument("--demand", type=float, default=30.0, help="flat demand column (GW)")
    p.add_argument("--nuclear", type=float, default=4.0, help="flat nuclear column (GW)")
    scenario_opts(sub.add_parser("eval", help="evaluate one scenario"))
    scenario_opts(sub.add_parser("efficiency", help="IWE and ISE at one scenario"))
    sub.add_parser("sweep", help="build and export the GW w+s and IWE arrays")
    for name in ("plan", "lookup", "figure3"):
        p = sub.add_parser(name, help={"plan": "planning table", "lookup": "lookup tables",
                                        "figure3": "wm-vs-hdrm line data"}[name])  # fmt: skip
        array_opts(p, "IWE")
        p.add_argument("--planning-ise", metavar="FILE", help="planning CSV with ISE values (array mode)")
    p = sub.add_parser("scenario", help="emissions table and decarbonisation ladder")
    array_opts(p, "GW w+s")
    p.add_argument("--lookup", metavar="FILE", help="lookup CSV for target-based scenarios")
    p = sub.add_parser("dynamics", help="weekly dynamics reports")
    scenario_opts(p)
    p.add_argument("--plot-weeks", type=lambda s: [int(x) for x in s.split(",")], help="e.g. 3,24,52")
    p = sub.add_parser("figure2", help="IWE-vs-wm curve data")
    p.add_argument("--hdrm-list", default="30,40,50,60")
    p.add_argument("--sm-list", default="0,2,4,6,8")
    p.add_argument("--wm-min", type=float, default=1.0)
    p.add_argument("--wm-max", type=float, default=10.0)
    p.add_argument("--wm-step", type=float, default=0.25)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(
            cfg,
            data_path=Path(args.data) if args.data else None,
            seed=args.seed,
            out_dir=Path(args.out) if args.out else None,
        )
    except ConfigError as exc:
        print(f"curtailplan: config error: {exc}", file=sys.stderr)
        return 1

    out = Outputs(cfg.out_dir)
    try:
        lines = COMMANDS[args.command](args, cfg, out)
        out.write(f"{args.command}.md", f"# {args.command}\n\n" + "\n".join(lines) + "\n")
    except ConfigError as exc:
        out.rollback()
        print(f"curtailplan: config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        out.rollback()
        print(f"curtailplan: data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # RangeError and numeric precondition failures
        out.rollback()
        print(f"curtailplan: range error: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
