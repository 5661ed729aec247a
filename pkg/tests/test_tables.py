import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import RegularGridInterpolator

from curtailplan import fixtures
from curtailplan.efficiency import incremental_solar_efficiency
from curtailplan.errors import DataError, RangeError
from curtailplan.model import Scenario, accommodated
from curtailplan.tables import (
    EfficiencyGrid,
    LookupEntry,
    LookupTable,
    PlanningCell,
    PlanningTable,
    StraddlePair,
    build_grid,
    build_lookup_table,
    build_planning_table,
    find_straddle,
    hdrm_for_wind,
    interp_gw_ws,
    iwe_curves,
    linearity_residual,
    lookup_entry,
    lookup_point,
    read_array_csv,
    read_lookup_csv,
    read_planning_ise,
    wm_for_target_iwe,
    write_array_csv,
    write_lookup_csv,
    write_planning_csv,
)


@pytest.fixture(scope="module")
def synth_grid(synth_traces):
    return build_grid(synth_traces)


@pytest.fixture(scope="module")
def synth_planning(synth_traces, synth_grid):
    return build_planning_table(synth_grid, traces=synth_traces)


@pytest.fixture(scope="module")
def synth_lookup(synth_traces, synth_planning):
    return build_lookup_table(synth_planning, synth_traces)


@pytest.fixture(scope="module")
def ref_grid():
    return fixtures.reference_grid()


# ------------------------------------------------------------------ grid


def test_default_grid_shape(synth_grid):
    assert synth_grid.shape == (3, 10, 5)
    assert synth_grid.gw_ws.size == 150 and synth_grid.iwe.size == 150


def test_single_point_grid_equals_direct_call(synth_traces):
    g = build_grid(synth_traces, [45.0], [7.0], [3.0])
    assert g.gw_ws.shape == (1, 1, 1)
    assert g.gw_ws[0, 0, 0] == accommodated(synth_traces, Scenario(45, 7, 3))


def test_constant_traces_closed_form(constant_traces):
    g = build_grid(constant_traces)
    h, w, s = np.meshgrid(g.hdrm_axis, g.wm_axis, g.sm_axis, indexing="ij")
    np.testing.assert_allclose(g.gw_ws, np.minimum(6.045 * w + 1.16 * s, h), rtol=0, atol=1e-9)


def test_grid_monotone_along_wm(synth_grid):
    assert np.all(np.diff(synth_grid.gw_ws, axis=1) >= 0)
    assert np.all(np.diff(synth_grid.iwe, axis=1) <= 1e-12)


def test_parallel_grid_identical(synth_traces, synth_grid):
    par = build_grid(synth_traces, workers=4)
    assert par.gw_ws.tobytes() == synth_grid.gw_ws.tobytes()
    assert par.iwe.tobytes() == synth_grid.iwe.tobytes()


@pytest.mark.parametrize("axes", [dict(hdrm_axis=(40, 30)), dict(wm_axis=(1, 1)), dict(sm_axis=())])
def test_grid_axes_must_increase(synth_traces, axes):
    with pytest.raises(ValueError):
        build_grid(synth_traces, **axes)


def test_reference_fixture_monotone(ref_grid):
    assert ref_grid.shape == (3, 10, 5)
    assert np.all(np.diff(ref_grid.gw_ws, axis=1) >= 0)
    assert np.all(np.diff(ref_grid.iwe, axis=1) <= 0)


# --------------------------------------------------------- wm_for_target


def test_wm_for_target_reference_cell(ref_grid):
    # 0.509 at wm 5, 0.379 at wm 6
    wm = wm_for_target_iwe(ref_grid.iwe_column(50, 8), ref_grid.wm_axis, 0.5)
    assert wm == pytest.approx(5 + 0.009 / 0.130, abs=1e-12)
    assert wm == pytest.approx(5.068, abs=2e-3)


def test_wm_for_target_exact_grid_value():
    assert wm_for_target_iwe([0.9, 0.7, 0.4], [1, 2, 3], 0.7) == 2.0


def test_wm_for_target_linear_column():
    wm = np.arange(1.0, 11.0)
    assert wm_for_target_iwe(1 - 0.1 * wm, wm, 0.5) == 5.0


def test_wm_for_target_first_straddle_wins():
    # non-monotone column with two crossings of 0.5
    assert wm_for_target_iwe([0.8, 0.4, 0.6, 0.2], [1, 2, 3, 4], 0.5) == pytest.approx(1.75)


@pytest.mark.parametrize("target", [0.95, 0.05])
def test_wm_for_target_out_of_range(target):
    with pytest.raises(RangeError, match=r"achievable range \[0\.100, 0\.900\]"):
        wm_for_target_iwe([0.9, 0.5, 0.1], [1, 2, 3], target)


@settings(max_examples=50, deadline=None)
@given(
    col=st.lists(st.floats(0, 1), min_size=2, max_size=12).map(lambda v: sorted(v, reverse=True)),
    frac=st.floats(0, 1),
)
def test_wm_for_target_lands_in_straddle(col, frac):
    axis = [float(i) for i in range(1, len(col) + 1)]
    target = col[-1] + frac * (col[0] - col[-1])
    wm = wm_for_target_iwe(col, axis, target)
    assert axis[0] <= wm <= axis[-1]
    # the column, linearly interpolated at wm_star, reads back the target
    assert np.interp(wm, axis, col) == pytest.approx(target, abs=1e-9)


# --------------------------------------------------------------- planning


def test_planning_constant_traces_kink(constant_traces):
    g = build_grid(constant_traces)
    p = build_planning_table(g, traces=constant_traces)
    # hdrm 30, sm 0: IWE is 1 up to wm 4 (24.18 GW) and 0 from wm 5 (30.2 GW)
    for t in (0.7, 0.5, 0.3):
        assert p.cell(30, t, 0).wm_star == pytest.approx(4 + (1 - t), abs=1e-9)
    # hdrm 40, sm 4: 6.045*wm + 4.64 crosses 40 between wm 5 and 6
    assert p.cell(40, 0.5, 4).wm_star == pytest.approx(5.5, abs=1e-9)


def test_planning_cells_bounded(synth_planning, synth_grid):
    for c in synth_planning.cells.values():
        if c.available:
            assert 0 <= c.ise <= 1 + 1e-9
            assert synth_grid.wm_axis[0] <= c.wm_star <= synth_grid.wm_axis[-1]


def test_planning_ise_matches_model(synth_traces, synth_planning):
    c = synth_planning.cell(40, 0.5, 4)
    assert c.ise == incremental_solar_efficiency(synth_traces, Scenario(40, c.wm_star, 4))


def test_planning_wm_star_ordered_by_target(synth_planning):
    for h in synth_planning.hdrm_axis:
        for s in synth_planning.sm_axis:
            cells = [synth_planning.cell(h, t, s) for t in (0.7, 0.5, 0.3)]
            if all(c.available for c in cells):
                assert cells[0].wm_star < cells[1].wm_star < cells[2].wm_star


def test_planning_unreachable_cell_marked():
    iwe = np.full((1, 3, 2), 0.9) - np.array([0, 0.3, 0.6])[None, :, None]
    g = EfficiencyGrid((40,), (1, 2, 3), (0, 2), iwe=iwe)
    p = build_planning_table(g, targets=(0.999, 0.5), ise_values={(40.0, 0.5, 0.0): 0.6, (40.0, 0.5, 2.0): 0.4})
    assert not p.cell(40, 0.999, 0).available
    assert "achievable" in p.cell(40, 0.999, 0).note
    assert p.cell(40, 0.5, 2).available


def test_planning_needs_one_source(ref_grid, synth_traces):
    with pytest.raises(ValueError):
        build_planning_table(ref_grid)
    with pytest.raises(ValueError):
        build_planning_table(ref_grid, traces=synth_traces, ise_values={})


def test_fixture_planning_wm_near_reference(ref_grid):
    p = build_planning_table(ref_grid, ise_values=fixtures.reference_planning_ise())
    for key, expected in fixtures.reference_planning_wm().items():
        assert p.cell(*key).wm_star == pytest.approx(expected, abs=0.015)


# ----------------------------------------------------------- lookup_entry


def test_lookup_entry_reference_example():
    wm, sm = lookup_entry(StraddlePair(4, 6, 5.572, 5.303, 0.632, 0.490), 0.5)
    assert wm == pytest.approx(5.322, abs=1e-3)
    assert sm == pytest.approx(5.859, abs=1e-3)


def test_lookup_entry_endpoints_exact():
    p = StraddlePair(4, 6, 5.572, 5.303, 0.632, 0.490)
    assert lookup_entry(p, 0.490) == (5.303, 6.0)
    assert lookup_entry(p, 0.632) == (5.572, 4.0)


def test_lookup_entry_errors():
    with pytest.raises(RangeError, match="outside"):
        lookup_entry(StraddlePair(4, 6, 5.5, 5.3, 0.6, 0.5), 0.7)
    with pytest.raises(RangeError, match="degenerate"):
        lookup_entry(StraddlePair(4, 6, 5.5, 5.3, 0.5, 0.5), 0.5)


@settings(max_examples=100, deadline=None)
@given(
    ise_hi=st.floats(0.01, 1), gap=st.floats(0.001, 1), frac=st.floats(0, 1),
    wm_n=st.floats(0, 12), wm_n1=st.floats(0, 12),
)
def test_lookup_entry_matches_two_equation_form(ise_hi, gap, frac, wm_n, wm_n1):
    ise_lo = ise_hi - gap
    target = min(ise_lo + frac * gap, ise_hi)
    p = StraddlePair(4, 6, wm_n, wm_n1, ise_hi, ise_lo)
    wm, sm = lookup_entry(p, target)
    ratio = (target - ise_lo) / (ise_hi - ise_lo)
    assert sm == pytest.approx(6 - (6 - 4) * ratio, abs=1e-9)
    assert wm == pytest.approx(wm_n1 + (wm_n - wm_n1) * ratio, abs=1e-9)
    assert 4 <= sm <= 6


def test_find_straddle_reports_range():
    cells = {(40.0, 0.5, s): PlanningCell(40, 0.5, s, 5.0, ise) for s, ise in ((0.0, 0.9), (2.0, 0.8))}
    p = PlanningTable((40.0,), (0.0, 2.0), (0.5,), cells)
    with pytest.raises(RangeError, match=r"\[0\.800, 0\.900\]"):
        find_straddle(p, 40, 0.5)


# ---------------------------------------------------------- lookup table


def _linear_planning(slope_wm=0.1, slope_sm=0.12):
    """Planning table whose straddles give wm, sm linear in hdrm."""
    cells = {}
    for h in (30.0, 40.0, 50.0):
        for s, ise in ((0.0, 0.9), (2.0, 0.7), (4.0, 0.6), (6.0, 0.4), (8.0, 0.2)):
            cells[(h, 0.5, s)] = PlanningCell(h, 0.5, s, slope_wm * h + 0.5 - 0.01 * s, ise)
    return PlanningTable((30.0, 40.0, 50.0), (0.0, 2.0, 4.0, 6.0, 8.0), (0.5,), cells)


def test_lookup_structure_and_kinds():
    lk = build_lookup_table(_linear_planning())
    col = lk.column(0.5)
    assert [e.hdrm for e in col] == [30, 40, 50, 35, 45, 55, 60]
    assert [e.kind for e in col] == ["base"] * 3 + ["interpolated"] * 2 + ["extrapolated"] * 2
    assert all(e.iwe is None for e in col)
    by = {e.hdrm: e for e in col}
    assert by[35].wm == pytest.approx((by[30].wm + by[40].wm) / 2)
    assert by[60].wm == pytest.approx(by[50].wm + (by[50].wm - by[40].wm))
    assert by[60].sm == pytest.approx(by[50].sm + (by[50].sm - by[40].sm))
    # 55 sits midway between 50 and the extrapolated 60
    assert by[55].wm == pytest.approx((by[50].wm + by[60].wm) / 2)


def test_lookup_from_reference_fixture_cell():
    p = build_planning_table(fixtures.reference_grid(), ise_values=fixtures.reference_planning_ise())
    e = build_lookup_table(p).entry(0.5, 50)
    assert e.wm == pytest.approx(5.322, abs=0.002)
    assert e.sm == pytest.approx(5.859, abs=0.002)


def test_lookup_missing_base_column():
    p = _linear_planning()
    cells = {k: v for k, v in p.cells.items() if k[0] != 40.0}
    with pytest.raises(KeyError):
        build_lookup_table(PlanningTable(p.hdrm_axis, p.sm_axis, p.targets, cells))
    with pytest.raises(DataError):
        build_lookup_table(p, targets=(0.3,))


def test_synthetic_round_trip(synth_lookup):
    for t in synth_lookup.targets:
        for e in synth_lookup.column(t):
            assert abs(e.iwe - t) <= 0.03
            assert abs(e.ise - t) <= 0.03


def test_synthetic_linearity(synth_lookup):
    for t in synth_lookup.targets:
        assert linearity_residual(synth_lookup, t) <= 0.05


def test_lookup_point_and_inverse():
    lk = build_lookup_table(_linear_planning())
    wm, sm = lookup_point(lk, 0.5, 42.0)
    assert hdrm_for_wind(lk, 0.5, wm) == pytest.approx(42.0, abs=1e-9)
    with pytest.raises(RangeError):
        lookup_point(lk, 0.5, 65)


def test_hdrm_for_wind_reference_table():
    lk = fixtures.reference_lookup()
    assert hdrm_for_wind(lk, 0.5, 4.466) == pytest.approx(41.92, abs=0.02)
    assert hdrm_for_wind(lk, 0.5, lk.entry(0.5, 40).wm) == 40.0
    with pytest.raises(RangeError, match="outside the lookup range"):
        hdrm_for_wind(lk, 0.5, 20.0)


def test_hdrm_for_wind_linear_inverse():
    entries = tuple(LookupEntry(h, 0.1 * h + 1, 0.0) for h in (30.0, 40.0, 50.0, 60.0))
    lk = LookupTable((0.5,), {0.5: entries})
    assert hdrm_for_wind(lk, 0.5, 0.1 * 47.3 + 1) == pytest.approx(47.3, abs=1e-12)


# ------------------------------------------------------------- trilinear


def test_interp_lattice_points_exact(ref_grid):
    for i, h in enumerate(ref_grid.hdrm_axis):
        for j, w in enumerate(ref_grid.wm_axis):
            for k, s in enumerate(ref_grid.sm_axis):
                assert interp_gw_ws(ref_grid, Scenario(h, w, s)) == ref_grid.gw_ws[i, j, k]


def test_interp_matches_scipy_oracle(ref_grid):
    oracle = RegularGridInterpolator(
        (ref_grid.hdrm_axis, ref_grid.wm_axis, ref_grid.sm_axis), ref_grid.gw_ws,
        bounds_error=False, fill_value=None,
    )
    rng = np.random.default_rng(4)
    for _ in range(300):
        pt = (rng.uniform(30, 60), rng.uniform(1, 10), rng.uniform(0, 8))
        assert interp_gw_ws(ref_grid, Scenario(*pt)) == pytest.approx(float(oracle([pt])[0]), abs=1e-9)


def test_interp_exact_in_linear_region(constant_traces):
    g = build_grid(constant_traces)
    # below every headroom the data are linear in wm and sm
    sc = Scenario(40, 1.37, 3.3)
    assert interp_gw_ws(g, sc) == pytest.approx(6.045 * 1.37 + 1.16 * 3.3, abs=1e-9)


def test_interp_reference_scenario_c(ref_grid):
    assert interp_gw_ws(ref_grid, Scenario(48.5, 5.16, 5.69)) == pytest.approx(33.77, abs=0.35)


@pytest.mark.parametrize("sc", [Scenario(40, 10.5, 2), Scenario(40, 5, 8.5), Scenario(25, 5, 2), Scenario(61, 5, 2)])
def test_interp_out_of_range(ref_grid, sc):
    with pytest.raises(RangeError):
        interp_gw_ws(ref_grid, sc)


def test_interp_needs_gw_array():
    g = EfficiencyGrid((30, 40), (1, 2), (0, 2), iwe=np.zeros((2, 2, 2)))
    with pytest.raises(DataError):
        interp_gw_ws(g, Scenario(35, 1.5, 1))


# -------------------------------------------------------------- figures


def test_iwe_curves_rows(synth_traces, synth_grid):
    rows = iwe_curves(synth_traces, [40.0], [4.0], [3.0, 6.0])
    assert [r[:3] for r in rows] == [(40.0, 4.0, 3.0), (40.0, 4.0, 6.0)]
    assert rows[0][3] == pytest.approx(synth_grid.iwe[1, 2, 2])


# ------------------------------------------------------------------ I/O


def test_array_csv_layout_and_round_trip(synth_grid):
    buf = io.StringIO()
    write_array_csv(synth_grid, "iwe", buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "hdrm,wm,sm=0,sm=2,sm=4,sm=6,sm=8"
    assert len(lines) == 31
    assert lines[1].startswith("30,1,")
    assert all(len(c.split(".")[1]) == 3 for c in lines[1].split(",")[2:])
    h, w, s, arr = read_array_csv(io.StringIO(buf.getvalue()))
    assert (h, w, s) == (synth_grid.hdrm_axis, synth_grid.wm_axis, synth_grid.sm_axis)
    np.testing.assert_allclose(arr, synth_grid.iwe, atol=5e-4)


@pytest.mark.parametrize(
    "text", ["a,b\n", "hdrm,wm,sm=x\n", "hdrm,wm,sm=0\n30,1,abc\n", "hdrm,wm,sm=0\n30,1\n", "hdrm,wm,sm=0\n30,1,1\n40,2,1\n"]
)
def test_array_csv_rejects_malformed(text):
    with pytest.raises(DataError):
        read_array_csv(io.StringIO(text))


def test_planning_csv_round_trip(synth_planning):
    buf = io.StringIO()
    write_planning_csv(synth_planning, buf)
    ise = read_planning_ise(io.StringIO(buf.getvalue()))
    c = synth_planning.cell(40, 0.5, 4)
    assert ise[(40.0, 0.5, 4.0)] == pytest.approx(c.ise, abs=5e-4)


def test_lookup_csv_round_trip(synth_lookup):
    buf = io.StringIO()
    write_lookup_csv(synth_lookup, buf)
    text = buf.getvalue()
    assert text.splitlines()[:2] == ["IWE=ISE=0.7", "Hdrm,30,40,50,35,45,55,60"]
    back = read_lookup_csv(io.StringIO(text))
    assert back.targets == synth_lookup.targets
    for t in back.targets:
        for a, b in zip(back.column(t), synth_lookup.column(t)):
            assert (a.hdrm, round(b.wm, 3), round(b.sm, 3)) == (b.hdrm, a.wm, a.sm)


def test_reference_lookup_fixture_shape():
    lk = fixtures.reference_lookup()
    assert set(lk.targets) == {0.3, 0.5, 0.7}
    assert [e.hdrm for e in lk.column(0.5)] == [30, 40, 50, 35, 45, 55, 60]
