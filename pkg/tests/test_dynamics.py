import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curtailplan.dynamics import (
    StorageLedger,
    analyze_week,
    analyze_year,
    detect_max_down_slew,
    mackay_slew_estimate,
    prudent_reserve,
    storage_adequacy,
)
from curtailplan.model import Scenario, SlotSeries, per_slot_series


def _constant(available, hdrm, hours):
    return SlotSeries.from_available(np.full(int(round(hours * 12)), available), hdrm)


def test_deficit_energy_ten_day_lull():
    wd = analyze_week(_constant(48.5 - 27.42, 48.5, 240))
    assert wd.deficit_energy == pytest.approx(6580.8, abs=1)
    assert wd.mean_deficit == pytest.approx(27.42)
    assert wd.excess_energy == 0


def test_excess_energy_week():
    wd = analyze_week(_constant(48.5 + 48.34, 48.5, 168))
    assert wd.excess_energy == pytest.approx(8121.1, abs=1)
    assert wd.span_hours == pytest.approx(168)


def test_series_at_headroom_is_quiet():
    wd = analyze_week(_constant(40.0, 40.0, 168))
    assert (wd.mean_deficit, wd.max_deficit, wd.mean_excess, wd.max_excess) == (0, 0, 0, 0)
    assert wd.deficit_energy == 0 and wd.excess_energy == 0 and wd.max_down_slew == 0


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        analyze_week(SlotSeries.from_available(np.array([]), 40.0))


def test_three_hour_ramp():
    # flat, then 86.1 -> 52.3 over 36 slots, then flat
    ramp = np.concatenate([np.full(24, 86.1), np.linspace(86.1, 52.3, 37), np.full(24, 52.3)])
    ev = detect_max_down_slew(ramp)
    assert ev.rate == pytest.approx(33.8 / 3, abs=0.01)
    assert ev.rate == pytest.approx(11.26, abs=0.05)
    assert ev.start >= 24 and ev.end <= 60


def test_forty_five_minute_drop():
    # steady fall of 18.68 GW over 9 slots, shallower either side
    series = np.concatenate([np.linspace(80, 75, 20), np.linspace(75, 75 - 18.68, 10)[1:], np.linspace(56.32, 50, 20)[1:]])
    ev = detect_max_down_slew(series)
    assert ev.rate == pytest.approx(24.9, abs=0.1)
    assert (ev.end - ev.start) * 5 <= 45


def test_constant_series_zero_rate():
    assert detect_max_down_slew(np.full(100, 7.0)).rate == 0.0


def test_rising_series_has_no_down_slew_but_has_up_slew():
    rise = np.linspace(0, 12, 13)
    assert detect_max_down_slew(rise).rate == 0.0
    assert detect_max_down_slew(rise, direction="up").rate == pytest.approx(12.0)
    with pytest.raises(ValueError):
        detect_max_down_slew(rise, direction="sideways")
    with pytest.raises(ValueError):
        detect_max_down_slew([1.0])


def test_window_bounds_respected():
    # a slow 10-hour decline: the best 4-hour window sees 0.4 of it
    fall = np.linspace(100, 0, 121)
    ev = detect_max_down_slew(fall)
    assert ev.rate == pytest.approx(10.0)
    assert (ev.end - ev.start) * 5 <= 240


def test_tie_goes_to_earliest_then_shortest():
    s = np.array([10.0, 9.0, 9.0, 8.0, 8.0])
    ev = detect_max_down_slew(s)
    assert (ev.start, ev.end) == (0, 1)


@settings(max_examples=60, deadline=None)
@given(
    slope=st.floats(0, 50), n=st.integers(2, 80), shift=st.floats(-100, 100),
    noise_seed=st.integers(0, 1000),
)
def test_slew_properties(slope, n, shift, noise_seed):
    line = 100 - slope * np.arange(n) / 12.0
    # a linear non-increasing series returns its slope
    assert detect_max_down_slew(line).rate == pytest.approx(slope, rel=1e-9, abs=1e-9)
    noisy = line + np.random.default_rng(noise_seed).normal(0, 1, n)
    a = detect_max_down_slew(noisy)
    b = detect_max_down_slew(noisy + shift)
    assert b.rate == pytest.approx(a.rate, rel=1e-9, abs=1e-9)


def test_mackay():
    assert mackay_slew_estimate(61.24) == pytest.approx(22.66, abs=0.01)
    assert mackay_slew_estimate(61.24) == pytest.approx(22.63, abs=0.1)
    assert mackay_slew_estimate(0) == 0
    assert mackay_slew_estimate(100) == pytest.approx(37.0)
    with pytest.raises(ValueError):
        mackay_slew_estimate(-1)


@pytest.mark.parametrize("peak, reserve", [(44.9, 50), (44.8, 50), (40.0, 40), (0.0, 0), (50.1, 60)])
def test_prudent_reserve(peak, reserve):
    assert prudent_reserve(peak) == reserve


def test_storage_adequacy():
    rep = storage_adequacy(6580)
    assert rep.per_source["grid_storage"] == pytest.approx(0.0213, abs=1e-4)
    assert rep.total == pytest.approx(0.246, abs=1e-3)
    assert StorageLedger().total == 1617
    none = storage_adequacy(0)
    assert not none.applicable and none.total is None
    assert all(v is None for v in none.per_source.values())
    with pytest.raises(ValueError):
        storage_adequacy(-1)
    with pytest.raises(ValueError):
        StorageLedger({"x": -1})


def test_analyze_year_invariants(synth_traces):
    sc = Scenario(48.5, 8.96, 6.1)
    weeks = analyze_year(synth_traces, sc)
    assert [w.week for w in weeks] == list(range(1, 53))
    for w in weeks:
        assert w.deficit_energy == pytest.approx(w.mean_deficit * w.span_hours, rel=1e-3)
        assert 0 <= w.max_deficit <= sc.hdrm
        assert w.deficit_energy >= 0 and w.excess_energy >= 0
    wk = weeks[2]
    series = per_slot_series(synth_traces, sc, 3)
    assert wk.max_excess == pytest.approx(max(series.available.max() - sc.hdrm, 0))
    assert 2 * 2016 <= wk.slew_window[0] < wk.slew_window[1] < 3 * 2016
