import math

import numpy as np
import pytest

from rfiqkd import (
    DriftKind,
    DriftModel,
    ParameterError,
    SecurityParams,
    SliceAccumulator,
    SystemParams,
    analyze_tallies,
    average_key_rate,
    baseline_original_rfi,
    decoy_bounds,
    eve_information,
    report_from_accumulators,
    run_validity,
    simulate_intervals,
    slice_c_value,
    slice_key_length,
)
from rfiqkd.analytic import expected_slice_accumulator
from rfiqkd.decoy import DecoyBounds
from rfiqkd.keyrate import format_summary, write_report

TWO_PI = 2.0 * math.pi
SIGNAL, DECOY, VACUUM = 0, 1, 2
XX, XY, YX, YY, ZZ = range(5)

EXACT = SecurityParams(n_sigma=0.0)

LOSSLESS = SystemParams(
    fiber_loss_db=0.0,
    receiver_loss_db=0.0,
    det_efficiency=1.0,
    dark_rate=0.0,
    visibility=1.0,
    error_floor=0.0,
)

# frozen from this implementation at the default operating point
STATIC_BASELINE_BPS = 646.9100593399738
STATIC_BASELINE_DURATION = 455.3032831289555


def model_slice(params, i, m=16, n_pulses=1e13 / 16):
    center = TWO_PI * i / m
    return expected_slice_accumulator(params, i, m, n_pulses, center, center)


def synthetic_bounds(e1, n1=1e6):
    """Hand-built bounds, for driving the key formula directly."""
    e1_arr = np.asarray(e1, dtype=float)
    return DecoyBounds(
        y1_lower=0.5,
        e1_upper=e1_arr,
        n1_lower_z=n1,
        q1_lower=0.1,
        y1_lower_pairs=np.full(5, 0.5),
        fold_signs=np.ones(5),
        flagged=False,
        inconsistent=False,
    )


@pytest.fixture(scope="module")
def drifting():
    params = SystemParams()
    drift = DriftModel(kind=DriftKind.LINEAR, rate_or_period=6.9e-3)
    return params, simulate_intervals(params, drift, 600.0, seed=9)


@pytest.fixture(scope="module")
def long_report():
    params = SystemParams()
    drift = DriftModel(kind=DriftKind.LINEAR, rate_or_period=6.9e-3)
    tallies = simulate_intervals(params, drift, 2000.0, seed=12)
    return analyze_tallies(tallies, params, SecurityParams()), params, tallies


@pytest.fixture(scope="module")
def short_report():
    params = SystemParams()
    tallies = simulate_intervals(params, DriftModel(), 400.0, seed=31)
    return analyze_tallies(tallies, params, SecurityParams())


class TestSliceCValue:
    def test_lossless_link_reaches_the_ceiling(self):
        acc = model_slice(LOSSLESS, 0)
        c = slice_c_value(acc, decoy_bounds(acc, LOSSLESS, EXACT))
        assert c.defined
        assert c.raw == 2.0
        assert c.clamped == 2.0

    def test_axis_slice_beats_quarter_slice(self):
        params = SystemParams()
        axis = model_slice(params, 0)
        quarter = model_slice(params, 2)
        c_axis = slice_c_value(axis, decoy_bounds(axis, params, EXACT))
        c_quarter = slice_c_value(quarter, decoy_bounds(quarter, params, EXACT))
        assert c_axis.clamped == pytest.approx(1.9074618615769803, rel=1e-12)
        assert c_quarter.clamped == pytest.approx(1.6459188583162478, rel=1e-12)
        assert c_axis.clamped > c_quarter.clamped

    def test_unphysical_bounds_are_clamped_not_hidden(self):
        acc = model_slice(SystemParams(), 0)
        c = slice_c_value(acc, synthetic_bounds(np.zeros(5)))
        assert c.raw == 4.0
        assert c.clamped == 2.0

    def test_empty_monitor_cell_means_undefined(self):
        acc = model_slice(SystemParams(), 0)
        acc.counts[SIGNAL, XY] = 0
        c = slice_c_value(acc, synthetic_bounds(np.zeros(5)))
        assert not c.defined
        assert c.clamped == 0.0

    def test_flagged_bounds_mean_undefined(self):
        params = SystemParams()
        acc = SliceAccumulator(slice_index=0, m=16)
        bounds = decoy_bounds(acc, params, EXACT)
        assert bounds.flagged
        assert not slice_c_value(acc, bounds).defined


class TestSliceKeyLength:
    def test_ideal_slice_keeps_every_single_photon_bit(self):
        acc = model_slice(LOSSLESS, 0)
        bounds = decoy_bounds(acc, LOSSLESS, EXACT)
        length = slice_key_length(acc, bounds, EXACT, LOSSLESS)
        assert length == bounds.n1_lower_z
        assert length > 0.0

    def test_flagged_slice_yields_nothing(self):
        params = SystemParams()
        acc = SliceAccumulator(slice_index=0, m=16)
        bounds = decoy_bounds(acc, params, EXACT)
        assert slice_key_length(acc, bounds, EXACT, params) == 0.0

    def test_half_error_bound_yields_nothing(self):
        params = SystemParams()
        acc = model_slice(params, 0)
        e1 = np.array([0.0, 0.0, 0.0, 0.0, 0.51])
        assert slice_key_length(acc, synthetic_bounds(e1), EXACT, params) == 0.0

    @pytest.mark.parametrize(
        "floors", [((0.001, 0.003), (0.003, 0.006), (0.006, 0.012), (0.012, 0.02))]
    )
    def test_noisier_floor_means_less_key(self, floors):
        def length_at(error_floor):
            p = SystemParams(error_floor=error_floor)
            acc = model_slice(p, 0)
            return slice_key_length(acc, decoy_bounds(acc, p, EXACT), EXACT, p)

        for lo, hi in floors:
            assert length_at(hi) < length_at(lo)

    def test_error_correction_cost_scales_with_f_ec(self):
        params = SystemParams()
        acc = model_slice(params, 0)
        bounds = decoy_bounds(acc, params, EXACT)
        cheap = slice_key_length(acc, bounds, SecurityParams(n_sigma=0.0, f_ec=1.0), params)
        costly = slice_key_length(acc, bounds, SecurityParams(n_sigma=0.0, f_ec=1.3), params)
        assert costly < cheap


class TestAverageKeyRate:
    def test_total_over_wall_time(self):
        params = SystemParams()
        tallies = simulate_intervals(params, DriftModel(), 400.0, seed=5)
        report = analyze_tallies(tallies, params, SecurityParams())
        assert report.average_rate_bps == pytest.approx(
            sum(s.key_length_bits for s in report.slices) / report.duration_s
        )
        assert average_key_rate(report.slices, report.duration_s) == pytest.approx(
            report.average_rate_bps
        )

    def test_domain(self):
        with pytest.raises(ParameterError):
            average_key_rate([], 0.0)


class TestRunValidity:
    def test_operating_point_is_inside_the_window(self):
        check = run_validity(SystemParams(), 16)
        assert check.slice_width == pytest.approx(TWO_PI / 16)
        assert check.slice_width_ok
        assert check.t_interval_ok
        assert check.ok

    def test_static_link_never_expires(self):
        check = run_validity(SystemParams(omega=0.0), 16)
        assert math.isinf(check.t_max)
        assert check.delta_theta_min == 0.0
        assert check.ok

    def test_fast_drift_outruns_the_sampling_interval(self):
        check = run_validity(SystemParams(omega=1.0), 16)
        assert check.t_max == pytest.approx(math.pi)
        assert not check.t_interval_ok
        assert not check.ok

    def test_fast_drift_on_dim_link_needs_wider_slices(self):
        params = SystemParams(fiber_loss_db=50.0, omega=0.5)
        check = run_validity(params, 256)
        assert check.delta_theta_min > check.slice_width
        assert not check.slice_width_ok


class TestBaseline:
    def test_merged_baseline_is_single_slice_analysis(self, drifting):
        params, tallies = drifting
        sec = SecurityParams()
        merged = baseline_original_rfi(tallies, params, sec)
        direct = analyze_tallies(tallies, params, sec, m=1)
        assert merged.m == 1
        assert merged.total_key_bits == direct.total_key_bits
        assert merged.average_rate_bps == direct.average_rate_bps

    def test_static_assumption_caps_the_session(self, drifting):
        params, tallies = drifting
        report = baseline_original_rfi(
            tallies, params, SecurityParams(), assume_static=True
        )
        assert report.duration_s == pytest.approx(STATIC_BASELINE_DURATION, abs=1e-9)
        assert report.average_rate_bps == pytest.approx(
            STATIC_BASELINE_BPS, rel=1e-12
        )


class TestReportAssembly:
    def test_aggregates_are_sums_of_slices(self, long_report):
        rep, params, tallies = long_report
        assert rep.m == 16
        assert rep.duration_s == pytest.approx(len(tallies) * params.t_interval)
        assert rep.total_key_bits == pytest.approx(
            sum(s.key_length_bits for s in rep.slices)
        )
        assert rep.average_rate_bps == pytest.approx(rep.total_key_bits / rep.duration_s)

    def test_slice_rates_use_slice_dwell_time(self, long_report):
        rep, params, _ = long_report
        for s in rep.slices:
            if s.n_intervals > 0:
                assert s.key_rate_bps == pytest.approx(
                    s.key_length_bits / (s.n_intervals * params.t_interval)
                )
            else:
                assert s.key_rate_bps == 0.0

    def test_interval_bookkeeping_is_conserved(self, long_report):
        rep, _, tallies = long_report
        assert sum(s.n_intervals for s in rep.slices) == len(tallies)

    def test_empty_slice_set_rejected(self):
        with pytest.raises(ParameterError):
            report_from_accumulators([], SystemParams(), SecurityParams(), 10.0)

    def test_eve_information_recorded_per_slice(self, long_report):
        rep, _, _ = long_report
        for s in rep.slices:
            if s.c_defined and s.e1_upper_z <= 0.5:
                assert s.i_e == pytest.approx(eve_information(s.c_value, s.e1_upper_z))
            else:
                assert s.i_e == 1.0

    def test_matches_manual_assembly(self, long_report):
        rep, params, tallies = long_report
        from rfiqkd import accumulate

        result = accumulate(tallies, 16)
        manual = report_from_accumulators(
            result.slices,
            params,
            SecurityParams(),
            len(tallies) * params.t_interval,
            n_degenerate=result.n_degenerate,
            n_clamped=result.n_clamped,
        )
        assert manual.total_key_bits == rep.total_key_bits
        assert manual.n_degenerate == rep.n_degenerate


class TestSummaryAndTable:
    def test_summary_lists_the_aggregates(self, short_report):
        text = format_summary(short_report)
        assert "slices: 16\n" in text
        assert f"total_key_bits: {short_report.total_key_bits!r}\n" in text
        assert f"average_rate_bps: {short_report.average_rate_bps!r}\n" in text
        assert "validity_ok: True\n" in text
        assert "slices_with_key:" in text

    def test_summary_names_best_and_worst_slices(self, short_report):
        text = format_summary(short_report)
        populated = [s for s in short_report.slices if s.key_length_bits > 0]
        if populated:
            best = max(populated, key=lambda s: s.key_rate_bps)
            assert f"best_slice: {best.slice_index}" in text

    def test_table_round_trips_the_key_columns(self, short_report, tmp_path):
        path = tmp_path / "report.csv"
        write_report(short_report, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# schema: rfiqkd-report-v1"
        comments = [ln for ln in lines if ln.startswith("#")]
        assert f"# total_key_bits: {short_report.total_key_bits!r}" in comments
        header_line = next(ln for ln in lines if not ln.startswith("#"))
        header = header_line.split(",")
        rows = [ln.split(",") for ln in lines if not ln.startswith("#")][1:]
        assert len(rows) == short_report.m
        col = header.index("key_length_bits")
        total = sum(float(r[col]) for r in rows)
        assert total == pytest.approx(short_report.total_key_bits)
        c_col = header.index("c_value")
        for r in rows:
            assert "np." not in r[c_col]
