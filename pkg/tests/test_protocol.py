import math

import pytest

from rfiqkd import (
    CorrelationSet,
    ParameterError,
    PhysicalityWarning,
    SecurityParams,
    binary_entropy,
    c_value,
    correlation_from_qber,
    eve_information,
    validity_bounds,
)

# Frozen against an independent mpmath evaluation at 50 digits.
H2_OF_0_11 = 0.49991595816452799564
IE_AT_C15_EB001 = 0.34435574563996814622


class TestBinaryEntropy:
    def test_endpoints_are_exact(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    def test_frozen_value(self):
        assert binary_entropy(0.11) == pytest.approx(H2_OF_0_11, rel=1e-15)

    @pytest.mark.parametrize("p", [0.01, 0.1, 0.25, 0.4])
    def test_symmetry(self, p):
        assert binary_entropy(p) == pytest.approx(binary_entropy(1.0 - p), rel=1e-14)

    @pytest.mark.parametrize("p", [-0.1, 1.1, 2.0])
    def test_domain(self, p):
        with pytest.raises(ParameterError):
            binary_entropy(p)

    def test_concave_below_one(self):
        for p in (0.1, 0.2, 0.3, 0.45):
            assert 0.0 < binary_entropy(p) < 1.0


class TestCorrelationFromQber:
    def test_anchor_points(self):
        assert correlation_from_qber(0.0) == 1.0
        assert correlation_from_qber(0.5) == 0.0
        assert correlation_from_qber(1.0) == -1.0

    def test_linear(self):
        assert correlation_from_qber(0.2) == pytest.approx(0.6, rel=1e-15)

    def test_domain(self):
        with pytest.raises(ParameterError):
            correlation_from_qber(1.5)


class TestCValue:
    def test_ideal_aligned_frame(self):
        # theta = 0: straight-through X/Y errors are 0, cross terms 0.5
        corr = CorrelationSet.from_qbers(0.0, 0.5, 0.5, 0.0)
        assert c_value(corr) == pytest.approx(2.0, abs=1e-15)

    def test_ideal_rotated_frame(self):
        # theta = pi/4 splits the correlation evenly over all four pairs
        s = math.sqrt(0.5)
        corr = CorrelationSet(s, s, -s, s)
        assert c_value(corr) == pytest.approx(2.0, rel=1e-15)

    def test_angle_invariance_of_ideal_channel(self):
        for theta in (0.0, 0.3, 1.1, 2.5, 4.0, 5.9):
            corr = CorrelationSet(
                math.cos(theta), math.sin(theta), -math.sin(theta), math.cos(theta)
            )
            assert c_value(corr) == pytest.approx(2.0, rel=1e-14)

    def test_unphysical_value_warns_but_returns(self):
        corr = CorrelationSet(1.0, 1.0, 1.0, 1.0)
        with pytest.warns(PhysicalityWarning):
            assert c_value(corr) == pytest.approx(4.0)

    def test_correlator_range_enforced(self):
        with pytest.raises(ParameterError):
            CorrelationSet(1.2, 0.0, 0.0, 0.0)


class TestEveInformation:
    def test_frozen_value(self):
        assert eve_information(1.5, 0.01) == pytest.approx(IE_AT_C15_EB001, rel=1e-14)

    def test_no_correlation_means_full_information(self):
        assert eve_information(0.0, 0.0) == 1.0
        assert eve_information(0.0, 0.1) == pytest.approx(1.0, rel=1e-14)

    def test_perfect_channel_leaks_nothing(self):
        assert eve_information(2.0, 0.0) == 0.0

    def test_zero_error_branch(self):
        # e_b = 0 keeps only the first entropy term
        u = math.sqrt(1.5 / 2.0)
        expected = binary_entropy((1.0 + u) / 2.0)
        assert eve_information(1.5, 0.0) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("e_b", [0.0, 0.02, 0.1, 0.3])
    def test_monotone_decreasing_in_c(self, e_b):
        values = [eve_information(c, e_b) for c in (0.0, 0.5, 1.0, 1.5, 2.0)]
        for lo, hi in zip(values[1:], values):
            assert lo <= hi + 1e-12

    def test_values_above_two_saturate(self):
        assert eve_information(2.4, 0.03) == pytest.approx(
            eve_information(2.0, 0.03), rel=1e-14
        )

    def test_domain(self):
        with pytest.raises(ParameterError):
            eve_information(-0.1, 0.0)
        with pytest.raises(ParameterError):
            eve_information(1.0, 0.6)


class TestValidityBounds:
    def test_session_limit_at_reference_drift(self):
        bounds = validity_bounds(eta=5.66e-4, n0=80e6, omega=6.9e-3)
        assert bounds.t_max == pytest.approx(455.303283129, abs=1e-6)
        assert bounds.delta_theta_max == math.pi

    def test_static_frame_never_expires(self):
        bounds = validity_bounds(eta=0.1, n0=1e6, omega=0.0)
        assert bounds.t_max == math.inf
        assert bounds.delta_theta_min == 0.0
        assert bounds.valid

    def test_window_scales_linearly_with_drift(self):
        slow = validity_bounds(eta=1e-3, n0=80e6, omega=1e-3)
        fast = validity_bounds(eta=1e-3, n0=80e6, omega=2e-3)
        assert fast.delta_theta_min == pytest.approx(2.0 * slow.delta_theta_min)

    def test_window_can_close(self):
        # collection too slow for the drift: lower edge passes pi
        bounds = validity_bounds(eta=1e-9, n0=1e3, omega=1.0)
        assert not bounds.valid

    def test_domain(self):
        with pytest.raises(ParameterError):
            validity_bounds(eta=0.0, n0=1e6, omega=1e-3)
        with pytest.raises(ParameterError):
            validity_bounds(eta=0.5, n0=0.0, omega=1e-3)
        with pytest.raises(ParameterError):
            validity_bounds(eta=0.5, n0=1e6, omega=-1.0)


class TestSecurityParams:
    def test_defaults_are_valid(self):
        sec = SecurityParams()
        assert sec.f_ec >= 1.0
        assert 0.0 < sec.eps_pe < 1.0

    def test_rejects_sub_shannon_reconciliation(self):
        with pytest.raises(ParameterError):
            SecurityParams(f_ec=0.9)

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ParameterError):
            SecurityParams(eps_pe=0.0)

    def test_rejects_negative_fluctuation_width(self):
        with pytest.raises(ParameterError):
            SecurityParams(n_sigma=-1.0)
