"""Closed-form model tests with independent numeric oracles."""

import math

import numpy as np
import pytest
from scipy import optimize

from phasemag.analytic import (DynamicModel, GeometricModel, HyperfineModel,
                               adiabaticity, adiabaticity_small_field,
                               berry_field_range, berry_phase_argument,
                               berry_signal, berry_slope, hyperfine_average,
                               ramsey_ambiguities, ramsey_field_range,
                               ramsey_signal, sensitivity)
from phasemag.constants import NV, TWO_PI, angular_from_mhz
from phasemag.errors import DegenerateSlope, InvalidParameter

W5 = angular_from_mhz(5.0)


class TestRamseySignal:
    def test_zero_field(self):
        m = DynamicModel(1e-6)
        assert ramsey_signal(m, 0.0) == 1.0

    def test_half_period(self):
        m = DynamicModel(1e-6)
        b = math.pi / (NV.gamma * m.duration)
        assert ramsey_signal(m, b) == pytest.approx(-1.0)

    def test_full_fringe_at_35_714_microtesla(self):
        m = DynamicModel(1e-6)
        assert ramsey_signal(m, 35.7142857e-6) == pytest.approx(1.0, abs=1e-8)


class TestRamseyAmbiguities:
    def test_ladder_for_unit_signal(self):
        m = DynamicModel(1e-6)
        got = ramsey_ambiguities(m, 1.0, (0.0, 100e-6))
        want = [k / (28e9 * 1e-6) for k in range(3)]  # 0, 35.714, 71.428 uT
        assert len(got) == 3
        assert np.allclose(got, want, rtol=1e-12)

    def test_odd_ladder_for_minus_one(self):
        m = DynamicModel(1e-6)
        got = ramsey_ambiguities(m, -1.0, (0.0, 100e-6))
        fringe = TWO_PI / (NV.gamma * m.duration)
        want = [(k + 0.5) * fringe for k in range(3)]
        assert np.allclose(got, want, rtol=1e-12)

    def test_empty_window(self):
        m = DynamicModel(1e-6)
        assert ramsey_ambiguities(m, 0.3, (1e-3, 1e-4)) == []

    def test_rejects_unphysical_signal(self):
        with pytest.raises(InvalidParameter):
            ramsey_ambiguities(DynamicModel(1e-6), 1.5, (0.0, 1e-4))


class TestBerrySignal:
    def test_unit_at_zero_field(self):
        for n in (1, 2, 5):
            assert berry_signal(GeometricModel(W5, n), 0.0) == pytest.approx(1.0)

    def test_unit_at_large_field(self):
        m = GeometricModel(W5, 3)
        assert berry_signal(m, 1.0) == pytest.approx(1.0, abs=1e-4)

    def test_last_minimum_closed_form(self):
        m = GeometricModel(W5, 3)
        b = (W5 * 11.0 / math.sqrt(23.0)) / NV.gamma
        assert berry_signal(m, b) == pytest.approx(-1.0, abs=1e-12)

    def test_rabi_invariance(self):
        # signal depends on (B, Omega) through B/Omega only; power-of-two
        # scaling is float-exact
        m1 = GeometricModel(W5, 4)
        m2 = GeometricModel(4.0 * W5, 4)
        b = np.linspace(0, 2e-3, 101)
        assert np.array_equal(berry_signal(m1, b), berry_signal(m2, 4.0 * b))
        m3 = GeometricModel(3.0 * W5, 4)
        assert np.allclose(berry_signal(m1, b), berry_signal(m3, 3.0 * b),
                           atol=1e-12)


class TestBerrySlope:
    def test_zero_at_zero_field(self):
        m = GeometricModel(W5, 3)
        envelope = 4 * math.pi * m.n_rotations * NV.gamma / m.rabi
        assert abs(berry_slope(m, 0.0)) <= 1e-12 * envelope

    def test_vanishes_at_large_field(self):
        assert abs(berry_slope(GeometricModel(W5, 3), 0.5)) < 1e-3

    def test_matches_finite_differences(self):
        m = GeometricModel(W5, 3)
        b_max = berry_field_range(m)
        rng = np.random.default_rng(5)
        scale = 4 * math.pi * m.n_rotations * NV.gamma / m.rabi
        checked = 0
        while checked < 200:
            b = rng.uniform(0.01, 1.4) * b_max
            s = float(berry_slope(m, b))
            if abs(s) < 0.05 * scale:  # skip extremum neighborhoods
                continue
            db = b_max * 1e-7
            fd = float(berry_signal(m, b + db / 2) - berry_signal(m, b - db / 2)) / db
            assert s == pytest.approx(fd, rel=1e-6)
            checked += 1


class TestBerryFieldRange:
    def test_reference_value(self):
        m = GeometricModel(W5, 3)
        assert berry_field_range(m) == pytest.approx(0.40958188e-3, rel=1e-6)

    def test_brute_force_scan_agrees(self):
        # independent oracle: last B where the signal reaches -1, located by
        # scanning the chirp argument for its pi crossing
        m = GeometricModel(W5, 4)
        b = np.linspace(1e-6, 5e-3, 200001)
        args = berry_phase_argument(m, b)
        idx = np.where(np.diff(np.sign(args - math.pi)) != 0)[0]
        assert len(idx) == 1
        b_cross = 0.5 * (b[idx[0]] + b[idx[0] + 1])
        assert berry_field_range(m) == pytest.approx(b_cross, rel=1e-4)

    def test_doubling_rabi_doubles_range(self):
        m1 = GeometricModel(W5, 3)
        m2 = GeometricModel(2 * W5, 3)
        assert berry_field_range(m2) == pytest.approx(2 * berry_field_range(m1))

    def test_large_turn_count_asymptote(self):
        n = 1000
        m = GeometricModel(W5, n)
        ratio = berry_field_range(m) * NV.gamma / (W5 * math.sqrt(2 * n))
        assert abs(ratio - 1.0) <= 3.0 / (16.0 * n) * 1.2


class TestRamseyFieldRange:
    def test_reference_value(self):
        m = DynamicModel(1e-6)
        assert ramsey_field_range(m) == pytest.approx(35.7142857e-6, rel=1e-8)

    def test_exact_product_identity(self):
        for t in (0.2e-6, 1e-6, 5e-6):
            m = DynamicModel(t)
            assert ramsey_field_range(m) * NV.gamma * t == pytest.approx(TWO_PI, rel=1e-15)

    def test_inverse_scaling(self):
        assert (ramsey_field_range(DynamicModel(0.2e-6))
                / ramsey_field_range(DynamicModel(1.0e-6))) == pytest.approx(5.0)


class TestSensitivity:
    def test_ramsey_closed_form(self):
        t = 1e-6
        m = DynamicModel(t)
        rep = sensitivity(lambda b: ramsey_signal(m, b),
                          lambda b: -NV.gamma * t * np.sin(NV.gamma * np.asarray(b) * t),
                          (0.0, ramsey_field_range(m)), t)
        assert rep.max_slope == pytest.approx(NV.gamma * t, rel=1e-9)
        assert rep.eta == pytest.approx(1.0 / (NV.gamma * math.sqrt(t)), rel=1e-9)

    def test_linear_in_signal_noise(self):
        t = 1e-6
        m = DynamicModel(t)
        args = (lambda b: ramsey_signal(m, b), None, (0.0, ramsey_field_range(m)), t)
        assert (sensitivity(*args, sigma_p=2.0).eta
                == pytest.approx(2.0 * sensitivity(*args, sigma_p=1.0).eta))

    def test_degenerate_slope(self):
        with pytest.raises(DegenerateSlope):
            sensitivity(lambda b: np.ones_like(np.asarray(b, dtype=float)),
                        None, (0.0, 1e-3), 1e-6)


class TestHyperfineAverage:
    def test_zero_offsets_reduce_to_base(self):
        h = HyperfineModel(detunings=(0.0, 0.0, 0.0))
        ts = np.linspace(0, 1e-6, 50)
        base = lambda off, t: np.cos((NV.gamma * 1e-5 + off) * t)
        assert np.allclose(hyperfine_average(base, h, ts), base(0.0, ts))

    def test_first_envelope_null(self):
        # oracle: root of 1 + 2*cos(delta*T) = 0
        h = HyperfineModel.triplet()
        delta = NV.hyperfine_splitting
        t_root = optimize.brentq(lambda t: 1 + 2 * math.cos(delta * t),
                                 1e-9, math.pi / delta)
        assert t_root == pytest.approx(0.15432e-6, rel=1e-4)
        base = lambda off, t: np.cos(off * t)  # zero-field time scan
        ts = np.linspace(1e-9, 0.4e-6, 4000)
        vals = hyperfine_average(base, h, ts)
        crossings = np.where(np.diff(np.sign(vals)) != 0)[0]
        first = 0.5 * (ts[crossings[0]] + ts[crossings[0] + 1])
        assert first == pytest.approx(t_root, rel=1e-3)

    def test_bounded_for_normalized_weights(self):
        h = HyperfineModel.triplet()
        base = lambda off, b: np.cos((NV.gamma * b + off) * 1e-6)
        bs = np.linspace(0, 1e-3, 500)
        vals = hyperfine_average(base, h, bs)
        assert np.all(np.abs(vals) <= 1.0 + 1e-12)

    def test_weights_validation(self):
        with pytest.raises(InvalidParameter):
            HyperfineModel(weights=(0.5, 0.5, 0.5))


class TestAdiabaticity:
    def test_zero_field_form(self):
        a = adiabaticity(W5, 3, 8e-6, 0.0)
        assert a == pytest.approx(TWO_PI * 3 / (W5 * 8e-6), rel=1e-12)
        assert a == pytest.approx(0.075, rel=1e-9)

    def test_shorthand_drops_two_pi(self):
        a_short = adiabaticity_small_field(W5, 3, 8e-6)
        assert a_short == pytest.approx(0.0119366, rel=1e-4)
        assert adiabaticity(W5, 3, 8e-6, 0.0) == pytest.approx(TWO_PI * a_short)

    def test_monotone_decreasing_in_duration(self):
        ts = np.linspace(1e-6, 50e-6, 20)
        vals = [adiabaticity(W5, 3, t, 0.2e-3) for t in ts]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestSlopeDisambiguation:
    def test_signal_monotone_within_each_lobe(self):
        # injectivity of B -> (P, slope sign, lobe index) on a dense grid:
        # within one half-oscillation lobe the signal is strictly monotone
        m = GeometricModel(W5, 3)
        b_max = berry_field_range(m)
        b = np.linspace(0.0, b_max, 10001)[1:]
        args = berry_phase_argument(m, b)
        lobes = np.floor((4 * math.pi * m.n_rotations - args) / math.pi).astype(int)
        p = berry_signal(m, b)
        slopes = berry_slope(m, b)
        scale = 4 * math.pi * m.n_rotations * NV.gamma / m.rabi
        for lobe in np.unique(lobes):
            mask = lobes == lobe
            if np.count_nonzero(mask) < 3:
                continue
            interior = mask & (np.abs(slopes) > 1e-6 * scale)
            vals = p[interior]
            d = np.diff(vals)
            assert np.all(d > 0) or np.all(d < 0)
