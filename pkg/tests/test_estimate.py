"""Field-estimation tests: unique geometric recovery vs the dynamic ladder."""

import math

import numpy as np
import pytest

from phasemag.analytic import (DynamicModel, GeometricModel, berry_field_range,
                               berry_signal, berry_slope, ramsey_field_range)
from phasemag.constants import NV, angular_from_mhz
from phasemag.errors import InvalidParameter, OutOfRange, Unresolvable
from phasemag.estimate import (Measurement, estimate_dynamic,
                               estimate_geometric, geometric_candidates,
                               measure_dynamic, measure_geometric)

W5 = angular_from_mhz(5.0)


@pytest.fixture
def geo_model():
    return GeometricModel(W5, 3)


class TestGeometricCandidates:
    def test_count_matches_branch_enumeration(self, geo_model):
        # argument spans [pi, 4*pi*N]: 4N - 1 preimages for generic signals,
        # 2N at the degenerate extremum P = 1
        n = geo_model.n_rotations
        for p in (0.3, -0.7, 0.99):
            assert len(geometric_candidates(geo_model, p)) == 4 * n - 1
        assert len(geometric_candidates(geo_model, 1.0)) == 2 * n

    def test_count_grows_linearly_with_turns(self):
        counts = [len(geometric_candidates(GeometricModel(W5, n), 0.42))
                  for n in (2, 4, 8)]
        assert counts == [7, 15, 31]

    def test_candidates_reproduce_signal(self, geo_model):
        for b, _ in geometric_candidates(geo_model, -0.35):
            assert float(berry_signal(geo_model, b)) == pytest.approx(-0.35, abs=1e-9)

    def test_all_in_range(self, geo_model):
        b_max = berry_field_range(geo_model)
        for b, lobe in geometric_candidates(geo_model, 0.1):
            assert 0.0 <= b <= b_max * (1 + 1e-9)
            assert 0 <= lobe < 4 * geo_model.n_rotations


class TestEstimateGeometric:
    def test_noiseless_round_trip(self, geo_model):
        b_true = 0.5 * berry_field_range(geo_model)
        est = estimate_geometric(geo_model, measure_geometric(geo_model, b_true))
        assert est.b_hat == pytest.approx(b_true, rel=1e-6)

    def test_500_random_fields_zero_lobe_errors(self, geo_model):
        rng = np.random.default_rng(42)
        b_max = berry_field_range(geo_model)
        for _ in range(500):
            b_true = rng.uniform(0.01, 0.95) * b_max
            est = estimate_geometric(geo_model, measure_geometric(geo_model, b_true))
            assert est.b_hat == pytest.approx(b_true, rel=1e-6)

    def test_extremum_is_unresolvable(self, geo_model):
        with pytest.raises(Unresolvable) as exc:
            estimate_geometric(geo_model, Measurement(p=1.0, slope=0.0))
        assert len(exc.value.candidates) == 2

    def test_slope_required(self, geo_model):
        with pytest.raises(InvalidParameter):
            estimate_geometric(geo_model, Measurement(p=0.5, slope=None))

    def test_unphysical_signal_beyond_noise(self, geo_model):
        with pytest.raises(OutOfRange):
            estimate_geometric(geo_model, Measurement(p=1.2, slope=1.0, sigma=0.01))

    def test_clamped_signal_collapses_to_extrema(self, geo_model):
        # a signal clamped to +1 puts every candidate at an extremum, where
        # the slope cannot disambiguate: ties are reported, never guessed
        slope = float(berry_slope(geo_model, 0.4 * berry_field_range(geo_model)))
        meas = Measurement(p=1.002, slope=slope, sigma=0.01,
                           slope_sigma=abs(slope) * 0.05)
        with pytest.raises(Unresolvable):
            estimate_geometric(geo_model, meas)

    def test_noisy_recovery_stays_on_lobe(self, geo_model):
        rng = np.random.default_rng(7)
        b_max = berry_field_range(geo_model)
        hits = 0
        trials = 200
        for _ in range(trials):
            b_true = rng.uniform(0.1, 0.9) * b_max
            meas = measure_geometric(geo_model, b_true, delta_b=b_max / 50,
                                     sigma=0.002, rng=rng)
            try:
                est = estimate_geometric(geo_model, meas)
            except (Unresolvable, OutOfRange):
                continue
            if abs(est.b_hat - b_true) < 0.02 * b_max:
                hits += 1
        assert hits >= 0.8 * trials


class TestEstimateDynamic:
    def test_single_fringe_two_candidates(self):
        m = DynamicModel(1e-6)
        fringe = ramsey_field_range(m)
        ests = estimate_dynamic(m, Measurement(p=0.5, slope=None), (0.0, fringe))
        assert len(ests) == 2

    def test_slope_selects_branch_within_one_fringe(self):
        m = DynamicModel(1e-6)
        fringe = ramsey_field_range(m)
        b_true = 0.31 * fringe
        meas = measure_dynamic(m, b_true)
        ests = estimate_dynamic(m, meas, (0.0, fringe))
        assert len(ests) == 2
        best = max(ests, key=lambda e: e.confidence)
        assert best.b_hat == pytest.approx(b_true, rel=1e-6)

    def test_ladder_grows_with_window(self):
        m = DynamicModel(1e-6)
        fringe = ramsey_field_range(m)
        meas = Measurement(p=0.5, slope=None)
        for k in (1, 3, 5, 8):
            ests = estimate_dynamic(m, meas, (0.0, k * fringe))
            assert len(ests) == 2 * k

    def test_slope_does_not_remove_the_ladder(self):
        m = DynamicModel(1e-6)
        fringe = ramsey_field_range(m)
        meas_full = measure_dynamic(m, 0.3 * fringe)
        with_slope = estimate_dynamic(m, meas_full, (0.0, 5 * fringe))
        without = estimate_dynamic(m, Measurement(p=meas_full.p, slope=None),
                                   (0.0, 5 * fringe))
        assert len(with_slope) == len(without) >= 9

    def test_candidates_sorted_and_consistent(self):
        m = DynamicModel(0.5e-6)
        fringe = ramsey_field_range(m)
        ests = estimate_dynamic(m, Measurement(p=-0.2, slope=None),
                                (0.0, 4 * fringe))
        bs = [e.b_hat for e in ests]
        assert bs == sorted(bs)
        for e in ests:
            assert math.cos(NV.gamma * e.b_hat * m.duration) == pytest.approx(
                -0.2, abs=1e-9)

    def test_clamp_with_noise_allowance(self):
        m = DynamicModel(1e-6)
        ests = estimate_dynamic(m, Measurement(p=1.004, slope=None, sigma=0.01),
                                (0.0, ramsey_field_range(m)))
        assert all(e.clamped for e in ests)

    def test_empty_window(self):
        m = DynamicModel(1e-6)
        assert estimate_dynamic(m, Measurement(p=0.1, slope=None),
                                (1e-3, 1e-4)) == []


class TestMeasurementValidation:
    def test_unphysical_beyond_allowance_rejected(self):
        with pytest.raises(OutOfRange):
            Measurement(p=1.5, slope=None, sigma=0.01)

    def test_within_allowance_accepted(self):
        m = Measurement(p=1.02, slope=None, sigma=0.01)
        assert m.p == 1.02
