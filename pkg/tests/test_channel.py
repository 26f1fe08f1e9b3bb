import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isacsar._common import C, K_BOLTZMANN
from isacsar.channel import (LinkBudget, RawDataMatrix, SnowModel, received_power,
                             simulate_echoes, unambiguous_range)
from isacsar.compression import range_compress
from isacsar.geometry import BistaticGeometry, PointTarget, make_linear_trajectory
from isacsar.waveform import BASELINE_PROFILE, random_ofdm_symbol


def static_geometry(n=8, altitude=100.0):
    traj = make_linear_trajectory([0, 0, altitude], [0, 0, 0], 1e3, n)
    return BistaticGeometry.monostatic(traj)


class TestLinkBudget:
    def test_noise_density(self):
        b = LinkBudget()
        assert b.n0 == pytest.approx(K_BOLTZMANN * 290 * 10**0.7)

    def test_eirp_limit(self):
        with pytest.raises(ValueError, match="exceeds the 23"):
            LinkBudget(eirp_dbm=23.5)
        assert LinkBudget(eirp_dbm=30, allow_eirp_override=True).eirp_w == pytest.approx(1.0)

    def test_received_power_radar_equation(self):
        b = LinkBudget(eirp_dbm=20.0)
        lam = C / 5.9e9
        r = 141.42
        expected = 0.1 * 2.0 * 10.0 * lam**2 / (4 * np.pi) / ((4 * np.pi) ** 2 * r**4)
        assert received_power(b, 2.0, r) == pytest.approx(expected, rel=1e-12)

    def test_range_fourth_power(self):
        b = LinkBudget()
        ratio = received_power(b, 1.0, 100.0) / received_power(b, 1.0, 150.0)
        assert 10 * np.log10(ratio) == pytest.approx(40 * np.log10(1.5))

    def test_snow_two_way_loss(self):
        b = LinkBudget()
        snow = SnowModel(1.5)
        ratio = received_power(b, 1.0, 100.0) / received_power(b, 1.0, 100.0, snow, 2.0)
        assert 10 * np.log10(ratio) == pytest.approx(6.0)

    def test_snow_disabled(self):
        snow = SnowModel(3.0, enabled=False)
        assert snow.two_way_loss_db(2.0) == 0.0

    def test_directivity_loss_both_passes(self):
        b0, b1 = LinkBudget(), LinkBudget(directivity_loss_db=1.5)
        ratio = received_power(b0, 1.0, 100.0) / received_power(b1, 1.0, 100.0)
        assert 10 * np.log10(ratio) == pytest.approx(3.0)

    def test_negative_extinction_rejected(self):
        with pytest.raises(ValueError):
            SnowModel(-0.1)


class TestUnambiguousRange:
    def test_symbol_rate(self):
        assert unambiguous_range(125e3) == pytest.approx(1199.169832, abs=1e-6)

    def test_one_khz(self):
        assert unambiguous_range(1e3) == pytest.approx(149896.229, abs=1e-3)

    @given(st.floats(1.0, 1e7))
    def test_inverse_in_prf(self, prf):
        assert unambiguous_range(2 * prf) == pytest.approx(unambiguous_range(prf) / 2)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            unambiguous_range(0.0)


class TestSimulateEchoes:
    def test_static_platform_rows_identical(self, ofdm_pulse):
        geom = static_geometry()
        raw = simulate_echoes(ofdm_pulse, geom, [PointTarget([0, 100, 0])], LinkBudget(),
                              noise=False)
        np.testing.assert_array_equal(raw.data, np.broadcast_to(raw.data[0], raw.data.shape))

    def test_peak_at_two_way_delay(self, ofdm_pulse):
        geom = static_geometry(1)
        tgt = PointTarget([0, 37.0, 0])
        raw = simulate_echoes(ofdm_pulse, geom, [tgt], LinkBudget(), noise=False)
        rc = range_compress(raw, ofdm_pulse)
        delay = 2 * np.hypot(100.0, 37.0) / C
        peak = rc.fast_time[np.argmax(np.abs(rc.data[0]))]
        assert abs(peak - delay) <= 0.5 / raw.sample_rate

    def test_echo_amplitude(self, ofdm_pulse):
        geom = static_geometry(1)
        tgt = PointTarget([0, 0, 0], rcs=3.0)
        b = LinkBudget()
        raw = simulate_echoes(ofdm_pulse, geom, [tgt], b, noise=False)
        p = received_power(b, 3.0, 100.0)
        # the whole unit-power pulse lands inside the window
        assert raw.data[0].dot(raw.data[0].conj()).real == pytest.approx(
            p * len(ofdm_pulse), rel=1e-9)

    def test_noise_power(self, ofdm_pulse):
        b = LinkBudget()
        geom = static_geometry(64)
        raw = simulate_echoes(ofdm_pulse, geom, [], b, seed=3, fast_time_origin=0.0,
                              n_fast=16384)
        assert raw.data.size >= 10**6
        assert np.mean(np.abs(raw.data) ** 2) == pytest.approx(b.n0 * raw.sample_rate, rel=0.03)

    def test_linearity(self, ofdm_pulse):
        geom = BistaticGeometry.monostatic(
            make_linear_trajectory([-1, 0, 100], [10, 0, 0], 1e3, 16))
        t1, t2 = PointTarget([0, 90, 0]), PointTarget([2, 110, 0], rcs=0.3)
        kw = dict(noise=False, fast_time_origin=5e-7, n_fast=256)
        a = simulate_echoes(ofdm_pulse, geom, [t1], LinkBudget(), **kw).data
        b = simulate_echoes(ofdm_pulse, geom, [t2], LinkBudget(), **kw).data
        ab = simulate_echoes(ofdm_pulse, geom, [t1, t2], LinkBudget(), **kw).data
        assert np.abs(ab - (a + b)).max() <= 1e-9 * np.abs(ab).max()

    def test_reproducible(self, ofdm_pulse, scene):
        geom, tgt = scene
        a = simulate_echoes(ofdm_pulse, geom, [tgt], LinkBudget(), seed=11)
        b = simulate_echoes(ofdm_pulse, geom, [tgt], LinkBudget(), seed=11)
        c = simulate_echoes(ofdm_pulse, geom, [tgt], LinkBudget(), seed=12)
        np.testing.assert_array_equal(a.data, b.data)
        assert not np.array_equal(a.data, c.data)

    def test_independent_of_workers(self, ofdm_pulse, scene):
        geom, tgt = scene
        a = simulate_echoes(ofdm_pulse, geom, [tgt], LinkBudget(), seed=1, workers=1)
        b = simulate_echoes(ofdm_pulse, geom, [tgt], LinkBudget(), seed=1, workers=3)
        np.testing.assert_array_equal(a.data, b.data)

    def test_window_too_short_names_target(self, ofdm_pulse):
        geom = static_geometry(2)
        with pytest.raises(ValueError, match="target 0"):
            simulate_echoes(ofdm_pulse, geom, [PointTarget([0, 50, 0])], LinkBudget(),
                            fast_time_origin=0.0, n_fast=64)

    def test_no_targets_needs_window(self, ofdm_pulse):
        with pytest.raises(ValueError, match="window"):
            simulate_echoes(ofdm_pulse, static_geometry(2), [], LinkBudget())

    def test_per_pulse_waveforms(self):
        geom = static_geometry(4)
        r = np.random.default_rng(0)
        waves = [random_ofdm_symbol(BASELINE_PROFILE, r)[1] for _ in range(4)]
        tgt = [PointTarget([0, 20, 0])]
        raw = simulate_echoes(waves, geom, tgt, LinkBudget(), noise=False)
        for k in (0, 3):
            single = simulate_echoes(waves[k], geom, tgt, LinkBudget(), noise=False,
                                     fast_time_origin=raw.fast_time_origin, n_fast=raw.n_fast)
            np.testing.assert_array_equal(raw.data[k], single.data[k])

    def test_per_pulse_count_checked(self, ofdm_pulse):
        with pytest.raises(ValueError, match="3 waveforms given for 4 pulses"):
            simulate_echoes([ofdm_pulse] * 3, static_geometry(4), [PointTarget([0, 0, 0])],
                            LinkBudget())

    @settings(max_examples=20, deadline=None)
    @given(delay_frac=st.floats(0.0, 1.0), rcs=st.floats(0.01, 100.0))
    def test_compressed_peak_scales_with_rcs(self, delay_frac, rcs):
        r = np.random.default_rng(1)
        _, wf = random_ofdm_symbol(BASELINE_PROFILE, r)
        geom = static_geometry(1)
        y = 30.0 + delay_frac * C / BASELINE_PROFILE.sample_rate
        kw = dict(noise=False, fast_time_origin=0.0, n_fast=512)
        a = simulate_echoes(wf, geom, [PointTarget([0, y, 0])], LinkBudget(), **kw)
        b = simulate_echoes(wf, geom, [PointTarget([0, y, 0], rcs=rcs)], LinkBudget(), **kw)
        np.testing.assert_allclose(np.abs(b.data), np.sqrt(rcs) * np.abs(a.data),
                                   rtol=1e-9, atol=1e-20)


class TestRawDataMatrix:
    def test_fast_time_axis(self):
        m = RawDataMatrix(np.zeros((2, 4)), 4.0, fast_time_origin=1.0)
        np.testing.assert_allclose(m.fast_time, [1.0, 1.25, 1.5, 1.75])

    def test_trajectory_rows_checked(self):
        traj = make_linear_trajectory([0, 0, 0], [1, 0, 0], 1.0, 3)
        with pytest.raises(ValueError, match="trajectory has 3"):
            RawDataMatrix(np.zeros((2, 4)), 1.0, trajectory=traj)
