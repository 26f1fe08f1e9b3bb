from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isacsar.channel import LinkBudget, RangeCompressedMatrix, simulate_echoes
from isacsar.compression import CompressionMethod, occupied_mask, range_compress
from isacsar.emulation import (UnsupportedOperationError, adapt_prf, decimation_indices,
                               emulate_ofdm_from_chirp, read_iq_csv)
from isacsar.focusing import tdbp_reference
from isacsar.geometry import SceneGrid, make_linear_trajectory
from isacsar.waveform import BASELINE_PROFILE, ComplexSignal, random_ofdm_symbol

from conftest import CARRIER, side_looking_scene

FS = BASELINE_PROFILE.sample_rate
N_FAST = 512


def sparse_scene(rng, n_pulses, n_fast, guard, n_scatterers=5):
    """Random complex impulses kept clear of the last ``guard`` samples."""
    data = np.zeros((n_pulses, n_fast), dtype=complex)
    for k in range(n_pulses):
        idx = rng.choice(n_fast - guard, n_scatterers, replace=False)
        data[k, idx] = rng.standard_normal(n_scatterers) + 1j * rng.standard_normal(n_scatterers)
    return RangeCompressedMatrix(data, FS, fast_time_origin=1e-6)


def band_limit(data, reference):
    mask = occupied_mask(reference, data.shape[-1])
    return np.fft.ifft(np.fft.fft(data, axis=-1) * mask, axis=-1)


class TestEmulate:
    def test_delta_gives_delayed_pulse(self, ofdm_pulse):
        data = np.zeros((1, N_FAST), dtype=complex)
        data[0, 40] = 1.0
        out = emulate_ofdm_from_chirp(RangeCompressedMatrix(data, FS), ofdm_pulse)
        expected = np.zeros(N_FAST, dtype=complex)
        expected[40:40 + len(ofdm_pulse)] = ofdm_pulse.samples
        np.testing.assert_allclose(out.data[0], expected, atol=1e-12)

    def test_two_impulses_superpose(self, ofdm_pulse):
        data = np.zeros((1, N_FAST), dtype=complex)
        data[0, 10] = 2.0
        data[0, 100] = -0.5j
        out = emulate_ofdm_from_chirp(RangeCompressedMatrix(data, FS), ofdm_pulse).data[0]
        L = len(ofdm_pulse)
        expected = np.zeros(N_FAST, dtype=complex)
        expected[10:10 + L] += 2.0 * ofdm_pulse.samples
        expected[100:100 + L] += -0.5j * ofdm_pulse.samples
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_tail_is_cropped(self, ofdm_pulse):
        data = np.zeros((1, N_FAST), dtype=complex)
        data[0, -1] = 1.0
        out = emulate_ofdm_from_chirp(RangeCompressedMatrix(data, FS), ofdm_pulse).data[0]
        assert out.shape == (N_FAST,)
        assert out[-1] == pytest.approx(ofdm_pulse.samples[0])

    def test_origin_offset_by_pulse_t0(self, ofdm_pulse):
        shifted = ComplexSignal(ofdm_pulse.samples, FS, t0=-2e-6, band=ofdm_pulse.band,
                                nulls=ofdm_pulse.nulls)
        rc = RangeCompressedMatrix(np.zeros((1, 128)), FS, fast_time_origin=5e-6)
        out = emulate_ofdm_from_chirp(rc, shifted)
        assert out.fast_time_origin == pytest.approx(3e-6)

    def test_sample_rate_mismatch_reports_factor(self, ofdm_pulse):
        rc = RangeCompressedMatrix(np.zeros((1, 128)), 4 * FS)
        with pytest.raises(ValueError, match="factor 4"):
            emulate_ofdm_from_chirp(rc, ofdm_pulse)

    def test_linear_in_rows(self, ofdm_pulse, rng):
        a = sparse_scene(rng, 4, N_FAST, 0)
        b = sparse_scene(rng, 4, N_FAST, 0)
        alpha, beta = 0.7 - 0.2j, -1.3
        mix = RangeCompressedMatrix(alpha * a.data + beta * b.data, FS, a.fast_time_origin)
        ea = emulate_ofdm_from_chirp(a, ofdm_pulse).data
        eb = emulate_ofdm_from_chirp(b, ofdm_pulse).data
        em = emulate_ofdm_from_chirp(mix, ofdm_pulse).data
        np.testing.assert_allclose(em, alpha * ea + beta * eb, atol=1e-12)

    def test_workers_identical(self, ofdm_pulse, rng):
        rc = sparse_scene(rng, 16, N_FAST, 0)
        a = emulate_ofdm_from_chirp(rc, ofdm_pulse, workers=1).data
        b = emulate_ofdm_from_chirp(rc, ofdm_pulse, workers=4).data
        np.testing.assert_array_equal(a, b)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_zf_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        _, pulse = random_ofdm_symbol(BASELINE_PROFILE, rng)
        rc = sparse_scene(rng, 3, N_FAST, len(pulse) - 1)
        back = range_compress(emulate_ofdm_from_chirp(rc, pulse), pulse,
                              CompressionMethod.zero_forcing())
        expected = band_limit(rc.data, pulse)
        assert back.fast_time_origin == pytest.approx(rc.fast_time_origin)
        assert np.abs(back.data - expected).max() <= 1e-6 * np.abs(expected).max()

    def test_matched_filter_after_emulation_keeps_delay(self, ofdm_pulse):
        # a simulated OFDM echo and an emulated one compress to the same peak
        geom, tgt = side_looking_scene(n_pulses=1)
        raw = simulate_echoes(ofdm_pulse, geom, [tgt], LinkBudget(), noise=False)
        rc = range_compress(raw, ofdm_pulse)
        delta = np.zeros((1, rc.n_fast), dtype=complex)
        peak = int(np.argmax(np.abs(rc.data[0])))
        delta[0, peak] = 1.0
        emu = emulate_ofdm_from_chirp(
            RangeCompressedMatrix(delta, FS, rc.fast_time_origin), ofdm_pulse)
        rc2 = range_compress(emu, ofdm_pulse)
        assert rc2.fast_time[np.argmax(np.abs(rc2.data[0]))] == pytest.approx(rc.fast_time[peak])


class TestAdaptPrf:
    def scene(self, n=16, prf=1e3):
        traj = make_linear_trajectory([0, 0, 100], [1.0, 0, 0], prf, n)
        data = np.arange(n, dtype=complex)[:, None] * np.ones((1, 8))
        return RangeCompressedMatrix(data, FS, trajectory=traj), traj

    def test_halving(self):
        rc, traj = self.scene()
        out, t2 = adapt_prf(rc, traj, 500.0)
        assert out.n_pulses == 8
        np.testing.assert_array_equal(out.data[:, 0].real, np.arange(0, 16, 2))
        assert t2.pri == pytest.approx(2e-3)
        assert out.trajectory is t2

    def test_identity(self):
        rc, traj = self.scene()
        out, t2 = adapt_prf(rc, traj, 1e3)
        assert out is rc and t2 is traj

    def test_upsampling_refused(self):
        rc, traj = self.scene()
        with pytest.raises(UnsupportedOperationError, match="interpolation"):
            adapt_prf(rc, traj, 2e3)

    def test_irrational_refused(self):
        rc, traj = self.scene()
        with pytest.raises(UnsupportedOperationError, match="rational"):
            adapt_prf(rc, traj, 1e3 / np.pi)

    def test_rational_ratio(self):
        rc, traj = self.scene(n=10)
        out, t2 = adapt_prf(rc, traj, 1e3 * 2 / 3)
        np.testing.assert_array_equal(out.data[:, 0].real, [0, 1, 3, 4, 6, 7, 9])

    def test_row_count_checked(self):
        rc, _ = self.scene()
        _, other = self.scene(n=8)
        with pytest.raises(ValueError, match="16 data rows"):
            adapt_prf(rc, other, 500.0)

    @settings(max_examples=50)
    @given(n=st.integers(1, 300), p=st.integers(1, 12), q=st.integers(1, 12))
    def test_index_bookkeeping(self, n, p, q):
        ratio = Fraction(p, q)
        if ratio < 1:
            ratio = 1 / ratio
        rc, traj = self.scene(n=n)
        out, t2 = adapt_prf(rc, traj, 1e3 / float(ratio))
        # row j holds the same source pulse as its trajectory sample
        src = np.round(t2.tau / traj.pri).astype(int)
        np.testing.assert_array_equal(out.data[:, 0].real, src)
        np.testing.assert_array_equal(t2.positions, traj.positions[src])
        if ratio != 1:
            np.testing.assert_array_equal(src, decimation_indices(n, ratio))
            assert np.all(np.diff(src) >= 1)
            assert np.all(t2.tau <= np.arange(len(src)) * float(ratio) * traj.pri + 1e-12)

    def test_decimated_focus_keeps_peak(self, ofdm_pulse):
        geom, tgt = side_looking_scene(n_pulses=128)
        raw = simulate_echoes(ofdm_pulse, geom, [tgt], LinkBudget(), noise=False)
        rc = range_compress(raw, ofdm_pulse)
        grid = SceneGrid.centered(tgt.position[:2], 21, 9, 0.25, 3.0)
        full = tdbp_reference(rc, geom, grid, CARRIER)
        rc4, traj4 = adapt_prf(rc, geom.rx, 250.0)
        dec = tdbp_reference(rc4, type(geom).monostatic(traj4), grid, CARRIER)
        i0 = np.unravel_index(np.argmax(np.abs(full.pixels)), grid.shape)
        i1 = np.unravel_index(np.argmax(np.abs(dec.pixels)), grid.shape)
        assert abs(i0[0] - i1[0]) <= 1 and abs(i0[1] - i1[1]) <= 1
        assert i1 == grid.nearest_index(tgt.position)


class TestReadIqCsv:
    def test_with_header(self, tmp_path):
        path = tmp_path / "iq.csv"
        path.write_text("i,q\n1,2\n3,4\n5,6\n7,8\n")
        m = read_iq_csv(path, 2, FS, compressed=True)
        assert isinstance(m, RangeCompressedMatrix)
        np.testing.assert_array_equal(m.data, [[1 + 2j, 3 + 4j], [5 + 6j, 7 + 8j]])

    def test_without_header(self, tmp_path):
        path = tmp_path / "iq.csv"
        path.write_text("0.5,-1\n2,0\n")
        m = read_iq_csv(path, 1, FS)
        assert not isinstance(m, RangeCompressedMatrix)
        assert m.n_pulses == 2

    def test_not_multiple(self, tmp_path):
        path = tmp_path / "iq.csv"
        path.write_text("1,2\n3,4\n5,6\n")
        with pytest.raises(ValueError, match="not a multiple"):
            read_iq_csv(path, 2, FS)

    def test_bad_line(self, tmp_path):
        path = tmp_path / "iq.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ValueError, match="exactly two"):
            read_iq_csv(path, 1, FS)
