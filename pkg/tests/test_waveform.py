import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isacsar._common import C
from isacsar.compression import irf_metrics
from isacsar.waveform import (IRF_PROFILE, BASELINE_PROFILE, BASELINE_SHORT_CP, ChirpConfig,
                              ComplexSignal, Constellation, OfdmConfig, cp_samples_for_fraction,
                              demap_symbols, generate_chirp, map_bits, ofdm_demodulate,
                              ofdm_modulate, random_ofdm_symbol, strip_cp)

ALL = list(Constellation)


class TestConstellation:
    def test_qpsk_gray_words(self):
        s = map_bits([0, 0, 0, 1, 1, 0, 1, 1], Constellation.QPSK)
        expected = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
        np.testing.assert_allclose(s, expected, atol=1e-15)

    @pytest.mark.parametrize("c", ALL)
    def test_unit_mean_energy(self, c):
        assert np.mean(np.abs(c.alphabet) ** 2) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("c", ALL)
    def test_alphabet_distinct(self, c):
        assert np.unique(np.round(c.alphabet, 12)).size == c.order

    @pytest.mark.parametrize("c", ALL)
    def test_gray_neighbours_differ_by_one_bit(self, c):
        # adjacent grid points along either axis differ in exactly one bit
        a = c.alphabet * c.scale
        words = np.arange(c.order)
        for w in words:
            for v in words:
                d = np.abs(a[w] - a[v])
                if np.isclose(d, 2.0):
                    assert bin(w ^ v).count("1") == 1

    def test_16qam_corner(self):
        # 0000 is the top-right corner (3 + 3j) / sqrt(10)
        s = map_bits([0, 0, 0, 0], Constellation.QAM16)
        assert s[0] == pytest.approx((3 + 3j) / np.sqrt(10))

    def test_parse(self):
        assert Constellation.parse("qam-256") is Constellation.QAM256
        with pytest.raises(ValueError, match="unknown constellation"):
            Constellation.parse("8PSK")

    def test_bad_bit_count(self):
        with pytest.raises(ValueError, match="multiple of 4"):
            map_bits([0, 1, 1], Constellation.QAM16)

    def test_non_binary(self):
        with pytest.raises(ValueError, match="0 or 1"):
            map_bits([0, 2], Constellation.QPSK)

    @settings(max_examples=40, deadline=None)
    @given(c=st.sampled_from(ALL), data=st.data())
    def test_demap_inverts_map(self, c, data):
        n = data.draw(st.integers(1, 20))
        bits = data.draw(st.lists(st.integers(0, 1), min_size=n * c.bits_per_symbol,
                                  max_size=n * c.bits_per_symbol))
        out = demap_symbols(map_bits(bits, c), c)
        np.testing.assert_array_equal(out, bits)

    @settings(max_examples=30, deadline=None)
    @given(c=st.sampled_from(ALL), seed=st.integers(0, 2**32 - 1))
    def test_small_noise_never_flips(self, c, seed):
        r = np.random.default_rng(seed)
        bits = r.integers(0, 2, 64 * c.bits_per_symbol)
        s = map_bits(bits, c)
        # half the minimum distance is 1/scale
        eps = 0.49 / c.scale * np.exp(2j * np.pi * r.random(s.size))
        np.testing.assert_array_equal(demap_symbols(s + eps, c), bits)


class TestOfdmConfig:
    def test_table_i_numbers(self):
        c = BASELINE_PROFILE
        assert c.sample_rate == pytest.approx(7.68e6)
        assert c.occupied_bandwidth == pytest.approx(6.24e6)
        assert c.symbol_duration == pytest.approx(1 / 120e3)
        assert c.samples_per_symbol == 76
        assert c.cp_fraction == pytest.approx(12 / 64)

    def test_layout_splits_around_dc(self):
        idx = BASELINE_PROFILE.subcarrier_indices
        assert idx.size == 52
        assert np.sum(idx < 0) == 26 and np.sum(idx > 0) == 26
        assert 0 not in idx

    def test_odd_active_count_extra_on_positive_side(self):
        idx = OfdmConfig(m_fft=16, m_active=7, cp_samples=0).subcarrier_indices
        np.testing.assert_array_equal(idx, [-3, -2, -1, 1, 2, 3, 4])

    def test_full_occupancy_uses_dc(self):
        c = OfdmConfig(m_fft=8, m_active=8, cp_samples=0)
        assert 0 in c.subcarrier_indices
        assert c.nulls == ()

    def test_short_cp_profile(self):
        assert cp_samples_for_fraction(64, 0.0657) == 4
        assert BASELINE_SHORT_CP.cp_samples == 4

    def test_irf_profile_oversampling(self):
        assert IRF_PROFILE.sample_rate / IRF_PROFILE.occupied_bandwidth == pytest.approx(2.0)

    @pytest.mark.parametrize("kw, msg", [
        (dict(m_active=65), "exceeds"),
        (dict(cp_samples=-1), "non-negative"),
        (dict(delta_f=0.0), "positive"),
    ])
    def test_rejects(self, kw, msg):
        with pytest.raises(ValueError, match=msg):
            OfdmConfig(**kw)


class TestOfdmModem:
    def test_cyclic_prefix_is_copy_of_tail(self, rng):
        _, sig = random_ofdm_symbol(BASELINE_PROFILE, rng)
        x = sig.samples
        np.testing.assert_array_equal(x[:12], x[-12:])
        assert len(sig) == 76

    def test_roundtrip_multiple_symbols(self, rng):
        bits = rng.integers(0, 2, 3 * BASELINE_PROFILE.bits_per_ofdm_symbol)
        s = map_bits(bits, BASELINE_PROFILE.constellation)
        out = ofdm_demodulate(ofdm_modulate(s, BASELINE_PROFILE), BASELINE_PROFILE)
        np.testing.assert_allclose(out, s, atol=1e-13)

    def test_parseval_body_power(self, rng):
        # unitary transform: body energy equals symbol energy
        _, sig = random_ofdm_symbol(BASELINE_PROFILE, rng)
        body = strip_cp(sig, BASELINE_PROFILE)
        assert body.energy == pytest.approx(52.0, rel=1e-12)
        assert body.t0 == pytest.approx(12 / BASELINE_PROFILE.sample_rate)

    def test_spectrum_confined_to_active_bins(self, rng):
        _, sig = random_ofdm_symbol(BASELINE_PROFILE, rng)
        spec = np.fft.fft(strip_cp(sig, BASELINE_PROFILE).samples)
        inactive = np.setdiff1d(np.arange(64), BASELINE_PROFILE.fft_bins)
        assert np.abs(spec[inactive]).max() < 1e-12

    def test_band_metadata(self, rng):
        _, sig = random_ofdm_symbol(BASELINE_PROFILE, rng)
        lo, hi = sig.band
        assert hi - lo == pytest.approx(53 * 120e3)
        assert sig.nulls == (0.0,)

    def test_symbol_count_checked(self):
        with pytest.raises(ValueError, match="multiple of m_active"):
            ofdm_modulate(np.ones(51), BASELINE_PROFILE)

    def test_demod_length_checked(self):
        with pytest.raises(ValueError, match="multiple of 76"):
            ofdm_demodulate(np.ones(100), BASELINE_PROFILE)

    @settings(max_examples=25, deadline=None)
    @given(m_fft=st.sampled_from([8, 16, 64, 128]), frac=st.floats(0.1, 1.0),
           cp=st.integers(0, 16), seed=st.integers(0, 1000))
    def test_roundtrip_any_numerology(self, m_fft, frac, cp, seed):
        m_active = max(1, int(frac * m_fft))
        c = OfdmConfig(m_fft=m_fft, m_active=m_active, cp_samples=min(cp, m_fft))
        bits, sig = random_ofdm_symbol(c, np.random.default_rng(seed))
        out = demap_symbols(ofdm_demodulate(sig, c), c.constellation)
        np.testing.assert_array_equal(out, bits)


class TestChirp:
    def test_unit_modulus_and_rate(self):
        cfg = ChirpConfig(10e6, 5e-6, 40e6)
        sig = generate_chirp(cfg)
        assert len(sig) == 200
        np.testing.assert_allclose(np.abs(sig.samples), 1.0)
        assert cfg.rate == pytest.approx(2e12)

    def test_instantaneous_frequency_sweeps_band(self):
        cfg = ChirpConfig(10e6, 5e-6, 40e6)
        sig = generate_chirp(cfg)
        f = np.diff(np.unwrap(np.angle(sig.samples))) * cfg.sample_rate / (2 * np.pi)
        mid = sig.times[:-1] + 0.5 / cfg.sample_rate
        np.testing.assert_allclose(f, cfg.rate * mid, atol=1.0)
        assert f.min() > -5e6 and f.max() < 5e6
        assert f.max() - f.min() == pytest.approx(10e6, rel=0.01)

    def test_compressed_width(self):
        # -3 dB delay width of the compressed pulse is 0.886 / B
        cfg = ChirpConfig(5e6, 20e-6, 80e6)
        s = generate_chirp(cfg).samples
        n = 4 * s.size
        y = np.fft.fftshift(np.fft.ifft(np.abs(np.fft.fft(s, n)) ** 2))
        width_m = irf_metrics(y, cfg.sample_rate, cfg.bandwidth).mainlobe_width_m
        assert 2 * width_m / C == pytest.approx(0.886 / cfg.bandwidth, rel=0.05)

    def test_undersampled_rejected(self):
        with pytest.raises(ValueError, match="below the chirp bandwidth"):
            ChirpConfig(10e6, 1e-6, 5e6)


class TestComplexSignal:
    def test_properties(self):
        s = ComplexSignal([1, 1j, -1, 0], 2.0, t0=1.0)
        assert s.duration == 2.0
        np.testing.assert_allclose(s.times, [1.0, 1.5, 2.0, 2.5])
        assert s.energy == 3.0 and s.mean_power == 0.75

    def test_rate_positive(self):
        with pytest.raises(ValueError):
            ComplexSignal([1], 0.0)
