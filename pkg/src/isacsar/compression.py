"""Range compression (matched filter, zero forcing, regularized ZF) and IRF metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from ._common import C, db2lin
from .channel import RangeCompressedMatrix, RawDataMatrix, _run_row_blocks, pulse_waveforms
from .waveform import ComplexSignal, OfdmConfig, map_bits, ofdm_modulate

MATCHED = "matched"
ZERO_FORCING = "zf"
REGULARIZED_ZF = "rzf"

SINGULAR_FLOOR = 1e-12


class SingularSpectrumError(ValueError):
    """Reference spectrum too small on an occupied bin for plain zero forcing."""


@dataclass(frozen=True)
class CompressionMethod:
    """Compression filter choice.

    For regularized ZF, ``k`` is a real, non-negative floor added to the
    reference spectrum magnitude. When ``k`` is None it is derived from
    ``snr_db`` as ``rms|X| / SNR``.
    """

    kind: str = MATCHED
    k: float | None = None
    snr_db: float | None = None

    def __post_init__(self):
        kind = str(self.kind).lower().replace("_", "").replace("-", "")
        aliases = {"matched": MATCHED, "mf": MATCHED, "zf": ZERO_FORCING,
                   "zeroforcing": ZERO_FORCING, "rzf": REGULARIZED_ZF,
                   "regularizedzf": REGULARIZED_ZF}
        if kind not in aliases:
            raise ValueError(f"unknown compression method {self.kind!r}")
        object.__setattr__(self, "kind", aliases[kind])
        if self.k is not None and self.k < 0:
            raise ValueError("k must be non-negative")
        if self.kind == REGULARIZED_ZF and self.k is None and self.snr_db is None:
            raise ValueError("regularized ZF needs k or snr_db")

    @classmethod
    def matched(cls):
        return cls(MATCHED)

    @classmethod
    def zero_forcing(cls):
        return cls(ZERO_FORCING)

    @classmethod
    def regularized(cls, k=None, snr_db=None):
        return cls(REGULARIZED_ZF, k, snr_db)


def occupied_mask(reference: ComplexSignal, n: int) -> np.ndarray:
    """Bins of an ``n``-point FFT inside the reference's band, minus any bin
    that lands exactly on an empty carrier."""
    if reference.band is None:
        return np.ones(n, dtype=bool)
    f = sp_fft.fftfreq(n, 1.0 / reference.sample_rate)
    lo, hi = reference.band
    mask = (f >= lo) & (f <= hi)
    tol = 1e-9 * reference.sample_rate / n
    for f_null in reference.nulls:
        mask &= np.abs(f - f_null) > tol
    return mask


def compression_filter(reference: ComplexSignal, n: int, method: CompressionMethod) -> np.ndarray:
    """Frequency response applied to each row's ``n``-point spectrum."""
    if len(reference) > n:
        raise ValueError(f"reference of {len(reference)} samples exceeds fast-time length {n}")
    X = sp_fft.fft(reference.samples, n)
    occ = occupied_mask(reference, n)
    H = np.zeros(n, dtype=complex)
    if method.kind == MATCHED:
        H[occ] = np.conj(X[occ])
        return H
    mag = np.abs(X[occ])
    if method.kind == ZERO_FORCING:
        peak = mag.max() if mag.size else 0.0
        if mag.size == 0 or mag.min() < SINGULAR_FLOOR * peak:
            raise SingularSpectrumError(
                "reference spectrum vanishes on an occupied bin "
                f"(min/max = {mag.min() / peak if peak else 0:.3g}); "
                "use CompressionMethod.regularized(k) instead"
            )
        H[occ] = 1.0 / X[occ]
        return H
    k = method.k
    if k is None:
        k = np.sqrt(np.mean(mag**2)) / db2lin(method.snr_db)
    # 1 / (X + k) with k added along the phase of X: a floor on |X|
    nz = mag > 0
    idx = np.flatnonzero(occ)[nz]
    H[idx] = np.conj(X[idx]) / (mag[nz] * (mag[nz] + k))
    return H


def range_compress(rx: RawDataMatrix, reference,
                   method: CompressionMethod | None = None, workers: int = 1
                   ) -> RangeCompressedMatrix:
    """Compress every pulse against ``reference`` in the frequency domain.

    ``reference`` is a single ComplexSignal or one per pulse. Rows are
    processed with an FFT of the fast-time length (circular correlation);
    bins outside the reference band are zeroed. Output column ``n``
    corresponds to delay ``rx.fast_time_origin - reference.t0 + n/fs``.
    """
    method = method or CompressionMethod.matched()
    refs = pulse_waveforms(reference, rx.n_pulses)
    reference = refs[0]
    if not np.isclose(reference.sample_rate, rx.sample_rate, rtol=1e-12, atol=0):
        factor = rx.sample_rate / reference.sample_rate
        raise ValueError(
            f"reference sample rate {reference.sample_rate:g} Hz differs from data "
            f"sample rate {rx.sample_rate:g} Hz (resample reference by {factor:.6g})"
        )
    n = rx.n_fast
    filters = {}
    for r in refs:
        if id(r) not in filters:
            filters[id(r)] = compression_filter(r, n, method)
    if len(filters) == 1:
        H = filters[id(reference)]

        def rows(lo, hi):
            return sp_fft.ifft(sp_fft.fft(rx.data[lo:hi], axis=1) * H, axis=1)
    else:
        H = np.stack([filters[id(r)] for r in refs])

        def rows(lo, hi):
            return sp_fft.ifft(sp_fft.fft(rx.data[lo:hi], axis=1) * H[lo:hi], axis=1)

    data = _run_row_blocks(rows, rx.n_pulses, workers)
    return RangeCompressedMatrix(data, rx.sample_rate, rx.fast_time_origin - reference.t0,
                                 rx.trajectory)


@dataclass(frozen=True)
class IrfMetrics:
    pslr_db: float
    islr_db: float
    mainlobe_width_m: float
    peak_position: float


def _parabolic(mag, i):
    if 0 < i < mag.size - 1:
        a, b, c = mag[i - 1], mag[i], mag[i + 1]
        den = a - 2 * b + c
        if den != 0:
            return 0.5 * (a - c) / den
    return 0.0


def _crossing(mag, i, level, step):
    """Fractional index where ``mag`` first drops below ``level`` walking by ``step``."""
    j = i
    while 0 <= j + step < mag.size and mag[j + step] >= level:
        j += step
    if not 0 <= j + step < mag.size:
        return float(j)
    a, b = mag[j], mag[j + step]
    return j + step * (a - level) / (a - b)


def _mainlobe_edges(mag, i, max_half):
    lo = i
    while lo > 0 and i - lo < max_half and mag[lo - 1] < mag[lo]:
        lo -= 1
    hi = i
    while hi < mag.size - 1 and hi - i < max_half and mag[hi + 1] < mag[hi]:
        hi += 1
    return lo, hi


def irf_metrics(compressed, sample_rate: float, occupied_bandwidth: float,
                t0: float = 0.0) -> IrfMetrics:
    """PSLR, ISLR, -3 dB width and peak position of a single-peak response.

    The mainlobe extends from the peak to the first local minimum on each
    side (at most 1.5 resolution cells). The -3 dB width is interpolated
    linearly between samples and is never reported below one sample.
    """
    y = np.asarray(compressed, dtype=complex).ravel()
    mag = np.abs(y)
    i = int(np.argmax(mag))
    peak = mag[i]
    if peak == 0 or peak < db2lin(10.0 / 2) * np.median(mag):
        raise ValueError("no peak at least 10 dB above the median; degenerate IRF input")
    cell = sample_rate / occupied_bandwidth
    lo, hi = _mainlobe_edges(mag, i, max(1, int(np.ceil(1.5 * cell))))
    side = np.concatenate([mag[:lo], mag[hi + 1:]])
    main_e = np.sum(mag[lo:hi + 1] ** 2)
    side_e = np.sum(side**2)
    with np.errstate(divide="ignore"):
        pslr = 20 * np.log10(side.max() / peak) if side.size else -np.inf
        islr = 10 * np.log10(side_e / main_e)
    level = peak / np.sqrt(2)
    width = _crossing(mag, i, level, +1) - _crossing(mag, i, level, -1)
    width = max(width, 1.0) / sample_rate
    pos = t0 + (i + _parabolic(mag, i)) / sample_rate
    return IrfMetrics(float(pslr), float(islr), C / 2 * width, float(pos))


def far_sidelobe_floor_db(compressed, sample_rate: float, occupied_bandwidth: float,
                          cells: float = 8.0) -> float:
    """Mean sidelobe power more than ``cells`` resolution cells from the peak, in dB
    relative to the peak power."""
    mag2 = np.abs(np.asarray(compressed).ravel()) ** 2
    i = int(np.argmax(mag2))
    far = np.abs(np.arange(mag2.size) - i) > cells * sample_rate / occupied_bandwidth
    return float(10 * np.log10(np.mean(mag2[far]) / mag2[i]))


def simulate_irf(config: OfdmConfig, method: CompressionMethod, rng,
                 delay_samples: int = 0) -> np.ndarray:
    """Compressed response of one random OFDM symbol from a noiseless point target.

    The echo is CP-stripped with known timing, which turns the target delay
    (up to the CP length) into a circular shift of the symbol body. The
    returned vector is centred on the target.
    """
    if delay_samples > max(config.cp_samples, 0) and delay_samples != 0:
        raise ValueError("delay must not exceed the cyclic prefix")
    bits = rng.integers(0, 2, config.bits_per_ofdm_symbol)
    body_cfg = config.with_(cp_samples=0)
    ref = ofdm_modulate(map_bits(bits, config.constellation), body_cfg)
    echo = np.roll(ref.samples, delay_samples)
    rc = range_compress(RawDataMatrix(echo, ref.sample_rate), ref, method)
    return np.fft.fftshift(np.roll(rc.data[0], -delay_samples))
