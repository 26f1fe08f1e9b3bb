"""OFDM and chirp waveform synthesis, Gray-coded QAM mapping."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


class Constellation(enum.Enum):
    QPSK = 4
    QAM16 = 16
    QAM64 = 64
    QAM256 = 256

    @property
    def order(self) -> int:
        return self.value

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.value))

    @property
    def levels(self) -> np.ndarray:
        """Per-axis PAM amplitudes, unnormalized, highest first."""
        n = int(np.sqrt(self.value))
        return (n - 1) - 2.0 * np.arange(n)

    @property
    def scale(self) -> float:
        # mean |s|^2 of the square grid is 2 * mean(level^2)
        return float(np.sqrt(2.0 * np.mean(self.levels**2)))

    @property
    def alphabet(self) -> np.ndarray:
        """Symbol for every bit word, indexed by the word read MSB first."""
        half = self.bits_per_symbol // 2
        words = np.arange(self.value)
        i_idx = _gray_decode(words >> half)
        q_idx = _gray_decode(words & ((1 << half) - 1))
        lv = self.levels
        return (lv[i_idx] + 1j * lv[q_idx]) / self.scale

    @classmethod
    def parse(cls, name: str | Constellation) -> Constellation:
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(
                f"unknown constellation {name!r}; expected one of {[c.name for c in cls]}"
            ) from None


def _gray_decode(g):
    g = np.asarray(g, dtype=np.int64)
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def _gray_encode(b):
    b = np.asarray(b, dtype=np.int64)
    return b ^ (b >> 1)


def map_bits(bits, constellation: Constellation) -> np.ndarray:
    """Gray-map a bit sequence onto unit-energy constellation symbols.

    Each group of ``log2(order)`` bits is read MSB first; the first half of the
    group selects the in-phase level and the second half the quadrature level.
    For QPSK this gives 00 -> (1+1j)/sqrt(2), 01 -> (1-1j)/sqrt(2),
    10 -> (-1+1j)/sqrt(2), 11 -> (-1-1j)/sqrt(2).
    """
    bits = np.asarray(bits).astype(np.int64).ravel()
    k = constellation.bits_per_symbol
    if bits.size % k:
        raise ValueError(
            f"{bits.size} bits is not a multiple of {k} bits per {constellation.name} symbol"
        )
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    words = bits.reshape(-1, k) @ (1 << np.arange(k - 1, -1, -1))
    return constellation.alphabet[words]


def demap_symbols(symbols, constellation: Constellation) -> np.ndarray:
    """Hard minimum-distance decision back to bits.

    On a square grid the nearest point is found independently per axis, which
    is exactly the minimum Euclidean distance decision.
    """
    s = np.asarray(symbols, dtype=complex).ravel() * constellation.scale
    n = int(np.sqrt(constellation.order))
    half = constellation.bits_per_symbol // 2

    def axis_index(v):
        # levels are (n-1) - 2*idx
        idx = np.rint(((n - 1) - v) / 2.0)
        return np.clip(idx, 0, n - 1).astype(np.int64)

    gi = _gray_encode(axis_index(s.real))
    gq = _gray_encode(axis_index(s.imag))
    words = (gi << half) | gq
    k = constellation.bits_per_symbol
    return ((words[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8).ravel()


@dataclass(frozen=True, eq=False)
class ComplexSignal:
    """Uniformly sampled complex baseband sequence.

    ``t0`` is the time of the first sample. ``band`` optionally records the
    occupied baseband interval ``(f_low, f_high)`` in Hz and ``nulls`` the
    frequencies of empty carriers inside it.
    """

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0
    band: tuple[float, float] | None = None
    nulls: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    @property
    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)

    @property
    def mean_power(self) -> float:
        return self.energy / self.samples.size


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM numerology.

    Active subcarriers are split around DC with the DC bin left empty; when
    ``m_active == m_fft`` every bin is used. ``channel_bandwidth`` is
    metadata only, resolution follows the occupied bandwidth.
    """

    m_fft: int = 64
    delta_f: float = 120e3
    m_active: int = 52
    cp_samples: int = 12
    constellation: Constellation = Constellation.QPSK
    channel_bandwidth: float | None = 40e6

    def __post_init__(self):
        object.__setattr__(self, "constellation", Constellation.parse(self.constellation))
        if self.m_fft < 1 or self.m_active < 1:
            raise ValueError("m_fft and m_active must be positive")
        if self.m_active > self.m_fft:
            raise ValueError(f"m_active={self.m_active} exceeds m_fft={self.m_fft}")
        if self.cp_samples < 0:
            raise ValueError("cp_samples must be non-negative")
        if not self.delta_f > 0:
            raise ValueError("delta_f must be positive")

    @property
    def sample_rate(self) -> float:
        return self.m_fft * self.delta_f

    @property
    def symbol_duration(self) -> float:
        return 1.0 / self.delta_f

    @property
    def cp_duration(self) -> float:
        return self.cp_samples / self.sample_rate

    @property
    def pulse_duration(self) -> float:
        """Symbol plus cyclic prefix."""
        return (self.m_fft + self.cp_samples) / self.sample_rate

    @property
    def cp_fraction(self) -> float:
        return self.cp_samples / self.m_fft

    @property
    def occupied_bandwidth(self) -> float:
        return self.m_active * self.delta_f

    @property
    def samples_per_symbol(self) -> int:
        return self.m_fft + self.cp_samples

    @property
    def bits_per_ofdm_symbol(self) -> int:
        return self.m_active * self.constellation.bits_per_symbol

    @property
    def subcarrier_indices(self) -> np.ndarray:
        """Signed subcarrier numbers in ascending frequency order."""
        if self.m_active == self.m_fft:
            return np.arange(self.m_fft) - self.m_fft // 2
        n_pos = (self.m_active + 1) // 2
        n_neg = self.m_active - n_pos
        return np.concatenate([np.arange(-n_neg, 0), np.arange(1, n_pos + 1)])

    @property
    def fft_bins(self) -> np.ndarray:
        return self.subcarrier_indices % self.m_fft

    @property
    def band(self) -> tuple[float, float]:
        idx = self.subcarrier_indices
        return ((idx[0] - 0.5) * self.delta_f, (idx[-1] + 0.5) * self.delta_f)

    @property
    def nulls(self) -> tuple[float, ...]:
        """Empty carrier frequencies inside the band (the DC carrier)."""
        return () if self.m_active == self.m_fft else (0.0,)

    def with_(self, **changes) -> OfdmConfig:
        return replace(self, **changes)


def cp_samples_for_fraction(m_fft: int, fraction: float) -> int:
    """Nearest whole number of CP samples for a CP/symbol ratio."""
    return int(round(m_fft * fraction))


# Communication-standard numerology (64-point FFT, 52 used, 12-sample CP).
BASELINE_PROFILE = OfdmConfig()
# Same numerology with the CP given as 6.57 % of the symbol.
BASELINE_SHORT_CP = BASELINE_PROFILE.with_(cp_samples=cp_samples_for_fraction(64, 0.0657))
# 1024 used subcarriers, twice oversampled, no CP: the IRF comparison profile.
IRF_PROFILE = OfdmConfig(m_fft=2048, delta_f=120e3, m_active=1024, cp_samples=0,
                         channel_bandwidth=None)


def ofdm_modulate(symbols, config: OfdmConfig) -> ComplexSignal:
    """Load symbols onto subcarriers, unitary IDFT, prepend cyclic prefix.

    Symbols fill the active subcarriers in ascending frequency order, one OFDM
    symbol per ``m_active`` inputs. The output carries the occupied band.
    """
    s = np.asarray(symbols, dtype=complex).ravel()
    if s.size == 0 or s.size % config.m_active:
        raise ValueError(
            f"{s.size} symbols is not a positive multiple of m_active={config.m_active}"
        )
    blocks = s.reshape(-1, config.m_active)
    grid = np.zeros((blocks.shape[0], config.m_fft), dtype=complex)
    grid[:, config.fft_bins] = blocks
    body = np.fft.ifft(grid, axis=1, norm="ortho")
    cp = config.cp_samples
    if cp:
        body = np.concatenate([body[:, config.m_fft - cp:], body], axis=1)
    return ComplexSignal(body.ravel(), config.sample_rate, 0.0, config.band, config.nulls)


def ofdm_demodulate(signal, config: OfdmConfig) -> np.ndarray:
    """Strip the CP and return the active-subcarrier values, symbol by symbol."""
    x = np.asarray(getattr(signal, "samples", signal), dtype=complex).ravel()
    n = config.samples_per_symbol
    if x.size % n:
        raise ValueError(f"{x.size} samples is not a multiple of {n} samples per symbol")
    body = x.reshape(-1, n)[:, config.cp_samples:]
    spec = np.fft.fft(body, axis=1, norm="ortho")
    return spec[:, config.fft_bins].ravel()


def strip_cp(signal: ComplexSignal, config: OfdmConfig) -> ComplexSignal:
    """Drop the cyclic prefix of a single OFDM symbol."""
    body = signal.samples[config.cp_samples:config.cp_samples + config.m_fft]
    t0 = signal.t0 + config.cp_samples / signal.sample_rate
    return ComplexSignal(body, signal.sample_rate, t0, signal.band, signal.nulls)


def random_ofdm_symbol(config: OfdmConfig, rng) -> tuple[np.ndarray, ComplexSignal]:
    """Random bits on one OFDM symbol; returns ``(bits, signal)``."""
    bits = rng.integers(0, 2, config.bits_per_ofdm_symbol)
    return bits, ofdm_modulate(map_bits(bits, config.constellation), config)


@dataclass(frozen=True)
class ChirpConfig:
    bandwidth: float
    pulse_length: float
    sample_rate: float

    def __post_init__(self):
        if not (self.bandwidth > 0 and self.pulse_length > 0):
            raise ValueError("chirp bandwidth and pulse length must be positive")
        if self.sample_rate < self.bandwidth:
            raise ValueError(
                f"sample_rate {self.sample_rate:g} Hz is below the chirp bandwidth "
                f"{self.bandwidth:g} Hz"
            )

    @property
    def rate(self) -> float:
        return self.bandwidth / self.pulse_length

    @property
    def n_samples(self) -> int:
        return int(round(self.pulse_length * self.sample_rate))


def generate_chirp(config: ChirpConfig) -> ComplexSignal:
    """Unit-modulus linear FM pulse sampled on ``[-Tp/2, Tp/2)``."""
    n = config.n_samples
    t = (np.arange(n) - n / 2) / config.sample_rate
    samples = np.exp(1j * np.pi * config.rate * t**2)
    half = config.bandwidth / 2
    return ComplexSignal(samples, config.sample_rate, float(t[0]), (-half, half))
