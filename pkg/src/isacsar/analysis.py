"""Link-budget KPIs: SNR chain, NESZ, resolutions and Monte-Carlo BER sweeps."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special, stats

from ._common import C, derive_rng, lin2db
from .channel import LinkBudget, SnowModel, received_power
from .geometry import slant_range
from .waveform import OfdmConfig, demap_symbols, map_bits, ofdm_demodulate, ofdm_modulate

# one OFDM symbol plus cyclic prefix, as used for the symbol-based radar pulse
SYMBOL_PULSE_DURATION = 8e-6


class PulseMode(enum.Enum):
    SYMBOL = "symbol"
    FRAME = "frame"


@dataclass(frozen=True)
class PulseDefinition:
    """Equivalent radar pulse built from OFDM symbols at full duty cycle.

    A symbol-based pulse is one OFDM symbol (``symbol_duration`` including
    CP) and repeats at ``1 / symbol_duration``. A frame-based pulse groups
    ``n_symbols`` consecutive symbols, so its length grows and its PRF drops
    by that factor.
    """

    mode: PulseMode = PulseMode.SYMBOL
    n_symbols: int = 1
    symbol_duration: float = SYMBOL_PULSE_DURATION

    def __post_init__(self):
        object.__setattr__(self, "mode", PulseMode(self.mode))
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be at least 1")
        if self.mode is PulseMode.SYMBOL and self.n_symbols != 1:
            raise ValueError("a symbol-based pulse has exactly one symbol")
        if not self.symbol_duration > 0:
            raise ValueError("symbol_duration must be positive")

    @classmethod
    def symbol_based(cls, symbol_duration: float = SYMBOL_PULSE_DURATION):
        return cls(PulseMode.SYMBOL, 1, symbol_duration)

    @classmethod
    def frame_based(cls, n_symbols: int, symbol_duration: float = SYMBOL_PULSE_DURATION):
        return cls(PulseMode.FRAME, n_symbols, symbol_duration)

    @classmethod
    def from_config(cls, config: OfdmConfig, n_symbols: int = 1):
        if n_symbols == 1:
            return cls.symbol_based(config.pulse_duration)
        return cls.frame_based(n_symbols, config.pulse_duration)

    @property
    def t_p(self) -> float:
        return self.n_symbols * self.symbol_duration

    @property
    def prf(self) -> float:
        return 1.0 / self.t_p

    @property
    def duty_cycle(self) -> float:
        return self.t_p * self.prf


def snr_range_compressed(p_rx, t_p, n0):
    """Matched-filter output SNR of one pulse, linear."""
    if np.any(np.asarray(p_rx) <= 0) or t_p <= 0 or n0 <= 0:
        raise ValueError("p_rx, t_p and n0 must be positive")
    return p_rx * t_p / n0


def snr_focused(snr_rc, n_tau: int):
    """Coherent gain of ``n_tau`` pulses on top of the per-pulse SNR."""
    if n_tau < 1:
        raise ValueError("n_tau must be at least 1")
    return snr_rc * n_tau


def resolutions(occupied_bandwidth: float, wavelength: float, aperture_length: float,
                range_m: float) -> tuple[float, float]:
    """Slant-range and azimuth resolution ``(c / 2B, lambda R / 2L)``."""
    if min(occupied_bandwidth, wavelength, aperture_length, range_m) <= 0:
        raise ValueError("all arguments must be positive")
    return C / (2.0 * occupied_bandwidth), wavelength * range_m / (2.0 * aperture_length)


@dataclass(frozen=True)
class ObservationGeometry:
    """Flat-earth side-looking geometry; the range used is the slant range
    to the scene centre."""

    altitude: float = 100.0
    off_nadir_deg: float = 45.0

    def __post_init__(self):
        if not self.altitude > 0:
            raise ValueError("altitude must be positive")
        if not 0 <= self.off_nadir_deg < 90:
            raise ValueError("off_nadir_deg must lie in [0, 90)")

    @property
    def slant_range(self) -> float:
        return float(slant_range(self.altitude, self.off_nadir_deg))


def _as_range(geometry) -> float:
    if isinstance(geometry, ObservationGeometry):
        return geometry.slant_range
    r = float(geometry)
    if not r > 0:
        raise ValueError("range must be positive")
    return r


def nesz(budget: LinkBudget, geometry, pulse: PulseDefinition, n_tau: int,
         resolutions: tuple[float, float], snow: SnowModel | None = None,
         depth: float = 0.0) -> float:
    """Noise-equivalent sigma zero in dB.

    The backscatter coefficient whose resolution cell, ``sigma0 * rho_rg *
    rho_az``, gives unit focused-image SNR. ``geometry`` is an
    ObservationGeometry or a slant range in metres.
    """
    rho_rg, rho_az = resolutions
    if not (rho_rg > 0 and rho_az > 0):
        raise ValueError("resolutions must be positive")
    r = _as_range(geometry)
    p = received_power(budget, rho_rg * rho_az, r, snow, depth)
    snr = snr_focused(snr_range_compressed(p, pulse.t_p, budget.n0), n_tau)
    return float(-lin2db(snr))


def q_function(x):
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def ber_qpsk_theory(ebn0_db):
    """Gray-coded QPSK bit error probability on AWGN."""
    return q_function(np.sqrt(2.0 * 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)))


@dataclass(frozen=True)
class BerEstimate:
    errors: int
    n_bits: int
    ci_low: float
    ci_high: float

    @property
    def ber(self) -> float:
        return self.errors / self.n_bits


def wilson_interval(errors: int, n_bits: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(errors), int(n_bits)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def simulate_ofdm_ber(config: OfdmConfig, esn0_db: float, n_bits: int, rng) -> BerEstimate:
    """Bit errors of the OFDM link at a per-subcarrier Es/N0.

    Random bits are mapped, OFDM modulated with CP, passed through a flat
    channel with AWGN, CP-stripped, equalized with the known channel and
    hard-demapped. The signal has unit power per active subcarrier, so the
    time-domain noise variance is ``m_fft / (m_active * Es/N0)`` per sample
    of the unitary transform.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be at least 1")
    per_sym = config.bits_per_ofdm_symbol
    n_sym = -(-int(n_bits) // per_sym)
    bits = rng.integers(0, 2, n_sym * per_sym, dtype=np.int8)
    tx = ofdm_modulate(map_bits(bits, config.constellation), config).samples
    noise = rng.standard_normal(tx.size) + 1j * rng.standard_normal(tx.size)
    if np.isfinite(esn0_db):
        sigma = np.sqrt(1.0 / (2.0 * 10.0 ** (esn0_db / 10.0)))
        rx = tx + sigma * noise
    else:
        rx = tx
    # genie equalization of a unit flat channel is the identity
    est = demap_symbols(ofdm_demodulate(rx, config), config.constellation)
    errors = int(np.count_nonzero(est[:n_bits] != bits[:n_bits]))
    lo, hi = wilson_interval(errors, n_bits)
    return BerEstimate(errors, int(n_bits), lo, hi)


def simulate_ber_awgn(config: OfdmConfig, ebn0_db: float, n_bits: int, rng) -> BerEstimate:
    esn0_db = ebn0_db + 10 * np.log10(config.constellation.bits_per_symbol)
    return simulate_ofdm_ber(config, esn0_db, n_bits, rng)


def comm_received_power(budget: LinkBudget, range_m: float, snow: SnowModel | None = None,
                        depth: float = 0.0) -> float:
    """One-way Friis power at an isotropic user, with one-way snow loss."""
    if not range_m > 0:
        raise ValueError("range must be positive")
    loss_db = budget.directivity_loss_db
    if snow is not None:
        loss_db += snow.one_way_loss_db(depth)
    return (budget.eirp_w * budget.effective_area / (4 * np.pi * range_m**2)
            * 10.0 ** (-loss_db / 10.0))


def comm_esn0_db(budget: LinkBudget, config: OfdmConfig, range_m: float,
                 snow: SnowModel | None = None, depth: float = 0.0) -> float:
    """Per-subcarrier Es/N0 of the downlink."""
    p = comm_received_power(budget, range_m, snow, depth)
    return float(lin2db(p / (budget.n0 * config.occupied_bandwidth)))


class SweepVariable(enum.Enum):
    EIRP = "eirp"
    ALTITUDE = "altitude"
    SNOW_DEPTH = "snow_depth"

    @classmethod
    def parse(cls, name) -> SweepVariable:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        key = {"snowdepth": "snow_depth", "depth": "snow_depth"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"unknown sweep variable {name!r}; expected one of {[v.value for v in cls]}"
            ) from None


@dataclass(frozen=True)
class KpiSweepSpec:
    """One swept parameter over ``start..stop`` (inclusive) with the rest fixed.

    ``resolutions`` fixes ``(rho_rg, rho_az)``; when None they follow the
    geometry at every point from the occupied bandwidth and
    ``aperture_length``.
    """

    variable: SweepVariable
    start: float
    stop: float
    step: float
    budget: LinkBudget = field(default_factory=LinkBudget)
    snow: SnowModel | None = None
    depth: float = 0.0
    geometry: ObservationGeometry = field(default_factory=ObservationGeometry)
    pulse: PulseDefinition = field(default_factory=PulseDefinition)
    n_tau: int = 1000
    aperture_length: float = 10.0
    resolutions: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "variable", SweepVariable.parse(self.variable))
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.stop < self.start:
            raise ValueError("sweep range is empty (stop < start)")
        if self.variable is SweepVariable.SNOW_DEPTH and self.snow is None:
            raise ValueError("a snow-depth sweep needs a SnowModel")

    @property
    def values(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)

    def point(self, value: float):
        """``(budget, geometry, depth)`` at one sweep value."""
        budget, geom, depth = self.budget, self.geometry, self.depth
        if self.variable is SweepVariable.EIRP:
            budget = replace(budget, eirp_dbm=float(value))
        elif self.variable is SweepVariable.ALTITUDE:
            geom = replace(geom, altitude=float(value))
        else:
            depth = float(value)
        return budget, geom, depth


@dataclass(frozen=True)
class KpiRow:
    variable: str
    value: float
    nesz_db: float
    ber: float | None = None
    ber_ci_low: float | None = None
    ber_ci_high: float | None = None


def _point_resolutions(spec: KpiSweepSpec, config: OfdmConfig, budget, geom):
    if spec.resolutions is not None:
        return spec.resolutions
    return resolutions(config.occupied_bandwidth, budget.wavelength, spec.aperture_length,
                       geom.slant_range)


def nesz_sweep(spec: KpiSweepSpec, config: OfdmConfig) -> list[KpiRow]:
    rows = []
    for v in spec.values:
        budget, geom, depth = spec.point(v)
        res = _point_resolutions(spec, config, budget, geom)
        rows.append(KpiRow(spec.variable.value, float(v),
                           nesz(budget, geom, spec.pulse, spec.n_tau, res, spec.snow, depth)))
    return rows


def ber_sweep(spec: KpiSweepSpec, config: OfdmConfig, n_bits: int, seed: int = 0,
              workers: int = 1) -> list[KpiRow]:
    """NESZ and Monte-Carlo BER at every sweep value.

    Every point draws its bits and noise from the same stream (common random
    numbers), so BER differences between points reflect the link budget and
    not sampling noise; with a fixed noise realization, a stronger signal can
    only remove bit errors.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be at least 1")

    def one(v):
        budget, geom, depth = spec.point(v)
        res = _point_resolutions(spec, config, budget, geom)
        n_db = nesz(budget, geom, spec.pulse, spec.n_tau, res, spec.snow, depth)
        esn0 = comm_esn0_db(budget, config, geom.slant_range, spec.snow, depth)
        est = simulate_ofdm_ber(config, esn0, n_bits, derive_rng(seed, "ber"))
        return KpiRow(spec.variable.value, float(v), n_db, est.ber, est.ci_low, est.ci_high)

    values = list(spec.values)
    workers = max(1, int(workers))
    if workers == 1:
        return [one(v) for v in values]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(one, values))


KPI_HEADER = ("variable", "value", "nesz_db", "ber", "ber_ci_low", "ber_ci_high")


def write_kpi_csv(path, rows) -> None:
    def fmt(x):
        return "" if x is None else repr(float(x))

    with open(path, "w", newline="") as fh:
        fh.write(",".join(KPI_HEADER) + "\n")
        for r in rows:
            fh.write(",".join([r.variable, fmt(r.value), fmt(r.nesz_db), fmt(r.ber),
                               fmt(r.ber_ci_low), fmt(r.ber_ci_high)]) + "\n")
