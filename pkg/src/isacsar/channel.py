"""Point-scatterer echo simulation: radar equation, snow loss, AWGN."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from ._common import C, K_BOLTZMANN, db2lin, dbm2watt, derive_rng
from .geometry import BistaticGeometry, PointTarget, Trajectory
from .waveform import ComplexSignal

EIRP_LIMIT_DBM = 23.0


@dataclass(frozen=True)
class LinkBudget:
    """Transmit/receive chain parameters.

    ``directivity_loss_db`` lumps the antenna pattern factor at scene centre
    and is applied once per pass through an antenna.
    """

    eirp_dbm: float = 23.0
    g_rx_dbi: float = 10.0
    noise_figure_db: float = 7.0
    carrier_frequency: float = 5.9e9
    temperature: float = 290.0
    directivity_loss_db: float = 0.0
    allow_eirp_override: bool = False

    def __post_init__(self):
        if self.eirp_dbm > EIRP_LIMIT_DBM and not self.allow_eirp_override:
            raise ValueError(
                f"EIRP {self.eirp_dbm} dBm exceeds the {EIRP_LIMIT_DBM} dBm limit; "
                "set allow_eirp_override to exceed it"
            )
        if not (self.carrier_frequency > 0 and self.temperature > 0):
            raise ValueError("carrier_frequency and temperature must be positive")

    @property
    def wavelength(self) -> float:
        return C / self.carrier_frequency

    @property
    def eirp_w(self) -> float:
        return float(dbm2watt(self.eirp_dbm))

    @property
    def effective_area(self) -> float:
        return float(db2lin(self.g_rx_dbi)) * self.wavelength**2 / (4 * np.pi)

    @property
    def n0(self) -> float:
        """Noise power spectral density in W/Hz."""
        return K_BOLTZMANN * self.temperature * float(db2lin(self.noise_figure_db))

    def noise_power(self, bandwidth: float) -> float:
        return self.n0 * bandwidth


@dataclass(frozen=True)
class SnowModel:
    """Uniform dry-snow extinction, in dB per metre one way."""

    extinction_db_per_m: float
    enabled: bool = True

    def __post_init__(self):
        if self.extinction_db_per_m < 0:
            raise ValueError("extinction_db_per_m must be non-negative")

    def one_way_loss_db(self, depth: float) -> float:
        return self.extinction_db_per_m * depth if self.enabled else 0.0

    def two_way_loss_db(self, depth: float) -> float:
        return 2.0 * self.one_way_loss_db(depth)


def received_power(budget: LinkBudget, rcs: float, range_one_way, snow: SnowModel | None = None,
                   depth: float = 0.0, range_rx=None):
    """Radar-equation echo power in watts.

    With ``range_rx`` given, ``range_one_way`` is the transmitter leg and the
    two legs enter separately (bistatic form).
    """
    r_tx = np.asarray(range_one_way, dtype=float)
    r_rx = r_tx if range_rx is None else np.asarray(range_rx, dtype=float)
    if np.any(r_tx <= 0) or np.any(r_rx <= 0):
        raise ValueError("range must be positive")
    loss_db = 2.0 * budget.directivity_loss_db
    if snow is not None:
        loss_db = loss_db + snow.two_way_loss_db(depth)
    p = (budget.eirp_w * rcs * budget.effective_area
         / ((4 * np.pi) ** 2 * r_tx**2 * r_rx**2) * db2lin(-loss_db))
    return float(p) if np.ndim(p) == 0 else p


def unambiguous_range(prf: float) -> float:
    if not prf > 0:
        raise ValueError("prf must be positive")
    return C / (2.0 * prf)


@dataclass(frozen=True, eq=False)
class RawDataMatrix:
    """Fast-time x slow-time samples, one row per pulse.

    Column ``n`` of a raw matrix is received at time
    ``fast_time_origin + n / sample_rate`` after the pulse reference instant.
    """

    data: np.ndarray
    sample_rate: float
    fast_time_origin: float = 0.0
    trajectory: Trajectory | None = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.ndim == 1:
            d = d[None, :]
        if d.ndim != 2:
            raise ValueError("data must be a 2-D pulses x samples matrix")
        object.__setattr__(self, "data", d)
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.trajectory is not None and self.trajectory.n_pulses != d.shape[0]:
            raise ValueError(
                f"{d.shape[0]} data rows but trajectory has {self.trajectory.n_pulses} pulses"
            )

    @property
    def n_pulses(self) -> int:
        return self.data.shape[0]

    @property
    def n_fast(self) -> int:
        return self.data.shape[1]

    @property
    def fast_time(self) -> np.ndarray:
        return self.fast_time_origin + np.arange(self.n_fast) / self.sample_rate

    def replace_data(self, data, **changes):
        kw = dict(sample_rate=self.sample_rate, fast_time_origin=self.fast_time_origin,
                  trajectory=self.trajectory)
        kw.update(changes)
        return type(self)(data, **kw)


class RangeCompressedMatrix(RawDataMatrix):
    """Range-compressed rows; column ``n`` corresponds to delay
    ``fast_time_origin + n / sample_rate``."""


def fast_time_window(waveform: ComplexSignal, delays, guard: int = 8):
    """``(origin, n_fast)`` enclosing every echo plus ``guard`` samples each side."""
    fs = waveform.sample_rate
    delays = np.asarray(delays, dtype=float)
    start = np.floor((delays.min() + waveform.t0) * fs) - guard
    stop = np.ceil((delays.max() + waveform.t0) * fs) + len(waveform) + guard
    n_fast = sp_fft.next_fast_len(int(stop - start), real=False)
    return start / fs, n_fast


def pulse_waveforms(waveform, n_pulses: int) -> list[ComplexSignal]:
    """Expand a single waveform, or validate a per-pulse sequence of them."""
    if isinstance(waveform, ComplexSignal):
        return [waveform] * n_pulses
    waves = list(waveform)
    if len(waves) != n_pulses:
        raise ValueError(f"{len(waves)} waveforms given for {n_pulses} pulses")
    first = waves[0]
    for w in waves[1:]:
        if (len(w) != len(first) or w.sample_rate != first.sample_rate or w.t0 != first.t0):
            raise ValueError("per-pulse waveforms must share length, sample rate and t0")
    return waves


def simulate_echoes(waveform, geom: BistaticGeometry, targets,
                    budget: LinkBudget, snow: SnowModel | None = None, seed: int = 0, *,
                    noise: bool = True, fast_time_origin: float | None = None,
                    n_fast: int | None = None, workers: int = 1) -> RawDataMatrix:
    """Received baseband echoes for every pulse of ``geom``.

    ``waveform`` is one ComplexSignal for every pulse, or a sequence with one
    per pulse (e.g. fresh data symbols each time). Each pulse waveform is
    scaled to unit mean power over its duration, so a target
    contributes ``sqrt(P_RX)`` amplitude and the compressed SNR equals
    ``P_RX * T_p / N0``. Delays are applied as a linear phase in the frequency
    domain (sub-sample accurate, circular over the window) together with the
    carrier phase ``exp(-j 2 pi f_c tau)``. Noise has variance
    ``N0 * sample_rate`` per complex sample and is drawn from a per-pulse
    stream, so the result does not depend on ``workers``.
    """
    targets = list(targets)
    n_pulses = geom.n_pulses
    waves = pulse_waveforms(waveform, n_pulses)
    waveform = waves[0]
    fs = waveform.sample_rate
    delays = np.empty((n_pulses, len(targets)))
    amps = np.empty((n_pulses, len(targets)))
    for q, tgt in enumerate(targets):
        r_tx, r_rx = geom.leg_ranges(tgt.position)
        delays[:, q] = (r_tx + r_rx) / C
        depth = tgt.burial_depth
        amps[:, q] = np.sqrt(received_power(budget, tgt.rcs, r_tx, snow, depth, range_rx=r_rx))

    if fast_time_origin is None or n_fast is None:
        if not targets:
            raise ValueError("fast-time window must be given when there are no targets")
        o, n = fast_time_window(waveform, delays)
        fast_time_origin = o if fast_time_origin is None else fast_time_origin
        n_fast = n if n_fast is None else n_fast
    window_end = fast_time_origin + n_fast / fs
    for q in range(len(targets)):
        lo = delays[:, q].min() + waveform.t0
        hi = delays[:, q].max() + waveform.t0 + waveform.duration
        if lo < fast_time_origin - 0.5 / fs or hi > window_end + 0.5 / fs:
            raise ValueError(
                f"target {q} at {targets[q].position.tolist()} echoes over "
                f"[{lo:.6g}, {hi:.6g}] s, outside the fast-time window "
                f"[{fast_time_origin:.6g}, {window_end:.6g}] s"
            )

    spectra = {}
    freqs = sp_fft.fftfreq(n_fast, 1.0 / fs)
    # waveform sample 0 sits at fast time tau + t0; window sample 0 at origin
    shift = delays + waveform.t0 - fast_time_origin
    carrier = np.exp(-2j * np.pi * budget.carrier_frequency * delays) * amps
    sigma = np.sqrt(budget.n0 * fs / 2.0)

    def rows(lo, hi):
        out = np.empty((hi - lo, n_fast), dtype=complex)
        for k in range(lo, hi):
            acc = np.zeros(n_fast, dtype=complex)
            for q in range(len(targets)):
                acc += carrier[k, q] * np.exp(-2j * np.pi * freqs * shift[k, q])
            w = waves[k]
            if id(w) not in spectra:
                spectra[id(w)] = sp_fft.fft(w.samples / np.sqrt(w.mean_power), n_fast)
            row = sp_fft.ifft(acc * spectra[id(w)])
            if noise:
                rng = derive_rng(seed, "channel", k)
                row = row + sigma * (rng.standard_normal(n_fast)
                                     + 1j * rng.standard_normal(n_fast))
            out[k - lo] = row
        return out

    data = _run_row_blocks(rows, n_pulses, workers)
    return RawDataMatrix(data, fs, fast_time_origin, geom.rx)


def _run_row_blocks(fn, n_rows, workers):
    workers = max(1, int(workers))
    if workers == 1 or n_rows < 2:
        return fn(0, n_rows)
    edges = np.linspace(0, n_rows, min(workers, n_rows) + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(fn, edges[:-1], edges[1:]))
    return np.concatenate(parts, axis=0)
