"""OFDM acquisitions emulated from range-compressed chirp data."""

from __future__ import annotations

import csv
from fractions import Fraction

import numpy as np
from scipy import fft as sp_fft

from .channel import RangeCompressedMatrix, RawDataMatrix, _run_row_blocks
from .geometry import Trajectory
from .waveform import ComplexSignal


class UnsupportedOperationError(ValueError):
    """Requested resampling is outside what slow-time decimation can do."""


def emulate_ofdm_from_chirp(rc_chirp: RangeCompressedMatrix, ofdm_pulse: ComplexSignal,
                            workers: int = 1) -> RawDataMatrix:
    """Convolve each chirp-compressed row with an OFDM pulse.

    The compressed chirp rows act as a band-limited channel impulse
    response, so the result is what an OFDM radar would have received. The
    linear convolution is computed in full and cropped to the input length;
    the output fast-time origin is the input origin plus ``ofdm_pulse.t0``,
    which keeps matched filtering with the same pulse aligned to the input
    delay axis. Content in the last ``len(ofdm_pulse) - 1`` input samples
    spills past the window and is cut.
    """
    if not np.isclose(ofdm_pulse.sample_rate, rc_chirp.sample_rate, rtol=1e-12, atol=0):
        factor = rc_chirp.sample_rate / ofdm_pulse.sample_rate
        raise ValueError(
            f"OFDM pulse sampled at {ofdm_pulse.sample_rate:g} Hz but chirp data at "
            f"{rc_chirp.sample_rate:g} Hz; resample the pulse by a factor {factor:.6g}"
        )
    n = rc_chirp.n_fast
    n_full = n + len(ofdm_pulse) - 1
    n_fft = sp_fft.next_fast_len(n_full, real=False)
    G = sp_fft.fft(ofdm_pulse.samples, n_fft)

    def rows(lo, hi):
        X = sp_fft.fft(rc_chirp.data[lo:hi], n_fft, axis=1)
        return sp_fft.ifft(X * G, axis=1)[:, :n]

    data = _run_row_blocks(rows, rc_chirp.n_pulses, workers)
    return RawDataMatrix(data, rc_chirp.sample_rate,
                         rc_chirp.fast_time_origin + ofdm_pulse.t0, rc_chirp.trajectory)


def decimation_indices(n_pulses: int, ratio: Fraction) -> np.ndarray:
    """Source pulses kept when slowing the PRF by ``ratio = source / target``."""
    p, q = ratio.numerator, ratio.denominator
    n_out = (n_pulses - 1) * q // p + 1
    return np.arange(n_out) * p // q


def adapt_prf(rc: RawDataMatrix, trajectory: Trajectory, target_prf: float,
              max_denominator: int = 1000):
    """Reduce the PRF by keeping a subset of pulses.

    For an integer ratio ``k`` every ``k``-th pulse is kept. For a rational
    ratio ``p/q`` output pulse ``j`` is source pulse ``floor(j p / q)``, the
    latest one not after the target slow time; the resulting trajectory
    keeps the true pulse times and the nominal PRI becomes ``1/target_prf``.
    Increasing the PRF would need slow-time interpolation and is refused.
    """
    if rc.n_pulses != trajectory.n_pulses:
        raise ValueError(f"{rc.n_pulses} data rows but trajectory has {trajectory.n_pulses} pulses")
    if not target_prf > 0:
        raise ValueError("target_prf must be positive")
    exact = trajectory.prf / target_prf
    ratio = Fraction(exact).limit_denominator(max_denominator)
    if abs(float(ratio) - exact) > 1e-9 * exact:
        raise UnsupportedOperationError(
            f"PRF ratio {exact:.12g} is not a rational number with denominator "
            f"<= {max_denominator}"
        )
    if ratio < 1:
        raise UnsupportedOperationError(
            f"raising the PRF from {trajectory.prf:g} Hz to {target_prf:g} Hz needs "
            "slow-time interpolation, which is not supported"
        )
    if ratio == 1:
        return rc, trajectory
    idx = decimation_indices(rc.n_pulses, ratio)
    traj = Trajectory(trajectory.tau[idx], trajectory.positions[idx], 1.0 / target_prf)
    return rc.replace_data(rc.data[idx], trajectory=traj), traj


def read_iq_csv(path, n_fast: int, sample_rate: float, fast_time_origin: float = 0.0,
                compressed: bool = False, trajectory: Trajectory | None = None):
    """Load an I/Q dump with one ``i,q`` sample per line into a matrix.

    Samples are taken row-major, ``n_fast`` per pulse. An optional header
    line whose first field is not numeric is skipped.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    if any(len(r) != 2 for r in rows):
        raise ValueError(f"{path}: every line must hold exactly two values, i and q")
    iq = np.array(rows, dtype=float)
    if iq.shape[0] == 0 or iq.shape[0] % n_fast:
        raise ValueError(f"{path}: {iq.shape[0]} samples is not a multiple of n_fast={n_fast}")
    data = (iq[:, 0] + 1j * iq[:, 1]).reshape(-1, n_fast)
    cls = RangeCompressedMatrix if compressed else RawDataMatrix
    return cls(data, sample_rate, fast_time_origin, trajectory)
