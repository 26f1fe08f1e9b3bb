"""Turn a chirp acquisition into an OFDM one and focus it.

The compressed chirp rows serve as a band-limited channel; convolving them
with an OFDM symbol gives the raw data an OFDM radar would have recorded.
Zero-forcing compression then returns the chirp image restricted to the
OFDM band, and dropping every other pulse emulates a slower frame rate.

Run: python3 demos/04_chirp_to_ofdm.py
"""

# %%
import numpy as np

from isacsar._common import C
from isacsar.channel import LinkBudget, fast_time_window, simulate_echoes
from isacsar.compression import CompressionMethod, range_compress
from isacsar.emulation import adapt_prf, emulate_ofdm_from_chirp
from isacsar.focusing import tdbp_focus
from isacsar.geometry import (BistaticGeometry, PointTarget, SceneGrid, make_linear_trajectory,
                              range_history)
from isacsar.waveform import BASELINE_PROFILE, ChirpConfig, generate_chirp, random_ofdm_symbol

carrier = 5.9e9
prf, n_pulses = 1000.0, 256
v = C / carrier / 4 * prf
traj = make_linear_trajectory([-v * (n_pulses - 1) / prf / 2, 0, 100], [v, 0, 0], prf, n_pulses)
geom = BistaticGeometry.monostatic(traj)
target = PointTarget([0.0, 100.0, 0.0])

# %% chirp acquisition with room for the longer OFDM symbol
chirp = generate_chirp(ChirpConfig(7e6, 4e-6, BASELINE_PROFILE.sample_rate))
origin, n_fast = fast_time_window(chirp, range_history(geom, target.position) / C)
raw = simulate_echoes(chirp, geom, [target], LinkBudget(), seed=1, fast_time_origin=origin,
                      n_fast=n_fast + BASELINE_PROFILE.samples_per_symbol)
rc_chirp = range_compress(raw, chirp)

# %% emulate, re-compress with zero forcing, halve the PRF
_, pulse = random_ofdm_symbol(BASELINE_PROFILE, np.random.default_rng(2))
ofdm_raw = emulate_ofdm_from_chirp(rc_chirp, pulse)
rc_ofdm = range_compress(ofdm_raw, pulse, CompressionMethod.zero_forcing())
rc_half, traj_half = adapt_prf(rc_ofdm, traj, 500.0)
print(f"{rc_ofdm.n_pulses} pulses at {traj.prf:g} Hz -> {rc_half.n_pulses} at {traj_half.prf:g} Hz")

# %% focus both versions around the target
grid = SceneGrid.centered(target.position[:2], 33, 21, 0.5, 3.0)
for name, rc, tr in (("full PRF", rc_ofdm, traj), ("half PRF", rc_half, traj_half)):
    img = tdbp_focus(rc, BistaticGeometry.monostatic(tr), grid, carrier, workers=4)
    i, j = np.unravel_index(np.argmax(np.abs(img.pixels)), grid.shape)
    print(f"{name}: peak at ({grid.x[i]:.1f}, {grid.y[j]:.1f}) m, "
          f"{20 * np.log10(np.abs(img.pixels).max()):.1f} dB")
