"""Range sidelobes of a long random OFDM symbol.

Matched filtering a random symbol leaves a noise-like sidelobe floor whose
level depends on the constellation: constant-modulus QPSK gives a clean
sinc, 256-QAM amplitude spread raises the floor. Zero-forcing divides the
data out and leaves the band-limited impulse for either constellation.

Run: python3 demos/01_irf_sidelobes.py  (writes demo_out/irf.png)
"""

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from isacsar._common import C
from isacsar.compression import (CompressionMethod, far_sidelobe_floor_db, irf_metrics,
                                 simulate_irf)
from isacsar.waveform import IRF_PROFILE, Constellation

OUT = Path("demo_out")
OUT.mkdir(exist_ok=True)
fs, band = IRF_PROFILE.sample_rate, IRF_PROFILE.occupied_bandwidth

# %% compress one symbol per constellation with both filters
curves = {}
for const in (Constellation.QPSK, Constellation.QAM256):
    cfg = IRF_PROFILE.with_(constellation=const)
    for method in (CompressionMethod.matched(), CompressionMethod.zero_forcing()):
        y = simulate_irf(cfg, method, np.random.default_rng(1))
        m = irf_metrics(y, fs, band)
        floor = far_sidelobe_floor_db(y, fs, band)
        print(f"{const.name:>7} {method.kind:>8}: PSLR {m.pslr_db:6.2f} dB, "
              f"far floor {floor:6.2f} dB, width {m.mainlobe_width_m:.2f} m")
        curves[const.name, method.kind] = y

# %% plot magnitude against slant range offset
fig, ax = plt.subplots(figsize=(8, 4))
for (const, kind), y in curves.items():
    lag = (np.arange(y.size) - y.size // 2) * C / 2 / fs
    ax.plot(lag, 20 * np.log10(np.abs(y) / np.abs(y).max() + 1e-12), lw=0.8,
            label=f"{const} {kind}")
ax.set(xlim=(-300, 300), ylim=(-70, 3), xlabel="range offset [m]", ylabel="|IRF| [dB]")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "irf.png", dpi=120)
print(f"saved {OUT / 'irf.png'}")
