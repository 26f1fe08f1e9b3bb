"""Radar and communication KPIs over EIRP and snow depth.

NESZ falls one dB per dB of EIRP and rises by twice the one-way snow loss;
the downlink BER follows the one-way loss only.

Run: python3 demos/03_nesz_ber_tradeoff.py  (writes demo_out/kpi.png)
"""

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from isacsar.analysis import KpiSweepSpec, PulseDefinition, ber_sweep
from isacsar.channel import SnowModel
from isacsar.waveform import BASELINE_PROFILE

OUT = Path("demo_out")
OUT.mkdir(exist_ok=True)
snow = SnowModel(10.0)  # assumed extinction, dB per metre

# %% sweeps
by_eirp = ber_sweep(KpiSweepSpec("eirp", 0, 23, 1, snow=snow, depth=3.0, n_tau=1000),
                    BASELINE_PROFILE, 100_000, seed=0, workers=4)
by_depth = ber_sweep(KpiSweepSpec("snow_depth", 0, 5, 0.25, snow=snow, n_tau=1000),
                     BASELINE_PROFILE, 100_000, seed=0, workers=4)
for r in by_depth[::4]:
    print(f"depth {r.value:4.2f} m: NESZ {r.nesz_db:7.2f} dB, BER {r.ber:.2e}")

# %% symbol-based and frame-based pulses give the same NESZ
for n in (1, 10, 100):
    spec = KpiSweepSpec("eirp", 23, 23, 1, pulse=PulseDefinition.frame_based(n),
                        n_tau=1000 // n, resolutions=(24.0, 0.36))
    print(f"{n:4d} symbols per pulse: NESZ {ber_sweep(spec, BASELINE_PROFILE, 1000)[0].nesz_db:.6f} dB")

# %% plot
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, rows, label in ((axes[0], by_eirp, "EIRP [dBm]"), (axes[1], by_depth, "snow depth [m]")):
    x = [r.value for r in rows]
    ax.plot(x, [r.nesz_db for r in rows], "b-")
    ax.set(xlabel=label, ylabel="NESZ [dB]")
    ax2 = ax.twinx()
    ax2.semilogy(x, [max(r.ber, 1e-7) for r in rows], "r.-")
    ax2.set_ylabel("BER")
fig.tight_layout()
fig.savefig(OUT / "kpi.png", dpi=120)
print(f"saved {OUT / 'kpi.png'}")
