"""Command-line experiment runner.

Every subcommand reads a flat scenario config (see ``isacsar.config``),
applies ``--set`` overrides and writes its artifacts plus ``manifest.txt``
into ``--out``. The manifest is itself a valid config file: running it
again reproduces the same outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from pathlib import Path

import numpy as np
from scipy import fft as sp_fft

from . import __version__
from ._common import C, derive_rng
from .analysis import (KpiSweepSpec, ObservationGeometry, PulseDefinition, ber_qpsk_theory,
                       ber_sweep, nesz_sweep, simulate_ber_awgn, write_kpi_csv)
from .channel import (LinkBudget, RangeCompressedMatrix, SnowModel, fast_time_window,
                      simulate_echoes, unambiguous_range)
from .compression import (CompressionMethod, far_sidelobe_floor_db, irf_metrics,
                          range_compress, simulate_irf)
from .config import Config, ConfigError, load
from .emulation import adapt_prf, emulate_ofdm_from_chirp
from .fileio import read_matrix, write_image_csv, write_image_pgm, write_matrix
from .focusing import image_snr, tdbp_focus, tdbp_reference
from .geometry import (BistaticGeometry, PointTarget, SceneGrid, ground_offset,
                       make_linear_trajectory, range_history, read_trajectory_csv,
                       write_trajectory_csv)
from .waveform import ChirpConfig, OfdmConfig, generate_chirp, random_ofdm_symbol

COMMANDS = ("irf", "simulate", "focus", "nesz-sweep", "ber-sweep", "emulate", "selftest")


def git_blob_sha1(path) -> str:
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


class Run:
    """Resolved config, output directory and the inputs read so far."""

    def __init__(self, command, cfg: Config, out: Path, threads: int):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.inputs: list[tuple[str, str]] = []

    def record_input(self, label, path):
        self.inputs.append((label, git_blob_sha1(path)))

    def path(self, name) -> Path:
        return self.out / name

    def write_manifest(self):
        lines = [f"run.tool=isacsar {__version__}", f"run.command={self.command}"]
        lines += [f"run.input.{label}={digest}" for label, digest in self.inputs]
        lines += [f"{k}={v}" for k, v in self.cfg.text_items()]
        self.path("manifest.txt").write_text("\n".join(lines) + "\n")


# scenario construction ---------------------------------------------------------------

def ofdm_config(cfg: Config) -> OfdmConfig:
    return OfdmConfig(m_fft=cfg["ofdm.m_fft"], delta_f=cfg["ofdm.delta_f_hz"],
                      m_active=cfg["ofdm.m_active"], cp_samples=cfg["ofdm.cp_samples"],
                      constellation=cfg["ofdm.constellation"])


def link_budget(cfg: Config) -> LinkBudget:
    return LinkBudget(eirp_dbm=cfg["link.eirp_dbm"], g_rx_dbi=cfg["link.g_rx_dbi"],
                      noise_figure_db=cfg["link.noise_figure_db"],
                      carrier_frequency=cfg["link.carrier_frequency_hz"],
                      temperature=cfg["link.temperature_k"],
                      directivity_loss_db=cfg["link.directivity_loss_db"],
                      allow_eirp_override=cfg["link.allow_eirp_override"])


def snow_model(cfg: Config) -> SnowModel | None:
    if not cfg["snow.enabled"]:
        return None
    return SnowModel(cfg.require("snow.extinction_db_per_m"))


def target(cfg: Config) -> PointTarget:
    y = cfg["target.y_m"]
    if y is None:
        y = ground_offset(cfg["platform.altitude_m"], cfg["platform.off_nadir_deg"])
    depth = cfg["snow.depth_m"] if cfg["snow.enabled"] else 0.0
    return PointTarget([cfg["target.x_m"], y, cfg["target.z_m"]], cfg["target.rcs_m2"], depth)


def trajectory(run: Run):
    cfg = run.cfg
    if cfg["platform.trajectory_file"]:
        run.record_input("trajectory", cfg["platform.trajectory_file"])
        return read_trajectory_csv(cfg["platform.trajectory_file"], 1.0 / cfg["platform.prf_hz"])
    n, prf, v = cfg["platform.n_pulses"], cfg["platform.prf_hz"], cfg["platform.speed_mps"]
    # track along x, centred on x = 0
    x0 = -v * (n - 1) / prf / 2
    return make_linear_trajectory([x0, 0.0, cfg["platform.altitude_m"]], [v, 0.0, 0.0], prf, n)


def geometry(cfg: Config, traj) -> BistaticGeometry:
    tx = cfg["platform.tx_position_m"]
    if tx is None:
        return BistaticGeometry.monostatic(traj)
    if len(tx) != 3:
        raise ConfigError("'platform.tx_position_m' needs three comma-separated values")
    return BistaticGeometry.bistatic(tx, traj)


def scene_grid(cfg: Config) -> SceneGrid:
    tgt = target(cfg).position
    cx = tgt[0] if cfg["grid.center_x_m"] is None else cfg["grid.center_x_m"]
    cy = tgt[1] if cfg["grid.center_y_m"] is None else cfg["grid.center_y_m"]
    return SceneGrid.centered((cx, cy), cfg["grid.nx"], cfg["grid.ny"],
                              cfg["grid.dx_m"], cfg["grid.dy_m"])


def pulse_waveforms(cfg: Config, n_pulses: int):
    """The transmitted OFDM symbol, or one fresh symbol per pulse."""
    ocfg = ofdm_config(cfg)
    if not cfg["ofdm.fresh_symbols"]:
        return random_ofdm_symbol(ocfg, derive_rng(cfg["seed"], "waveform", 0))[1]
    return [random_ofdm_symbol(ocfg, derive_rng(cfg["seed"], "waveform", k))[1]
            for k in range(n_pulses)]


def compression_method(cfg: Config) -> CompressionMethod:
    return CompressionMethod(cfg["compression.method"], cfg["compression.k"],
                             cfg["compression.snr_db"])


def _csv_row(values) -> str:
    out = []
    for v in values:
        if isinstance(v, (float, np.floating)):
            out.append(repr(float(v)))
        else:
            out.append(str(v))
    return ",".join(out) + "\n"


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(_csv_row(r))


# subcommands -------------------------------------------------------------------------

def cmd_irf(run: Run):
    cfg = run.cfg
    base = OfdmConfig(m_fft=cfg["irf.m_fft"], delta_f=cfg["ofdm.delta_f_hz"],
                      m_active=cfg["irf.m_active"], cp_samples=0, channel_bandwidth=None)
    metrics = []
    for ci, name in enumerate(cfg["irf.constellations"]):
        ocfg = base.with_(constellation=name)
        for method_name in cfg["irf.methods"]:
            method = CompressionMethod(method_name, cfg["compression.k"], cfg["compression.snr_db"])
            # same symbol for every method of a constellation
            y = simulate_irf(ocfg, method, derive_rng(cfg["seed"], "irf", ci))
            fs = ocfg.sample_rate
            lag = np.arange(y.size) - y.size // 2
            mag = np.abs(y)
            with np.errstate(divide="ignore"):
                db = 20 * np.log10(mag / mag.max())
            tag = f"{ocfg.constellation.name.lower()}_{method.kind}"
            write_csv(run.path(f"irf_{tag}.csv"), ("delay_m", "re", "im", "magnitude_db"),
                      zip(C / 2 * lag / fs, y.real, y.imag, db))
            m = irf_metrics(y, fs, ocfg.occupied_bandwidth)
            floor = far_sidelobe_floor_db(y, fs, ocfg.occupied_bandwidth)
            metrics.append((ocfg.constellation.name, method.kind, m.pslr_db, m.islr_db,
                            floor, m.mainlobe_width_m))
    write_csv(run.path("irf_metrics.csv"),
              ("constellation", "method", "pslr_db", "islr_db", "far_floor_db", "width_m"),
              metrics)
    for row in metrics:
        print(f"{row[0]:>7} {row[1]:>8}  PSLR {row[2]:7.2f} dB  far floor {row[4]:7.2f} dB")


def cmd_simulate(run: Run):
    cfg = run.cfg
    traj = trajectory(run)
    geom = geometry(cfg, traj)
    wf = pulse_waveforms(cfg, traj.n_pulses)
    raw = simulate_echoes(wf, geom, [target(cfg)], link_budget(cfg), snow_model(cfg),
                          seed=cfg["seed"], workers=run.threads)
    write_trajectory_csv(run.path("trajectory.csv"), traj)
    write_matrix(run.path("raw.isar"), raw, run.path("trajectory.csv"))
    print(f"raw data {raw.n_pulses} x {raw.n_fast} -> {run.path('raw.isar')}")


def _focus_and_write(run: Run, rc, geom, tag="image"):
    cfg = run.cfg
    grid = scene_grid(cfg)
    img = tdbp_focus(rc, geom, grid, cfg["link.carrier_frequency_hz"],
                     upsample=cfg["focus.upsample"], taps=cfg["focus.taps"],
                     beta=cfg["focus.beta"], workers=run.threads)
    write_image_pgm(run.path(f"{tag}.pgm"), img, cfg["focus.dynamic_range_db"])
    write_image_csv(run.path(f"{tag}.csv"), img)
    i, j = np.unravel_index(int(np.argmax(np.abs(img.pixels))), grid.shape)
    tgt = target(cfg).position
    radius = 8 * max(grid.dx, grid.dy)
    try:
        snr = image_snr(img, tgt, radius)
    except ValueError:
        snr = float("nan")
    write_csv(run.path(f"{tag}_metrics.csv"),
              ("peak_x_m", "peak_y_m", "image_snr_db", "n_flagged"),
              [(float(grid.x[i]), float(grid.y[j]), snr, img.n_flagged)])
    print(f"peak at ({grid.x[i]:.2f}, {grid.y[j]:.2f}) m, image SNR {snr:.2f} dB")
    return img


def cmd_focus(run: Run):
    cfg = run.cfg
    src = cfg.require("focus.input")
    run.record_input("matrix", src)
    mat = read_matrix(src, 1.0 / cfg["platform.prf_hz"])
    traj = mat.trajectory if mat.trajectory is not None else trajectory(run)
    geom = geometry(cfg, traj)
    if isinstance(mat, RangeCompressedMatrix):
        rc = mat
    else:
        wf = pulse_waveforms(cfg, mat.n_pulses)
        rc = range_compress(mat.replace_data(mat.data, trajectory=traj), wf,
                            compression_method(cfg), workers=run.threads)
        write_matrix(run.path("rc.isar"), rc)
    _focus_and_write(run, rc, geom)


def _sweep_spec(cfg: Config) -> KpiSweepSpec:
    n_tau = cfg["sweep.n_tau"] or cfg["platform.n_pulses"]
    if cfg["sweep.pulse"] == "frame":
        pulse = PulseDefinition.frame_based(cfg["sweep.frame_symbols"],
                                            cfg["sweep.symbol_duration_s"])
    elif cfg["sweep.pulse"] == "symbol":
        pulse = PulseDefinition.symbol_based(cfg["sweep.symbol_duration_s"])
    else:
        raise ConfigError(f"'sweep.pulse' must be symbol or frame, got {cfg['sweep.pulse']!r}")
    aperture = cfg["sweep.aperture_length_m"]
    if aperture is None:
        aperture = cfg["platform.speed_mps"] * n_tau * pulse.t_p
    variable = cfg["sweep.variable"]
    snow = snow_model(cfg)
    if variable.replace("-", "_").lower() in ("snow_depth", "snowdepth", "depth") and snow is None:
        raise ConfigError("a snow-depth sweep needs snow.enabled=true and "
                          "'snow.extinction_db_per_m'")
    return KpiSweepSpec(
        variable, cfg["sweep.start"], cfg["sweep.stop"], cfg["sweep.step"],
        budget=link_budget(cfg), snow=snow, depth=cfg["snow.depth_m"],
        geometry=ObservationGeometry(cfg["platform.altitude_m"], cfg["platform.off_nadir_deg"]),
        pulse=pulse, n_tau=n_tau, aperture_length=aperture)


def cmd_nesz_sweep(run: Run):
    rows = nesz_sweep(_sweep_spec(run.cfg), ofdm_config(run.cfg))
    write_kpi_csv(run.path("kpi.csv"), rows)
    print(f"{len(rows)} sweep points -> {run.path('kpi.csv')}")


def cmd_ber_sweep(run: Run):
    cfg = run.cfg
    rows = ber_sweep(_sweep_spec(cfg), ofdm_config(cfg), cfg["sweep.n_bits"], cfg["seed"],
                     workers=run.threads)
    write_kpi_csv(run.path("kpi.csv"), rows)
    print(f"{len(rows)} sweep points -> {run.path('kpi.csv')}")


def cmd_emulate(run: Run):
    cfg = run.cfg
    ocfg = ofdm_config(cfg)
    traj = trajectory(run)
    src = cfg["emulate.input"]
    if src:
        run.record_input("chirp_matrix", src)
        rc_chirp = read_matrix(src, 1.0 / cfg["platform.prf_hz"])
        if rc_chirp.trajectory is not None:
            traj = rc_chirp.trajectory
    else:
        # synthetic chirp acquisition of the configured scene
        chirp = generate_chirp(ChirpConfig(cfg["emulate.chirp_bandwidth_hz"],
                                           cfg["emulate.chirp_length_s"], ocfg.sample_rate))
        geom = geometry(cfg, traj)
        tgt = target(cfg)
        # room for the longer OFDM pulse after the latest echo
        origin, n_fast = fast_time_window(chirp, range_history(geom, tgt.position) / C)
        n_fast = sp_fft.next_fast_len(n_fast + ocfg.samples_per_symbol, real=False)
        raw = simulate_echoes(chirp, geom, [tgt], link_budget(cfg), snow_model(cfg),
                              seed=cfg["seed"], fast_time_origin=origin, n_fast=n_fast,
                              workers=run.threads)
        rc_chirp = range_compress(raw, chirp, workers=run.threads)
        write_trajectory_csv(run.path("trajectory.csv"), traj)
        write_matrix(run.path("rc_chirp.isar"), rc_chirp, run.path("trajectory.csv"))
    pulse = random_ofdm_symbol(ocfg, derive_rng(cfg["seed"], "waveform", 0))[1]
    emulated = emulate_ofdm_from_chirp(rc_chirp, pulse, workers=run.threads)
    write_matrix(run.path("ofdm_raw.isar"), emulated)
    method = CompressionMethod(cfg["emulate.method"], cfg["compression.k"],
                               cfg["compression.snr_db"])
    rc = range_compress(emulated, pulse, method, workers=run.threads)
    if cfg["emulate.target_prf_hz"] is not None:
        rc, traj = adapt_prf(rc, traj, cfg["emulate.target_prf_hz"])
    rc = rc.replace_data(rc.data, trajectory=traj)
    write_matrix(run.path("rc_ofdm.isar"), rc)
    _focus_and_write(run, rc, geometry(cfg, traj))


def cmd_selftest(run: Run):
    checks = []

    def check(name, value, expected, ok):
        checks.append((name, float(value), expected, "pass" if ok else "FAIL"))

    r = unambiguous_range(125e3)
    check("unambiguous_range_125khz_m", r, "1199.17", abs(r - 1199.17) < 0.01)

    ocfg = OfdmConfig(m_fft=2048, m_active=1024, cp_samples=0, channel_bandwidth=None)
    y = simulate_irf(ocfg, CompressionMethod.matched(), derive_rng(run.cfg["seed"], "selftest"))
    p = irf_metrics(y, ocfg.sample_rate, ocfg.occupied_bandwidth).pslr_db
    check("qpsk_matched_pslr_db", p, "-13.26 +- 1", abs(p + 13.26) <= 1.0)

    est = simulate_ber_awgn(OfdmConfig(), 6.0, 200_000, derive_rng(run.cfg["seed"], "selftest-ber"))
    theory = float(ber_qpsk_theory(6.0))
    check("qpsk_ber_6db", est.ber, f"{theory:.4g} in Wilson 95%",
          est.ci_low <= theory <= est.ci_high)

    wcfg = OfdmConfig()
    _, wf = random_ofdm_symbol(wcfg, derive_rng(run.cfg["seed"], "selftest-tdbp"))
    lam = C / 5.9e9
    traj = make_linear_trajectory([-0.2, 0.0, 100.0], [lam / 4 * 1e3, 0, 0], 1e3, 32)
    geom = BistaticGeometry.monostatic(traj)
    tgt = PointTarget([0.0, 100.0, 0.0])
    raw = simulate_echoes(wf, geom, [tgt], LinkBudget(), noise=False)
    rc = range_compress(raw, wf)
    grid = SceneGrid.centered((0.0, 100.0), 8, 8, 1.0, 4.0)
    a = tdbp_focus(rc, geom, grid, 5.9e9).pixels
    b = tdbp_reference(rc, geom, grid, 5.9e9).pixels
    err = np.abs(a - b).max() / np.abs(b).max()
    check("tdbp_vs_reference_relerr", err, "<= 1e-3", err <= 1e-3)

    write_csv(run.path("selftest.csv"), ("check", "value", "expected", "status"), checks)
    for c in checks:
        print(f"{c[3]:>4}  {c[0]}: {c[1]:.6g} (expected {c[2]})")
    if any(c[3] != "pass" for c in checks):
        raise SelftestFailure(f"{sum(c[3] != 'pass' for c in checks)} self-test check(s) failed")


class SelftestFailure(RuntimeError):
    pass


HANDLERS = {"irf": cmd_irf, "simulate": cmd_simulate, "focus": cmd_focus,
            "nesz-sweep": cmd_nesz_sweep, "ber-sweep": cmd_ber_sweep,
            "emulate": cmd_emulate, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isacsar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"isacsar {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {"irf": "range IRF of OFDM symbols under each compression filter",
             "simulate": "simulate raw echoes of the configured point-target scene",
             "focus": "range-compress (if needed) and back-project a matrix file",
             "nesz-sweep": "NESZ over a swept link/geometry parameter",
             "ber-sweep": "NESZ and Monte-Carlo BER over a swept parameter",
             "emulate": "emulate an OFDM acquisition from chirp data and focus it",
             "selftest": "quick numerical sanity checks"}
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", type=Path, help="scenario config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = all cores")
        p.add_argument("--seed", type=int, help="top-level seed (overrides the config)")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.set)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            overrides.append(f"seed={args.seed}")
        cfg = load(args.config, overrides)
        threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
        args.out.mkdir(parents=True, exist_ok=True)
        r = Run(args.command, cfg, args.out, threads)
        if args.config is not None:
            r.record_input("config", args.config)
        HANDLERS[args.command](r)
        r.write_manifest()
    except ConfigError as exc:
        print(f"isacsar: config error: {exc}", file=sys.stderr)
        return 2
    except SelftestFailure as exc:
        print(f"isacsar: selftest failed: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"isacsar: i/o error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"isacsar: invalid input: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())
