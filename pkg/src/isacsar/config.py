"""Flat ``key=value`` scenario configuration.

Grammar, one statement per line:

    # comment                 (a '#' anywhere starts a comment)
    section.name = value      (whitespace around '=' and the value is ignored)

Keys are dotted and must appear in SCHEMA; an empty value means "unset"
(None) for optional keys. Booleans accept true/false/yes/no/1/0. Later
lines and ``--set`` overrides replace earlier values. Keys under ``run.``
are informational (written into run manifests) and ignored on load.
"""

from __future__ import annotations

from dataclasses import dataclass

INFO_PREFIX = "run."


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in _list(text))


# key: (parser, default); default None marks an optional (or required-when-used) key
SCHEMA = {
    "seed": (int, 0),
    "ofdm.m_fft": (int, 64),
    "ofdm.delta_f_hz": (float, 120e3),
    "ofdm.m_active": (int, 52),
    "ofdm.cp_samples": (int, 12),
    "ofdm.constellation": (str, "QPSK"),
    "ofdm.fresh_symbols": (_bool, False),
    "link.eirp_dbm": (float, 23.0),
    "link.allow_eirp_override": (_bool, False),
    "link.g_rx_dbi": (float, 10.0),
    "link.noise_figure_db": (float, 7.0),
    "link.carrier_frequency_hz": (float, 5.9e9),
    "link.temperature_k": (float, 290.0),
    "link.directivity_loss_db": (float, 0.0),
    "snow.enabled": (_bool, False),
    "snow.extinction_db_per_m": (float, None),
    "snow.depth_m": (float, 0.0),
    "platform.altitude_m": (float, 100.0),
    "platform.off_nadir_deg": (float, 45.0),
    "platform.prf_hz": (float, 1000.0),
    "platform.n_pulses": (int, 256),
    "platform.speed_mps": (float, 12.5),
    "platform.trajectory_file": (str, None),
    "platform.tx_position_m": (_floats, None),
    "target.x_m": (float, 0.0),
    "target.y_m": (float, None),
    "target.z_m": (float, 0.0),
    "target.rcs_m2": (float, 1.0),
    "grid.nx": (int, 64),
    "grid.ny": (int, 64),
    "grid.dx_m": (float, 2.0),
    "grid.dy_m": (float, 3.0),
    "grid.center_x_m": (float, None),
    "grid.center_y_m": (float, None),
    "compression.method": (str, "matched"),
    "compression.k": (float, None),
    "compression.snr_db": (float, None),
    "focus.input": (str, None),
    "focus.upsample": (int, 4),
    "focus.taps": (int, 8),
    "focus.beta": (float, 6.0),
    "focus.dynamic_range_db": (float, 60.0),
    "irf.m_fft": (int, 2048),
    "irf.m_active": (int, 1024),
    "irf.constellations": (_list, ("QPSK", "QAM256")),
    "irf.methods": (_list, ("matched", "zf")),
    "sweep.variable": (str, "eirp"),
    "sweep.start": (float, 0.0),
    "sweep.stop": (float, 23.0),
    "sweep.step": (float, 1.0),
    "sweep.n_bits": (int, 100000),
    "sweep.n_tau": (int, None),
    "sweep.pulse": (str, "symbol"),
    "sweep.frame_symbols": (int, 1),
    "sweep.symbol_duration_s": (float, 8e-6),
    "sweep.aperture_length_m": (float, None),
    "emulate.input": (str, None),
    "emulate.chirp_bandwidth_hz": (float, 7.0e6),
    "emulate.chirp_length_s": (float, 4e-6),
    "emulate.target_prf_hz": (float, None),
    "emulate.method": (str, "zf"),
}


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


@dataclass(frozen=True)
class Config:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def require(self, key):
        v = self.values[key]
        if v is None:
            raise ConfigError(f"config key {key!r} is required for this run but is not set")
        return v

    def text_items(self):
        """``(key, text)`` in schema order, texts re-parse to the same values."""
        for k in SCHEMA:
            yield k, format_value(self.values[k])


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(format_value(x) for x in v)
    return str(v)


def parse_lines(lines, source="<config>") -> dict[str, str]:
    raw = {}
    for n, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {line.strip()!r}")
        k, v = text.split("=", 1)
        k = k.strip()
        if not k:
            raise ConfigError(f"{source}:{n}: empty key")
        raw[k] = v.strip()
    return raw


def parse_overrides(pairs) -> dict[str, str]:
    return parse_lines(pairs or (), "--set")


def resolve(raw: dict[str, str]) -> Config:
    """Typed configuration from raw text values plus schema defaults."""
    raw = {k: v for k, v in raw.items() if not k.startswith(INFO_PREFIX)}
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = {}
    for key, (parse, default) in SCHEMA.items():
        if key not in raw or raw[key] == "":
            values[key] = default
            continue
        try:
            values[key] = parse(raw[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: cannot parse {raw[key]!r} ({exc})") from None
    if values["snow.enabled"] and values["snow.extinction_db_per_m"] is None:
        raise ConfigError(
            "snow is enabled but 'snow.extinction_db_per_m' is not set; "
            "the extinction coefficient has no default"
        )
    return Config(values)


def load(path=None, overrides=None) -> Config:
    raw = {}
    if path is not None:
        with open(path) as fh:
            raw.update(parse_lines(fh, str(path)))
    raw.update(parse_overrides(overrides))
    return resolve(raw)
