"""Binary matrix container, image exports and their text sidecars.

Matrix file (``.isar``): a 16-byte little-endian header

    magic  4s   b"ISAR"
    version u16 1
    n_pulses u32
    n_fast  u32
    flags   u16 bit 0 set for range-compressed data

followed by ``n_pulses * n_fast`` complex samples stored row-major as
interleaved float32 I, Q. The sidecar ``<file>.meta`` holds ``key=value``
lines for ``sample_rate``, ``fast_time_origin`` and an optional
``trajectory`` path relative to the sidecar.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .channel import RangeCompressedMatrix, RawDataMatrix
from .focusing import SarImage
from .geometry import read_trajectory_csv

MAGIC = b"ISAR"
VERSION = 1
HEADER = struct.Struct("<4sHIIH")
FLAG_COMPRESSED = 0x1


def _meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta")


def write_kv(path, items) -> None:
    with open(path, "w") as fh:
        for k, v in items:
            fh.write(f"{k}={v}\n")


def read_kv(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_matrix(path, matrix: RawDataMatrix, trajectory_file=None) -> None:
    """Write ``matrix`` and its sidecar. ``trajectory_file`` is recorded
    relative to the sidecar's directory when possible."""
    path = Path(path)
    flags = FLAG_COMPRESSED if isinstance(matrix, RangeCompressedMatrix) else 0
    iq = np.empty((matrix.n_pulses, matrix.n_fast, 2), dtype="<f4")
    iq[..., 0] = matrix.data.real
    iq[..., 1] = matrix.data.imag
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, matrix.n_pulses, matrix.n_fast, flags))
        fh.write(iq.tobytes())
    items = [("sample_rate", repr(float(matrix.sample_rate))),
             ("fast_time_origin", repr(float(matrix.fast_time_origin)))]
    if trajectory_file is not None:
        t = Path(trajectory_file)
        try:
            t = t.resolve().relative_to(path.resolve().parent)
        except ValueError:
            pass
        items.append(("trajectory", t.as_posix()))
    write_kv(_meta_path(path), items)


def read_matrix(path, trajectory_pri: float | None = None) -> RawDataMatrix:
    """Read a matrix file; returns RangeCompressedMatrix when flagged."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise ValueError(f"{path}: file shorter than the {HEADER.size}-byte header")
    magic, version, n_pulses, n_fast, flags = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = HEADER.size + n_pulses * n_fast * 8
    if len(raw) != expected:
        raise ValueError(f"{path}: {len(raw)} bytes, header implies {expected}")
    iq = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(n_pulses, n_fast, 2)
    data = iq[..., 0].astype(float) + 1j * iq[..., 1].astype(float)
    meta = read_kv(_meta_path(path))
    missing = {"sample_rate", "fast_time_origin"} - meta.keys()
    if missing:
        raise ValueError(f"{_meta_path(path)}: missing {sorted(missing)}")
    traj = None
    if meta.get("trajectory"):
        traj = read_trajectory_csv(path.parent / meta["trajectory"], trajectory_pri)
    cls = RangeCompressedMatrix if flags & FLAG_COMPRESSED else RawDataMatrix
    return cls(data, float(meta["sample_rate"]), float(meta["fast_time_origin"]), traj)


def image_metadata(image: SarImage):
    g = image.grid
    return [("origin_x", repr(float(g.origin[0]))), ("origin_y", repr(float(g.origin[1]))),
            ("nx", g.nx), ("ny", g.ny), ("dx", repr(float(g.dx))), ("dy", repr(float(g.dy))),
            ("z", repr(float(g.z))), ("wavelength", repr(float(image.wavelength))),
            ("n_flagged", image.n_flagged)]


def write_image_pgm(path, image: SarImage, dynamic_range_db: float = 60.0) -> None:
    """16-bit binary PGM of the magnitude in dB, clipped to ``dynamic_range_db``
    below the peak. Rows run along y (top = largest y), columns along x."""
    db = np.clip(image.magnitude_db, -dynamic_range_db, 0.0)
    db = np.where(np.isfinite(db), db, -dynamic_range_db)
    levels = np.rint((db + dynamic_range_db) / dynamic_range_db * 65535).astype(">u2")
    img = levels.T[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())
    write_kv(_meta_path(path), image_metadata(image) + [("dynamic_range_db", dynamic_range_db)])


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        tokens = []
        while len(tokens) < 4:
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: truncated PGM header")
            tokens += line.split(b"#")[0].split()
        if tokens[0] != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        dtype = ">u2" if maxval > 255 else "u1"
        return np.frombuffer(fh.read(), dtype=dtype).reshape(h, w)


def write_image_csv(path, image: SarImage) -> None:
    pos = image.grid.pixel_positions.reshape(-1, 3)
    px = image.pixels.ravel()
    with open(path, "w") as fh:
        fh.write("x,y,re,im\n")
        for (x, y, _), v in zip(pos.tolist(), px.tolist()):
            fh.write(f"{x!r},{y!r},{v.real!r},{v.imag!r}\n")
    write_kv(_meta_path(path), image_metadata(image))
