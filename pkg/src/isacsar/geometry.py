"""Acquisition geometry: trajectories, image grids, targets, path lengths.

Coordinates are local east-north-up Cartesian metres.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TRAJECTORY_HEADER = ("tau_s", "x_m", "y_m", "z_m")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Receiver (or monostatic radar) position at each pulse."""

    tau: np.ndarray
    positions: np.ndarray
    pri: float

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float).ravel()
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if tau.size == 0:
            raise ValueError("trajectory must contain at least one pulse")
        if tau.size != pos.shape[0]:
            raise ValueError(f"{tau.size} slow-time samples but {pos.shape[0]} positions")
        if tau.size > 1 and np.any(np.diff(tau) <= 0):
            raise ValueError("slow time must be strictly increasing")
        if not self.pri > 0:
            raise ValueError("pri must be positive")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "positions", pos)

    @property
    def n_pulses(self) -> int:
        return self.tau.size

    @property
    def prf(self) -> float:
        return 1.0 / self.pri

    @property
    def is_uniform(self) -> bool:
        return self.n_pulses < 2 or bool(np.all(np.abs(np.diff(self.tau) - self.pri) <= 1e-9))

    @property
    def aperture_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.positions, axis=0), axis=1)))

    def subset(self, index) -> Trajectory:
        return Trajectory(self.tau[index], self.positions[index], self.pri)


def make_linear_trajectory(start, velocity, prf: float, n_pulses: int) -> Trajectory:
    """Constant-velocity track sampled at ``prf``, starting at slow time 0."""
    if not prf > 0:
        raise ValueError("prf must be positive")
    if n_pulses < 1:
        raise ValueError("n_pulses must be at least 1")
    tau = np.arange(n_pulses) / prf
    pos = np.asarray(start, float)[None, :] + tau[:, None] * np.asarray(velocity, float)[None, :]
    return Trajectory(tau, pos, 1.0 / prf)


def write_trajectory_csv(path, trajectory: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for t, (x, y, z) in zip(trajectory.tau, trajectory.positions):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z))])


def read_trajectory_csv(path, pri: float | None = None) -> Trajectory:
    """Load a ``tau_s,x_m,y_m,z_m`` file. PRI defaults to the median spacing."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(h.strip() for h in rows[0]) != TRAJECTORY_HEADER:
        raise ValueError(f"{path}: expected header {','.join(TRAJECTORY_HEADER)}")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        raise ValueError(f"{path}: no trajectory samples")
    if pri is None:
        pri = float(np.median(np.diff(data[:, 0]))) if len(data) > 1 else 1.0
    return Trajectory(data[:, 0], data[:, 1:4], pri)


@dataclass(frozen=True, eq=False)
class SceneGrid:
    """Regular pixel lattice on flat terrain at height ``z``.

    Pixel ``(i, j)`` sits at ``origin + (i*dx, j*dy)``; ``origin`` is the
    first pixel centre.
    """

    origin: tuple[float, float]
    nx: int
    ny: int
    dx: float
    dy: float
    z: float = 0.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one pixel per axis")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid spacing must be positive")

    @classmethod
    def centered(cls, center, nx, ny, dx, dy, z=0.0) -> SceneGrid:
        """Grid whose pixel ``(nx // 2, ny // 2)`` sits exactly on ``center``."""
        ox = center[0] - dx * (nx // 2)
        oy = center[1] - dy * (ny // 2)
        return cls((ox, oy), nx, ny, dx, dy, z)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.dy * np.arange(self.ny)

    @property
    def pixel_positions(self) -> np.ndarray:
        """Array ``(nx, ny, 3)`` of pixel centres."""
        xx, yy = np.meshgrid(self.x, self.y, indexing="ij")
        return np.stack([xx, yy, np.full_like(xx, self.z)], axis=-1)

    def nearest_index(self, point) -> tuple[int, int]:
        i = int(np.clip(np.rint((point[0] - self.origin[0]) / self.dx), 0, self.nx - 1))
        j = int(np.clip(np.rint((point[1] - self.origin[1]) / self.dy), 0, self.ny - 1))
        return i, j


@dataclass(frozen=True, eq=False)
class PointTarget:
    position: np.ndarray
    rcs: float = 1.0
    burial_depth: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        if not self.rcs > 0:
            raise ValueError("rcs must be positive")
        if self.burial_depth < 0:
            raise ValueError("burial_depth must be non-negative")


@dataclass(frozen=True, eq=False)
class BistaticGeometry:
    """Receiver trajectory plus a fixed transmitter, or co-located Tx/Rx."""

    rx: Trajectory
    tx_position: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.tx_position is not None:
            object.__setattr__(self, "tx_position",
                               np.asarray(self.tx_position, dtype=float).reshape(3))

    @classmethod
    def monostatic(cls, trajectory: Trajectory) -> BistaticGeometry:
        return cls(trajectory, None)

    @classmethod
    def bistatic(cls, tx_position, rx: Trajectory) -> BistaticGeometry:
        return cls(rx, tx_position)

    @property
    def co_located(self) -> bool:
        return self.tx_position is None

    @property
    def n_pulses(self) -> int:
        return self.rx.n_pulses

    def path_lengths(self, points, pulse: int) -> np.ndarray:
        """Total Tx -> point -> Rx length for one pulse; ``points`` is ``(..., 3)``."""
        pts = np.asarray(points, dtype=float)
        r_rx = np.linalg.norm(pts - self.rx.positions[pulse], axis=-1)
        if self.co_located:
            return 2.0 * r_rx
        return np.linalg.norm(pts - self.tx_position, axis=-1) + r_rx

    def leg_ranges(self, point) -> tuple[np.ndarray, np.ndarray]:
        """Per-pulse one-way ``(tx->point, point->rx)`` distances."""
        p = np.asarray(point, dtype=float).reshape(3)
        r_rx = np.linalg.norm(self.rx.positions - p, axis=1)
        if self.co_located:
            return r_rx, r_rx
        r_tx = np.full_like(r_rx, np.linalg.norm(self.tx_position - p))
        return r_tx, r_rx


def range_history(geom: BistaticGeometry, point) -> np.ndarray:
    """Total path length per pulse (two-way range when monostatic)."""
    r_tx, r_rx = geom.leg_ranges(point)
    return r_tx + r_rx


def slant_range(altitude: float, off_nadir_deg: float) -> float:
    return altitude / np.cos(np.radians(off_nadir_deg))


def ground_offset(altitude: float, off_nadir_deg: float) -> float:
    return altitude * np.tan(np.radians(off_nadir_deg))
