"""Deterministic channel construction: LOS vectors, steering vectors,
correlation factors, and composite Rician links."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import AntennaGrid, Device, distance, los_gain

# NLOS distances below 1 m would amplify under d**(-beta_pl/2); clamp there.
NLOS_MIN_DISTANCE = 1.0


@dataclass(frozen=True)
class PathSet:
    """Frozen angles of the P dominant scattered paths of one link."""

    theta_v: np.ndarray  # (P,) elevation, radians in (-pi/2, pi/2)
    theta_h: np.ndarray  # (P,) azimuth, radians in (-pi/2, pi/2)

    def __post_init__(self):
        tv, th = np.asarray(self.theta_v), np.asarray(self.theta_h)
        if tv.shape != th.shape:
            raise ValueError("theta_v and theta_h must have equal length")
        if np.any(np.abs(tv) >= np.pi / 2) or np.any(np.abs(th) >= np.pi / 2):
            raise ValueError("path angles must lie in (-pi/2, pi/2)")

    @property
    def num_paths(self) -> int:
        return len(np.asarray(self.theta_v))

    @property
    def gains(self) -> np.ndarray:
        """Per-path antenna gains sqrt(cos(theta_v) cos(theta_h))."""
        return np.sqrt(np.cos(self.theta_v) * np.cos(self.theta_h))


def random_path_set(num_paths: int, rng) -> PathSet:
    """i.i.d. uniform path angles on (-pi/2, pi/2)."""
    half = np.pi / 2
    return PathSet(theta_v=rng.uniform(-half, half, num_paths),
                   theta_h=rng.uniform(-half, half, num_paths))


@dataclass(frozen=True)
class CorrelationFactor:
    """Deterministic M x P factor mapping i.i.d. path fading onto antennas."""

    matrix: np.ndarray = field(repr=False)  # (M, P) complex
    source: tuple = (0, 0)                  # (j, k) link identity

    @property
    def num_paths(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class RicianLink:
    kappa: float                    # >= 0
    h_los: np.ndarray               # (M,) complex
    r_half: CorrelationFactor

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("Rician factor must be nonnegative")
        if self.r_half.matrix.shape[0] != self.h_los.shape[0]:
            raise ValueError("LOS vector and correlation factor disagree on M")


def los_channel(device: Device, grid: AntennaGrid) -> np.ndarray:
    """Deterministic LOS channel: amplitude los_gain, phase exp(-2j pi d/lambda)."""
    d = distance(device.position, grid.positions)
    amp = los_gain(device, grid.positions)
    return amp * np.exp(-2j * np.pi * d / grid.wavelength)


def _phase_ramp(n: int, step: float) -> np.ndarray:
    return np.exp(1j * step * np.arange(n))


def upa_steering(theta_v: float, theta_h: float, num_antennas: int,
                 spacing: float, wavelength: float) -> np.ndarray:
    """Planar-array steering vector (1/sqrt(M)) d_v(phi_v) kron d_h(phi_h).

    phi_v = sin(theta_v) and phi_h = sin(theta_h) cos(theta_h); both ramps
    have phase step (2 pi spacing / wavelength) * phi.
    """
    n = math.isqrt(num_antennas)
    if n * n != num_antennas:
        raise ValueError(f"num_antennas must be a perfect square, got {num_antennas}")
    phi_v = math.sin(theta_v)
    phi_h = math.sin(theta_h) * math.cos(theta_h)
    step = 2.0 * np.pi * spacing / wavelength
    d_v = _phase_ramp(n, step * phi_v)
    d_h = _phase_ramp(n, step * phi_h)
    return np.kron(d_v, d_h) / math.sqrt(num_antennas)


def ula_steering(theta_h: float, num_antennas: int, spacing: float,
                 wavelength: float) -> np.ndarray:
    """Linear-array steering vector with phase step (2 pi spacing/lambda) sin(theta)."""
    step = 2.0 * np.pi * spacing / wavelength * math.sin(theta_h)
    return _phase_ramp(num_antennas, step) / math.sqrt(num_antennas)


def correlation_factor(device: Device, grid: AntennaGrid, paths: PathSet,
                       beta_pl: float, source=(0, 0)) -> CorrelationFactor:
    """NLOS correlation factor diag(d_m**(-beta_pl/2)) @ [alpha_p d(path_p)].

    Per-antenna NLOS path loss uses the device-to-antenna distance, clamped
    at NLOS_MIN_DISTANCE.
    """
    d = np.maximum(distance(device.position, grid.positions), NLOS_MIN_DISTANCE)
    loss = d ** (-beta_pl / 2.0)
    cols = np.empty((grid.num_antennas, paths.num_paths), dtype=complex)
    gains = paths.gains
    for p in range(paths.num_paths):
        cols[:, p] = gains[p] * upa_steering(
            paths.theta_v[p], paths.theta_h[p],
            grid.num_antennas, grid.spacing, grid.wavelength)
    return CorrelationFactor(matrix=loss[:, None] * cols, source=source)


def empty_correlation_factor(num_antennas: int, source=(0, 0)) -> CorrelationFactor:
    """Zero-path factor; represents a link whose NLOS branch is absent."""
    return CorrelationFactor(matrix=np.empty((num_antennas, 0), dtype=complex),
                             source=source)


def rician_channel(link: RicianLink, g: np.ndarray) -> np.ndarray:
    """One channel draw sqrt(k/(k+1)) h_los + sqrt(1/(k+1)) R_half @ g."""
    g = np.asarray(g)
    if g.shape != (link.r_half.num_paths,):
        raise ValueError(f"fading vector has shape {g.shape}, "
                         f"expected ({link.r_half.num_paths},)")
    k = link.kappa
    if math.isinf(k):
        return link.h_los.copy()
    a = math.sqrt(k / (k + 1.0))
    b = math.sqrt(1.0 / (k + 1.0))
    return a * link.h_los + b * (link.r_half.matrix @ g)
