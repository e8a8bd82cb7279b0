"""Geometric multipath channel sampling and the DFT-beam (virtual) domain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .arrays import ULA, UPA, ArrayGeometry, SteeringAngle, response, virtual_direction_matrix

ELEVATION_UNIFORM = "uniform"
ELEVATION_FIXED = "fixed"


@dataclass(frozen=True)
class Path:
    """One propagation path: complex gain plus departure/arrival directions."""

    gain: complex
    aod: SteeringAngle
    aoa: SteeringAngle


@dataclass(frozen=True)
class ChannelConfig:
    """Statistical description of the per-user channel.

    Gains are i.i.d. circularly-symmetric complex Gaussian with variance
    ``gain_variance``. Azimuths are uniform on [0, 2*pi); elevations are
    either uniform on [-pi/2, pi/2] or fixed at pi/2.
    """

    n_paths: int = 1
    gain_variance: float = 1.0
    elevation: str = ELEVATION_UNIFORM

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.gain_variance <= 0:
            raise ValueError("gain_variance must be > 0")
        if self.elevation not in (ELEVATION_UNIFORM, ELEVATION_FIXED):
            raise ValueError(f"unknown elevation distribution {self.elevation!r}")

    def to_dict(self) -> dict:
        return {
            "paths": self.n_paths,
            "gain_variance": self.gain_variance,
            "elevation": self.elevation,
        }

    @staticmethod
    def from_dict(d: dict) -> "ChannelConfig":
        return ChannelConfig(
            n_paths=d.get("paths", 1),
            gain_variance=d.get("gain_variance", 1.0),
            elevation=d.get("elevation", ELEVATION_UNIFORM),
        )


@dataclass
class ChannelRealization:
    """One user's channel: path list plus the dense N_MS x N_BS matrix."""

    paths: list[Path]
    matrix: np.ndarray
    bs_geometry: ArrayGeometry
    ms_geometry: ArrayGeometry

    @property
    def n_bs(self) -> int:
        return self.bs_geometry.n_elements

    @property
    def n_ms(self) -> int:
        return self.ms_geometry.n_elements


def assemble_matrix(
    paths: list[Path], bs: ArrayGeometry, ms: ArrayGeometry
) -> np.ndarray:
    """Dense channel matrix sqrt(N_BS*N_MS/L) * sum_l gain_l * a_MS a_BS^H."""
    n_bs, n_ms = bs.n_elements, ms.n_elements
    h = np.zeros((n_ms, n_bs), dtype=complex)
    for p in paths:
        h += p.gain * np.outer(response(ms, p.aoa), response(bs, p.aod).conj())
    return math.sqrt(n_bs * n_ms / len(paths)) * h


def _draw_angle(config: ChannelConfig, rng: np.random.Generator) -> SteeringAngle:
    azimuth = rng.uniform(0.0, 2.0 * math.pi)
    if config.elevation == ELEVATION_UNIFORM:
        elevation = rng.uniform(-math.pi / 2, math.pi / 2)
    else:
        elevation = math.pi / 2
    return SteeringAngle(azimuth, elevation)


def sample_channel(
    config: ChannelConfig,
    bs: ArrayGeometry,
    ms: ArrayGeometry,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw one channel realization from the geometric multipath model.

    Elevations are drawn for linear arrays too (and ignored by their
    response), so the stream consumption is independent of array kind.
    """
    scale = math.sqrt(config.gain_variance / 2.0)
    gains = scale * (
        rng.standard_normal(config.n_paths) + 1j * rng.standard_normal(config.n_paths)
    )
    paths = [
        Path(gain=complex(gains[i]), aod=_draw_angle(config, rng), aoa=_draw_angle(config, rng))
        for i in range(config.n_paths)
    ]
    return ChannelRealization(
        paths=paths,
        matrix=assemble_matrix(paths, bs, ms),
        bs_geometry=bs,
        ms_geometry=ms,
    )


def to_virtual(h: ChannelRealization) -> np.ndarray:
    """Channel matrix in fixed DFT transmit/receive beam coordinates.

    Returns H_v with H = A_MS H_v A_BS^H, obtained by unitarity of the
    beam direction matrices. Only uniform arrays carry this representation.
    """
    for g in (h.bs_geometry, h.ms_geometry):
        if g.kind not in (ULA, UPA):
            raise ValueError(f"virtual representation requires a uniform array, got {g.kind!r}")
    a_ms = virtual_direction_matrix(h.ms_geometry.n_elements)
    a_bs = virtual_direction_matrix(h.bs_geometry.n_elements)
    return a_ms.conj().T @ h.matrix @ a_bs


class VirtualEntry(NamedTuple):
    gain: complex
    tx: int
    rx: int


def dominant_virtual_entries(h_v: np.ndarray, count: int) -> list[VirtualEntry]:
    """Largest-modulus beamspace entries, strongest first.

    Ties in modulus are broken by (rx index, tx index) ascending so results
    are reproducible.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    moduli = np.abs(h_v).ravel()
    # stable argsort keeps row-major order, i.e. (rx, tx) ascending, on ties
    order = np.argsort(-moduli, kind="stable")[:count]
    n_tx = h_v.shape[1]
    return [
        VirtualEntry(gain=complex(h_v[idx // n_tx, idx % n_tx]), tx=int(idx % n_tx), rx=int(idx // n_tx))
        for idx in order
    ]


def dominant_path_gain(h: ChannelRealization) -> complex:
    """Strongest beamspace gain, normalized like a per-path gain.

    Divides out the sqrt(N_BS*N_MS/L) channel prefactor so the value is
    directly comparable to the per-path gains in the channel model.
    """
    entry = dominant_virtual_entries(to_virtual(h), 1)[0]
    scale = math.sqrt(h.n_bs * h.n_ms / len(h.paths))
    return entry.gain / scale
