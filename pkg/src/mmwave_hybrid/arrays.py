"""Antenna array geometries, steering vectors, and DFT beam directions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ULA = "ULA"
UPA = "UPA"


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform antenna array, linear or planar.

    Parameters
    ----------
    kind : str
        ``"ULA"`` or ``"UPA"``.
    n_elements : int
        Total element count N. For a UPA this equals
        ``n_horizontal * n_vertical``.
    spacing : float
        Inter-element spacing in wavelengths (d / lambda).
    n_horizontal, n_vertical : int, optional
        Planar grid dimensions; required for a UPA, unused for a ULA.
    """

    kind: str
    n_elements: int
    spacing: float = 0.5
    n_horizontal: int | None = None
    n_vertical: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (ULA, UPA):
            raise ValueError(f"unknown array kind {self.kind!r}")
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        if self.spacing <= 0:
            raise ValueError("spacing must be > 0")
        if self.kind == UPA:
            if self.n_horizontal is None or self.n_vertical is None:
                raise ValueError("UPA requires n_horizontal and n_vertical")
            if self.n_horizontal < 1 or self.n_vertical < 1:
                raise ValueError("UPA grid dimensions must be >= 1")
            if self.n_horizontal * self.n_vertical != self.n_elements:
                raise ValueError("n_horizontal * n_vertical must equal n_elements")

    @staticmethod
    def ula(n: int, spacing: float = 0.5) -> "ArrayGeometry":
        return ArrayGeometry(ULA, n, spacing)

    @staticmethod
    def upa(n_horizontal: int, n_vertical: int, spacing: float = 0.5) -> "ArrayGeometry":
        return ArrayGeometry(
            UPA,
            n_horizontal * n_vertical,
            spacing,
            n_horizontal=n_horizontal,
            n_vertical=n_vertical,
        )

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n_elements": self.n_elements, "spacing": self.spacing}
        if self.kind == UPA:
            d["n_horizontal"] = self.n_horizontal
            d["n_vertical"] = self.n_vertical
        return d

    @staticmethod
    def from_dict(d: dict) -> "ArrayGeometry":
        return ArrayGeometry(
            kind=d["kind"],
            n_elements=d["n_elements"],
            spacing=d.get("spacing", 0.5),
            n_horizontal=d.get("n_horizontal"),
            n_vertical=d.get("n_vertical"),
        )


@dataclass(frozen=True)
class SteeringAngle:
    """Beam direction: azimuth in [0, 2*pi), elevation in [-pi/2, pi/2].

    Azimuth is normalized modulo 2*pi on construction. Elevation is ignored
    by linear arrays.
    """

    azimuth: float
    elevation: float = math.pi / 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "azimuth", float(self.azimuth) % (2.0 * math.pi))
        if not -math.pi / 2 <= self.elevation <= math.pi / 2:
            raise ValueError("elevation must lie in [-pi/2, pi/2]")


def ula_response(n: int, spacing: float, azimuth: float) -> np.ndarray:
    """Unit-norm steering vector of an n-element ULA.

    Entry m is ``exp(1j * 2*pi * spacing * m * sin(azimuth)) / sqrt(n)``,
    so the response depends on the azimuth only through ``sin(azimuth)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    phase = 2.0 * np.pi * spacing * np.sin(azimuth)
    return np.exp(1j * phase * np.arange(n)) / np.sqrt(n)


def upa_response(geometry: ArrayGeometry, angle: SteeringAngle) -> np.ndarray:
    """Unit-norm steering vector of a planar array (separable model).

    The horizontal factor has per-element phase step
    ``2*pi*spacing*sin(azimuth)*sin(elevation)`` and the vertical factor
    ``2*pi*spacing*cos(elevation)``; the response is their Kronecker
    product. Element ``i*n_vertical + j`` corresponds to horizontal index
    i and vertical index j.
    """
    if geometry.kind != UPA:
        raise ValueError("geometry must be a UPA")
    step_h = (
        2.0 * np.pi * geometry.spacing * np.sin(angle.azimuth) * np.sin(angle.elevation)
    )
    step_v = 2.0 * np.pi * geometry.spacing * np.cos(angle.elevation)
    horizontal = np.exp(1j * step_h * np.arange(geometry.n_horizontal))
    vertical = np.exp(1j * step_v * np.arange(geometry.n_vertical))
    return np.kron(horizontal, vertical) / np.sqrt(geometry.n_elements)


def response(geometry: ArrayGeometry, angle: SteeringAngle) -> np.ndarray:
    """Steering vector of either array kind (elevation ignored for a ULA)."""
    if geometry.kind == ULA:
        return ula_response(geometry.n_elements, geometry.spacing, angle.azimuth)
    return upa_response(geometry, angle)


def virtual_direction_matrix(n: int) -> np.ndarray:
    """Unitary n x n matrix of fixed beamspace directions.

    Column p is the ULA response evaluated at spatial frequency 2*pi*p/n
    (p = 0..n-1), i.e. a scaled DFT matrix with unit-norm columns.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m = np.arange(n)
    return np.exp(2j * np.pi * np.outer(m, m) / n) / np.sqrt(n)
