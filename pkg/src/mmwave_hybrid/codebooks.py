"""Beamsteering and random vector quantization codebooks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arrays import UPA, ArrayGeometry

BEAMSTEERING_ULA = "beamsteering_ula"
BEAMSTEERING_UPA = "beamsteering_upa"
RVQ = "rvq"

DEFAULT_PROBE_GRID = 1024


@dataclass
class Codebook:
    """Ordered set of unit-norm beamforming vectors.

    ``vectors`` has one codeword per row, ``2**bits`` rows in total.
    ``metadata`` records the parameterization (steering grids and array
    geometry for beamsteering codebooks, the seed for RVQ when known) and
    is kept JSON-serializable.
    """

    vectors: np.ndarray
    bits: int
    kind: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in (BEAMSTEERING_ULA, BEAMSTEERING_UPA, RVQ):
            raise ValueError(f"unknown codebook kind {self.kind!r}")
        if self.bits < 0:
            raise ValueError("bits must be >= 0")
        self.vectors = np.asarray(self.vectors, dtype=complex)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D array (codewords as rows)")
        if self.vectors.shape[0] != 2**self.bits:
            raise ValueError("codebook size must be exactly 2**bits")
        norms = np.linalg.norm(self.vectors, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise ValueError("all codewords must have unit norm")

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]


def _ula_steering_matrix(n: int, spacing: float, azimuths: np.ndarray) -> np.ndarray:
    """Rows are unit-norm ULA responses at the given azimuths."""
    phases = 2.0 * np.pi * spacing * np.sin(azimuths)
    return np.exp(1j * np.outer(phases, np.arange(n))) / math.sqrt(n)


def _phase_steering_matrix(n: int, increments: np.ndarray) -> np.ndarray:
    """Rows are unit-norm steering vectors with the given per-element phase
    increments."""
    return np.exp(1j * np.outer(increments, np.arange(n))) / math.sqrt(n)


def beamsteering_codebook(geometry: ArrayGeometry, bits: int) -> Codebook:
    """Beamsteering codebook realizable with ``bits``-bit phase shifters.

    Codewords are steering vectors whose per-element phase increments lie
    on the quantized-phase grid 2*pi*k/2**bits, i.e. the beams a phase-
    shifter network with 2**bits settings can point (beam k of a ULA is the
    response whose steering argument is 2*pi*k/2**bits; increments beyond
    the sine range are aliased beams, as in the beamspace representation).
    A ULA gets 2**bits beams; a UPA gets the product grid of horizontal and
    vertical increments, 2**(2*bits) beams, and ``Codebook.bits`` stores
    the total index width.
    """
    if bits < 0:
        raise ValueError("bits must be >= 0")
    increments = 2.0 * np.pi * np.arange(2**bits) / 2**bits
    if geometry.kind == UPA:
        horizontal = _phase_steering_matrix(geometry.n_horizontal, increments)
        vertical = _phase_steering_matrix(geometry.n_vertical, increments)
        vectors = np.stack(
            [np.kron(h, v) for h in horizontal for v in vertical]
        )
        metadata = {
            "geometry": geometry.to_dict(),
            "shifter_bits": bits,
            "horizontal_phase_grid": increments.tolist(),
            "vertical_phase_grid": increments.tolist(),
        }
        return Codebook(vectors, 2 * bits, BEAMSTEERING_UPA, metadata)

    vectors = _phase_steering_matrix(geometry.n_elements, increments)
    metadata = {
        "geometry": geometry.to_dict(),
        "shifter_bits": bits,
        "phase_grid": increments.tolist(),
    }
    return Codebook(vectors, bits, BEAMSTEERING_ULA, metadata)


def rvq_codebook(
    dimension: int, bits: int, rng: np.random.Generator | int
) -> Codebook:
    """Random vector quantization codebook.

    Draws ``2**bits`` vectors independently and uniformly on the complex
    unit sphere by normalizing i.i.d. complex Gaussian draws. ``rng`` may
    be an integer seed (recorded in metadata) or a Generator.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if bits < 0:
        raise ValueError("bits must be >= 0")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = np.random.default_rng(rng) if seed is not None else rng
    size = 2**bits
    draws = gen.standard_normal((size, dimension)) + 1j * gen.standard_normal(
        (size, dimension)
    )
    vectors = draws / np.linalg.norm(draws, axis=1, keepdims=True)
    metadata = {"seed": int(seed) if seed is not None else None}
    return Codebook(vectors, bits, RVQ, metadata)


def quantize(codebook: Codebook, target: np.ndarray) -> tuple[np.ndarray, int]:
    """Best codeword for a unit-norm target under absolute correlation.

    Returns the codeword maximizing ``|codeword^H target|`` together with
    its index; ties go to the lowest index. The caller normalizes the
    target.
    """
    if len(codebook) == 0:
        raise ValueError("empty codebook")
    target = np.asarray(target, dtype=complex)
    if target.shape != (codebook.dimension,):
        raise ValueError("target dimension does not match the codebook")
    scores = np.abs(codebook.vectors.conj() @ target)
    index = int(np.argmax(scores))
    return codebook.vectors[index], index


def _upa_probe_block(
    geometry: ArrayGeometry, azimuths: np.ndarray, elevations: np.ndarray
) -> np.ndarray:
    """Steering vectors for all (azimuth, elevation) combinations, flattened."""
    sin_el = np.sin(elevations)
    cos_el = np.cos(elevations)
    step_h = 2.0 * np.pi * geometry.spacing * np.outer(np.sin(azimuths), sin_el)
    step_v = 2.0 * np.pi * geometry.spacing * cos_el
    horiz = np.exp(1j * step_h[:, :, None] * np.arange(geometry.n_horizontal))
    vert = np.exp(1j * step_v[:, None] * np.arange(geometry.n_vertical))
    block = horiz[:, :, :, None] * vert[None, :, None, :]
    n_az, n_el = len(azimuths), len(elevations)
    return block.reshape(n_az * n_el, geometry.n_elements) / math.sqrt(
        geometry.n_elements
    )


def min_max_correlation(
    codebook: Codebook, probe_grid_size: int = DEFAULT_PROBE_GRID
) -> float:
    """Worst-case correlation floor of a beamsteering codebook.

    Over a dense grid of continuous steering angles (``probe_grid_size``
    points per angular dimension) this returns the minimum over the grid of
    the maximum over codewords of the absolute correlation between the
    continuous steering vector and the codeword. Note the naive min-max of
    a codebook against itself is identically 1 (every codeword matches
    itself); the probe-grid value is the quantity that actually limits
    quantized beamsteering.
    """
    if codebook.kind == RVQ:
        raise ValueError("correlation floor is defined for beamsteering codebooks only")
    if probe_grid_size < 10 * len(codebook):
        raise ValueError("probe_grid_size must be at least 10x the codebook size")
    geometry = ArrayGeometry.from_dict(codebook.metadata["geometry"])
    codewords = codebook.vectors.conj().T  # (dim, size)

    if codebook.kind == BEAMSTEERING_ULA:
        azimuths = np.linspace(0.0, 2.0 * np.pi, probe_grid_size, endpoint=False)
        probes = _ula_steering_matrix(geometry.n_elements, geometry.spacing, azimuths)
        best = np.abs(probes @ codewords).max(axis=1)
        return float(best.min())

    azimuths = np.linspace(0.0, 2.0 * np.pi, probe_grid_size, endpoint=False)
    elevations = np.linspace(-np.pi / 2, np.pi / 2, probe_grid_size)
    floor = np.inf
    chunk = max(1, (1 << 22) // (probe_grid_size * geometry.n_elements))
    for start in range(0, probe_grid_size, chunk):
        block = _upa_probe_block(geometry, azimuths[start : start + chunk], elevations)
        best = np.abs(block @ codewords).max(axis=1)
        floor = min(floor, float(best.min()))
    return floor


def _interleave(matrix: np.ndarray) -> list:
    stacked = np.empty(matrix.shape + (2,))
    stacked[..., 0] = matrix.real
    stacked[..., 1] = matrix.imag
    return stacked.tolist()


def _deinterleave(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def codebook_to_json(codebook: Codebook, include_vectors: bool = True) -> dict:
    """JSON-serializable document describing a codebook."""
    doc = {
        "kind": codebook.kind,
        "bits": codebook.bits,
        "dimension": codebook.dimension,
        "metadata": codebook.metadata,
    }
    if include_vectors:
        doc["vectors"] = _interleave(codebook.vectors)
    return doc


def codebook_from_json(doc: dict) -> Codebook:
    """Rebuild a codebook from its JSON document.

    Documents without stored vectors must be reconstructible from metadata
    (beamsteering grids, or an RVQ seed).
    """
    kind, bits = doc["kind"], doc["bits"]
    if "vectors" in doc:
        return Codebook(_deinterleave(doc["vectors"]), bits, kind, doc.get("metadata", {}))
    metadata = doc.get("metadata", {})
    if kind in (BEAMSTEERING_ULA, BEAMSTEERING_UPA):
        geometry = ArrayGeometry.from_dict(metadata["geometry"])
        return beamsteering_codebook(geometry, metadata["shifter_bits"])
    seed = metadata.get("seed")
    if seed is None:
        raise ValueError("RVQ codebook without vectors requires a seed in metadata")
    return rvq_codebook(doc["dimension"], bits, seed)
