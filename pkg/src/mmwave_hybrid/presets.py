"""Canned experiment configurations at desk-scale trial counts."""

from __future__ import annotations

from dataclasses import dataclass

EXPERIMENT_RATES = "rates"
EXPERIMENT_ANTENNA_SWEEP = "antenna_sweep"
EXPERIMENT_QUANT_SWEEP = "quant_sweep"
EXPERIMENT_COVERAGE = "coverage"


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    document: dict


def _upa(side: int) -> dict:
    return {"kind": "UPA", "n_horizontal": side, "n_vertical": side, "spacing": 0.5}


_BASE = {
    "bs_array": _upa(8),
    "ms_array": _upa(4),
    "users": 4,
    "channel": {"paths": 1, "gain_variance": 1.0, "elevation": "uniform"},
    "rf_bits_bs": None,
    "rf_bits_ms": None,
    "bb_bits": None,
    "trials": 500,
    "seed": 1,
}

PRESETS: dict[str, Preset] = {}


def _register(name: str, description: str, document: dict) -> None:
    PRESETS[name] = Preset(name, description, document)


_register(
    "fig3a",
    "rate vs SNR: 4 users, 8x8 BS / 4x4 MS planar arrays, single-path, "
    "continuous RF angles, perfect feedback, all schemes",
    {
        "experiment": EXPERIMENT_RATES,
        **_BASE,
        "snr_db": [-40.0, -30.0, -20.0, -10.0, 0.0],
        "schemes": ["hybrid", "beamsteering", "single_user", "block_diagonalization"],
    },
)

_register(
    "fig3b",
    "rate vs equal BS/MS array size {16, 36, 64}: 4 users, 3-path channels, "
    "continuous RF angles, perfect feedback",
    {
        "experiment": EXPERIMENT_ANTENNA_SWEEP,
        **_BASE,
        "channel": {"paths": 3, "gain_variance": 1.0, "elevation": "uniform"},
        "snr_db": [0.0],
        "schemes": ["hybrid", "beamsteering", "single_user"],
        "sweep": {"vary": "both", "values": [16, 36, 64]},
    },
)

_register(
    "fig4a",
    "rate vs BS antenna count {16, 64, 256} at 0 dB: 4 users, 4x4 MS arrays, "
    "single-path, continuous RF angles, perfect feedback",
    {
        "experiment": EXPERIMENT_ANTENNA_SWEEP,
        **_BASE,
        "snr_db": [0.0],
        "schemes": ["hybrid", "beamsteering", "single_user"],
        "sweep": {"vary": "bs", "values": [16, 64, 256]},
    },
)

_register(
    "fig4b",
    "rate vs MS antenna count {4, 16, 64} at 0 dB: 4 users, 8x8 BS array, "
    "single-path, continuous RF angles, perfect feedback",
    {
        "experiment": EXPERIMENT_ANTENNA_SWEEP,
        **_BASE,
        "snr_db": [0.0],
        "schemes": ["hybrid", "beamsteering", "single_user"],
        "sweep": {"vary": "ms", "values": [4, 16, 64]},
    },
)

_register(
    "fig5a",
    "rate vs RF phase-shifter bits {1..5} at 0 dB: 4 users, 8x8 BS / 4x4 MS "
    "arrays, 3-path channels, perfect baseband feedback",
    {
        "experiment": EXPERIMENT_QUANT_SWEEP,
        **_BASE,
        "channel": {"paths": 3, "gain_variance": 1.0, "elevation": "uniform"},
        "snr_db": [0.0],
        "schemes": ["hybrid", "beamsteering"],
        "trials": 100,
        "quant_sweep": {"vary": "rf_bits", "values": [1, 2, 3, 4, 5]},
    },
)

_register(
    "fig5b",
    "rate vs effective-channel feedback bits {1, 2, 4, 6, 8, 10} at 0 dB: "
    "4 users, 3-bit BS / 2-bit MS RF codebooks, 3-path channels",
    {
        "experiment": EXPERIMENT_QUANT_SWEEP,
        **_BASE,
        "channel": {"paths": 3, "gain_variance": 1.0, "elevation": "uniform"},
        "snr_db": [0.0],
        "schemes": ["hybrid", "beamsteering"],
        "rf_bits_bs": 3,
        "rf_bits_ms": 2,
        "quant_sweep": {"vary": "bb_bits", "values": [1, 2, 4, 6, 8, 10]},
    },
)

_register(
    "fig6",
    "per-user coverage probability vs rate threshold: Poisson cell layout, "
    "2..5 users per cell plus the one-user-per-cell baseline",
    {
        "experiment": EXPERIMENT_COVERAGE,
        "bs_density": 8.0,
        "ms_density_factor": 30.0,
        "region_side": 2.0,
        "pathloss": {"los_exponent": 2.0, "nlos_exponent": 4.0, "los_radius": None},
        "users_per_bs": [2, 3, 4, 5],
        "thresholds": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        "bs_array": _upa(8),
        "ms_array": _upa(4),
        "tx_power": 1.0,
        "noise_power": 100.0,
        "schemes": ["hybrid", "beamsteering"],
        "include_single_user": True,
        "trials": 100,
        "seed": 1,
    },
)
