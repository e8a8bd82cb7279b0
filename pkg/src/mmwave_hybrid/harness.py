"""Seeded Monte Carlo experiment runner producing averaged rate tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .arrays import ULA, ArrayGeometry
from .channel import ChannelConfig, dominant_path_gain, sample_channel
from .codebooks import Codebook, beamsteering_codebook, rvq_codebook
from .metrics import single_user_rate, user_rate
from .precoding import (
    IllConditioned,
    Infeasible,
    beamsteering_only,
    block_diagonalization,
    hybrid_precode,
)

SCHEME_HYBRID = "hybrid"
SCHEME_BEAMSTEERING = "beamsteering"
SCHEME_BLOCK_DIAGONALIZATION = "block_diagonalization"
SCHEME_SINGLE_USER = "single_user"
VALID_SCHEMES = (
    SCHEME_HYBRID,
    SCHEME_BEAMSTEERING,
    SCHEME_BLOCK_DIAGONALIZATION,
    SCHEME_SINGLE_USER,
)

SWEEP_BS = "bs"
SWEEP_MS = "ms"
SWEEP_BOTH = "both"

CSV_COLUMNS = ("scheme", "sweep_param", "snr_db", "mean_rate", "std_err", "trials", "excluded")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one rate experiment.

    ``rf_bits_bs``/``rf_bits_ms`` of None select continuous beamsteering
    angles (matched-filter stage-1 surrogate); ``bb_bits`` of None selects
    perfect effective-channel feedback. SNR values are in the plotted
    convention P*alpha_bar/(sigma^2*U), in dB.
    """

    bs_geometry: ArrayGeometry
    ms_geometry: ArrayGeometry
    n_users: int
    channel: ChannelConfig
    snr_db_grid: tuple[float, ...]
    schemes: tuple[str, ...] = (SCHEME_HYBRID, SCHEME_BEAMSTEERING, SCHEME_SINGLE_USER)
    rf_bits_bs: int | None = None
    rf_bits_ms: int | None = None
    bb_bits: int | None = None
    trials: int = 500
    seed: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.snr_db_grid) == 0:
            raise ValueError("snr_db_grid must be non-empty")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.n_users > self.bs_geometry.n_elements:
            raise ValueError("n_users must not exceed the BS antenna count")
        for s in self.schemes:
            if s not in VALID_SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        for bits in (self.rf_bits_bs, self.rf_bits_ms, self.bb_bits):
            if bits is not None and bits < 0:
                raise ValueError("codebook bit counts must be >= 0")
        if (self.rf_bits_bs is None) != (self.rf_bits_ms is None):
            raise ValueError("set both RF bit counts, or neither for continuous angles")


@dataclass(frozen=True)
class RateRow:
    """One averaged result: a (scheme, sweep value, SNR) cell."""

    scheme: str
    sweep_param: float | int | None
    snr_db: float
    mean_rate: float
    std_err: float
    trials: int
    excluded: int


@dataclass
class RateTable:
    """Averaged per-user rates, one row per (scheme, sweep value, SNR)."""

    rows: list[RateRow]

    def filter(
        self,
        scheme: str | None = None,
        sweep_param: float | int | None = None,
        snr_db: float | None = None,
    ) -> list[RateRow]:
        out = []
        for r in self.rows:
            if scheme is not None and r.scheme != scheme:
                continue
            if sweep_param is not None and r.sweep_param != sweep_param:
                continue
            if snr_db is not None and r.snr_db != snr_db:
                continue
            out.append(r)
        return out

    def lookup(
        self, scheme: str, snr_db: float, sweep_param: float | int | None = None
    ) -> RateRow:
        matches = self.filter(scheme=scheme, sweep_param=sweep_param, snr_db=snr_db)
        if len(matches) != 1:
            raise KeyError(
                f"expected one row for ({scheme}, {sweep_param}, {snr_db}), got {len(matches)}"
            )
        return matches[0]


def plotted_snr_to_linear(snr_db: float, n_users: int, gain_variance: float) -> float:
    """Convert the plotted SNR convention P*alpha/(sigma^2*U), in dB, to the
    linear P/sigma^2 used by the rate and bound evaluators."""
    return n_users * 10.0 ** (snr_db / 10.0) / gain_variance


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Per-trial random substream; stable when the trial count changes."""
    return np.random.default_rng([seed, trial])


def _rf_codebooks(config: ExperimentConfig) -> tuple[Codebook | None, Codebook | None]:
    if config.rf_bits_bs is None:
        return None, None
    return (
        beamsteering_codebook(config.bs_geometry, config.rf_bits_bs),
        beamsteering_codebook(config.ms_geometry, config.rf_bits_ms),
    )


def _single_user_gains(channels) -> list[complex]:
    if len(channels[0].paths) == 1:
        return [ch.paths[0].gain for ch in channels]
    return [dominant_path_gain(ch) for ch in channels]


def run_rate_experiment(config: ExperimentConfig) -> RateTable:
    """Run the configured Monte Carlo experiment.

    Per trial, draws one channel per user from the trial's private
    substream, runs every configured scheme on the same channels, and
    averages the per-user rates. Trials where a scheme fails (ill-
    conditioned zero forcing, infeasible block diagonalization) are
    excluded from that scheme's average and counted in its rows.
    """
    f_cb, w_cb = _rf_codebooks(config)
    n_users = config.n_users
    n_paths = config.channel.n_paths
    snr_linear = [
        plotted_snr_to_linear(db, n_users, config.channel.gain_variance)
        for db in config.snr_db_grid
    ]

    samples: dict[str, list[list[float]]] = {
        scheme: [[] for _ in config.snr_db_grid] for scheme in config.schemes
    }
    excluded = {scheme: 0 for scheme in config.schemes}

    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        channels = [
            sample_channel(config.channel, config.bs_geometry, config.ms_geometry, rng)
            for _ in range(n_users)
        ]
        bb_codebooks = None
        if config.bb_bits is not None:
            bb_codebooks = [
                rvq_codebook(n_users, config.bb_bits, rng) for _ in range(n_users)
            ]

        for scheme in config.schemes:
            if scheme == SCHEME_SINGLE_USER:
                gains = _single_user_gains(channels)
                for i, snr in enumerate(snr_linear):
                    rates = [
                        single_user_rate(
                            g,
                            config.bs_geometry.n_elements,
                            config.ms_geometry.n_elements,
                            n_users,
                            n_paths,
                            snr,
                        )
                        for g in gains
                    ]
                    samples[scheme][i].append(float(np.mean(rates)))
                continue

            try:
                if scheme == SCHEME_HYBRID:
                    solution = hybrid_precode(channels, f_cb, w_cb, bb_codebooks)
                elif scheme == SCHEME_BEAMSTEERING:
                    solution = beamsteering_only(channels, f_cb, w_cb)
                else:
                    solution = block_diagonalization(channels)
            except (IllConditioned, Infeasible):
                excluded[scheme] += 1
                continue

            for i, snr in enumerate(snr_linear):
                rates = [
                    user_rate(channels[u], solution, snr, u).rate
                    for u in range(n_users)
                ]
                samples[scheme][i].append(float(np.mean(rates)))

    rows = []
    for scheme in config.schemes:
        for i, db in enumerate(config.snr_db_grid):
            values = np.asarray(samples[scheme][i])
            used = len(values)
            if used == 0:
                mean, err = math.nan, math.nan
            elif used == 1:
                mean, err = float(values[0]), 0.0
            else:
                mean = float(values.mean())
                err = float(values.std(ddof=1) / math.sqrt(used))
            rows.append(
                RateRow(
                    scheme=scheme,
                    sweep_param=None,
                    snr_db=db,
                    mean_rate=mean,
                    std_err=err,
                    trials=used,
                    excluded=excluded[scheme],
                )
            )
    return RateTable(rows)


def _resized(geometry: ArrayGeometry, n_elements: int) -> ArrayGeometry:
    if geometry.kind == ULA:
        return ArrayGeometry.ula(n_elements, geometry.spacing)
    side = math.isqrt(n_elements)
    if side * side != n_elements:
        raise ValueError(f"UPA sweep sizes must be perfect squares, got {n_elements}")
    return ArrayGeometry.upa(side, side, geometry.spacing)


def run_antenna_sweep(
    config: ExperimentConfig, sweep: str, values: Sequence[int]
) -> RateTable:
    """Repeat the experiment across antenna counts.

    ``sweep`` selects which side varies: "bs", "ms", or "both" (equal BS
    and MS sizes). UPA geometries sweep through square grids. Every sweep
    value reuses the same seed, so trials are paired across values.
    """
    if sweep not in (SWEEP_BS, SWEEP_MS, SWEEP_BOTH):
        raise ValueError(f"unknown sweep kind {sweep!r}")
    if len(values) == 0:
        raise ValueError("sweep values must be non-empty")
    rows = []
    for value in values:
        updates = {}
        if sweep in (SWEEP_BS, SWEEP_BOTH):
            updates["bs_geometry"] = _resized(config.bs_geometry, value)
        if sweep in (SWEEP_MS, SWEEP_BOTH):
            updates["ms_geometry"] = _resized(config.ms_geometry, value)
        table = run_rate_experiment(replace(config, **updates))
        rows.extend(replace(row, sweep_param=value) for row in table.rows)
    return RateTable(rows)


def run_quantization_sweep(
    config: ExperimentConfig,
    rf_bits_grid: Sequence[int] | None = None,
    bb_bits_grid: Sequence[int] | None = None,
) -> RateTable:
    """Repeat the experiment across codebook sizes.

    Exactly one grid must be given. The RF grid applies the same bit count
    to the BS and MS beamsteering codebooks; the baseband grid sweeps the
    effective-channel feedback budget.
    """
    if (rf_bits_grid is None) == (bb_bits_grid is None):
        raise ValueError("provide exactly one of rf_bits_grid or bb_bits_grid")
    grid = rf_bits_grid if rf_bits_grid is not None else bb_bits_grid
    if len(grid) == 0:
        raise ValueError("sweep values must be non-empty")
    rows = []
    for bits in grid:
        if rf_bits_grid is not None:
            sub = replace(config, rf_bits_bs=bits, rf_bits_ms=bits)
        else:
            sub = replace(config, bb_bits=bits)
        table = run_rate_experiment(sub)
        rows.extend(replace(row, sweep_param=bits) for row in table.rows)
    return RateTable(rows)


def experiment_config_to_dict(config: ExperimentConfig) -> dict:
    """JSON-ready description of an experiment configuration."""
    return {
        "bs_array": config.bs_geometry.to_dict(),
        "ms_array": config.ms_geometry.to_dict(),
        "users": config.n_users,
        "channel": config.channel.to_dict(),
        "snr_db": list(config.snr_db_grid),
        "schemes": list(config.schemes),
        "rf_bits_bs": config.rf_bits_bs,
        "rf_bits_ms": config.rf_bits_ms,
        "bb_bits": config.bb_bits,
        "trials": config.trials,
        "seed": config.seed,
    }


def write_rate_csv(table: RateTable, path) -> None:
    """CSV rows: scheme, sweep_param, snr_db, mean_rate, std_err, trials, excluded."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for r in table.rows:
            writer.writerow(
                [
                    r.scheme,
                    "" if r.sweep_param is None else r.sweep_param,
                    r.snr_db,
                    r.mean_rate,
                    r.std_err,
                    r.trials,
                    r.excluded,
                ]
            )


def write_rate_json(table: RateTable, config_doc: dict, path) -> None:
    """JSON document embedding the full configuration for provenance."""
    doc = {
        "config": config_doc,
        "rows": [
            {
                "scheme": r.scheme,
                "sweep_param": r.sweep_param,
                "snr_db": r.snr_db,
                "mean_rate": r.mean_rate,
                "std_err": r.std_err,
                "trials": r.trials,
                "excluded": r.excluded,
            }
            for r in table.rows
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
