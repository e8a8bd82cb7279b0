"""Stochastic-geometry coverage simulation for multi-cell downlinks."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arrays import ArrayGeometry, SteeringAngle
from .channel import ChannelRealization, Path, assemble_matrix
from .harness import trial_rng
from .precoding import IllConditioned, beamsteering_only, hybrid_precode

SCHEME_HYBRID = "hybrid"
SCHEME_BEAMSTEERING = "beamsteering"
SCHEME_SINGLE_USER = "single_user"

COVERAGE_CSV_COLUMNS = ("scheme", "n", "eta", "coverage", "trials")

_MIN_DISTANCE = 1e-6


@dataclass(frozen=True)
class PathLossModel:
    """Distance-based path loss with a line-of-sight ball.

    A link is line-of-sight iff its distance is below ``los_radius``
    (default 0.1x the mean inter-site distance); path gain variance is
    distance**(-exponent) with the exponent picked per link class.
    """

    los_exponent: float = 2.0
    nlos_exponent: float = 4.0
    los_radius: float | None = None

    def to_dict(self) -> dict:
        return {
            "los_exponent": self.los_exponent,
            "nlos_exponent": self.nlos_exponent,
            "los_radius": self.los_radius,
        }

    @staticmethod
    def from_dict(d: dict) -> "PathLossModel":
        return PathLossModel(
            los_exponent=d.get("los_exponent", 2.0),
            nlos_exponent=d.get("nlos_exponent", 4.0),
            los_radius=d.get("los_radius"),
        )


@dataclass(frozen=True)
class CellularConfig:
    """Multi-cell coverage experiment description.

    BS and MS positions are independent Poisson point processes on a square
    region with toroidal wrap-around; each MS associates to the BS with the
    least path loss, and each BS randomly serves ``n`` of its associated
    users for every ``n`` in ``users_per_bs``. Channels are single-path
    with distance-dependent gain variance, fixed pi/2 elevations, and
    uniform azimuths. Absolute densities, powers, and thresholds are
    desk-scale defaults; coverage conclusions are trend-level only.
    """

    bs_density: float = 8.0
    ms_density_factor: float = 30.0
    region_side: float = 2.0
    pathloss: PathLossModel = field(default_factory=PathLossModel)
    users_per_bs: tuple[int, ...] = (2, 3, 4, 5)
    thresholds: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)
    bs_geometry: ArrayGeometry = field(default_factory=lambda: ArrayGeometry.upa(8, 8))
    ms_geometry: ArrayGeometry = field(default_factory=lambda: ArrayGeometry.upa(4, 4))
    tx_power: float = 1.0
    noise_power: float = 100.0
    schemes: tuple[str, ...] = (SCHEME_HYBRID, SCHEME_BEAMSTEERING)
    include_single_user: bool = True
    trials: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.bs_density <= 0 or self.ms_density_factor <= 0:
            raise ValueError("densities must be > 0")
        if self.region_side <= 0:
            raise ValueError("region_side must be > 0")
        if self.bs_density * self.region_side**2 < 10:
            raise ValueError("region too small: expected BS count must be >= 10")
        if len(self.users_per_bs) == 0 or any(n < 1 for n in self.users_per_bs):
            raise ValueError("users_per_bs must be >= 1")
        if len(self.thresholds) == 0:
            raise ValueError("thresholds must be non-empty")
        if self.tx_power <= 0 or self.noise_power <= 0:
            raise ValueError("powers must be > 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for s in self.schemes:
            if s not in (SCHEME_HYBRID, SCHEME_BEAMSTEERING):
                raise ValueError(f"unknown cellular scheme {s!r}")

    @property
    def los_radius(self) -> float:
        if self.pathloss.los_radius is not None:
            return self.pathloss.los_radius
        return 0.1 / math.sqrt(self.bs_density)


@dataclass(frozen=True)
class CoverageRow:
    scheme: str
    n_users: int
    eta: float
    coverage: float
    trials: int


@dataclass
class CoverageTable:
    rows: list[CoverageRow]
    skipped_cells: dict
    degenerate_trials: int
    ill_conditioned_cells: dict

    def lookup(self, scheme: str, n_users: int, eta: float) -> CoverageRow:
        matches = [
            r
            for r in self.rows
            if r.scheme == scheme and r.n_users == n_users and r.eta == eta
        ]
        if len(matches) != 1:
            raise KeyError(f"expected one row for ({scheme}, {n_users}, {eta})")
        return matches[0]


def _torus_distances(a: np.ndarray, b: np.ndarray, side: float) -> np.ndarray:
    """Pairwise distances on the wrapped square (len(a) x len(b))."""
    delta = np.abs(a[:, None, :] - b[None, :, :])
    delta = np.minimum(delta, side - delta)
    return np.sqrt((delta**2).sum(axis=2))


def _upa_azimuth_response(geometry: ArrayGeometry, azimuths: np.ndarray) -> np.ndarray:
    """Rows are responses at the given azimuths with elevation fixed at pi/2."""
    step = 2.0 * np.pi * geometry.spacing * np.sin(azimuths)
    horiz = np.exp(1j * np.outer(step, np.arange(geometry.n_horizontal)))
    flat = np.repeat(horiz, geometry.n_vertical, axis=1)
    return flat / math.sqrt(geometry.n_elements)


@dataclass
class _CellCase:
    """All cells' serving sets, link draws, and per-user rate inputs for one
    (trial, users-per-cell) case."""

    serving: list[np.ndarray]  # per cell: indices of served MSs
    channels: list[list[ChannelRealization]]  # per cell: serving-link channels
    cross_gain: dict  # (cell, user) -> per-BS complex gains
    cross_aoa: dict  # (cell, user) -> per-BS arrival azimuths
    cross_aod: dict  # (cell, user) -> per-BS departure azimuths


def _draw_case(
    config: CellularConfig,
    rng: np.random.Generator,
    n_bs: int,
    gain_variance: np.ndarray,
    members: list[np.ndarray],
    n_serve: int,
) -> tuple[_CellCase, int]:
    """Select served users and draw every BS-to-served-MS link."""
    serving: list[np.ndarray] = []
    skipped = 0
    for b in range(n_bs):
        if len(members[b]) < n_serve:
            serving.append(np.empty(0, dtype=int))
            skipped += 1
        else:
            serving.append(np.sort(rng.choice(members[b], size=n_serve, replace=False)))

    case = _CellCase(serving, [], {}, {}, {})
    for b in range(n_bs):
        cell_channels = []
        for u, m in enumerate(serving[b]):
            scale = np.sqrt(gain_variance[:, m] / 2.0)
            gains = scale * (
                rng.standard_normal(n_bs) + 1j * rng.standard_normal(n_bs)
            )
            aods = rng.uniform(0.0, 2.0 * math.pi, n_bs)
            aoas = rng.uniform(0.0, 2.0 * math.pi, n_bs)
            case.cross_gain[(b, u)] = gains
            case.cross_aod[(b, u)] = aods
            case.cross_aoa[(b, u)] = aoas
            path = Path(
                gain=complex(gains[b]),
                aod=SteeringAngle(aods[b], math.pi / 2),
                aoa=SteeringAngle(aoas[b], math.pi / 2),
            )
            cell_channels.append(
                ChannelRealization(
                    paths=[path],
                    matrix=assemble_matrix([path], config.bs_geometry, config.ms_geometry),
                    bs_geometry=config.bs_geometry,
                    ms_geometry=config.ms_geometry,
                )
            )
        case.channels.append(cell_channels)
    return case, skipped


def _case_rates(
    config: CellularConfig, case: _CellCase, scheme: str, n_serve: int
) -> tuple[list[float], int]:
    """Per-served-user rates with inter-cell interference from the actual
    transmitted precoders of all other serving cells.

    A cell whose zero-forcing precoder is ill-conditioned (near-coincident
    user steering under the fixed-elevation arrays) stays silent for this
    snapshot; its users are excluded and counted.
    """
    n_bs = len(case.serving)
    solutions = {}
    ill_conditioned = 0
    for b in range(n_bs):
        if len(case.serving[b]) == 0:
            continue
        try:
            if scheme == SCHEME_BEAMSTEERING:
                solutions[b] = beamsteering_only(case.channels[b], None, None)
            else:
                solutions[b] = hybrid_precode(case.channels[b], None, None, None)
        except IllConditioned:
            ill_conditioned += 1

    amplification = config.bs_geometry.n_elements * config.ms_geometry.n_elements
    per_stream_power = config.tx_power / n_serve
    rates = []
    for b, solution in solutions.items():
        f_eff = solution.effective_precoder
        others = [(bp, sp) for bp, sp in solutions.items() if bp != b]
        precoders = {bp: sp.effective_precoder for bp, sp in others}
        for u in range(len(case.serving[b])):
            w = solution.combiners[u]
            row = np.abs(w.conj() @ case.channels[b][u].matrix @ f_eff) ** 2
            signal = per_stream_power * float(row[u])
            intra = per_stream_power * float(row.sum() - row[u])
            inter = 0.0
            gains = case.cross_gain[(b, u)]
            a_ms = _upa_azimuth_response(config.ms_geometry, case.cross_aoa[(b, u)])
            a_bs = _upa_azimuth_response(config.bs_geometry, case.cross_aod[(b, u)])
            rx_gain = np.abs(a_ms.conj() @ w) ** 2
            for bp, _ in others:
                beam = np.abs(a_bs[bp].conj() @ precoders[bp]) ** 2
                inter += (
                    per_stream_power
                    * amplification
                    * abs(gains[bp]) ** 2
                    * float(rx_gain[bp])
                    * float(beam.sum())
                )
            noise = config.noise_power * float(np.real(np.vdot(w, w)))
            rates.append(math.log2(1.0 + signal / (intra + inter + noise)))
    return rates, ill_conditioned


def run_coverage(config: CellularConfig) -> CoverageTable:
    """Estimate per-user coverage probability P(rate >= eta).

    Per trial, draws one network topology, then for every configured
    users-per-cell count (plus the one-user-per-cell baseline) selects the
    served users, draws all serving and interfering links, precodes every
    cell per scheme, and accumulates the empirical coverage over the
    threshold grid.
    """
    cases = list(config.users_per_bs)
    runs: list[tuple[str, int]] = [(s, n) for n in cases for s in config.schemes]
    if config.include_single_user:
        runs.append((SCHEME_SINGLE_USER, 1))

    hits = {run: np.zeros(len(config.thresholds), dtype=int) for run in runs}
    totals = {run: 0 for run in runs}
    skipped_cells = {n: 0 for n in cases + ([1] if config.include_single_user else [])}
    ill_conditioned = {run: 0 for run in runs}
    degenerate = 0
    eta = np.asarray(config.thresholds)

    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        area = config.region_side**2
        n_bs = int(rng.poisson(config.bs_density * area))
        n_ms = int(rng.poisson(config.bs_density * config.ms_density_factor * area))
        if n_bs < 2 or n_ms == 0:
            degenerate += 1
            continue
        bs_pos = rng.uniform(0.0, config.region_side, (n_bs, 2))
        ms_pos = rng.uniform(0.0, config.region_side, (n_ms, 2))
        dist = np.maximum(
            _torus_distances(bs_pos, ms_pos, config.region_side), _MIN_DISTANCE
        )
        exponent = np.where(
            dist < config.los_radius,
            config.pathloss.los_exponent,
            config.pathloss.nlos_exponent,
        )
        gain_variance = dist ** (-exponent)
        association = np.argmax(gain_variance, axis=0)
        members = [np.flatnonzero(association == b) for b in range(n_bs)]

        n_values = list(cases) + ([1] if config.include_single_user else [])
        for n_serve in sorted(set(n_values)):
            rng_case = np.random.default_rng([config.seed, trial, n_serve])
            case, skipped = _draw_case(
                config, rng_case, n_bs, gain_variance, members, n_serve
            )
            for scheme, n_tag in runs:
                if n_tag != n_serve:
                    continue
                values, ill = _case_rates(config, case, scheme, n_serve)
                rates = np.asarray(values)
                if len(rates):
                    hits[(scheme, n_tag)] += (rates[:, None] >= eta[None, :]).sum(axis=0)
                    totals[(scheme, n_tag)] += len(rates)
                ill_conditioned[(scheme, n_tag)] += ill
            if n_serve in skipped_cells:
                skipped_cells[n_serve] += skipped

    rows = []
    for scheme, n_tag in runs:
        total = totals[(scheme, n_tag)]
        for i, threshold in enumerate(config.thresholds):
            coverage = hits[(scheme, n_tag)][i] / total if total else math.nan
            rows.append(
                CoverageRow(
                    scheme=scheme,
                    n_users=n_tag,
                    eta=float(threshold),
                    coverage=float(coverage),
                    trials=config.trials,
                )
            )
    ill = {f"{scheme}/n={n}": count for (scheme, n), count in ill_conditioned.items()}
    return CoverageTable(rows, skipped_cells, degenerate, ill)


def cellular_config_to_dict(config: CellularConfig) -> dict:
    return {
        "bs_density": config.bs_density,
        "ms_density_factor": config.ms_density_factor,
        "region_side": config.region_side,
        "pathloss": config.pathloss.to_dict(),
        "users_per_bs": list(config.users_per_bs),
        "thresholds": list(config.thresholds),
        "bs_array": config.bs_geometry.to_dict(),
        "ms_array": config.ms_geometry.to_dict(),
        "tx_power": config.tx_power,
        "noise_power": config.noise_power,
        "schemes": list(config.schemes),
        "include_single_user": config.include_single_user,
        "trials": config.trials,
        "seed": config.seed,
    }


def write_coverage_csv(table: CoverageTable, path) -> None:
    """CSV rows: scheme, n, eta, coverage, trials."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(COVERAGE_CSV_COLUMNS)
        for r in table.rows:
            writer.writerow([r.scheme, r.n_users, r.eta, r.coverage, r.trials])


def write_coverage_json(table: CoverageTable, config_doc: dict, path) -> None:
    doc = {
        "config": config_doc,
        "skipped_cells": {str(k): v for k, v in table.skipped_cells.items()},
        "degenerate_trials": table.degenerate_trials,
        "ill_conditioned_cells": table.ill_conditioned_cells,
        "rows": [
            {
                "scheme": r.scheme,
                "n": r.n_users,
                "eta": r.eta,
                "coverage": r.coverage,
                "trials": r.trials,
            }
            for r in table.rows
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
