"""Achievable-rate computation and analytical rate/loss bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arrays import ArrayGeometry, SteeringAngle, response
from .channel import ChannelRealization
from .precoding import PrecoderSolution


class DegenerateAngles(ValueError):
    """Steering matrix is numerically rank deficient (coincident departures)."""


class NotPositiveDefinite(ValueError):
    """Matrix fails the positive-definiteness requirement."""


class InvalidTarget(ValueError):
    """Requested rate-loss target is unattainable for the given codebooks."""


@dataclass(frozen=True)
class UserRate:
    """Per-user rate with its signal, interference, and noise powers."""

    rate: float
    signal_power: float
    interference_power: float
    noise_power: float


@dataclass
class RateBreakdown:
    """Per-user rates of one precoding solution at one SNR."""

    per_user_rate: list[float]
    signal_power: list[float]
    interference_power: list[float]
    noise_power: list[float]

    @property
    def sum_rate(self) -> float:
        return float(sum(self.per_user_rate))

    @property
    def mean_rate(self) -> float:
        return self.sum_rate / len(self.per_user_rate)


def user_rate(
    channel: ChannelRealization, solution: PrecoderSolution, snr: float, u: int
) -> UserRate:
    """Achievable rate of user u at linear SNR = P / sigma^2.

    Signal and interference powers carry the equal per-stream power split
    P/U; the noise power is the combiner norm (unity for unit-norm
    combiners).
    """
    if snr <= 0:
        raise ValueError("snr must be > 0 (linear scale)")
    n_users = solution.n_users
    if not 0 <= u < n_users:
        raise IndexError(f"user index {u} out of range for {n_users} users")
    w = solution.combiners[u]
    row = w.conj() @ channel.matrix @ solution.effective_precoder
    powers = np.abs(row) ** 2
    signal = snr / n_users * float(powers[u])
    # summing the off-terms directly keeps sub-epsilon residuals visible
    interference = snr / n_users * float(np.delete(powers, u).sum())
    noise = float(np.real(np.vdot(w, w)))
    rate = math.log2(1.0 + signal / (interference + noise))
    return UserRate(rate, signal, interference, noise)


def rate_breakdown(
    channels: Sequence[ChannelRealization], solution: PrecoderSolution, snr: float
) -> RateBreakdown:
    """Rates of all users for one solution."""
    entries = [user_rate(channels[u], solution, snr, u) for u in range(solution.n_users)]
    return RateBreakdown(
        per_user_rate=[e.rate for e in entries],
        signal_power=[e.signal_power for e in entries],
        interference_power=[e.interference_power for e in entries],
        noise_power=[e.noise_power for e in entries],
    )


def single_user_rate(
    gain: complex, n_bs: int, n_ms: int, n_users: int, n_paths: int, snr: float
) -> float:
    """Interference-free benchmark rate for one beam.

    log2(1 + snr/(U*L) * N_BS * N_MS * |gain|^2), the rate of a user whose
    strongest beam pair is served without multi-user interference under the
    equal power split.
    """
    return math.log2(
        1.0 + snr / (n_users * n_paths) * n_bs * n_ms * abs(gain) ** 2
    )


def single_path_rate_bound(
    bs_geometry: ArrayGeometry,
    aods: Sequence[SteeringAngle],
    gains: Sequence[complex],
    n_ms: int,
    snr: float,
) -> np.ndarray:
    """Per-user lower bound on the zero-forced hybrid rate, single-path case.

    Builds the matrix of BS steering vectors at the users' departure
    angles; the bound scales each user's matched-beam SNR by the
    condition-number factor 4 / (r + 1/r + 2) with r the squared ratio of
    extreme singular values.
    """
    if len(aods) != len(gains):
        raise ValueError("need one gain per departure angle")
    a = np.column_stack([response(bs_geometry, ang) for ang in aods])
    svals = np.linalg.svd(a, compute_uv=False)
    if svals[-1] < 1e-10:
        raise DegenerateAngles(
            f"minimum singular value {svals[-1]:.3e}: coincident departure angles"
        )
    ratio = (svals[0] / svals[-1]) ** 2
    gain_factor = 4.0 / (ratio + 1.0 / ratio + 2.0)
    n_users = len(aods)
    moduli = np.abs(np.asarray(gains, dtype=complex)) ** 2
    return np.log2(
        1.0 + snr / n_users * bs_geometry.n_elements * n_ms * moduli * gain_factor
    )


def kantorovich_diag_bound(p: np.ndarray) -> np.ndarray:
    """Kantorovich upper bound on the diagonal of the inverse.

    For Hermitian positive-definite P, returns per index u the bound
    (1 / (4 P_uu)) * (l_max/l_min + l_min/l_max + 2) on (P^{-1})_uu.
    """
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(p, p.conj().T, atol=1e-10):
        raise ValueError("matrix must be Hermitian")
    eigenvalues = np.linalg.eigvalsh(p)
    l_min, l_max = float(eigenvalues[0]), float(eigenvalues[-1])
    if l_min <= 0:
        raise NotPositiveDefinite(f"minimum eigenvalue {l_min:.3e} is not positive")
    factor = l_max / l_min + l_min / l_max + 2.0
    return factor / (4.0 * np.real(np.diag(p)))


@dataclass(frozen=True)
class VirtualModelBound:
    """Lower bound on the mean rate plus the beam-alignment probability
    factor it carries; ``clamped`` flags factors forced to zero because a
    product term went negative (arrays too small for the user/path load)."""

    value: float
    probability_factor: float
    clamped: bool


def _alignment_probability(n_bs: int, n_ms: int, n_paths: int, n_users: int) -> tuple[float, bool]:
    i = np.arange(1, n_users)
    clamped = False

    bases_distinct = np.concatenate([1.0 - i / n_bs, [1.0 - (n_paths - 1) / n_ms]])
    if np.any(bases_distinct < 0):
        term_distinct, clamped = 0.0, True
    else:
        term_distinct = float(np.prod(1.0 - i / n_bs) * (1.0 - (n_paths - 1) / n_ms) ** n_users)

    if n_paths > 1:
        bases_equal = 1.0 - i * n_paths / n_bs
        if np.any(bases_equal < 0):
            term_equal, clamped = 0.0, True
        else:
            term_equal = float(
                np.prod(bases_equal) * (1.0 / n_ms) ** ((n_paths - 1) * n_users)
            )
    else:
        term_equal = 0.0

    return term_distinct + term_equal, clamped


def virtual_model_rate_bound(
    n_bs: int,
    n_ms: int,
    n_paths: int,
    n_users: int,
    snr: float,
    gamma1_samples: Sequence[complex],
) -> VirtualModelBound:
    """Large-array lower bound on the mean hybrid rate via the beamspace model.

    ``gamma1_samples`` are dominant beamspace gains normalized like per-path
    gains (see channel.dominant_path_gain). The mean single-beam rate over
    the samples is scaled by the probability that all users' dominant
    transmit beams are distinct and receive beams uncontested.
    """
    if n_paths < 1 or n_bs < 1 or n_ms < 1 or n_users < 1:
        raise ValueError("dimensions must be positive")
    factor, clamped = _alignment_probability(n_bs, n_ms, n_paths, n_users)
    mean_rate = float(
        np.mean(
            [
                single_user_rate(g, n_bs, n_ms, n_users, n_paths, snr)
                for g in gamma1_samples
            ]
        )
    )
    return VirtualModelBound(
        value=mean_rate * factor, probability_factor=factor, clamped=clamped
    )


def quantized_feedback_loss_bound(
    snr: float,
    n_users: int,
    n_bs: int,
    n_ms: int,
    alpha_bar: float,
    bb_bits: float,
    mu_bs: float,
    mu_ms: float,
) -> float:
    """Upper bound on the mean per-user rate loss of joint RF/baseband
    quantization relative to continuous angles with perfect feedback.

    ``mu_bs``/``mu_ms`` are the correlation floors of the RF codebooks
    (min_max_correlation); ``bb_bits`` is the effective-channel feedback
    budget. A single user has nothing to quantize away, so the
    feedback-error term vanishes for n_users == 1.
    """
    if not (0.0 < mu_bs <= 1.0 and 0.0 < mu_ms <= 1.0):
        raise ValueError("correlation floors must lie in (0, 1]")
    if bb_bits < 0:
        raise ValueError("bb_bits must be >= 0")
    if n_users == 1:
        error = 0.0
    else:
        error = 2.0 ** (-bb_bits / (n_users - 1))
    numerator = 1.0 + snr / n_users * n_bs * n_ms * alpha_bar * (
        1.0 + (n_users - 1) / n_bs
    ) * error
    return math.log2(numerator / (mu_bs**2 * mu_ms**2))


def required_feedback_bits(
    snr_db: float,
    n_users: int,
    n_bs: int,
    n_ms: int,
    alpha_bar: float,
    mu_bs: float,
    mu_ms: float,
    target: float,
) -> float:
    """Feedback bits needed to keep the per-user rate loss at log2(target).

    Grows linearly with the SNR in dB at slope (U-1)/3 bits per dB.
    ``snr_db`` is the P/sigma^2 ratio in dB. Raises InvalidTarget when the
    target is unattainable for the given correlation floors
    (mu_bs^2 * mu_ms^2 * target <= 1).
    """
    if n_users == 1:
        return 0.0
    floors = mu_bs**2 * mu_ms**2
    if floors * target <= 1.0:
        raise InvalidTarget(
            f"mu_bs^2 * mu_ms^2 * target = {floors * target:.4g} must exceed 1"
        )
    array_term = (n_bs * n_ms / n_users) * alpha_bar * (1.0 - (n_users - 1) / n_bs)
    if array_term <= 0:
        raise ValueError("more users than BS antennas leaves no positive array gain")
    return (
        (n_users - 1) / 3.0 * snr_db
        + (n_users - 1) * math.log2(array_term)
        - (n_users - 1) * math.log2(floors * target - 1.0)
    )


def large_array_loss_bound(
    snr: float,
    n_users: int,
    n_bs: int,
    n_ms: int,
    n_paths: int,
    alpha_bar: float,
    bb_bits: float,
) -> float:
    """Mean per-user rate-loss bound in the large-array beamspace regime.

    Multipath counterpart of quantized_feedback_loss_bound without the RF
    correlation floors; the extra (L-1)/(N_BS*N_MS) term is negligible for
    sparse channels.
    """
    if bb_bits < 0:
        raise ValueError("bb_bits must be >= 0")
    if n_users == 1:
        return 0.0
    error = 2.0 ** (-bb_bits / (n_users - 1))
    factor = 1.0 + (n_users - 1) / n_bs * (1.0 + (n_paths - 1) / (n_bs * n_ms))
    return math.log2(1.0 + snr / n_users * alpha_bar * n_bs * n_ms * factor * error)
