"""Two-stage hybrid precoding and the baseline precoding schemes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .arrays import response
from .channel import ChannelRealization
from .codebooks import Codebook, quantize

HYBRID = "hybrid"
BEAMSTEERING = "beamsteering"
BLOCK_DIAGONALIZATION = "block_diagonalization"

CONDITION_THRESHOLD = 1e12


class IllConditioned(RuntimeError):
    """Effective channel Gram matrix is numerically singular.

    Raised when quantized effective channels of two users (near-)coincide;
    carries the offending condition number.
    """

    def __init__(self, condition_number: float):
        super().__init__(
            f"effective channel Gram matrix condition number {condition_number:.3e} "
            f"exceeds {CONDITION_THRESHOLD:.0e}"
        )
        self.condition_number = condition_number


class Infeasible(RuntimeError):
    """Block diagonalization rank condition fails for some user."""


@dataclass
class PrecoderSolution:
    """Precoders and combiners produced by one scheme.

    For hybrid and beamsteering schemes ``f_rf`` is N_BS x U with columns
    from the RF codebook and ``f_bb`` is U x U. Block diagonalization
    stores its full digital precoder in ``f_bb`` with ``f_rf`` an identity
    placeholder, flagged by the scheme tag.
    """

    f_rf: np.ndarray
    f_bb: np.ndarray
    combiners: list[np.ndarray]
    scheme: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return self.f_bb.shape[1]

    @property
    def effective_precoder(self) -> np.ndarray:
        return self.f_rf @ self.f_bb


@dataclass(frozen=True)
class BeamSelection:
    """Result of the per-user RF beam search."""

    v: np.ndarray  # BS beamforming codeword
    g: np.ndarray  # MS combining codeword
    objective: float
    f_index: int | None = None
    w_index: int | None = None


def select_rf_beams(
    h: ChannelRealization, f_codebook: Codebook, w_codebook: Codebook
) -> BeamSelection:
    """Exhaustive single-user beam search over the RF codebooks.

    Maximizes |g^H H v| over all combiner/precoder codeword pairs; ties go
    to the lowest (combiner index, precoder index) pair. The full objective
    is computed with one matrix product, which scans the same values as the
    naive double loop.
    """
    if len(f_codebook) == 0 or len(w_codebook) == 0:
        raise ValueError("empty codebook")
    objective = np.abs(w_codebook.vectors.conj() @ h.matrix @ f_codebook.vectors.T)
    flat = int(np.argmax(objective))
    w_idx, f_idx = divmod(flat, len(f_codebook))
    return BeamSelection(
        v=f_codebook.vectors[f_idx],
        g=w_codebook.vectors[w_idx],
        objective=float(objective[w_idx, f_idx]),
        f_index=f_idx,
        w_index=w_idx,
    )


def matched_rf_beams(h: ChannelRealization) -> BeamSelection:
    """Continuous-angle beam search surrogate.

    Evaluates the beam-search objective over the channel's own path
    steering vectors (the spatial matched filters) and keeps the best
    arrival/departure pair. For a single-path channel this attains the
    continuous-codebook optimum exactly; for multipath channels it selects
    the dominant path's matched pair up to inter-path leakage.
    """
    g_candidates = [response(h.ms_geometry, p.aoa) for p in h.paths]
    v_candidates = [response(h.bs_geometry, p.aod) for p in h.paths]
    best = None
    for gi, g in enumerate(g_candidates):
        row = g.conj() @ h.matrix
        for vi, v in enumerate(v_candidates):
            value = abs(row @ v)
            if best is None or value > best.objective:
                best = BeamSelection(v=v, g=g, objective=value, f_index=vi, w_index=gi)
    return best


def effective_channel(
    w: np.ndarray, h: ChannelRealization, f_rf: np.ndarray
) -> np.ndarray:
    """Post-combining channel row w^H H F_RF seen by one user."""
    return w.conj() @ h.matrix @ f_rf


def zf_baseband(h_hat: np.ndarray, f_rf: np.ndarray) -> np.ndarray:
    """Zero-forcing baseband precoder with per-column power normalization.

    Computes ``h_hat^H (h_hat h_hat^H)^{-1}`` and rescales each column u so
    that ``||f_rf @ column_u|| = 1``. Raises IllConditioned when the Gram
    matrix condition number exceeds the threshold, which signals
    near-duplicate effective channel rows.
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    if h_hat.ndim != 2 or h_hat.shape[0] != h_hat.shape[1]:
        raise ValueError("effective channel matrix must be square")
    svals = np.linalg.svd(h_hat, compute_uv=False)
    condition = float((svals[0] / svals[-1]) ** 2) if svals[-1] > 0 else float("inf")
    if not np.isfinite(condition) or condition > CONDITION_THRESHOLD:
        raise IllConditioned(condition)
    # pinv equals h_hat^H (h_hat h_hat^H)^{-1} for full-row-rank h_hat and
    # avoids squaring the conditioning by never forming the Gram matrix
    f_bb = np.linalg.pinv(h_hat)
    return f_bb / np.linalg.norm(f_rf @ f_bb, axis=0)


def _stage1(
    channels: Sequence[ChannelRealization],
    f_codebook: Codebook | None,
    w_codebook: Codebook | None,
) -> list[BeamSelection]:
    if (f_codebook is None) != (w_codebook is None):
        raise ValueError("provide both RF codebooks or neither (continuous angles)")
    if f_codebook is None:
        return [matched_rf_beams(h) for h in channels]
    return [select_rf_beams(h, f_codebook, w_codebook) for h in channels]


def hybrid_precode(
    channels: Sequence[ChannelRealization],
    f_codebook: Codebook | None,
    w_codebook: Codebook | None,
    bb_codebook: Codebook | Sequence[Codebook] | None = None,
) -> PrecoderSolution:
    """Two-stage multi-user hybrid precoding.

    Stage 1 selects each user's RF beamforming/combining pair (exhaustive
    codebook search, or the continuous-angle surrogate when the RF
    codebooks are None) and stacks the BS codewords into F_RF. Stage 2
    computes the per-user effective channels; with ``bb_codebook`` None the
    unquantized rows are zero-forced (perfect feedback), otherwise each
    normalized effective channel is quantized first. ``bb_codebook`` may be
    a single shared codebook or one independent codebook per user.
    """
    if len(channels) == 0:
        raise ValueError("at least one channel is required")
    selections = _stage1(channels, f_codebook, w_codebook)
    f_rf = np.column_stack([s.v for s in selections])
    combiners = [s.g for s in selections]

    n_users = len(channels)
    h_eff = np.stack(
        [effective_channel(combiners[u], channels[u], f_rf) for u in range(n_users)]
    )
    if bb_codebook is None:
        # Row scales cancel in the per-column power normalization, so
        # zero-forcing unit rows gives the same precoder while keeping the
        # conditioning check a measure of direction spread only (matching
        # the quantized branch, whose codeword rows are unit norm).
        norms = np.linalg.norm(h_eff, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise IllConditioned(float("inf"))
        h_hat = h_eff / norms
    else:
        per_user = (
            list(bb_codebook)
            if isinstance(bb_codebook, (list, tuple))
            else [bb_codebook] * n_users
        )
        if len(per_user) != n_users:
            raise ValueError("need one baseband codebook per user")
        rows = []
        for u in range(n_users):
            norm = np.linalg.norm(h_eff[u])
            if norm == 0.0:
                raise IllConditioned(float("inf"))
            codeword, _ = quantize(per_user[u], h_eff[u] / norm)
            rows.append(codeword)
        h_hat = np.stack(rows)

    f_bb = zf_baseband(h_hat, f_rf)
    svals = np.linalg.svd(h_hat, compute_uv=False)
    return PrecoderSolution(
        f_rf=f_rf,
        f_bb=f_bb,
        combiners=combiners,
        scheme=HYBRID,
        diagnostics={
            "stage1_objectives": [s.objective for s in selections],
            "effective_condition_number": float(svals[0] / svals[-1])
            if svals[-1] > 0
            else float("inf"),
        },
    )


def beamsteering_only(
    channels: Sequence[ChannelRealization],
    f_codebook: Codebook | None,
    w_codebook: Codebook | None,
) -> PrecoderSolution:
    """Analog-only baseline: RF beams from the beam search, no interference
    management.

    The baseband matrix is diagonal with entries 1/||F_RF e_u|| so each
    column satisfies the same per-column power constraint as the hybrid
    scheme.
    """
    if len(channels) == 0:
        raise ValueError("at least one channel is required")
    selections = _stage1(channels, f_codebook, w_codebook)
    f_rf = np.column_stack([s.v for s in selections])
    f_bb = np.diag(1.0 / np.linalg.norm(f_rf, axis=0)).astype(complex)
    return PrecoderSolution(
        f_rf=f_rf,
        f_bb=f_bb,
        combiners=[s.g for s in selections],
        scheme=BEAMSTEERING,
        diagnostics={"stage1_objectives": [s.objective for s in selections]},
    )


def block_diagonalization(
    channels: Sequence[ChannelRealization], snr: float | None = None
) -> PrecoderSolution:
    """Unconstrained digital baseline: dominant-eigenmode transmission in
    the null space of all other users' channels.

    Each user's unit-norm precoder lives in the null space of the stacked
    other-user channel matrices (equal power split across users, one stream
    each), and the combiner is the dominant left singular vector of the
    projected channel. The precoder does not depend on the SNR under this
    policy; ``snr`` is accepted for interface parity and ignored.
    """
    n_users = len(channels)
    if n_users == 0:
        raise ValueError("at least one channel is required")
    n_bs = channels[0].n_bs
    precoders, combiners = [], []
    for u in range(n_users):
        others = [channels[n].matrix for n in range(n_users) if n != u]
        if others:
            stacked = np.vstack(others)
            svals = np.linalg.svd(stacked, compute_uv=False)
            tol = svals[0] * max(stacked.shape) * np.finfo(float).eps if svals.size else 0.0
            rank = int(np.sum(svals > tol))
            if n_bs - rank <= 0:
                raise Infeasible(
                    f"user {u}: other-user channels span the whole transmit space "
                    f"(rank {rank} of {n_bs})"
                )
            _, _, vh = np.linalg.svd(stacked)
            basis = vh[rank:].conj().T  # orthonormal null-space basis
        else:
            basis = np.eye(n_bs, dtype=complex)
        projected = channels[u].matrix @ basis
        w, svals, vh = np.linalg.svd(projected)
        precoders.append(basis @ vh[0].conj())
        combiners.append(w[:, 0])
    f_bb = np.column_stack(precoders)
    return PrecoderSolution(
        f_rf=np.eye(n_bs, dtype=complex),
        f_bb=f_bb,
        combiners=combiners,
        scheme=BLOCK_DIAGONALIZATION,
        diagnostics={},
    )


def _interleave(matrix: np.ndarray) -> list:
    stacked = np.empty(matrix.shape + (2,))
    stacked[..., 0] = matrix.real
    stacked[..., 1] = matrix.imag
    return stacked.tolist()


def _deinterleave(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def solution_to_json(solution: PrecoderSolution) -> dict:
    """JSON document for debugging and regression fixtures."""
    return {
        "scheme": solution.scheme,
        "f_rf": _interleave(solution.f_rf),
        "f_bb": _interleave(solution.f_bb),
        "combiners": [_interleave(np.asarray(w)) for w in solution.combiners],
        "diagnostics": solution.diagnostics,
    }


def solution_from_json(doc: dict) -> PrecoderSolution:
    return PrecoderSolution(
        f_rf=_deinterleave(doc["f_rf"]),
        f_bb=_deinterleave(doc["f_bb"]),
        combiners=[_deinterleave(w) for w in doc["combiners"]],
        scheme=doc["scheme"],
        diagnostics=doc.get("diagnostics", {}),
    )
