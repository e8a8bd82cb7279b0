import math

import numpy as np
import pytest

from mmwave_hybrid.arrays import ArrayGeometry, SteeringAngle, response
from mmwave_hybrid.channel import ChannelConfig, ChannelRealization, sample_channel
from mmwave_hybrid.metrics import (
    DegenerateAngles,
    InvalidTarget,
    NotPositiveDefinite,
    kantorovich_diag_bound,
    large_array_loss_bound,
    quantized_feedback_loss_bound,
    rate_breakdown,
    required_feedback_bits,
    single_path_rate_bound,
    single_user_rate,
    user_rate,
    virtual_model_rate_bound,
)
from mmwave_hybrid.precoding import PrecoderSolution, hybrid_precode

BS = ArrayGeometry.upa(8, 8)
MS = ArrayGeometry.upa(4, 4)


def random_channels(n_users, rng, n_paths=1):
    cfg = ChannelConfig(n_paths=n_paths)
    return [sample_channel(cfg, BS, MS, rng) for _ in range(n_users)]


class TestUserRate:
    def test_matches_termwise_oracle(self):
        # independent reimplementation expanding every term of the SINR
        rng = np.random.default_rng(1)
        chans = random_channels(2, rng, n_paths=2)
        sol = hybrid_precode(chans, None, None, None)
        snr = 3.7
        for u in range(2):
            w = sol.combiners[u]
            f_eff = sol.f_rf @ sol.f_bb
            sig = snr / 2 * abs(w.conj() @ chans[u].matrix @ f_eff[:, u]) ** 2
            intf = 0.0
            for n in range(2):
                if n != u:
                    intf += snr / 2 * abs(w.conj() @ chans[u].matrix @ f_eff[:, n]) ** 2
            expected = math.log2(1 + sig / (intf + np.linalg.norm(w) ** 2))
            got = user_rate(chans[u], sol, snr, u)
            assert got.rate == pytest.approx(expected, rel=1e-12)

    def test_zero_interference_closed_form(self):
        w = np.array([1.0 + 0j])
        h = ChannelRealization([], np.array([[2.0 + 0j, 0.0]]), ArrayGeometry.ula(2), ArrayGeometry.ula(1))
        sol = PrecoderSolution(
            f_rf=np.eye(2, dtype=complex),
            f_bb=np.eye(2, dtype=complex),
            combiners=[w, w],
            scheme="hybrid",
        )
        got = user_rate(h, sol, snr=5.0, u=0)
        assert got.rate == pytest.approx(math.log2(1 + 5.0 / 2 * 4.0), rel=1e-12)

    def test_zero_channel_rate_zero(self):
        h = ChannelRealization([], np.zeros((1, 2), dtype=complex), ArrayGeometry.ula(2), ArrayGeometry.ula(1))
        sol = PrecoderSolution(
            f_rf=np.eye(2, dtype=complex),
            f_bb=np.eye(2, dtype=complex),
            combiners=[np.ones(1, dtype=complex)] * 2,
            scheme="hybrid",
        )
        assert user_rate(h, sol, 1.0, 0).rate == 0.0

    def test_index_and_snr_validation(self):
        rng = np.random.default_rng(2)
        chans = random_channels(1, rng)
        sol = hybrid_precode(chans, None, None, None)
        with pytest.raises(IndexError):
            user_rate(chans[0], sol, 1.0, 5)
        with pytest.raises(ValueError):
            user_rate(chans[0], sol, 0.0, 0)

    def test_breakdown_recomputable(self):
        rng = np.random.default_rng(3)
        chans = random_channels(3, rng, n_paths=2)
        sol = hybrid_precode(chans, None, None, None)
        bd = rate_breakdown(chans, sol, 2.0)
        for u in range(3):
            again = math.log2(
                1
                + bd.signal_power[u]
                / (bd.interference_power[u] + bd.noise_power[u])
            )
            assert bd.per_user_rate[u] == pytest.approx(again, rel=1e-12)
        assert bd.sum_rate == pytest.approx(sum(bd.per_user_rate))


class TestSingleUserRate:
    def test_zero_gain(self):
        assert single_user_rate(0.0, 64, 16, 4, 1, 10.0) == 0.0

    def test_unit_everything(self):
        assert single_user_rate(1.0, 1, 1, 1, 1, 1.0) == pytest.approx(1.0)

    def test_matches_single_user_simulation(self):
        # Monte Carlo oracle: U=1 hybrid with continuous angles is the
        # interference-free matched-beam link
        rng = np.random.default_rng(4)
        snr = 4.0
        sim, closed = [], []
        for _ in range(2000):
            chans = random_channels(1, rng)
            sol = hybrid_precode(chans, None, None, None)
            sim.append(user_rate(chans[0], sol, snr, 0).rate)
            closed.append(single_user_rate(chans[0].paths[0].gain, 64, 16, 1, 1, snr))
        assert abs(np.mean(sim) - np.mean(closed)) / np.mean(closed) < 0.02


class TestSinglePathRateBound:
    def test_single_user_equals_single_user_rate(self):
        gain = 0.7 + 0.2j
        bound = single_path_rate_bound(BS, [SteeringAngle(0.3)], [gain], 16, 2.0)
        assert bound[0] == pytest.approx(single_user_rate(gain, 64, 16, 1, 1, 2.0), rel=1e-12)

    def test_orthogonal_beams_full_gain(self):
        # on-grid beams give a unitary steering matrix and gain factor one
        bs = ArrayGeometry.ula(8)
        aods = [SteeringAngle(math.asin(2 * p / 8)) for p in (0, 1, 2)]
        gains = [1.0, 0.5, 2.0]
        bound = single_path_rate_bound(bs, aods, gains, 4, 1.0)
        for g, b in zip(gains, bound):
            assert b == pytest.approx(single_user_rate(g, 8, 4, 3, 1, 1.0), rel=1e-10)

    def test_dominated_by_exact_rate(self):
        # joint evaluation against the closed-form zero-forcing rate
        rng = np.random.default_rng(5)
        snr = 4.0
        for _ in range(2000):
            angles = [SteeringAngle(a) for a in rng.uniform(0, 2 * math.pi, 4)]
            gains = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / math.sqrt(2)
            a = np.column_stack([response(ArrayGeometry.ula(64), ang) for ang in angles])
            inv_diag = np.real(np.diag(np.linalg.inv(a.conj().T @ a)))
            bounds = single_path_rate_bound(ArrayGeometry.ula(64), angles, gains, 16, snr)
            exact = np.log2(1 + snr / 4 * 64 * 16 * np.abs(gains) ** 2 / inv_diag)
            assert np.all(bounds <= exact + 1e-9)

    def test_degenerate_angles(self):
        ang = SteeringAngle(1.0)
        with pytest.raises(DegenerateAngles):
            single_path_rate_bound(BS, [ang, ang], [1.0, 1.0], 16, 1.0)

    def test_argument_length_mismatch(self):
        with pytest.raises(ValueError):
            single_path_rate_bound(BS, [SteeringAngle(1.0)], [1.0, 2.0], 16, 1.0)


class TestKantorovichBound:
    def test_identity(self):
        np.testing.assert_allclose(kantorovich_diag_bound(np.eye(3)), np.ones(3))

    def test_diagonal_arithmetic(self):
        bound = kantorovich_diag_bound(np.diag([1.0, 4.0]))
        assert bound[0] == pytest.approx(25.0 / 16.0)
        assert bound[1] == pytest.approx(25.0 / 64.0)
        # bounds dominate the actual inverse diagonal
        assert bound[0] >= 1.0 and bound[1] >= 0.25

    def test_dominates_inverse_diagonal(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            k = int(rng.integers(2, 9))
            x = rng.standard_normal((k + 2, k)) + 1j * rng.standard_normal((k + 2, k))
            p = x.conj().T @ x
            bound = kantorovich_diag_bound(p)
            actual = np.real(np.diag(np.linalg.inv(p)))
            assert np.all(actual <= bound + 1e-9)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            kantorovich_diag_bound(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            kantorovich_diag_bound(np.diag([1.0, -0.5]))


class TestVirtualModelRateBound:
    def test_single_path_single_user_factor_one(self):
        b = virtual_model_rate_bound(8, 4, 1, 1, 1.0, [1.0, 0.5])
        assert b.probability_factor == pytest.approx(1.0)
        expected = np.mean([single_user_rate(g, 8, 4, 1, 1, 1.0) for g in (1.0, 0.5)])
        assert b.value == pytest.approx(expected)
        assert not b.clamped

    def test_two_user_factor(self):
        b = virtual_model_rate_bound(4, 8, 1, 2, 1.0, [1.0])
        assert b.probability_factor == pytest.approx(0.75)

    def test_factor_increases_with_array_size(self):
        factors = [
            virtual_model_rate_bound(n, n, 3, 4, 1.0, [1.0]).probability_factor
            for n in (16, 36, 64)
        ]
        assert factors[0] < factors[1] < factors[2] < 1.0

    def test_clamped_when_overloaded(self):
        b = virtual_model_rate_bound(2, 4, 1, 4, 1.0, [1.0])
        assert b.clamped and b.probability_factor == 0.0 and b.value == 0.0

    def test_multipath_second_term(self):
        # direct arithmetic for L=2, U=2: both additive terms contribute
        n_bs, n_ms = 8, 4
        t1 = (1 - 1 / n_bs) * (1 - 1 / n_ms) ** 2
        t2 = (1 - 2 / n_bs) * (1 / n_ms) ** 2
        b = virtual_model_rate_bound(n_bs, n_ms, 2, 2, 1.0, [1.0])
        assert b.probability_factor == pytest.approx(t1 + t2, rel=1e-12)


class TestQuantizedFeedbackLossBound:
    def test_large_budget_vanishes(self):
        assert quantized_feedback_loss_bound(1.0, 4, 64, 16, 1.0, 1e6, 1.0, 1.0) == pytest.approx(0.0, abs=1e-9)

    def test_exact_arithmetic_example(self):
        got = quantized_feedback_loss_bound(1.0, 2, 1, 1, 1.0, 1.0, 1.0, 1.0)
        assert got == pytest.approx(math.log2(1.5), rel=1e-12)

    def test_single_user_no_feedback_error(self):
        assert quantized_feedback_loss_bound(5.0, 1, 64, 16, 1.0, 0, 1.0, 1.0) == 0.0

    def test_floor_validation(self):
        with pytest.raises(ValueError):
            quantized_feedback_loss_bound(1.0, 2, 4, 4, 1.0, 2, 0.0, 0.5)
        with pytest.raises(ValueError):
            quantized_feedback_loss_bound(1.0, 2, 4, 4, 1.0, -1, 0.5, 0.5)

    def test_nondegenerate_dominance(self):
        # Monte Carlo check in a regime where the correlation floors bite:
        # linear arrays, 3-bit phase grids on both sides
        from mmwave_hybrid.channel import sample_channel
        from mmwave_hybrid.codebooks import beamsteering_codebook, min_max_correlation, rvq_codebook
        from mmwave_hybrid.precoding import IllConditioned

        bs, ms = ArrayGeometry.ula(16), ArrayGeometry.ula(8)
        f_cb = beamsteering_codebook(bs, 4)
        w_cb = beamsteering_codebook(ms, 3)
        mu_bs = min_max_correlation(f_cb, 1024)
        mu_ms = min_max_correlation(w_cb, 1024)
        assert mu_bs > 0.3 and mu_ms > 0.3
        rng = np.random.default_rng(7)
        cfg = ChannelConfig(n_paths=1)
        snr, n_users, bits = 4.0, 2, 4
        losses = []
        for _ in range(400):
            chans = [sample_channel(cfg, bs, ms, rng) for _ in range(n_users)]
            bb = [rvq_codebook(n_users, bits, rng) for _ in range(n_users)]
            perfect = hybrid_precode(chans, None, None, None)
            r_perf = rate_breakdown(chans, perfect, snr).mean_rate
            try:
                quant = hybrid_precode(chans, f_cb, w_cb, bb)
            except IllConditioned:
                continue
            losses.append(r_perf - rate_breakdown(chans, quant, snr).mean_rate)
        bound = quantized_feedback_loss_bound(snr, n_users, 16, 8, 1.0, bits, mu_bs, mu_ms)
        se = float(np.std(losses, ddof=1) / math.sqrt(len(losses)))
        assert np.mean(losses) <= bound + se


class TestRequiredFeedbackBits:
    def test_single_user(self):
        assert required_feedback_bits(10.0, 1, 64, 16, 1.0, 0.5, 0.5, 4.0) == 0.0

    def test_larger_target_needs_fewer_bits(self):
        a = required_feedback_bits(10.0, 4, 64, 16, 1.0, 1.0, 1.0, 2.0)
        b = required_feedback_bits(10.0, 4, 64, 16, 1.0, 1.0, 1.0, 4.0)
        assert b < a

    def test_slope_per_db(self):
        # finite differences confirm (U-1)/3 bits per SNR dB
        for u in (2, 4, 6):
            lo = required_feedback_bits(0.0, u, 64, 16, 1.0, 1.0, 1.0, 2.0)
            hi = required_feedback_bits(10.0, u, 64, 16, 1.0, 1.0, 1.0, 2.0)
            assert (hi - lo) / 10.0 == pytest.approx((u - 1) / 3.0, rel=1e-12)

    def test_invalid_target(self):
        with pytest.raises(InvalidTarget):
            required_feedback_bits(0.0, 4, 64, 16, 1.0, 0.5, 0.5, 2.0)


class TestLargeArrayLossBound:
    def test_single_path_matches_numerator_structure(self):
        # with unit floors the single-path large-array bound equals the
        # quantized-feedback bound's numerator term
        got = large_array_loss_bound(2.0, 4, 64, 16, 1, 1.0, 6)
        expected = quantized_feedback_loss_bound(2.0, 4, 64, 16, 1.0, 6, 1.0, 1.0)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_large_budget_vanishes(self):
        assert large_array_loss_bound(1.0, 4, 64, 16, 3, 1.0, 1e6) == pytest.approx(0.0, abs=1e-9)

    def test_insensitive_to_path_count(self):
        values = [large_array_loss_bound(4.0, 4, 64, 16, L, 1.0, 4) for L in (1, 3, 10)]
        spread = (max(values) - min(values)) / values[0]
        assert spread < 1e-3

    def test_single_user_zero(self):
        assert large_array_loss_bound(4.0, 1, 64, 16, 3, 1.0, 2) == 0.0


class TestProofChainInvariants:
    def test_gap_bounded_by_gain_factor(self):
        # pointwise: the single-user excess never exceeds -log2 of the
        # condition-number gain factor computed from the same angles
        rng = np.random.default_rng(8)
        snr = 4.0
        for _ in range(300):
            chans = random_channels(4, rng)
            sol = hybrid_precode(chans, None, None, None)
            a = np.column_stack([response(BS, c.paths[0].aod) for c in chans])
            s = np.linalg.svd(a, compute_uv=False)
            ratio = (s[0] / s[-1]) ** 2
            gain_factor = 4.0 / (ratio + 1.0 / ratio + 2.0)
            for u in range(4):
                single = single_user_rate(chans[u].paths[0].gain, 64, 16, 4, 1, snr)
                actual = user_rate(chans[u], sol, snr, u).rate
                assert single - actual <= -math.log2(gain_factor) + 1e-9

    def test_steering_gram_positive_definite(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            angles = [SteeringAngle(a) for a in rng.uniform(0, 2 * math.pi, 4)]
            a = np.column_stack([response(BS, ang) for ang in angles])
            eig = np.linalg.eigvalsh(a.conj().T @ a)
            assert eig[0] > 0
