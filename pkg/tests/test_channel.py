import math

import numpy as np
import pytest

from mmwave_hybrid.arrays import ArrayGeometry, SteeringAngle, response, virtual_direction_matrix
from mmwave_hybrid.channel import (
    ChannelConfig,
    ChannelRealization,
    Path,
    assemble_matrix,
    dominant_path_gain,
    dominant_virtual_entries,
    sample_channel,
    to_virtual,
)


class TestAssembleMatrix:
    def test_single_path_forced(self):
        bs, ms = ArrayGeometry.ula(4), ArrayGeometry.ula(2)
        p = Path(gain=1.0, aod=SteeringAngle(0.0), aoa=SteeringAngle(0.0))
        h = assemble_matrix([p], bs, ms)
        expected = math.sqrt(8.0) * np.outer(
            response(ms, p.aoa), response(bs, p.aod).conj()
        )
        np.testing.assert_allclose(h, expected, atol=1e-15)

    def test_matches_termwise_sum(self):
        # independent oracle: accumulate scaled outer products one term at a time
        rng = np.random.default_rng(3)
        bs, ms = ArrayGeometry.upa(4, 2), ArrayGeometry.ula(3)
        paths = [
            Path(
                gain=complex(rng.standard_normal(), rng.standard_normal()),
                aod=SteeringAngle(rng.uniform(0, 2 * math.pi), rng.uniform(-1.5, 1.5)),
                aoa=SteeringAngle(rng.uniform(0, 2 * math.pi), rng.uniform(-1.5, 1.5)),
            )
            for _ in range(4)
        ]
        expected = np.zeros((3, 8), dtype=complex)
        for p in paths:
            a_ms = response(ms, p.aoa)
            a_bs = response(bs, p.aod)
            for r in range(3):
                for c in range(8):
                    expected[r, c] += p.gain * a_ms[r] * np.conj(a_bs[c])
        expected *= math.sqrt(8 * 3 / 4)
        np.testing.assert_allclose(assemble_matrix(paths, bs, ms), expected, atol=1e-13)


class TestSampleChannel:
    def test_rank_bounded_by_paths(self):
        rng = np.random.default_rng(11)
        cfg = ChannelConfig(n_paths=3)
        h = sample_channel(cfg, ArrayGeometry.ula(8), ArrayGeometry.ula(4), rng)
        s = np.linalg.svd(h.matrix, compute_uv=False)
        assert np.all(s[3:] <= 1e-10 * s[0])

    def test_reconstruction_from_paths(self):
        rng = np.random.default_rng(5)
        for cfg in (ChannelConfig(n_paths=1), ChannelConfig(n_paths=4, elevation="fixed")):
            h = sample_channel(cfg, ArrayGeometry.upa(4, 4), ArrayGeometry.upa(2, 2), rng)
            rebuilt = assemble_matrix(h.paths, h.bs_geometry, h.ms_geometry)
            np.testing.assert_allclose(rebuilt, h.matrix, atol=1e-12)

    def test_frobenius_energy(self):
        # Monte Carlo oracle: E||H||_F^2 = N_BS * N_MS * gain_variance
        rng = np.random.default_rng(17)
        cfg = ChannelConfig(n_paths=3, gain_variance=2.0)
        bs, ms = ArrayGeometry.ula(8), ArrayGeometry.ula(4)
        total = 0.0
        n = 10_000
        for _ in range(n):
            h = sample_channel(cfg, bs, ms, rng)
            total += np.linalg.norm(h.matrix) ** 2
        expected = 8 * 4 * 2.0
        assert abs(total / n - expected) / expected < 0.05

    def test_gain_second_moment(self):
        rng = np.random.default_rng(23)
        cfg = ChannelConfig(n_paths=2, gain_variance=0.5)
        bs, ms = ArrayGeometry.ula(2), ArrayGeometry.ula(2)
        gains = []
        for _ in range(5000):
            h = sample_channel(cfg, bs, ms, rng)
            gains.extend(abs(p.gain) ** 2 for p in h.paths)
        assert abs(np.mean(gains) - 0.5) / 0.5 < 0.03

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            ChannelConfig(n_paths=0)
        with pytest.raises(ValueError):
            ChannelConfig(gain_variance=0.0)
        with pytest.raises(ValueError):
            ChannelConfig(elevation="bogus")


class TestVirtualDomain:
    @pytest.mark.parametrize("n_bs,n_ms", [(4, 2), (8, 4), (64, 16)])
    def test_round_trip(self, n_bs, n_ms):
        rng = np.random.default_rng(n_bs)
        h = sample_channel(ChannelConfig(n_paths=2), ArrayGeometry.ula(n_bs), ArrayGeometry.ula(n_ms), rng)
        hv = to_virtual(h)
        a_ms = virtual_direction_matrix(n_ms)
        a_bs = virtual_direction_matrix(n_bs)
        np.testing.assert_allclose(a_ms @ hv @ a_bs.conj().T, h.matrix, atol=1e-10)

    def test_frobenius_preserved(self):
        rng = np.random.default_rng(2)
        h = sample_channel(ChannelConfig(n_paths=3), ArrayGeometry.ula(8), ArrayGeometry.ula(4), rng)
        assert abs(np.linalg.norm(to_virtual(h)) - np.linalg.norm(h.matrix)) < 1e-12

    def test_on_grid_path_is_single_entry(self):
        # a path exactly on both DFT grids concentrates in one beamspace entry
        n_bs, n_ms = 8, 4
        bs, ms = ArrayGeometry.ula(n_bs), ArrayGeometry.ula(n_ms)
        aod = SteeringAngle(math.asin((2 * 3) / n_bs))  # increment 2*pi*3/8
        aoa = SteeringAngle(math.asin((2 * 1) / n_ms))  # increment 2*pi*1/4
        p = Path(gain=1.0, aod=aod, aoa=aoa)
        h = ChannelRealization([p], assemble_matrix([p], bs, ms), bs, ms)
        hv = to_virtual(h)
        big = np.abs(hv) > 1e-8
        assert big.sum() == 1
        assert big[1, 3]

    def test_upa_round_trip(self):
        rng = np.random.default_rng(4)
        h = sample_channel(ChannelConfig(n_paths=2), ArrayGeometry.upa(4, 4), ArrayGeometry.upa(2, 2), rng)
        hv = to_virtual(h)
        a_ms = virtual_direction_matrix(4)
        a_bs = virtual_direction_matrix(16)
        np.testing.assert_allclose(a_ms @ hv @ a_bs.conj().T, h.matrix, atol=1e-10)


class TestDominantVirtualEntries:
    def test_single_nonzero(self):
        hv = np.zeros((4, 6), dtype=complex)
        hv[2, 3] = 5.0
        entry = dominant_virtual_entries(hv, 1)[0]
        assert (entry.gain, entry.tx, entry.rx) == (5.0, 3, 2)

    def test_tie_break_lowest_indices(self):
        hv = np.eye(3, dtype=complex)
        entries = dominant_virtual_entries(hv, 3)
        assert [(e.rx, e.tx) for e in entries] == [(0, 0), (1, 1), (2, 2)]

    def test_full_sort_matches_naive(self):
        rng = np.random.default_rng(9)
        hv = rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8))
        got = dominant_virtual_entries(hv, 32)
        naive = sorted(
            ((hv[r, c], c, r) for r in range(4) for c in range(8)),
            key=lambda t: (-abs(t[0]), t[2], t[1]),
        )
        assert [(e.tx, e.rx) for e in got] == [(t, r) for _, t, r in naive]

    def test_count_validation(self):
        with pytest.raises(ValueError):
            dominant_virtual_entries(np.eye(2, dtype=complex), 0)


class TestDominantPathGain:
    def test_on_grid_recovers_path_gain(self):
        n_bs, n_ms = 8, 4
        bs, ms = ArrayGeometry.ula(n_bs), ArrayGeometry.ula(n_ms)
        p = Path(
            gain=0.5 - 0.25j,
            aod=SteeringAngle(math.asin(2 * 2 / n_bs)),
            aoa=SteeringAngle(math.asin(2 * 1 / n_ms)),
        )
        h = ChannelRealization([p], assemble_matrix([p], bs, ms), bs, ms)
        assert abs(dominant_path_gain(h) - p.gain) < 1e-12
