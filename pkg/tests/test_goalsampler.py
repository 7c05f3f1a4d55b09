import numpy as np
import pytest

from gflowlab import goalsampler as gs
from gflowlab.goalsampler import TabGS, UniformGS


class TestDirectionSet:
    def test_k2_minimal(self):
        dirs = gs.build_direction_set(2, 2)
        assert len(dirs) == 3
        expected = {(1.0, 0.0), (0.0, 1.0),
                    (round(1 / np.sqrt(2), 12), round(1 / np.sqrt(2), 12))}
        got = {tuple(np.round(d, 12)) for d in dirs}
        assert got == expected

    def test_unit_norms(self):
        for k, n in [(2, 5), (3, 4), (4, 3)]:
            dirs = gs.build_direction_set(k, n)
            np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
            assert np.all(dirs >= 0)

    def test_k2_count(self):
        # face enumeration with the shared corner deduplicated
        for n in [2, 5, 16, 64]:
            assert len(gs.build_direction_set(2, n)) == 2 * n - 1

    def test_no_duplicates(self):
        dirs = gs.build_direction_set(3, 6)
        assert len(np.unique(np.round(dirs, 12), axis=0)) == len(dirs)


class TestUniformDirection:
    def test_norm_and_orthant(self):
        rng = np.random.default_rng(0)
        for k in [2, 3, 4]:
            d = gs.uniform_direction(k, rng)
            assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)
            assert np.all(d >= 0)

    def test_angle_uniform_k2(self):
        # KS test of the angle distribution against uniform on [0, pi/2]
        rng = np.random.default_rng(1)
        g = np.abs(rng.standard_normal((10**5, 2)))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        angles = np.sort(np.arctan2(g[:, 1], g[:, 0])) / (np.pi / 2)
        n = len(angles)
        ecdf_hi = np.arange(1, n + 1) / n
        ecdf_lo = np.arange(0, n) / n
        ks = max(np.abs(ecdf_hi - angles).max(), np.abs(angles - ecdf_lo).max())
        assert ks < 0.01


class TestTabGSWeights:
    def make(self):
        return TabGS.for_objectives(2, points_per_axis=4)

    def test_never_sampled(self):
        t = self.make()
        assert t.weight(0) == 1.0

    def test_hit_direction(self):
        t = self.make()
        t.drawn[2] = True
        t.hit_counts[2] = 3
        assert t.weight(2) == 1.0

    def test_drawn_and_missed(self):
        t = self.make()
        t.drawn[2] = True
        assert t.weight(2) == 0.1

    def test_hit_without_draw_keeps_full_weight(self):
        t = self.make()
        t.hit_counts[1] = 5
        assert t.weight(1) == 1.0

    def test_miss_then_hit_restores(self):
        t = self.make()
        t.drawn[3] = True
        assert t.weight(3) == 0.1
        t.observe(t.directions[3][None, :])
        assert t.weight(3) == 1.0


class TestPhases:
    def test_uniform_before_quarter(self):
        t = TabGS.for_objectives(2, points_per_axis=8)
        t.drawn[:] = True  # even with everything missed...
        p = t.probabilities(step=0, total_steps=1000)
        np.testing.assert_allclose(p, 1.0 / len(t.directions))
        p = t.probabilities(step=249, total_steps=1000)
        np.testing.assert_allclose(p, 1.0 / len(t.directions))

    def test_weighted_after_quarter(self):
        t = TabGS.for_objectives(2, points_per_axis=8)
        n = len(t.directions)
        t.drawn[:] = True
        t.hit_counts[0] = 1
        p = t.probabilities(step=250, total_steps=1000)
        assert p[0] == pytest.approx(1.0 / (1.0 + 0.1 * (n - 1)))
        assert p.sum() == pytest.approx(1.0)

    def test_distribution_valid_at_every_step(self):
        rng = np.random.default_rng(2)
        t = TabGS.for_objectives(2, points_per_axis=6)
        for step in range(0, 1000, 37):
            t.sample_goal(rng, step, 1000)
            p = t.probabilities(step, 1000)
            assert np.all(p >= 0) and p.sum() == pytest.approx(1.0)

    def test_freeze_at_three_quarters(self):
        rng = np.random.default_rng(3)
        t = TabGS.for_objectives(2, points_per_axis=4)
        t.sample_goal(rng, step=750, total_steps=1000)
        assert t.frozen
        counts = t.hit_counts.copy()
        drawn = t.drawn.copy()
        t.observe(np.array([[0.5, 0.5]]))
        t.sample_goal(rng, step=800, total_steps=1000)
        np.testing.assert_array_equal(t.hit_counts, counts)
        np.testing.assert_array_equal(t.drawn, drawn)


class TestObserve:
    def test_zero_vector_ignored(self):
        t = TabGS.for_objectives(2, points_per_axis=4)
        t.observe(np.zeros((3, 2)))
        assert t.hit_counts.sum() == 0

    def test_exact_direction_hit(self):
        t = TabGS.for_objectives(2, points_per_axis=4)
        idx = 2
        t.observe(t.directions[idx][None, :] * 0.37)
        assert t.hit_counts[idx] == 1
        assert t.hit_counts.sum() == 1

    def test_nearest_by_cosine(self):
        t = TabGS.for_objectives(2, points_per_axis=64)
        r = np.array([[np.cos(0.3), np.sin(0.3)]]) * 0.8
        angles = np.arctan2(t.directions[:, 1], t.directions[:, 0])
        expected = int(np.argmin(np.abs(angles - 0.3)))
        t.observe(r)
        assert t.hit_counts[expected] == 1

    def test_batch_counting(self):
        t = TabGS.for_objectives(2, points_per_axis=4)
        t.observe(np.tile(t.directions[1], (5, 1)))
        assert t.hit_counts[1] == 5


class TestSampling:
    def test_emitted_goals_unit_nonnegative(self):
        rng = np.random.default_rng(4)
        for source in [UniformGS(3, 0.98, 0.2), TabGS.for_objectives(3, 4)]:
            for step in [0, 300, 900]:
                g = source.sample_goal(rng, step, 1000)
                assert np.linalg.norm(g.d_g) == pytest.approx(1.0, abs=1e-9)
                assert np.all(g.d_g >= 0)
                assert g.c_g == 0.98 and g.m_g == 0.2

    def test_tabgs_sampling_follows_weights(self):
        rng = np.random.default_rng(5)
        t = TabGS.for_objectives(2, points_per_axis=2)  # 3 directions
        t.drawn[:] = True
        t.hit_counts[1] = 1  # only the diagonal is ever hit
        draws = [t.nearest_index(t.sample_goal(rng, 500, 1000).d_g) for _ in range(4000)]
        freq = np.bincount(draws, minlength=3) / 4000
        expected = np.array([0.1, 1.0, 0.1]) / 1.2
        np.testing.assert_allclose(freq, expected, atol=0.03)

    def test_state_dict_round_trip(self):
        rng = np.random.default_rng(6)
        t = TabGS.for_objectives(2, points_per_axis=8)
        for step in range(0, 800, 50):
            t.sample_goal(rng, step, 1000)
        t.observe(np.array([[0.3, 0.9]]))
        state = t.state_dict()
        t2 = TabGS.for_objectives(2, points_per_axis=8)
        t2.load_state_dict(state)
        np.testing.assert_array_equal(t2.hit_counts, t.hit_counts)
        np.testing.assert_array_equal(t2.drawn, t.drawn)
        assert t2.frozen == t.frozen
