"""Tournament trees and the weighted sampler against linear-scan oracles."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from oracles import scan_extreme
from sparserank.trees import (
    MAX,
    MIN,
    ArgExtremeTree,
    WeightTree,
    tree_build,
    tree_top,
    tree_update,
    wt_build,
    wt_sample,
    wt_scale_all,
    wt_update,
)


class TestArgExtremeBuild:
    def test_min_three(self):
        assert tree_top(tree_build(np.array([3.0, 1.0, 2.0]), MIN)) == (1, 1.0)

    def test_max_tie_breaks_low(self):
        assert tree_top(tree_build(np.array([5.0, 5.0, 5.0]), MAX)) == (0, 5.0)

    def test_padded_height_web_scale(self):
        # 2**19 < 875713 < 2**20, so the padded tree is 20 levels tall
        t = tree_build(np.zeros(875713), MIN)
        assert t.full_height == 20

    def test_single_leaf(self):
        t = tree_build(np.array([7.0]), MAX)
        assert tree_top(t) == (0, 7.0)
        assert t.full_height == 0

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            tree_build(np.array([]), MIN)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            tree_build(np.array([1.0, np.nan]), MIN)

    def test_bad_direction_rejected(self):
        with pytest.raises(ValueError, match="direction"):
            tree_build(np.array([1.0]), "median")


class TestArgExtremeUpdate:
    def test_new_winner(self):
        t = tree_build(np.array([3.0, 1.0, 2.0]), MIN)
        tree_update(t, 0, 0.5)
        assert tree_top(t) == (0, 0.5)

    def test_pruned_update_keeps_top(self):
        t = tree_build(np.array([3.0, 1.0, 2.0]), MIN)
        tree_update(t, 2, 2.5)
        assert tree_top(t) == (1, 1.0)

    def test_prune_stops_below_root(self):
        # raising leaf 7 cannot dethrone its sibling, so the climb is
        # absorbed one level up instead of walking all three
        t = tree_build(np.array([3.0, 1.0, 2.0, 4.0, 5.0, 6.0, 7.0, 8.0]), MIN)
        tree_update(t, 7, 8.5)
        assert tree_top(t) == (1, 1.0)
        assert t.metrics.total_levels_climbed == 1
        assert t.full_height == 3

    def test_out_of_range(self):
        t = tree_build(np.array([1.0, 2.0, 3.0]), MIN)
        with pytest.raises(IndexError):
            tree_update(t, 3, 0.0)

    def test_update_to_nan_rejected(self):
        t = tree_build(np.array([1.0, 2.0]), MIN)
        with pytest.raises(ValueError, match="finite"):
            tree_update(t, 0, np.inf)

    def test_metrics_bounded_by_height(self):
        rng = np.random.default_rng(0)
        t = tree_build(rng.standard_normal(100), MAX)
        for _ in range(500):
            tree_update(t, int(rng.integers(100)), float(rng.standard_normal()))
        m = t.metrics
        assert m.updates == 500
        assert 0.0 <= m.avg_levels_climbed <= m.full_height

    def test_values_view_tracks_updates(self):
        t = tree_build(np.array([4.0, 2.0, 9.0]), MAX)
        tree_update(t, 1, 11.0)
        assert t.value(1) == 11.0
        assert list(t.values()) == [4.0, 11.0, 9.0]

    @pytest.mark.parametrize("direction", [MIN, MAX])
    def test_random_updates_match_scan(self, direction):
        rng = np.random.default_rng(7)
        vals = rng.standard_normal(257)
        t = tree_build(vals, direction)
        ref = vals.copy()
        for step in range(2000):
            i = int(rng.integers(257))
            v = float(rng.standard_normal())
            tree_update(t, i, v)
            ref[i] = v
            if step % 50 == 0:
                assert tree_top(t) == scan_extreme(ref, direction)
        assert tree_top(t) == scan_extreme(ref, direction)

    @pytest.mark.parametrize("direction", [MIN, MAX])
    def test_pruning_no_pruning_identical(self, direction):
        rng = np.random.default_rng(3)
        vals = rng.standard_normal(100)
        fast = tree_build(vals, direction, prune=True)
        slow = tree_build(vals, direction, prune=False)
        for _ in range(3000):
            i = int(rng.integers(100))
            v = float(rng.choice([-1.0, 0.0, 1.0]) * rng.integers(0, 3))
            tree_update(fast, i, v)
            tree_update(slow, i, v)
            assert tree_top(fast) == tree_top(slow)

    @given(st.data())
    def test_top_equals_scan(self, data):
        direction = data.draw(st.sampled_from([MIN, MAX]))
        vals = data.draw(
            st.lists(
                st.floats(-1e6, 1e6, allow_nan=False),
                min_size=1,
                max_size=40,
            )
        )
        arr = np.array(vals)
        t = tree_build(arr, direction)
        updates = data.draw(
            st.lists(
                st.tuples(
                    st.integers(0, len(vals) - 1),
                    st.floats(-1e6, 1e6, allow_nan=False),
                ),
                max_size=30,
            )
        )
        for i, v in updates:
            tree_update(t, i, v)
            arr[i] = v
        assert tree_top(t) == scan_extreme(arr, direction)


class TestWeightTreeBuild:
    def test_uniform_root(self):
        assert wt_build(np.ones(4)).total == 4.0

    def test_single_mass(self):
        assert wt_build(np.array([0.0, 5.0, 0.0, 0.0])).total == 5.0

    def test_padded_root(self):
        assert wt_build(np.array([1.0, 2.0, 3.0])).total == 6.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            wt_build(np.array([1.0, -1.0]))

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            wt_build(np.zeros(3))


class TestWeightTreeUpdate:
    def test_root_follows(self):
        t = wt_build(np.array([1.0, 1.0]))
        wt_update(t, 0, 3.0)
        assert t.total == 4.0

    def test_negative_rejected(self):
        t = wt_build(np.ones(2))
        with pytest.raises(ValueError, match="nonnegative"):
            wt_update(t, 0, -0.5)

    def test_zeroed_leaf_never_sampled(self):
        t = wt_build(np.array([1.0, 1.0, 1.0, 1.0]))
        wt_update(t, 2, 0.0)
        draws = t.sample_many(np.random.default_rng(0), 20_000)
        assert not np.any(draws == 2)

    def test_root_equals_leaf_sum(self):
        rng = np.random.default_rng(11)
        t = wt_build(rng.random(300))
        ref = t.weights().copy()
        for _ in range(10_000):
            i = int(rng.integers(300))
            w = float(rng.random() * 10)
            wt_update(t, i, w)
            ref[i] = w
        assert t.total == pytest.approx(ref.sum(), rel=1e-12)

    def test_zero_total_sampling_rejected(self):
        t = wt_build(np.array([2.0, 0.0]))
        wt_update(t, 0, 0.0)
        with pytest.raises(ValueError, match="zero-total"):
            wt_sample(t, np.random.default_rng(0))


class TestWeightTreeSample:
    def test_point_mass(self):
        t = wt_build(np.array([0.0, 5.0, 0.0, 0.0]))
        rng = np.random.default_rng(1)
        assert all(wt_sample(t, rng) == 1 for _ in range(50))

    def test_fair_coin_frequency(self):
        t = wt_build(np.array([1.0, 1.0]))
        draws = t.sample_many(np.random.default_rng(42), 1_000_000)
        freq = np.mean(draws == 0)
        assert 0.498 <= freq <= 0.502

    def test_chi_square_ramp(self):
        t = wt_build(np.array([1.0, 2.0, 3.0, 4.0]))
        draws = t.sample_many(np.random.default_rng(9), 1_000_000)
        observed = np.bincount(draws, minlength=4)
        expected = np.array([0.1, 0.2, 0.3, 0.4]) * 1_000_000
        assert stats.chisquare(observed, expected).pvalue > 0.001

    def test_one_draw_per_sample(self):
        # the generator must advance by exactly one uniform per call
        t = wt_build(np.array([0.4, 0.1, 0.3, 0.2]))
        used = np.random.default_rng(77)
        wt_sample(t, used)
        fresh = np.random.default_rng(77)
        fresh.random()
        assert used.random() == fresh.random()

    def test_sampled_index_matches_cumsum_rule(self):
        # r = u * total lands in the half-open weight segments, boundaries
        # closed on the left branch
        w = np.array([0.25, 0.25, 0.25, 0.25])
        t = wt_build(w)
        for u, want in ((0.1, 0), (0.25, 0), (0.2500001, 1), (0.99, 3)):
            class FixedU:
                def __init__(self, val):
                    self.val = val

                def random(self):
                    return self.val

            assert wt_sample(t, FixedU(u)) == want


class TestWeightTreeScale:
    def test_scale_by_one_is_identity(self):
        t = wt_build(np.array([1.0, 2.0, 3.0]))
        before = t.weights().copy()
        total = t.total
        wt_scale_all(t, 1.0)
        assert np.array_equal(t.weights(), before)
        assert t.total == total

    def test_half_scale(self):
        t = wt_build(np.array([1.0, 3.0]))
        wt_scale_all(t, 0.5)
        assert t.total == 2.0
        assert t.weights()[1] / t.total == 0.75

    def test_round_trip_preserves_ratios(self):
        rng = np.random.default_rng(2)
        w = rng.random(50) + 0.01
        t = wt_build(w)
        wt_scale_all(t, 1e-100)
        wt_scale_all(t, 1e100)
        ratios = t.weights() / t.total
        assert np.allclose(ratios, w / w.sum(), rtol=1e-12)

    def test_scale_preserves_distribution(self):
        w = np.array([5.0, 1.0, 2.0, 0.0, 4.0])
        a, b = wt_build(w), wt_build(w)
        wt_scale_all(b, 1e-30)
        ra, rb = np.random.default_rng(8), np.random.default_rng(8)
        assert np.array_equal(a.sample_many(ra, 5000), b.sample_many(rb, 5000))

    def test_bad_factor_rejected(self):
        t = wt_build(np.ones(2))
        for bad in (0.0, -1.0, np.inf, np.nan):
            with pytest.raises(ValueError, match="positive|finite"):
                wt_scale_all(t, bad)
