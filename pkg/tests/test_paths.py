"""Path container, augmentation, normalization and windowing."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sigdetect.errors import InsufficientData, NonIncreasingTime
from sigdetect.paths import (
    PathSeries,
    WindowConfig,
    augment_time,
    first_differences,
    normalize_unit_interval,
    sliding_windows,
    window_starts,
)


class TestPathSeries:
    def test_one_dimensional_input_gets_column_shape(self):
        s = PathSeries(np.array([1.0, 2.0, 3.0]))
        assert s.values.shape == (3, 1)
        assert s.length == 3 and s.channels == 1

    def test_default_channel_names(self):
        s = PathSeries(np.zeros((2, 3)))
        assert s.channel_names == ("ch0", "ch1", "ch2")

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            PathSeries(np.array([1.0, np.nan]))

    def test_rejects_non_increasing_time_channel(self):
        with pytest.raises(NonIncreasingTime):
            PathSeries(np.array([[1.0, 0.0], [1.0, 1.0]]), time_channel=0)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PathSeries(np.zeros((0, 2)))


class TestWindowConfig:
    def test_offset_must_not_exceed_window(self):
        with pytest.raises(ValueError):
            WindowConfig(5, 6)

    def test_offset_must_be_positive(self):
        with pytest.raises(ValueError):
            WindowConfig(5, 0)


class TestAugmentTime:
    def test_index_time(self):
        s = augment_time(PathSeries(np.array([5.0, 7.0])))
        assert np.array_equal(s.values, [[0.0, 5.0], [1.0, 7.0]])
        assert s.time_channel == 0

    def test_explicit_timestamps(self):
        s = augment_time(PathSeries(np.array([5.0, 7.0])), [10.0, 20.0])
        assert np.array_equal(s.values, [[10.0, 5.0], [20.0, 7.0]])

    def test_duplicate_timestamps_rejected(self):
        with pytest.raises(NonIncreasingTime):
            augment_time(PathSeries(np.array([5.0, 7.0])), [10.0, 10.0])

    def test_existing_time_channel_rejected(self):
        s = augment_time(PathSeries(np.array([5.0, 7.0])))
        with pytest.raises(ValueError):
            augment_time(s)


class TestFirstDifferences:
    def test_direct_difference(self):
        s = first_differences(PathSeries(np.array([1.0, 3.0, 2.0])), 0)
        assert np.array_equal(s.values[:, 1], [0.0, 2.0, -1.0])

    def test_constant_channel(self):
        s = first_differences(PathSeries(np.array([4.0, 4.0, 4.0])), 0)
        assert np.array_equal(s.values[:, 1], [0.0, 0.0, 0.0])

    def test_length_two(self):
        s = first_differences(PathSeries(np.array([0.0, 1.0])), 0)
        assert np.array_equal(s.values[:, 1], [0.0, 1.0])

    def test_invalid_channel(self):
        with pytest.raises(IndexError):
            first_differences(PathSeries(np.array([0.0, 1.0])), 3)

    def test_cumsum_recovers_channel(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(20)
        s = first_differences(PathSeries(x), 0)
        recovered = x[0] + np.cumsum(s.values[:, 1])
        assert np.allclose(recovered, x)


class TestNormalizeUnitInterval:
    def test_affine_map(self):
        s = normalize_unit_interval(PathSeries(np.array([2.0, 4.0, 6.0])))
        assert np.allclose(s.values[:, 0], [0.0, 0.5, 1.0])

    def test_constant_channel_maps_to_zero(self):
        s = normalize_unit_interval(PathSeries(np.array([9.0, 9.0, 9.0])))
        assert np.array_equal(s.values[:, 0], [0.0, 0.0, 0.0])

    def test_two_points(self):
        s = normalize_unit_interval(PathSeries(np.array([-1.0, 1.0])))
        assert np.allclose(s.values[:, 0], [0.0, 1.0])

    def test_exclude(self):
        s = normalize_unit_interval(PathSeries(np.array([[2.0, 2.0], [4.0, 4.0]])), exclude={1})
        assert np.allclose(s.values, [[0.0, 2.0], [1.0, 4.0]])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
    def test_idempotent(self, xs):
        s = normalize_unit_interval(PathSeries(np.array(xs)))
        twice = normalize_unit_interval(s)
        assert np.allclose(s.values, twice.values)


class TestSlidingWindows:
    def test_clamped_tail(self):
        s = PathSeries(np.arange(12.0))
        wins = sliding_windows(s, WindowConfig(5, 5))
        assert len(wins) == 3
        assert [w.values[0, 0] for w in wins] == [0.0, 5.0, 7.0]

    def test_single_window(self):
        s = PathSeries(np.arange(5.0))
        wins = sliding_windows(s, WindowConfig(5, 5))
        assert len(wins) == 1 and wins[0].values[0, 0] == 0.0

    def test_too_short(self):
        with pytest.raises(InsufficientData):
            sliding_windows(PathSeries(np.arange(4.0)), WindowConfig(5, 5))

    @given(
        st.integers(2, 60),
        st.integers(1, 20),
        st.integers(1, 20),
    )
    def test_every_window_has_full_length(self, length, w, o):
        if o > w or length < w:
            return
        s = PathSeries(np.arange(float(length)))
        wins = sliding_windows(s, WindowConfig(w, o))
        assert len(wins) == -(-length // o)
        for win in wins:
            assert win.length == w
        starts = window_starts(length, WindowConfig(w, o))
        assert all(0 <= st_ <= length - w for st_ in starts)
