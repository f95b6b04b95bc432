import functools
import math

import numpy as np
import pytest

from vesfuse.exc import InvalidArgumentError
from vesfuse.model import PixelPoint
from vesfuse.similarity import (
    PixelSeries,
    direction_angle,
    dtw_exact,
    e_fastdtw,
    euclidean_similarity,
    fastdtw,
    fastdtw_similarity,
    similarity_for,
)
from vesfuse.testing import assert_valid_warp_path

parametrize = pytest.mark.parametrize


def random_walk(rng, n, step=5.0):
    return np.cumsum(rng.normal(0.0, step, (n, 2)), axis=0)


class TestPixelSeries:
    def test_from_pairs(self):
        series = PixelSeries.from_pairs(
            [(1.0, PixelPoint(0, 0)), (2.0, PixelPoint(3, 4))]
        )

        assert len(series) == 2
        assert series.times == (1.0, 2.0)
        assert series.as_array().tolist() == [[0.0, 0.0], [3.0, 4.0]]

    @parametrize(
        "points, times",
        [
            ((), ()),
            ((PixelPoint(0, 0),), (1.0, 2.0)),
            ((PixelPoint(0, 0), PixelPoint(1, 1)), (2.0, 1.0)),
        ],
    )
    def test_invalid(self, points, times):
        with pytest.raises(InvalidArgumentError):
            PixelSeries(points=points, times=times)

    @parametrize("series", [[], [[1.0, 2.0, 3.0]], [1.0, 2.0]])
    def test_invalid_arrays(self, series):
        with pytest.raises(InvalidArgumentError):
            dtw_exact(series, [(0.0, 0.0)])


class TestDtwExact:
    def test_identical_series(self):
        x = [(0, 0), (1, 2), (3, 3), (4, 1)]

        distance, path = dtw_exact(x, x)

        assert distance == 0.0
        assert list(path) == [(0, 0), (1, 1), (2, 2), (3, 3)]

    def test_different_lengths(self):
        distance, path = dtw_exact([(0, 0), (1, 0), (2, 0)], [(0, 0), (2, 0)])

        assert distance == pytest.approx(1.0)
        assert_valid_warp_path(path, 3, 2)

    def test_time_shift(self):
        x = [(0, 0), (1, 0), (2, 0), (3, 0)]
        y = [(0, 0), (0, 0), (1, 0), (2, 0), (3, 0)]

        distance, path = dtw_exact(x, y)

        assert distance == 0.0
        assert_valid_warp_path(path, 4, 5)

    def test_single_points(self):
        distance, path = dtw_exact([(0, 0)], [(3, 4)])

        assert distance == 5.0
        assert list(path) == [(0, 0)]

    def test_pixel_points(self):
        x = [PixelPoint(0, 0), PixelPoint(1, 0)]

        assert dtw_exact(x, PixelSeries(points=tuple(x)))[0] == 0.0

    def test_properties(self, rng):
        for _ in range(100):
            x = random_walk(rng, rng.integers(1, 20))
            y = random_walk(rng, rng.integers(1, 20))

            distance, path = dtw_exact(x, y)
            reverse, _ = dtw_exact(y, x)
            cost = sum(np.hypot(*(x[p] - y[q])) for p, q in path)

            assert distance >= 0
            assert distance == pytest.approx(reverse)
            assert distance == pytest.approx(cost)
            assert_valid_warp_path(path, len(x), len(y))


class TestFastDtw:
    def test_identical_series(self, rng):
        x = random_walk(rng, 40)

        for radius in (0, 1, 3):
            distance, path = fastdtw(x, x, radius)

            assert distance == 0.0
            assert_valid_warp_path(path, 40, 40)

    def test_large_radius_is_exact(self, rng):
        for _ in range(200):
            x = random_walk(rng, rng.integers(1, 65))
            y = random_walk(rng, rng.integers(1, 65))

            exact, exact_path = dtw_exact(x, y)
            approx, approx_path = fastdtw(x, y, radius=max(len(x), len(y)))

            assert approx == exact
            assert approx_path == exact_path

    def test_radius_one_approximation(self, rng):
        close = 0

        for _ in range(1000):
            x = random_walk(rng, rng.integers(2, 33))
            y = random_walk(rng, rng.integers(2, 33))

            exact, _ = dtw_exact(x, y)
            approx, path = fastdtw(x, y, radius=1)

            assert approx >= exact - 1e-9
            assert_valid_warp_path(path, len(x), len(y))
            close += approx <= 1.1 * exact + 1e-9

        assert close >= 950

    @parametrize("radius", [-1, 1.5])
    def test_invalid_radius(self, radius):
        with pytest.raises(InvalidArgumentError):
            fastdtw([(0, 0)], [(0, 0)], radius)


class TestDirectionAngle:
    @parametrize(
        "x, y, expected",
        [
            ([(0, 0), (1, 0)], [(5, 5), (9, 5)], 0.0),
            ([(0, 0), (1, 0)], [(5, 5), (1, 5)], math.pi),
            ([(0, 0), (1, 0)], [(5, 5), (5, 9)], math.pi / 2),
            ([(0, 0), (1, 0)], [(5, 5), (5, 1)], math.pi / 2),
            ([(0, 0), (3, 4), (0, 0)], [(5, 5), (1, 5)], 0.0),
        ],
    )
    def test_angles(self, x, y, expected):
        assert direction_angle(x, y) == pytest.approx(expected)


class TestEFastDtw:
    def test_identical_series(self):
        x = [(0, 0), (1, 1), (5, 3)]

        assert e_fastdtw(x, x) == 0.0

    def test_known_value(self):
        x, y = [(0, 0), (1, 0), (2, 0)], [(0, 0), (2, 0)]

        assert e_fastdtw(x, y) == pytest.approx(1.0)

    def test_direction_factor(self):
        x = [(-1, 0), (1, 0)]
        opposite = [(1, 0), (-1, 0)]
        aligned = [(-1, 2), (1, 2)]

        assert fastdtw(x, opposite)[0] == pytest.approx(4.0)
        assert fastdtw(x, aligned)[0] == pytest.approx(4.0)
        ratio = e_fastdtw(x, opposite) / e_fastdtw(x, aligned)

        assert ratio == pytest.approx(math.exp(math.pi))

    def test_translation_invariance(self, rng):
        for _ in range(20):
            x = random_walk(rng, 12)
            y = random_walk(rng, 9)
            shift = rng.uniform(-500, 500, 2)

            assert e_fastdtw(x + shift, y + shift) == pytest.approx(e_fastdtw(x, y))

    def test_normalized(self):
        x, y = [(0, 0), (1, 0), (2, 0)], [(0, 0), (2, 0)]
        distance, path = fastdtw(x, y)

        expected = distance / len(path)

        assert e_fastdtw(x, y, normalize=True) == pytest.approx(expected)
        assert fastdtw_similarity(x, y, normalize=True) == pytest.approx(expected)
        assert fastdtw_similarity(x, y) == pytest.approx(distance)


def test_euclidean_similarity():
    assert euclidean_similarity([(0, 0), (10, 10)], [(7, 6), (13, 14)]) == 5.0


class TestSimilarityFor:
    @parametrize(
        "name, func",
        [
            ("efastdtw", e_fastdtw),
            ("fastdtw", fastdtw_similarity),
            ("euclidean", euclidean_similarity),
        ],
    )
    def test_configured_operator(self, config, name, func):
        config.SIMILARITY = name
        config.FASTDTW_RADIUS = 3

        operator = similarity_for(config)

        assert isinstance(operator, functools.partial)
        assert operator.func is func
        assert operator.keywords == {"radius": 3, "normalize": False}

    def test_unknown(self, config):
        config.SIMILARITY = "frechet"

        with pytest.raises(InvalidArgumentError):
            similarity_for(config)
