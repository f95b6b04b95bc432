"""
    vesfuse.similarity
    ~~~~~~~~~~~~~~~~~~

    Trajectory similarity: exact dynamic time warping, its multilevel
    FastDTW approximation and the direction-aware score used to compare AIS
    and visual trajectories, which multiplies the warp path cost by
    ``exp(phi)`` with ``phi`` the angle between the end-to-end displacements
    of both trajectories. Lower scores mean more similar trajectories.
"""

import functools
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.distance import cdist

from vesfuse.exc import InvalidArgumentError
from vesfuse.model import ModelMixin, PixelPoint


@dataclass(frozen=True)
class PixelSeries(ModelMixin):
    """A pixel trajectory with the timestamps of its points."""

    points: Tuple[PixelPoint, ...]
    times: Tuple[float, ...] = ()

    def __post_init__(self):
        if not self.points:
            raise InvalidArgumentError("A series needs at least one point")

        if self.times and len(self.times) != len(self.points):
            raise InvalidArgumentError("Times and points differ in length")

        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise InvalidArgumentError("Series times must be non-decreasing")

    def __len__(self):
        return len(self.points)

    @classmethod
    def from_pairs(cls, pairs):
        """Builds a series from ``(t, PixelPoint)`` pairs."""
        return cls(points=tuple(p for _, p in pairs), times=tuple(t for t, _ in pairs))

    def as_array(self):
        return np.array([(p.x, p.y) for p in self.points], dtype=float)


@dataclass(frozen=True)
class WarpPath(ModelMixin):
    """Alignment between two series as 0-based ``(p, q)`` index pairs."""

    pairs: Tuple[Tuple[int, int], ...]

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def as_array(series):
    """Converts a :class:`PixelSeries`, a sequence of
    :class:`~vesfuse.model.PixelPoint` or an ``(n, 2)`` array-like to a float
    array."""

    if isinstance(series, PixelSeries):
        return series.as_array()

    if len(series) and isinstance(series[0], PixelPoint):
        return np.array([(p.x, p.y) for p in series], dtype=float)

    array = np.asarray(series, dtype=float)

    if array.size == 0:
        raise InvalidArgumentError("A series needs at least one point")

    if array.ndim != 2 or array.shape[1] != 2:
        raise InvalidArgumentError("A series must be a list of 2D points")

    return array


def _full_window(p, q):
    return [(0, q - 1)] * p


def _dtw(x, y, window):
    """Dynamic programming over the cells allowed by ``window``, a list of
    inclusive ``(lo, hi)`` column ranges per row."""

    n, m = len(x), len(y)
    cost = cdist(x, y).tolist()
    inf = math.inf
    acc = [[inf] * m for _ in range(n)]

    for p in range(n):
        lo, hi = window[p]
        row, local = acc[p], cost[p]
        prev = acc[p - 1] if p else None

        for q in range(lo, hi + 1):
            if p == 0 and q == 0:
                best = 0.0
            else:
                best = inf

                if prev is not None:
                    best = prev[q]

                    if q and prev[q - 1] < best:
                        best = prev[q - 1]

                if q and row[q - 1] < best:
                    best = row[q - 1]

            row[q] = local[q] + best

    return acc[n - 1][m - 1], _traceback(acc)


def _traceback(acc):
    p, q = len(acc) - 1, len(acc[0]) - 1
    path = [(p, q)]

    while p or q:
        if p and q:
            # Diagonal first on ties.
            candidates = ((p - 1, q - 1), (p - 1, q), (p, q - 1))
        elif p:
            candidates = ((p - 1, q),)
        else:
            candidates = ((p, q - 1),)

        p, q = min(candidates, key=lambda cell: acc[cell[0]][cell[1]])
        path.append((p, q))

    path.reverse()
    return WarpPath(tuple(path))


def dtw_exact(x, y):
    """Exact DTW with Euclidean point distance.

    :returns: ``(distance, WarpPath)``.
    """

    x, y = as_array(x), as_array(y)
    return _dtw(x, y, _full_window(len(x), len(y)))


def _coarsen(series):
    n = len(series)
    even = series[: n - n % 2].reshape(-1, 2, 2).mean(axis=1)

    if n % 2:
        return np.vstack([even, series[-1:]])

    return even


def _expand_window(path, n, m, radius):
    lo = [m] * n
    hi = [-1] * n

    for i, j in path:
        for p in range(max(0, 2 * i - radius), min(n - 1, 2 * i + 1 + radius) + 1):
            lo[p] = min(lo[p], max(0, 2 * j - radius))
            hi[p] = max(hi[p], min(m - 1, 2 * j + 1 + radius))

    return list(zip(lo, hi))


def _fastdtw(x, y, radius):
    min_size = radius + 2

    if len(x) <= min_size or len(y) <= min_size:
        return _dtw(x, y, _full_window(len(x), len(y)))

    _, coarse_path = _fastdtw(_coarsen(x), _coarsen(y), radius)
    return _dtw(x, y, _expand_window(coarse_path, len(x), len(y), radius))


def fastdtw(x, y, radius=1):
    """Multilevel DTW approximation: the series are halved recursively, the
    coarse warp path is projected one level up and the alignment is refined
    inside that projection widened by ``radius`` cells.

    The result is exact once ``radius`` reaches the length of the longer
    series, and never below the exact distance otherwise.

    :returns: ``(distance, WarpPath)``.
    """

    if radius < 0 or int(radius) != radius:
        raise InvalidArgumentError(
            f"Radius must be a non-negative integer, got {radius}"
        )

    return _fastdtw(as_array(x), as_array(y), int(radius))


def direction_angle(x, y):
    """Angle in radians, within ``[0, pi]``, between the first-to-last
    displacements of two series. A series that ends where it starts has no
    direction and gives 0."""

    x, y = as_array(x), as_array(y)
    u = x[-1] - x[0]
    v = y[-1] - y[0]

    if not u.any() or not v.any():
        return 0.0

    cross = u[0] * v[1] - u[1] * v[0]
    return math.atan2(abs(cross), float(np.dot(u, v)))


def e_fastdtw(x, y, radius=1, normalize=False):
    """Direction-aware FastDTW score ``Dis(W) * exp(phi)``.

    :param normalize: Divide the warp path cost by the path length.
    """

    x, y = as_array(x), as_array(y)
    distance, path = fastdtw(x, y, radius)

    if normalize:
        distance /= len(path)

    return distance * math.exp(direction_angle(x, y))


def fastdtw_similarity(x, y, radius=1, normalize=False):
    """FastDTW cost alone, without the direction factor."""

    distance, path = fastdtw(x, y, radius)
    return distance / len(path) if normalize else distance


def euclidean_similarity(x, y, **kwargs):
    """Distance between the newest points only."""

    x, y = as_array(x), as_array(y)
    return float(np.hypot(*(x[-1] - y[-1])))


SIMILARITIES = {
    "efastdtw": e_fastdtw,
    "fastdtw": fastdtw_similarity,
    "euclidean": euclidean_similarity,
}


def similarity_for(config):
    """The similarity operator selected by ``config.SIMILARITY``."""

    try:
        func = SIMILARITIES[config.SIMILARITY]
    except KeyError:
        raise InvalidArgumentError(f"Unknown similarity '{config.SIMILARITY}'")

    return functools.partial(
        func, radius=config.FASTDTW_RADIUS, normalize=config.NORMALIZE_DTW
    )
