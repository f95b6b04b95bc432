import numpy as np

from vesfuse.model import DetectionBox


def assert_valid_warp_path(path, p, q):
    """Ensures that a warp path aligns two series of length ``p`` and ``q``.

    The path must start at the first pair of points, end at the last one,
    advance by one point of either series or both at each step and never
    go back in time.

    :param path: A :class:`~vesfuse.similarity.WarpPath` or a sequence of
                 0-based ``(p, q)`` pairs.
    :param p: Length of the first series.
    :param q: Length of the second series.
    """

    pairs = list(path)

    assert pairs, "The warp path is empty"
    assert pairs[0] == (0, 0), f"The warp path starts at {pairs[0]} instead of (0, 0)"
    assert pairs[-1] == (p - 1, q - 1), "The warp path ends at {} instead of {}".format(
        pairs[-1], (p - 1, q - 1)
    )

    for a, b in zip(pairs, pairs[1:]):
        step = (b[0] - a[0], b[1] - a[1])
        assert step in ((1, 0), (0, 1), (1, 1)), f"Invalid step {a} -> {b}"

    assert max(p, q) <= len(pairs) < p + q, f"Invalid warp path length {len(pairs)}"


class CallCounter(object):
    """Wraps a similarity operator and records every call::

        counter = CallCounter(e_fastdtw)
        engine = FusionEngine(config, similarity=counter)
        engine.tick(t, ais, detections)
        assert counter.calls == 0

    """

    def __init__(self, func):
        self.func = func
        self.calls = 0
        self.arguments = []

    def __call__(self, x, y, **kwargs):
        self.calls += 1
        self.arguments.append((x, y))
        return self.func(x, y, **kwargs)

    def reset(self):
        self.calls = 0
        self.arguments = []


def random_cost_matrix(rng, rows, cols, forbidden=0.2, forced=0.0):
    """A random cost matrix with integer costs in ``[0, 20)``.

    :param rng: A :class:`numpy.random.Generator`.
    :param forbidden: Probability of a ``+inf`` cell.
    :param forced: Probability of forcing a cell of a free row and column
                   to ``-inf``.
    """

    costs = rng.integers(0, 20, size=(rows, cols)).astype(float)
    costs[rng.random((rows, cols)) < forbidden] = np.inf
    used_rows, used_cols = set(), set()

    for i in range(rows):
        for j in range(cols):
            if i in used_rows or j in used_cols:
                continue

            if rng.random() < forced:
                costs[i, j] = -np.inf
                used_rows.add(i)
                used_cols.add(j)

    return costs


def make_box(x, y, w, h, t=0.0, **kwargs):
    """A :class:`~vesfuse.model.DetectionBox` from its top-left corner and
    size."""

    return DetectionBox(t=t, x_tl=x, y_tl=y, x_br=x + w, y_br=y + h, **kwargs)


def unit_vector(rng, dim=128):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)
