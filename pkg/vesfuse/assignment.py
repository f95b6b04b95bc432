"""
    vesfuse.assignment
    ~~~~~~~~~~~~~~~~~~

    Linear assignment on rectangular cost matrices over the extended reals.
    ``+inf`` cells are forbidden, ``-inf`` cells are forced. Among the
    matchings respecting both, the solvers pick one with the largest number
    of pairs, then the lowest total cost, then the lexicographically
    smallest sorted pair sequence.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from vesfuse.exc import InvalidArgumentError

#: Largest ``min(rows, cols)`` accepted by :func:`brute_force`.
BRUTE_FORCE_LIMIT = 8


def _as_matrix(costs):
    costs = np.asarray(costs, dtype=float)

    if costs.size == 0:
        return costs.reshape(costs.shape if costs.ndim == 2 else (0, 0))

    if costs.ndim != 2:
        raise InvalidArgumentError("Cost matrix must be two-dimensional")

    if np.isnan(costs).any():
        raise InvalidArgumentError("Cost matrix contains NaN")

    return costs


def _forced_pairs(costs):
    rows, cols = np.nonzero(np.isneginf(costs))

    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise InvalidArgumentError("Forced cells share a row or a column")

    return [(int(i), int(j)) for i, j in zip(rows, cols)]


def _same_cost(a, b):
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)


class _Optimum:
    """Maximum-cardinality, minimum-cost matching values of sub-matrices.

    Forbidden cells are replaced by a sentinel larger than any difference
    between two sums of finite cells, so every extra sentinel pair costs more
    than any rearrangement of real pairs can save.
    """

    def __init__(self, costs):
        self.costs = costs
        self.finite = np.isfinite(costs)
        finite_values = costs[self.finite]
        self.sentinel = 2.0 * np.abs(finite_values).sum() + 1.0
        self.work = np.where(self.finite, costs, self.sentinel)

    def __call__(self, rows, cols):
        if not rows or not cols:
            return 0, 0.0

        index = np.ix_(rows, cols)
        r, c = linear_sum_assignment(self.work[index])
        keep = self.finite[index][r, c]
        return int(keep.sum()), float(self.costs[index][r[keep], c[keep]].sum())


def solve(costs):
    """Solves the assignment problem on ``costs``.

    :param costs: An ``I x J`` array-like; ``+inf`` forbids a pair and
                  ``-inf`` forces it.
    :returns: Sorted list of ``(i, j)`` pairs.
    :raises InvalidArgumentError: When two forced cells share a row or a
                                  column.
    """

    costs = _as_matrix(costs)

    if costs.size == 0:
        return []

    forced = _forced_pairs(costs)
    forced_rows = {i for i, _ in forced}
    forced_cols = {j for _, j in forced}

    rows = [i for i in range(costs.shape[0]) if i not in forced_rows]
    cols = [j for j in range(costs.shape[1]) if j not in forced_cols]

    optimum = _Optimum(np.where(np.isneginf(costs), np.inf, costs))
    size, total = optimum(rows, cols)
    pairs = []

    # Fix pairs row by row, always taking the smallest column that keeps the
    # remaining problem optimal.
    for i in list(rows):
        if size == 0:
            break

        rest_rows = [r for r in rows if r != i]

        for j in cols:
            if not optimum.finite[i, j]:
                continue

            rest_cols = [c for c in cols if c != j]
            rest_size, rest_total = optimum(rest_rows, rest_cols)

            if rest_size + 1 == size and _same_cost(rest_total + costs[i, j], total):
                pairs.append((i, j))
                cols = rest_cols
                size, total = rest_size, rest_total
                break

        rows = rest_rows

    return sorted(pairs + forced)


def brute_force(costs):
    """Exhaustive counterpart of :func:`solve` for small matrices.

    :raises InvalidArgumentError: When ``min(I, J)`` exceeds
                                  :data:`BRUTE_FORCE_LIMIT`.
    """

    costs = _as_matrix(costs)

    if costs.size == 0:
        return []

    if min(costs.shape) > BRUTE_FORCE_LIMIT:
        raise InvalidArgumentError(
            f"Brute force refused for a {costs.shape[0]}x{costs.shape[1]} matrix"
        )

    forced = _forced_pairs(costs)
    forced_rows = {i for i, _ in forced}
    forced_cols = {j for _, j in forced}
    rows = [i for i in range(costs.shape[0]) if i not in forced_rows]
    cols = [j for j in range(costs.shape[1]) if j not in forced_cols]

    values = costs.tolist()

    for k in range(min(len(rows), len(cols)), 0, -1):
        best = None

        for chosen in itertools.combinations(rows, k):
            for perm in itertools.permutations(cols, k):
                cells = [values[i][j] for i, j in zip(chosen, perm)]

                if not all(math.isfinite(c) for c in cells):
                    continue

                total = sum(cells)
                # Combinations come out sorted by row.
                key = list(zip(chosen, perm))

                if (
                    best is None
                    or (total < best[0] and not _same_cost(total, best[0]))
                    or (_same_cost(total, best[0]) and key < best[1])
                ):
                    best = (total, key)

        if best is not None:
            return sorted(best[1] + forced)

    return sorted(forced)
