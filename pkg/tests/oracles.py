"""Independent reference computations used to freeze expected values."""

import itertools

import numpy as np


def brute_force_assignment(cost):
    """Exhaustive minimum over all maximum matchings (small matrices only)."""
    cost = np.asarray(cost, dtype=float)
    rows, cols = cost.shape
    if rows == 0 or cols == 0:
        return 0.0, []
    best, best_pairs = np.inf, []
    if rows <= cols:
        for perm in itertools.permutations(range(cols), rows):
            total = 0.0
            for i in range(rows):
                total += float(cost[i, perm[i]])
            if total < best:
                best, best_pairs = total, [(i, perm[i]) for i in range(rows)]
    else:
        for perm in itertools.permutations(range(rows), cols):
            pairs = sorted((perm[j], j) for j in range(cols))
            total = 0.0
            for i, j in pairs:
                total += float(cost[i, j])
            if total < best:
                best, best_pairs = total, pairs
    return best, best_pairs
