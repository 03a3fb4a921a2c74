"""Maximum-profit perfect matching on a square profit matrix.

Backed by scipy's Jonker-Volgenant solver (O(K^3), deterministic for a
fixed input), which handles the K up to a few thousand needed here.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def solve_assignment(profits) -> tuple[np.ndarray, float]:
    """Pick one column per row maximizing the total profit.

    Returns (permutation, total_profit) where permutation[k] is the
    column assigned to row k.  The matrix must be square with finite
    entries.  Among equally optimal permutations any one may be
    returned, but the choice is deterministic for a fixed input.
    """
    mat = np.asarray(profits, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
        raise ValueError(f"profit matrix must be square and nonempty, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("profit matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(mat, maximize=True)
    perm = np.empty(mat.shape[0], dtype=int)
    perm[rows] = cols
    total = float(mat[rows, cols].sum())
    return perm, total
