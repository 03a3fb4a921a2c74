import itertools
import math

import numpy as np
import pytest

from relayalloc import solve_assignment


def brute_force_assignment(matrix):
    """Enumerate all permutations; the test-side ground truth."""
    k = matrix.shape[0]
    best_perm, best_total = None, -math.inf
    for perm in itertools.permutations(range(k)):
        total = sum(matrix[i, perm[i]] for i in range(k))
        if total > best_total:
            best_perm, best_total = perm, total
    return np.array(best_perm), best_total


def test_identity_dominant_matrix():
    mat = np.eye(3)
    perm, total = solve_assignment(mat)
    assert list(perm) == [0, 1, 2]
    assert total == 3.0


def test_two_by_two_cross():
    perm, total = solve_assignment([[1.0, 2.0], [3.0, 1.0]])
    assert list(perm) == [1, 0]
    assert total == 5.0


def test_matches_brute_force_random_6x6():
    rng = np.random.default_rng(11)
    for _ in range(30):
        mat = rng.normal(size=(6, 6))
        perm, total = solve_assignment(mat)
        _, best = brute_force_assignment(mat)
        assert math.isclose(total, best, rel_tol=1e-12)
        assert sorted(perm) == list(range(6))


@pytest.mark.parametrize("k", range(2, 8))
def test_optimal_for_all_small_sizes(k):
    rng = np.random.default_rng(100 + k)
    for _ in range(100):
        mat = rng.normal(size=(k, k)) * 10.0
        perm, total = solve_assignment(mat)
        assert sorted(perm) == list(range(k))  # bijection
        _, best = brute_force_assignment(mat)
        assert math.isclose(total, best, rel_tol=1e-12, abs_tol=1e-12)


def test_row_and_column_shift_invariance():
    rng = np.random.default_rng(17)
    mat = rng.normal(size=(5, 5))
    perm, total = solve_assignment(mat)

    shifted = mat.copy()
    shifted[2, :] += 7.5  # full row
    perm_row, total_row = solve_assignment(shifted)
    assert math.isclose(total_row, total + 7.5, rel_tol=1e-12)
    assert math.isclose(
        sum(mat[i, perm_row[i]] for i in range(5)), total, rel_tol=1e-12
    )  # still optimal for the original matrix

    shifted = mat.copy()
    shifted[:, 1] -= 3.25  # full column
    perm_col, total_col = solve_assignment(shifted)
    assert math.isclose(total_col, total - 3.25, rel_tol=1e-12)
    assert math.isclose(
        sum(mat[i, perm_col[i]] for i in range(5)), total, rel_tol=1e-12
    )


def test_deterministic_for_fixed_input():
    rng = np.random.default_rng(3)
    mat = rng.normal(size=(8, 8))
    first = solve_assignment(mat)
    for _ in range(5):
        perm, total = solve_assignment(mat)
        assert np.array_equal(perm, first[0])
        assert total == first[1]


def test_rejects_bad_matrices():
    with pytest.raises(ValueError):
        solve_assignment(np.ones((2, 3)))
    with pytest.raises(ValueError):
        solve_assignment(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        solve_assignment(np.array([[1.0, np.inf], [0.0, 1.0]]))


def test_large_instance_runs_quickly():
    rng = np.random.default_rng(9)
    mat = rng.normal(size=(512, 512))
    perm, _ = solve_assignment(mat)
    assert sorted(perm) == list(range(512))
