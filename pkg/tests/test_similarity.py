import math

import numpy as np
import pytest

from csiselect import (
    l2_normalize_rows,
    median_heuristic_sigma,
    rbf_kernel,
    validate_similarity,
)
from csiselect.errors import DegenerateDistances, NonPositiveSigma, TooFewPoints, ZeroRow


def test_l2_normalize_345_triangle():
    out = l2_normalize_rows(np.array([[3.0, 4.0]]))
    assert np.allclose(out, [[0.6, 0.8]])


def test_l2_normalize_identity_rows_unchanged():
    E = np.eye(4)
    assert np.allclose(l2_normalize_rows(E), E)
    norms = np.linalg.norm(l2_normalize_rows(np.random.default_rng(0).normal(size=(10, 3))), axis=1)
    assert np.all(np.abs(norms - 1.0) < 1e-12)


def test_l2_normalize_zero_row():
    with pytest.raises(ZeroRow) as exc:
        l2_normalize_rows(np.array([[0.0, 0.0]]))
    assert exc.value.row == 0


def test_rbf_hand_value():
    E = np.array([[1.0, 0.0], [0.0, 1.0]])
    S = rbf_kernel(E, 1.0)
    assert S[0, 1] == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_rbf_diagonal_and_duplicates():
    E = np.array([[0.3, -1.0], [0.3, -1.0], [2.0, 2.0]])
    S = rbf_kernel(E, 0.7)
    assert np.all(np.diag(S) == 1.0)
    assert S[0, 1] == 1.0  # identical rows, zero distance


def test_rbf_rejects_bad_sigma():
    with pytest.raises(NonPositiveSigma):
        rbf_kernel(np.eye(2), 0.0)


def test_rbf_output_validates():
    rng = np.random.default_rng(3)
    for _ in range(10):
        S = rbf_kernel(rng.normal(size=(12, 3)), 0.5 + rng.random())
        assert validate_similarity(S).passed


def test_rbf_permutation_equivariant():
    rng = np.random.default_rng(7)
    E = rng.normal(size=(9, 4))
    perm = rng.permutation(9)
    S = rbf_kernel(E, 1.3)
    S_perm = rbf_kernel(E[perm], 1.3)
    assert np.allclose(S_perm, S[np.ix_(perm, perm)], atol=1e-15)


def test_rbf_monotone_in_distance():
    # colinear points: growing distance from the origin point
    E = np.array([[0.0], [1.0], [2.0], [5.0]])
    S = rbf_kernel(E, 1.0)
    row = S[0]
    assert row[1] > row[2] > row[3]


def test_median_sigma_two_points():
    assert median_heuristic_sigma(np.array([[0.0], [2.0]])) == pytest.approx(2.0)


def test_median_sigma_collinear():
    # pairwise distances {1, 1, 2} -> median 1
    assert median_heuristic_sigma(np.array([[0.0], [1.0], [2.0]])) == pytest.approx(1.0)


def test_median_sigma_degenerate():
    with pytest.raises(DegenerateDistances):
        median_heuristic_sigma(np.zeros((5, 2)))


def test_median_sigma_too_few():
    with pytest.raises(TooFewPoints):
        median_heuristic_sigma(np.zeros((1, 2)))


def test_median_sigma_sampled_path_deterministic():
    rng = np.random.default_rng(11)
    E = rng.normal(size=(200, 3))  # 19900 pairs > 10000 -> sampled
    a = median_heuristic_sigma(E, seed=5)
    b = median_heuristic_sigma(E, seed=5)
    assert a == b
    full = median_heuristic_sigma(E, max_pairs=200 * 199 // 2)
    assert abs(a - full) / full < 0.1  # subsample stays near the exact median


def test_validate_flags_asymmetry():
    S = np.eye(3)
    S[0, 1] = 0.5
    rep = validate_similarity(S)
    assert not rep.passed
    assert rep.max_asymmetry == pytest.approx(0.5)


def test_validate_flags_range():
    S = np.eye(2)
    S[0, 1] = S[1, 0] = 1.5
    rep = validate_similarity(S)
    assert rep.out_of_range_count == 2
    assert not rep.passed


def test_validate_flags_nonfinite():
    S = np.eye(2)
    S[0, 1] = S[1, 0] = np.nan
    assert validate_similarity(S).nonfinite_count == 2
