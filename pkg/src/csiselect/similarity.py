"""Dense RBF similarity matrices from embeddings, plus validation helpers.

Construction mirrors the upper triangle so symmetry is bit-exact; downstream
code relies on that and treats the matrix as read-only shared data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistances, NonPositiveSigma, TooFewPoints, ZeroRow

ZERO_NORM_FLOOR = 1e-15


def l2_normalize_rows(E: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm."""
    E = np.asarray(E, dtype=np.float64)
    norms = np.linalg.norm(E, axis=1)
    bad = np.flatnonzero(norms < ZERO_NORM_FLOOR)
    if bad.size:
        raise ZeroRow(int(bad[0]))
    return E / norms[:, None]


def pairwise_sq_dists(E: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, clipped at zero."""
    E = np.asarray(E, dtype=np.float64)
    sq = np.einsum("ij,ij->i", E, E)
    D2 = sq[:, None] + sq[None, :] - 2.0 * (E @ E.T)
    np.maximum(D2, 0.0, out=D2)
    return D2


def rbf_kernel(E: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian kernel exp(-||z_i - z_j||^2 / (2 sigma^2)); symmetric, unit diagonal."""
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    D2 = pairwise_sq_dists(E)
    S = np.exp(-D2 / (2.0 * sigma * sigma))
    # mirror the upper triangle so s_ij == s_ji exactly as stored
    upper = np.triu(S, k=1)
    S = upper + upper.T
    np.fill_diagonal(S, 1.0)
    return S


def median_heuristic_sigma(E: np.ndarray, max_pairs: int = 10_000, seed: int = 0) -> float:
    """Median pairwise distance; subsampled (seeded) above max_pairs pairs."""
    E = np.asarray(E, dtype=np.float64)
    n = E.shape[0]
    if n < 2:
        raise TooFewPoints("need at least two points for the median distance heuristic")
    n_pairs = n * (n - 1) // 2
    if n_pairs <= max_pairs:
        D2 = pairwise_sq_dists(E)
        dists = np.sqrt(D2[np.triu_indices(n, k=1)])
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, n, size=2 * max_pairs)
        jj = rng.integers(0, n, size=2 * max_pairs)
        keep = ii != jj
        ii, jj = ii[keep][:max_pairs], jj[keep][:max_pairs]
        dists = np.linalg.norm(E[ii] - E[jj], axis=1)
    med = float(np.median(dists))
    if med <= 0.0:
        raise DegenerateDistances("median pairwise distance is zero (all points coincide?)")
    return med


@dataclass(frozen=True)
class SimilarityValidation:
    max_asymmetry: float
    out_of_range_count: int
    nonfinite_count: int

    @property
    def passed(self) -> bool:
        return (
            self.max_asymmetry == 0.0
            and self.out_of_range_count == 0
            and self.nonfinite_count == 0
        )

    def to_dict(self) -> dict:
        return {
            "max_asymmetry": self.max_asymmetry,
            "out_of_range_count": self.out_of_range_count,
            "nonfinite_count": self.nonfinite_count,
            "passed": self.passed,
        }


def validate_similarity(S: np.ndarray) -> SimilarityValidation:
    """Diagnostic check: symmetry as stored, entries finite and inside [0, 1]."""
    S = np.asarray(S)
    finite = np.isfinite(S)
    nonfinite = int(S.size - np.count_nonzero(finite))
    fin = np.where(finite, S, 0.0)
    asym = float(np.max(np.abs(fin - fin.T))) if S.size else 0.0
    out_of_range = int(np.count_nonzero((fin < 0.0) | (fin > 1.0)))
    return SimilarityValidation(asym, out_of_range, nonfinite)
