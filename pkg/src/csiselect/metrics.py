"""Structural selection metrics: tail coverage, outlier rate, distributional
KL divergences, and manifold coverage distance.

Minority coverage uses the ratio convention (selection share of tail points
over their population share, so values above 1 mean over-representation); the
plain selected-fraction-of-tail is reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDistribution, EmptySelection, InvalidSpec, NoTailPoints
from .slices import SlicedDataset
from .synthgen import SyntheticDataset

KL_SMOOTHING = 0.5  # pseudo-count added to every bin before normalizing


def _selection_array(A, n: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(a) for a in A)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InvalidSpec(f"selection index outside ground set of size {n}")
    return idx


def minority_coverage_ratio(A, tail_mask: np.ndarray) -> float:
    """(tail share of the selection) / (tail share of the dataset)."""
    tail_mask = np.asarray(tail_mask, dtype=bool)
    n = tail_mask.shape[0]
    idx = _selection_array(A, n)
    if idx.size == 0:
        raise EmptySelection("selection is empty")
    n_tail = int(tail_mask.sum())
    if n_tail == 0:
        raise NoTailPoints("dataset has no tail points")
    sel_share = float(tail_mask[idx].sum()) / idx.size
    pop_share = n_tail / n
    return sel_share / pop_share


def minority_coverage_fraction(A, tail_mask: np.ndarray) -> float:
    """Unnormalized form: |A intersect tail| / |tail|."""
    tail_mask = np.asarray(tail_mask, dtype=bool)
    idx = _selection_array(A, tail_mask.shape[0])
    if idx.size == 0:
        raise EmptySelection("selection is empty")
    n_tail = int(tail_mask.sum())
    if n_tail == 0:
        raise NoTailPoints("dataset has no tail points")
    return float(tail_mask[idx].sum()) / n_tail


def outlier_rate(A, outlier_mask: np.ndarray) -> float:
    """|A intersect outliers| / |A|."""
    outlier_mask = np.asarray(outlier_mask, dtype=bool)
    idx = _selection_array(A, outlier_mask.shape[0])
    if idx.size == 0:
        raise EmptySelection("selection is empty")
    return float(outlier_mask[idx].sum()) / idx.size


def kl_cluster_divergence(P_counts, Q_counts, smoothing: float = KL_SMOOTHING) -> float:
    """KL(P || Q) over aligned count vectors with add-smoothing pseudo-counts."""
    P = np.asarray(P_counts, dtype=np.float64)
    Q = np.asarray(Q_counts, dtype=np.float64)
    if P.shape != Q.shape:
        raise InvalidSpec("count vectors must share one cluster index space")
    if smoothing < 0:
        raise InvalidSpec("smoothing must be >= 0")
    P = P + smoothing
    Q = Q + smoothing
    if P.sum() <= 0 or Q.sum() <= 0:
        raise EmptyDistribution("cannot normalize an all-zero distribution")
    p = P / P.sum()
    q = Q / Q.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)
    return float(terms.sum())


def manifold_coverage_distance(A, E: np.ndarray) -> float:
    """Mean over all points of the distance to the nearest selected point."""
    E = np.asarray(E, dtype=np.float64)
    idx = _selection_array(A, E.shape[0])
    if idx.size == 0:
        raise EmptySelection("selection is empty")
    diffs = E[:, None, :] - E[idx][None, :, :]
    d = np.sqrt(np.sum(diffs**2, axis=2))
    return float(d.min(axis=1).mean())


def _label_counts(labels: np.ndarray, mask: np.ndarray, space: np.ndarray) -> np.ndarray:
    sub = labels[mask]
    return np.array([int(np.sum(sub == v)) for v in space], dtype=np.float64)


@dataclass
class MetricsReport:
    minority_coverage_ratio: float
    minority_coverage_fraction: float
    outlier_rate: float
    kl_selected_vs_full: float
    kl_selected_vs_complement: float
    manifold_coverage_distance: float
    selection_size: int
    ground_size: int
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "minority_coverage_ratio": self.minority_coverage_ratio,
            "minority_coverage_fraction": self.minority_coverage_fraction,
            "outlier_rate": self.outlier_rate,
            "kl_selected_vs_full": self.kl_selected_vs_full,
            "kl_selected_vs_complement": self.kl_selected_vs_complement,
            "manifold_coverage_distance": self.manifold_coverage_distance,
            "selection_size": self.selection_size,
            "ground_size": self.ground_size,
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**d)


def dataset_views(dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(embeddings, tail mask, outlier mask, group labels) for either dataset type.

    Synthetic datasets group by generator cluster; sliced datasets group by
    hidden slice. Sentinel labels form their own group either way.
    """
    if isinstance(dataset, SyntheticDataset):
        tail = dataset.role == "tail"
        out = dataset.role == "outlier"
        return dataset.embeddings, tail, out, dataset.cluster_label
    if isinstance(dataset, SlicedDataset):
        roles = dataset.point_roles()
        return dataset.embeddings, roles == "tail", dataset.outlier_flag.copy(), dataset.slice_label
    raise InvalidSpec(f"unsupported dataset type {type(dataset).__name__}")


def evaluate_run(dataset, A, smoothing: float = KL_SMOOTHING, **provenance) -> MetricsReport:
    """All five metrics for one selection on one dataset."""
    E, tail, out, groups = dataset_views(dataset)
    n = E.shape[0]
    idx = _selection_array(A, n)
    if idx.size == 0:
        raise EmptySelection("selection is empty")
    sel_mask = np.zeros(n, dtype=bool)
    sel_mask[idx] = True
    space = np.unique(groups)
    counts_sel = _label_counts(groups, sel_mask, space)
    counts_full = _label_counts(groups, np.ones(n, dtype=bool), space)
    counts_comp = _label_counts(groups, ~sel_mask, space)
    return MetricsReport(
        minority_coverage_ratio=minority_coverage_ratio(idx, tail),
        minority_coverage_fraction=minority_coverage_fraction(idx, tail),
        outlier_rate=outlier_rate(idx, out),
        kl_selected_vs_full=kl_cluster_divergence(counts_sel, counts_full, smoothing),
        kl_selected_vs_complement=kl_cluster_divergence(counts_sel, counts_comp, smoothing),
        manifold_coverage_distance=manifold_coverage_distance(idx, E),
        selection_size=int(idx.size),
        ground_size=int(n),
        provenance=dict(provenance),
    )
