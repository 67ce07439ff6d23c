"""Shared test utilities: random RBF instances and small hand-checked matrices."""

import numpy as np

from csiselect import median_heuristic_sigma, rbf_kernel
from csiselect.objectives import KINDS, ObjectiveSpec

# hand-checkable 3x3 similarity matrix used throughout
S3 = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.4], [0.2, 0.4, 1.0]])

ALL_KINDS = list(KINDS)


def rbf_instance(rng, n, d=4):
    E = rng.normal(size=(n, d))
    return rbf_kernel(E, median_heuristic_sigma(E))


def random_subset(rng, n, m):
    return sorted(int(i) for i in rng.choice(n, size=m, replace=False))


def make_spec(kind, **kw):
    return ObjectiveSpec(kind, **kw)
