"""Hidden-slice pipeline on arbitrary embeddings: per-class k-means slicing,
role-based retention subsampling, and embedding-space outlier/noise injection.

Slice labels, roles, and flags exist only for evaluation; the selection API
takes embeddings/similarity alone and never sees them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import io as _io
from .errors import ClassTooSmall, InvalidSpec, KTooLarge, TooFewSlices
from .synthgen import standard_normal

SENTINEL = -1  # class/slice label for injected outliers

DEFAULT_RETENTION = {"head": 1.0, "medium": 0.5, "tail": 0.15}
DEFAULT_K_PER_CLASS = 5
DEFAULT_RHO_OUT = 0.05
DEFAULT_NOISE_FRAC = 0.05
SHELL_RADIUS_FACTOR = 3.0
NOISE_STD_FACTOR = 1.0

KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def kmeans(E: np.ndarray, K: int, seed=0) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; deterministic given seed.

    Iteration cap 300, convergence when no center moves more than 1e-6.
    Empty clusters are re-seeded to the point farthest from its center.
    """
    E = np.asarray(E, dtype=np.float64)
    n = E.shape[0]
    if K < 1:
        raise InvalidSpec("K must be >= 1")
    if K > n:
        raise KTooLarge(f"K={K} exceeds the {n} available points")
    rng = _rng(seed)

    # k-means++ seeding
    centers = np.empty((K, E.shape[1]))
    first = int(rng.integers(0, n))
    centers[0] = E[first]
    d2 = np.sum((E - centers[0]) ** 2, axis=1)
    for j in range(1, K):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(0, n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = E[idx]
        d2 = np.minimum(d2, np.sum((E - centers[j]) ** 2, axis=1))

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        dists = np.sum((E[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = dists.argmin(axis=1)
        new_centers = centers.copy()
        own_dist = dists[np.arange(n), labels].copy()
        for j in range(K):
            members = labels == j
            if members.any():
                new_centers[j] = E[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its center
                far = int(np.argmax(own_dist))
                new_centers[j] = E[far]
                own_dist[far] = -1.0  # a second empty cluster takes the next one
        move = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if move <= KMEANS_TOL:
            break
    dists = np.sum((E[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return dists.argmin(axis=1).astype(np.int64)


@dataclass
class SlicedDataset:
    embeddings: np.ndarray
    class_label: np.ndarray
    slice_label: np.ndarray
    slice_roles: dict[int, str] = field(default_factory=dict)
    outlier_flag: np.ndarray = None  # type: ignore[assignment]
    noise_flag: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        n = self.embeddings.shape[0]
        if self.outlier_flag is None:
            self.outlier_flag = np.zeros(n, dtype=bool)
        if self.noise_flag is None:
            self.noise_flag = np.zeros(n, dtype=bool)

    @property
    def n(self) -> int:
        return self.embeddings.shape[0]

    def point_roles(self) -> np.ndarray:
        """Role per point from its slice; injected outliers report 'outlier'."""
        if not self.slice_roles:
            raise TooFewSlices("slice roles have not been assigned")
        out = np.empty(self.n, dtype=object)
        for i in range(self.n):
            if self.outlier_flag[i] or self.slice_label[i] == SENTINEL:
                out[i] = "outlier"
            else:
                out[i] = self.slice_roles[int(self.slice_label[i])]
        return np.asarray(out.tolist())

    def write_csv(self, path) -> None:
        cols = {
            "class": self.class_label,
            "slice": self.slice_label,
            "role": self.point_roles() if self.slice_roles else np.asarray(["?"] * self.n),
            "outlier": self.outlier_flag.astype(np.int64),
            "noise": self.noise_flag.astype(np.int64),
        }
        _io.write_dataset_csv(path, self.embeddings, cols)

    @classmethod
    def read_csv(cls, path) -> "SlicedDataset":
        E, meta = _io.read_dataset_csv(path)
        needed = {"class", "slice", "role", "outlier", "noise"}
        if not needed.issubset(meta):
            raise InvalidSpec(f"{path}: missing columns {sorted(needed - set(meta))}")
        slice_label = np.asarray(meta["slice"], dtype=np.int64)
        roles = {}
        for s, r in zip(slice_label, np.asarray(meta["role"])):
            if s != SENTINEL and r in ("head", "medium", "tail"):
                roles[int(s)] = str(r)
        return cls(
            embeddings=E,
            class_label=np.asarray(meta["class"], dtype=np.int64),
            slice_label=slice_label,
            slice_roles=roles,
            outlier_flag=np.asarray(meta["outlier"], dtype=np.int64).astype(bool),
            noise_flag=np.asarray(meta["noise"], dtype=np.int64).astype(bool),
        )


def build_slices(E: np.ndarray, y: np.ndarray, K_per_class: int = DEFAULT_K_PER_CLASS, seed: int = 0) -> SlicedDataset:
    """Cluster each class into K slices; slice ids are unique across classes."""
    E = np.asarray(E, dtype=np.float64)
    y = np.asarray(y)
    if E.shape[0] != y.shape[0]:
        raise InvalidSpec("embeddings and labels disagree on point count")
    slice_label = np.full(E.shape[0], SENTINEL, dtype=np.int64)
    next_id = 0
    for ci, c in enumerate(np.unique(y)):
        members = np.flatnonzero(y == c)
        if members.size < K_per_class:
            raise ClassTooSmall(c, members.size, K_per_class)
        sub_seed = np.random.SeedSequence([int(seed), int(ci)])
        local = kmeans(E[members], K_per_class, seed=sub_seed)
        slice_label[members] = next_id + local
        next_id += K_per_class
    return SlicedDataset(
        embeddings=E,
        class_label=y.astype(np.int64),
        slice_label=slice_label,
    )


def assign_slice_roles(ds: SlicedDataset) -> dict[int, str]:
    """Per class: slices sorted by size; thirds become head/medium/tail.

    Ties go to the lower slice id. Requires >= 3 slices per class.
    """
    roles: dict[int, str] = {}
    for c in np.unique(ds.class_label):
        if c == SENTINEL:
            continue
        slice_ids = np.unique(ds.slice_label[ds.class_label == c])
        slice_ids = slice_ids[slice_ids != SENTINEL]
        if slice_ids.size < 3:
            raise TooFewSlices(f"class {c} has {slice_ids.size} slices; need >= 3 for all roles")
        sizes = {int(s): int(np.sum(ds.slice_label == s)) for s in slice_ids}
        ordered = sorted(sizes, key=lambda s: (-sizes[s], s))
        groups = np.array_split(np.asarray(ordered), 3)
        for role, group in zip(("head", "medium", "tail"), groups):
            for s in group:
                roles[int(s)] = role
    ds.slice_roles = roles
    return roles


def subsample_slices(ds: SlicedDataset, probs: dict[str, float] | None = None, seed: int = 0) -> SlicedDataset:
    """Keep each point independently with its slice-role retention probability."""
    probs = dict(DEFAULT_RETENTION if probs is None else probs)
    for r, p in probs.items():
        if not 0.0 <= p <= 1.0:
            raise InvalidSpec(f"retention probability for {r!r} outside [0, 1]")
    point_roles = ds.point_roles()
    rng = _rng(np.random.SeedSequence([int(seed), 1]))
    u = rng.random(ds.n)
    keep = np.array([u[i] < probs.get(point_roles[i], 1.0) for i in range(ds.n)])
    return SlicedDataset(
        embeddings=ds.embeddings[keep],
        class_label=ds.class_label[keep],
        slice_label=ds.slice_label[keep],
        slice_roles=dict(ds.slice_roles),
        outlier_flag=ds.outlier_flag[keep],
        noise_flag=ds.noise_flag[keep],
    )


def inject_outliers(
    ds: SlicedDataset,
    rho_out: float = DEFAULT_RHO_OUT,
    noise_frac: float = DEFAULT_NOISE_FRAC,
    seed: int = 0,
) -> SlicedDataset:
    """Append shell outliers and perturb a fraction of existing points.

    Outliers: ceil(rho_out * n) new points on the sphere of radius 3x the RMS
    radius around the data mean, flagged, with sentinel labels. Noise:
    floor(noise_frac * n) existing points get additive Gaussian noise at 1x
    the per-dimension std; labels are preserved, noise_flag set.
    """
    if not (0.0 <= rho_out < 1.0 and 0.0 <= noise_frac < 1.0):
        raise InvalidSpec("fractions must lie in [0, 1)")
    n = ds.n
    rng = _rng(np.random.SeedSequence([int(seed), 2]))
    E = ds.embeddings.copy()
    noise_flag = ds.noise_flag.copy()

    n_noise = int(np.floor(noise_frac * n))
    if n_noise:
        per_dim_std = E.std(axis=0)
        victims = rng.choice(n, size=n_noise, replace=False)
        E[victims] += NOISE_STD_FACTOR * per_dim_std * standard_normal(rng, (n_noise, E.shape[1]))
        noise_flag[victims] = True

    n_out = int(np.ceil(rho_out * n))
    if n_out:
        mean = E.mean(axis=0)
        rms = float(np.sqrt(np.mean(np.sum((E - mean) ** 2, axis=1))))
        dirs = standard_normal(rng, (n_out, E.shape[1]))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        shells = mean + SHELL_RADIUS_FACTOR * rms * dirs
        E = np.vstack([E, shells])
        class_label = np.concatenate([ds.class_label, np.full(n_out, SENTINEL, dtype=np.int64)])
        slice_label = np.concatenate([ds.slice_label, np.full(n_out, SENTINEL, dtype=np.int64)])
        outlier_flag = np.concatenate([ds.outlier_flag, np.ones(n_out, dtype=bool)])
        noise_flag = np.concatenate([noise_flag, np.zeros(n_out, dtype=bool)])
    else:
        class_label = ds.class_label.copy()
        slice_label = ds.slice_label.copy()
        outlier_flag = ds.outlier_flag.copy()

    return SlicedDataset(
        embeddings=E,
        class_label=class_label,
        slice_label=slice_label,
        slice_roles=dict(ds.slice_roles),
        outlier_flag=outlier_flag,
        noise_flag=noise_flag,
    )
