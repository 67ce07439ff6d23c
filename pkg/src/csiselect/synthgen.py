"""Synthetic datasets: Gaussian clusters of head/medium/tail sizes plus
isolated outliers, with ground-truth roles for the metric suite.

Generation is a pure function of the spec (seed included). Gaussian draws go
through an explicit Box-Muller transform of PCG64 uniforms so the byte-level
output is reproducible across platforms and numpy versions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpec
from . import io as _io

ROLES = ("head", "medium", "tail")
OUTLIER_ROLE = "outlier"
OUTLIER_LABEL = -1
CENTRAL_BALL_FRACTION = 0.1  # radius of the central-outlier ball, as a fraction of center_spread


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Box-Muller transform of uniform draws; deterministic given the generator."""
    count = int(np.prod(shape)) if shape else 1
    half = (count + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1]
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:count].reshape(shape)


def uniform_in_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    dirs = standard_normal(rng, (count, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / dim)
    return dirs * radii[:, None]


def uniform_on_shell(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    dirs = standard_normal(rng, (count, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * radius


def _sample_centers(rng, count: int, dim: int, radius: float, min_gap: float) -> np.ndarray:
    """Uniform-in-ball draws, re-drawn until centers keep min_gap apart.

    After 200 rejected draws the most isolated candidate is kept, so the
    procedure always terminates and stays deterministic.
    """
    centers: list[np.ndarray] = []
    for _ in range(count):
        best, best_gap = None, -1.0
        for _ in range(200):
            c = uniform_in_ball(rng, 1, dim, radius)[0]
            gap = min((float(np.linalg.norm(c - o)) for o in centers), default=np.inf)
            if gap >= min_gap:
                best = c
                break
            if gap > best_gap:
                best_gap, best = gap, c
        centers.append(best)
    return np.asarray(centers)


@dataclass(frozen=True)
class ClusterSpec:
    size: int
    role: str
    std: float | None = None  # falls back to SyntheticSpec.cluster_std


@dataclass(frozen=True)
class SyntheticSpec:
    clusters: tuple[ClusterSpec, ...]
    dim: int = 2
    cluster_std: float = 0.7
    center_spread: float = 10.0
    n_outliers: int = 30
    outlier_mode: str = "surrounding"
    outlier_scale: float = 3.0
    center_sep_stds: float = 6.0  # minimum center spacing, in cluster_std units
    seed: int = 0

    def validate(self) -> None:
        if not self.clusters:
            raise InvalidSpec("need at least one cluster")
        for c in self.clusters:
            if c.size < 1:
                raise InvalidSpec("cluster sizes must be >= 1")
            if c.role not in ROLES:
                raise InvalidSpec(f"cluster role {c.role!r} not in {ROLES}")
            if c.std is not None and not c.std > 0:
                raise InvalidSpec("per-cluster std must be positive")
        if self.dim < 1:
            raise InvalidSpec("dim must be >= 1")
        if not (self.cluster_std > 0 and self.center_spread > 0 and self.outlier_scale > 0):
            raise InvalidSpec("scales must be positive")
        if self.n_outliers < 0:
            raise InvalidSpec("n_outliers must be >= 0")
        if self.outlier_mode not in ("central", "surrounding"):
            raise InvalidSpec("outlier_mode must be 'central' or 'surrounding'")
        if self.center_sep_stds < 0:
            raise InvalidSpec("center_sep_stds must be >= 0")

    @property
    def n_points(self) -> int:
        return sum(c.size for c in self.clusters) + self.n_outliers

    def to_dict(self) -> dict:
        return {
            "clusters": [
                {"size": c.size, "role": c.role}
                | ({} if c.std is None else {"std": c.std})
                for c in self.clusters
            ],
            "dim": self.dim,
            "cluster_std": self.cluster_std,
            "center_spread": self.center_spread,
            "n_outliers": self.n_outliers,
            "outlier_mode": self.outlier_mode,
            "outlier_scale": self.outlier_scale,
            "center_sep_stds": self.center_sep_stds,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        try:
            clusters = tuple(
                ClusterSpec(
                    int(c["size"]), str(c["role"]),
                    None if c.get("std") is None else float(c["std"]),
                )
                for c in d["clusters"]
            )
            spec = cls(
                clusters=clusters,
                dim=int(d.get("dim", 2)),
                cluster_std=float(d.get("cluster_std", 0.7)),
                center_spread=float(d.get("center_spread", 10.0)),
                n_outliers=int(d.get("n_outliers", 30)),
                outlier_mode=str(d.get("outlier_mode", "surrounding")),
                outlier_scale=float(d.get("outlier_scale", 3.0)),
                center_sep_stds=float(d.get("center_sep_stds", 6.0)),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"malformed synthetic spec: {exc}") from exc
        spec.validate()
        return spec


@dataclass
class SyntheticDataset:
    embeddings: np.ndarray
    cluster_label: np.ndarray  # OUTLIER_LABEL for outliers
    role: np.ndarray  # head/medium/tail/outlier per point
    spec: SyntheticSpec | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.embeddings.shape[0]

    def write_csv(self, path) -> None:
        _io.write_dataset_csv(
            path,
            self.embeddings,
            {"cluster": self.cluster_label, "role": self.role},
        )

    @classmethod
    def read_csv(cls, path) -> "SyntheticDataset":
        E, meta = _io.read_dataset_csv(path)
        if "cluster" not in meta or "role" not in meta:
            raise InvalidSpec(f"{path}: missing cluster/role columns")
        return cls(E, np.asarray(meta["cluster"], dtype=np.int64), np.asarray(meta["role"]))


def default_paper_spec(seed: int = 0) -> SyntheticSpec:
    """Frozen default config: 3 head x150, 3 medium x50, 3 tail x15 clusters
    plus 30 surrounding outliers in 2-D. The sizes and scales are our
    documented defaults; only the head/medium/tail structure is prescribed."""
    clusters = tuple(
        [ClusterSpec(150, "head")] * 3 + [ClusterSpec(50, "medium")] * 3 + [ClusterSpec(15, "tail")] * 3
    )
    return SyntheticSpec(clusters=clusters, seed=seed)


def generate(spec: SyntheticSpec) -> SyntheticDataset:
    """Draw the dataset described by the spec; same spec, same bytes."""
    spec.validate()
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    n_clusters = len(spec.clusters)
    centers = _sample_centers(
        rng, n_clusters, spec.dim, spec.center_spread,
        spec.center_sep_stds * spec.cluster_std,
    )

    chunks = []
    labels = []
    roles = []
    for ci, c in enumerate(spec.clusters):
        std = c.std if c.std is not None else spec.cluster_std
        pts = centers[ci] + std * standard_normal(rng, (c.size, spec.dim))
        chunks.append(pts)
        labels.extend([ci] * c.size)
        roles.extend([c.role] * c.size)

    if spec.n_outliers:
        if spec.outlier_mode == "central":
            out = uniform_in_ball(
                rng, spec.n_outliers, spec.dim, CENTRAL_BALL_FRACTION * spec.center_spread
            )
        else:
            out = uniform_on_shell(
                rng, spec.n_outliers, spec.dim, spec.outlier_scale * spec.center_spread
            )
        chunks.append(out)
        labels.extend([OUTLIER_LABEL] * spec.n_outliers)
        roles.extend([OUTLIER_ROLE] * spec.n_outliers)

    E = np.vstack(chunks)
    # shuffle row order so index-based tie-breaking cannot favor any cluster
    perm = rng.permutation(E.shape[0])
    return SyntheticDataset(
        embeddings=E[perm],
        cluster_label=np.asarray(labels, dtype=np.int64)[perm],
        role=np.asarray(roles)[perm],
        spec=spec,
    )


def with_seed(spec: SyntheticSpec, seed: int) -> SyntheticSpec:
    return replace(spec, seed=seed)
