import numpy as np
import pytest

from csiselect.errors import InvalidSpec
from csiselect.synthgen import (
    ClusterSpec,
    SyntheticDataset,
    SyntheticSpec,
    default_paper_spec,
    generate,
    standard_normal,
    with_seed,
)


def small_spec(seed=0, **kw):
    defaults = dict(
        clusters=(ClusterSpec(40, "head"), ClusterSpec(12, "medium"), ClusterSpec(5, "tail")),
        dim=2,
        n_outliers=4,
        seed=seed,
    )
    defaults.update(kw)
    return SyntheticSpec(**defaults)


def test_default_spec_shape():
    spec = default_paper_spec()
    assert spec.n_points == 675
    roles = [c.role for c in spec.clusters]
    assert roles.count("head") == roles.count("medium") == roles.count("tail") == 3
    tail_points = sum(c.size for c in spec.clusters if c.role == "tail")
    assert tail_points / spec.n_points == pytest.approx(45 / 675)


def test_role_histogram_matches_spec():
    ds = generate(small_spec(seed=3))
    assert ds.n == 61
    assert int(np.sum(ds.role == "head")) == 40
    assert int(np.sum(ds.role == "medium")) == 12
    assert int(np.sum(ds.role == "tail")) == 5
    assert int(np.sum(ds.role == "outlier")) == 4
    assert np.all(ds.cluster_label[ds.role == "outlier"] == -1)


def test_generation_deterministic():
    a = generate(small_spec(seed=7))
    b = generate(small_spec(seed=7))
    assert np.array_equal(a.embeddings, b.embeddings)
    assert np.array_equal(a.cluster_label, b.cluster_label)
    c = generate(small_spec(seed=8))
    assert not np.array_equal(a.embeddings, c.embeddings)


def test_tail_cluster_separability():
    for seed in range(10):
        ds = generate(with_seed(default_paper_spec(), seed))
        E, labels = ds.embeddings, ds.cluster_label
        tail_ids = np.unique(labels[ds.role == "tail"])
        within, cross = [], []
        for t in tail_ids:
            pts = E[labels == t]
            others = E[(labels != t) & (labels >= 0)]
            d_within = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
            within.append(d_within[np.triu_indices(len(pts), 1)].mean())
            cross.append(np.linalg.norm(pts[:, None] - others[None, :], axis=2).mean())
        assert np.mean(within) < np.mean(cross)


def test_outlier_scale_pushes_outliers_out():
    mean_dists = []
    for scale in (1.5, 3.0, 6.0):
        dists = []
        for seed in range(5):
            ds = generate(small_spec(seed=seed, outlier_scale=scale, n_outliers=10))
            out = ds.embeddings[ds.role == "outlier"]
            centers = np.array([
                ds.embeddings[ds.cluster_label == c].mean(axis=0)
                for c in np.unique(ds.cluster_label[ds.cluster_label >= 0])
            ])
            d = np.linalg.norm(out[:, None] - centers[None, :], axis=2).min(axis=1)
            dists.append(d.mean())
        mean_dists.append(np.mean(dists))
    assert mean_dists[0] < mean_dists[1] < mean_dists[2]


def test_central_mode_puts_outliers_near_origin():
    ds = generate(small_spec(outlier_mode="central", n_outliers=15))
    out = ds.embeddings[ds.role == "outlier"]
    assert np.all(np.linalg.norm(out, axis=1) <= 0.1 * 10.0 + 1e-12)


def test_invalid_specs_rejected():
    with pytest.raises(InvalidSpec):
        SyntheticSpec(clusters=(), seed=0).validate()
    with pytest.raises(InvalidSpec):
        small_spec(cluster_std=0.0).validate()
    with pytest.raises(InvalidSpec):
        SyntheticSpec(clusters=(ClusterSpec(5, "giant"),)).validate()
    with pytest.raises(InvalidSpec):
        small_spec(outlier_mode="sideways").validate()


def test_spec_json_roundtrip():
    spec = small_spec(seed=11)
    back = SyntheticSpec.from_dict(spec.to_dict())
    assert back == spec


def test_dataset_csv_roundtrip(tmp_path):
    ds = generate(small_spec(seed=2))
    p = tmp_path / "ds.csv"
    ds.write_csv(p)
    back = SyntheticDataset.read_csv(p)
    assert np.array_equal(back.embeddings, ds.embeddings)
    assert np.array_equal(back.cluster_label, ds.cluster_label)
    assert list(back.role) == list(ds.role)


def test_standard_normal_moments():
    rng = np.random.default_rng(0)
    z = standard_normal(rng, (200_000,))
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01
