import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topocluster.data import (
    BRIDGE_LABEL,
    OUTLIER_LABEL,
    DataFormatError,
    GaussianCluster,
    GaussianMixtureSpec,
    LabeledDataset,
    generate_gaussian_mixture,
    generate_nested_spheres,
    generate_planar_toy,
    load_csv,
    save_csv,
    setting_spec,
    standardize,
)


class TestGaussianMixture:
    def test_e100_shape_and_labels(self):
        ds = generate_gaussian_mixture(setting_spec("E100", per_cluster=500, seed=3))
        assert ds.points.shape == (1500, 100)
        assert np.array_equal(np.bincount(ds.labels), [500, 500, 500])
        assert ds.name == "E100"

    def test_zero_sd_gives_identical_points(self):
        spec = GaussianMixtureSpec(4, [GaussianCluster(0.0, 0.0, 5)], seed=1)
        ds = generate_gaussian_mixture(spec)
        assert np.array_equal(ds.points, np.zeros((5, 4)))

    def test_u3_sample_sd_matches(self):
        ds = generate_gaussian_mixture(setting_spec("U3", per_cluster=500, seed=11))
        for label, sd in enumerate((0.1, 1.0, 3.0)):
            sample = ds.points[ds.labels == label]
            # pooled over the 3 coordinates
            assert abs(sample.std(axis=0, ddof=1).mean() - sd) <= 0.1 * sd

    def test_noise_features_uniform_unit_interval(self):
        ds = generate_gaussian_mixture(setting_spec("U1003", per_cluster=20, seed=0))
        assert ds.points.shape == (60, 1003)
        noise = ds.points[:, 3:]
        assert noise.min() >= 0.0 and noise.max() <= 1.0

    def test_vector_mean(self):
        spec = GaussianMixtureSpec(2, [GaussianCluster([5.0, -5.0], 0.0, 3)])
        ds = generate_gaussian_mixture(spec)
        assert np.array_equal(ds.points, np.tile([5.0, -5.0], (3, 1)))

    def test_same_seed_identical_bytes(self):
        a = generate_gaussian_mixture(setting_spec("U1003", 30, seed=9))
        b = generate_gaussian_mixture(setting_spec("U1003", 30, seed=9))
        assert a.points.tobytes() == b.points.tobytes()
        c = generate_gaussian_mixture(setting_spec("U1003", 30, seed=10))
        assert a.points.tobytes() != c.points.tobytes()

    @pytest.mark.parametrize(
        "dim, clusters",
        [(0, [GaussianCluster(0.0, 1.0, 3)]), (3, []), (3, [GaussianCluster(0.0, -1.0, 3)])],
    )
    def test_rejects_invalid(self, dim, clusters):
        with pytest.raises(ValueError):
            generate_gaussian_mixture(GaussianMixtureSpec(dim, clusters))

    @settings(max_examples=25, deadline=None)
    @given(
        dim=st.integers(1, 6),
        noise=st.integers(0, 4),
        counts=st.lists(st.integers(1, 8), min_size=1, max_size=4),
        seed=st.integers(0, 2**31),
    )
    def test_output_dimension(self, dim, noise, counts, seed):
        spec = GaussianMixtureSpec(dim, [GaussianCluster(1.0, 0.5, c) for c in counts],
                                   noise_features=noise, seed=seed)
        ds = generate_gaussian_mixture(spec)
        assert ds.points.shape == (sum(counts), dim + noise)
        assert np.all((ds.points[:, dim:] >= 0) & (ds.points[:, dim:] <= 1))


class TestNestedSpheres:
    def test_full_size(self):
        ds = generate_nested_spheres((1, 2, 3), (10000, 10000, 10000), 0.0, seed=0)
        assert ds.n_obs == 30000
        assert np.array_equal(np.bincount(ds.labels), [10000] * 3)

    def test_unit_sphere_exact(self):
        ds = generate_nested_spheres([1.0], [500], 0.0, seed=2)
        assert np.allclose(np.linalg.norm(ds.points, axis=1), 1.0, atol=1e-12)

    def test_jittered_norms(self):
        ds = generate_nested_spheres([1.0, 3.0], [400, 400], 0.01, seed=4)
        norms = np.linalg.norm(ds.points, axis=1)
        for label, r in enumerate((1.0, 3.0)):
            assert abs(norms[ds.labels == label].mean() - r) < 0.05

    def test_rejects_mismatch(self):
        with pytest.raises(ValueError):
            generate_nested_spheres([1, 2], [10], 0.0)
        with pytest.raises(ValueError):
            generate_nested_spheres([2, 1], [10, 10], 0.0)


class TestPlanarToy:
    def test_overlapping_means(self):
        ds = generate_planar_toy("overlapping", {"count": 4000}, seed=0)
        for label, mean in enumerate(((0.0, 2.0), (2.0, 2.0))):
            pts = ds.points[ds.labels == label]
            assert np.allclose(pts.mean(axis=0), mean, atol=0.06)
            assert np.allclose(np.cov(pts.T), np.eye(2), atol=0.08)

    def test_bridged_without_bridge(self):
        ds = generate_planar_toy("bridged", {"bridge_points": 0}, seed=0)
        assert set(np.unique(ds.labels)) == {0, 1}

    def test_bridged_with_bridge(self):
        ds = generate_planar_toy("bridged", {"bridge_points": 15}, seed=0)
        bridge = ds.points[ds.labels == BRIDGE_LABEL]
        assert len(bridge) == 15
        # bridge runs between the two means
        assert bridge[:, 0].min() > -1 and bridge[:, 0].max() < 7

    def test_outliers_exact(self):
        coords = ((-9.0, 1.0), (10.0, 10.0))
        ds = generate_planar_toy("outliers", {"outliers": coords}, seed=5)
        out = ds.points[ds.labels == OUTLIER_LABEL]
        assert np.array_equal(out, np.array(coords))

    def test_outliers_with_noise_labels(self):
        ds = generate_planar_toy("outliers_with_noise", seed=1)
        assert set(np.unique(ds.labels)) == {0, 1, 2, 3}

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            generate_planar_toy("spiral")


class TestCsv:
    def test_label_column_mapping(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("1,2,a\n3,4,a\n5,6,b\n")
        ds = load_csv(f, label_column=2)
        assert ds.points.tolist() == [[1, 2], [3, 4], [5, 6]]
        assert ds.labels.tolist() == [0, 0, 1]
        assert ds.label_names == ["a", "b"]

    def test_header_skipped(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("x,y,label\n1,2,a\n3,4,b\n")
        ds = load_csv(f, label_column="label")
        assert ds.points.shape == (2, 2)
        assert ds.labels.tolist() == [0, 1]

    def test_header_sniffed(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("x,y\n1,2\n3,4\n")
        assert load_csv(f).points.shape == (2, 2)

    def test_non_numeric_cell_position(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("1,2\n3,oops\n")
        with pytest.raises(DataFormatError, match="row 2, column 1"):
            load_csv(f, has_header=False)

    def test_ragged_rows(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("1,2\n3\n")
        with pytest.raises(DataFormatError, match="row 2"):
            load_csv(f)

    def test_iris_like(self, tmp_path):
        rng = np.random.default_rng(0)
        f = tmp_path / "iris.csv"
        names = ["setosa", "versicolor", "virginica"]
        lines = ["sepal_length,sepal_width,petal_length,petal_width,species"]
        for i in range(150):
            vals = rng.uniform(0, 8, 4)
            lines.append(",".join(f"{v:.1f}" for v in vals) + "," + names[i // 50])
        f.write_text("\n".join(lines) + "\n")
        ds = load_csv(f, label_column="species")
        assert ds.n_obs == 150 and ds.n_features == 4
        assert len(np.unique(ds.labels)) == 3

    def test_round_trip_exact(self, tmp_path):
        ds = generate_gaussian_mixture(setting_spec("U3", 10, seed=4))
        f = tmp_path / "u3.csv"
        save_csv(ds, f)
        back = load_csv(f, label_column="label")
        assert np.array_equal(back.points, ds.points)
        assert np.array_equal(back.labels, ds.labels)
        save_csv(back, tmp_path / "again.csv")
        assert (tmp_path / "again.csv").read_text() == f.read_text()


class TestStandardize:
    def test_zscore_closed_form(self):
        ds = LabeledDataset(np.array([[1.0], [2.0], [3.0]]))
        out = standardize(ds, "zscore").points.ravel()
        assert np.allclose(out, [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-9)

    def test_constant_column(self):
        ds = LabeledDataset(np.array([[5.0, 1.0], [5.0, 2.0]]))
        assert np.array_equal(standardize(ds, "zscore").points[:, 0], [0.0, 0.0])
        assert np.array_equal(standardize(ds, "minmax").points[:, 0], [0.0, 0.0])

    def test_minmax(self):
        ds = LabeledDataset(np.array([[2.0], [4.0], [6.0]]))
        assert np.allclose(standardize(ds, "minmax").points.ravel(), [0.0, 0.5, 1.0])

    def test_none_copies(self):
        ds = LabeledDataset(np.array([[2.0], [4.0]]))
        out = standardize(ds, "none")
        assert np.array_equal(out.points, ds.points) and out.points is not ds.points

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(2, 30), p=st.integers(1, 5))
    def test_zscore_idempotent(self, seed, n, p):
        x = np.random.default_rng(seed).normal(3.0, 2.0, (n, p))
        once = standardize(LabeledDataset(x), "zscore")
        twice = standardize(once, "zscore")
        assert np.allclose(once.points, twice.points, atol=1e-9)
        assert np.allclose(once.points.mean(axis=0), 0.0, atol=1e-9)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            standardize(LabeledDataset(np.ones((2, 1))), "robust")
