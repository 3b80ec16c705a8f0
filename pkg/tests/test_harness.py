import math

import numpy as np
import pytest

from topocluster.data import LabeledDataset, generate_gaussian_mixture, setting_spec
from topocluster.density import dbscan
from topocluster.graph import fuzzy_graph, graph_to_dissimilarity
from topocluster.harness import (
    SweepResult,
    SweepSpec,
    eps_grid,
    eps_sweep,
    fuzzy_only_sweep,
    grid_range,
    read_manifest,
    replicate,
    run_pipeline,
    write_manifest,
)
from topocluster.layout import LayoutConfig
from topocluster.metrics import ari_score
from topocluster.toy import toy_distance_matrix, toy_labels


class TestGrid:
    def test_full_grid_size(self):
        g = eps_grid(0.01, 50, 0.01)
        assert g.size == 5000
        assert g[0] == 0.01 and g[-1] == 50.0
        assert g[29] == 0.3

    def test_endpoint_within_half_step(self):
        assert eps_grid(0.0, 1.04, 0.1)[-1] == 1.0
        assert eps_grid(0.0, 1.06, 0.1)[-1] == 1.1

    def test_single_point(self):
        assert eps_grid(0.5, 0.5, 0.1).tolist() == [0.5]

    def test_strictly_increasing(self):
        g = eps_grid(0.01, 15, 0.05)
        assert np.all(np.diff(g) > 0)

    @pytest.mark.parametrize("kw", [{"eps_min": -1}, {"eps_step": 0}, {"eps_min": 2, "eps_max": 1},
                                    {"input_kind": "graph"}, {"min_pts": 0}])
    def test_spec_validation(self, kw):
        with pytest.raises(ValueError):
            SweepSpec(**kw)

    def test_grid_range(self):
        eps = np.array([0.1, 0.2, 0.3, 0.4])
        assert grid_range(eps, np.array([0, 1, 1, 0], bool)) == (0.2, 0.3, True)
        assert grid_range(eps, np.array([1, 0, 0, 1], bool)) == (0.1, 0.4, False)
        assert grid_range(eps, np.zeros(4, bool)) is None


class TestEpsSweep:
    def test_matches_direct_dbscan(self):
        spec = SweepSpec(0.5, 1.6, 0.05, min_pts=2)
        res = eps_sweep(toy_distance_matrix(), spec, toy_labels())
        for eps, a, nc in zip(res.eps, res.ari, res.n_clusters):
            lab = dbscan(toy_distance_matrix(), eps, 2)
            assert a == ari_score(toy_labels(), lab.assignments)
            assert nc == lab.n_clusters

    def test_one_row(self):
        res = eps_sweep(toy_distance_matrix(), SweepSpec(0.74, 0.74, 0.01, min_pts=2), toy_labels())
        assert len(res) == 1
        assert res.n_clusters[0] == 1 and res.n_noise[0] == 3

    def test_saturation_consistent(self):
        x = np.random.default_rng(0).normal(size=(30, 2))
        y = np.repeat([0, 1, 2], 10)
        spec = SweepSpec(0.1, 12.0, 0.1, min_pts=3)
        res = eps_sweep(x, spec, y)
        for g in (-1, -20):
            lab = dbscan(x, res.eps[g], 3)
            assert res.n_clusters[g] == lab.n_clusters == 1

    def test_label_length_checked(self):
        with pytest.raises(ValueError):
            eps_sweep(toy_distance_matrix(), SweepSpec(min_pts=2), [0, 1])

    def test_repeatable(self):
        x = np.random.default_rng(1).normal(size=(40, 3))
        y = np.repeat([0, 1], 20)
        spec = SweepSpec(0.1, 3.0, 0.1, min_pts=4)
        a, b = eps_sweep(x, spec, y), eps_sweep(x, spec, y)
        assert np.array_equal(a.ari, b.ari) and np.array_equal(a.n_noise, b.n_noise)

    def test_eps_opt_smallest_argmax(self):
        res = SweepResult(np.array([0.1, 0.2, 0.3]), np.array([0.5, 1.0, 1.0]),
                          np.array([0.2, 0.9, 0.9]), np.zeros(3, int), np.zeros(3, int))
        assert res.eps_opt() == 0.2
        assert res.optimal_range() == (0.2, 0.3, True)
        assert res.perfect_range("nmi") is None

    def test_raw_u3_not_perfect(self):
        ds = generate_gaussian_mixture(setting_spec("U3", 150, seed=0))
        res = eps_sweep(ds, SweepSpec(0.05, 15, 0.05), ds.labels)
        assert res.max() < 1.0

    def test_csv_round_trip(self, tmp_path):
        res = eps_sweep(toy_distance_matrix(), SweepSpec(0.5, 0.8, 0.01, min_pts=2), toy_labels())
        f = tmp_path / "s.csv"
        res.write_csv(f)
        assert f.read_text().splitlines()[0] == "eps,ari,nmi,n_clusters,n_noise"
        back = SweepResult.read_csv(f)
        for col in ("eps", "ari", "n_clusters", "n_noise"):
            assert np.array_equal(getattr(back, col), getattr(res, col))
        assert np.array_equal(back.nmi, res.nmi, equal_nan=True)


class TestFuzzyOnly:
    def test_toy_k2(self):
        res = fuzzy_only_sweep(toy_distance_matrix(), 2, SweepSpec(0.01, 1.5, 0.01, min_pts=2),
                               labels=toy_labels())
        below = res.eps <= 0.99
        assert np.all(res.ari[below] == 1.0)
        assert np.all(res.ari[~below] < 1.0)

    def test_toy_k6_qualitative(self):
        res = fuzzy_only_sweep(toy_distance_matrix(), 6, SweepSpec(0.01, 1.0, 0.01, min_pts=2),
                               labels=toy_labels())
        lo, hi, _ = res.perfect_range()
        assert lo == 0.01 and hi < 0.5

    def test_constant_above_one(self):
        x = np.random.default_rng(2).normal(size=(40, 2))
        y = np.repeat([0, 1], 20)
        res = fuzzy_only_sweep(x, 5, SweepSpec(1.0, 2.0, 0.1, min_pts=3), labels=y)
        single = dbscan(graph_to_dissimilarity(fuzzy_graph(x, 5)), 1.0, 3)
        assert np.all(res.ari == ari_score(y, single.assignments))
        assert np.all(res.n_clusters == res.n_clusters[0])


class TestPipeline:
    def test_toy_records_embedding_and_manifest(self):
        res = run_pipeline(toy_distance_matrix(), 2, LayoutConfig(seed=3),
                           SweepSpec(0.01, 5, 0.01, min_pts=2, input_kind="embedding"),
                           labels=toy_labels())
        assert res.embedding.coords.shape == (6, 2)
        assert res.manifest["k"] == 2 and res.manifest["layout.seed"] == 3
        assert res.max() == 1.0

    def test_identical_points(self):
        ds = LabeledDataset(np.ones((3, 2)), np.zeros(3, int), name="same")
        res = run_pipeline(ds, 2, LayoutConfig(n_epochs=50),
                           SweepSpec(0.01, 1.0, 0.01, min_pts=2, input_kind="embedding"))
        assert np.all(np.isfinite(res.embedding.coords))
        assert np.all(res.n_clusters == 1)

    def test_needs_labels(self):
        with pytest.raises(ValueError):
            run_pipeline(LabeledDataset(np.zeros((4, 2)) + np.arange(4)[:, None]), 2)


class TestReplicate:
    def _run(self, **kw):
        return replicate(toy_distance_matrix(), 3, LayoutConfig(n_epochs=60),
                         SweepSpec(0.05, 3, 0.05, min_pts=2, input_kind="embedding"),
                         labels=toy_labels(), **kw)

    def test_single_run_collapses(self):
        s = self._run(runs=1)
        assert np.array_equal(s.ari_min, s.ari_max) and np.array_equal(s.ari_min, s.ari_mean)
        assert s.seeds == [0]

    def test_ordering_and_seeds(self):
        s = self._run(runs=4, base_seed=10)
        assert s.seeds == [10, 11, 12, 13]
        assert np.all(s.ari_min <= s.ari_mean + 1e-15) and np.all(s.ari_mean <= s.ari_max + 1e-15)
        assert [r.manifest["layout.seed"] for r in s.runs] == s.seeds

    def test_deterministic(self, tmp_path):
        self._run(runs=3).write_csv(tmp_path / "a.csv")
        self._run(runs=3).write_csv(tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_rejects_zero_runs(self):
        with pytest.raises(ValueError):
            self._run(runs=0)


def test_manifest_round_trip(tmp_path):
    m = {"dataset": "U3", "k": 5, "layout.a": 1.929, "sweep.noise_policy": "exclude"}
    write_manifest(m, tmp_path / "m.txt")
    back = read_manifest(tmp_path / "m.txt")
    assert back == {key: str(v) for key, v in m.items()}
    assert not math.isnan(float(back["layout.a"]))
