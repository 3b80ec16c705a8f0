"""Epsilon sweeps, replication studies and the graph -> layout -> DBSCAN pipeline."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import LabeledDataset
from .density import NeighborhoodIndex, dbscan
from .graph import DissimilarityMatrix, fuzzy_graph, graph_to_dissimilarity
from .layout import Embedding, LayoutConfig, optimize_layout
from .metrics import ari, contingency, nmi_max

__all__ = [
    "SweepSpec",
    "SweepResult",
    "ReplicationSummary",
    "eps_grid",
    "eps_sweep",
    "run_pipeline",
    "replicate",
    "fuzzy_only_sweep",
    "grid_range",
    "write_manifest",
    "read_manifest",
]

INPUT_KINDS = ("raw", "embedding", "fuzzy_dissimilarity")
SWEEP_COLUMNS = ("eps", "ari", "nmi", "n_clusters", "n_noise")


@dataclass(frozen=True)
class SweepSpec:
    eps_min: float = 0.01
    eps_max: float = 50.0
    eps_step: float = 0.01
    min_pts: int = 5
    input_kind: str = "raw"
    noise_policy: str = "noise_as_cluster"
    self_in_neighborhood: bool = False

    def __post_init__(self):
        if self.eps_min < 0:
            raise ValueError("eps_min must be >= 0")
        if self.eps_step <= 0:
            raise ValueError("eps_step must be > 0")
        if self.eps_min > self.eps_max:
            raise ValueError("eps_min must not exceed eps_max")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")
        if self.input_kind not in INPUT_KINDS:
            raise ValueError(f"unknown input kind {self.input_kind!r}")

    def grid(self) -> np.ndarray:
        return eps_grid(self.eps_min, self.eps_max, self.eps_step)


def eps_grid(eps_min: float, eps_max: float, eps_step: float) -> np.ndarray:
    """``eps_min + i * eps_step`` up to ``eps_max`` (kept if overshot by < half a step).

    Values are rounded to 12 decimals so that e.g. 0.01 + 29 * 0.01 is 0.3.
    """
    n = int(math.floor((eps_max - eps_min) / eps_step + 0.5))
    return np.round(eps_min + eps_step * np.arange(n + 1), 12)


def grid_range(eps: np.ndarray, mask: np.ndarray):
    """``(lo, hi, contiguous)`` over grid points where ``mask`` holds, or None."""
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        return None
    contiguous = bool(hits[-1] - hits[0] + 1 == hits.size)
    return float(eps[hits[0]]), float(eps[hits[-1]]), contiguous


@dataclass
class SweepResult:
    eps: np.ndarray
    ari: np.ndarray
    nmi: np.ndarray
    n_clusters: np.ndarray
    n_noise: np.ndarray
    spec: Optional[SweepSpec] = None
    embedding: Optional[Embedding] = None
    manifest: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eps)

    def eps_opt(self, metric: str = "ari") -> float:
        """Smallest grid eps reaching the metric's maximum (NaN if undefined everywhere)."""
        vals = getattr(self, metric)
        if np.all(np.isnan(vals)):
            return math.nan
        best = np.nanmax(vals)
        return float(self.eps[np.flatnonzero(vals == best)[0]])

    def max(self, metric: str = "ari") -> float:
        vals = getattr(self, metric)
        return math.nan if np.all(np.isnan(vals)) else float(np.nanmax(vals))

    def positive_range(self, metric: str = "ari"):
        """Grid range where the metric is > 0 (min/max eps, contiguity flag)."""
        vals = np.nan_to_num(getattr(self, metric), nan=-np.inf)
        return grid_range(self.eps, vals > 0)

    def optimal_range(self, metric: str = "ari"):
        """Grid range where the metric equals its maximum."""
        vals = getattr(self, metric)
        if np.all(np.isnan(vals)):
            return None
        return grid_range(self.eps, vals == np.nanmax(vals))

    def perfect_range(self, metric: str = "ari"):
        """Grid range where the metric is exactly 1, or None."""
        return grid_range(self.eps, getattr(self, metric) == 1.0)

    def fraction(self, mask) -> float:
        return float(np.count_nonzero(mask)) / len(self.eps)

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for row in zip(self.eps, self.ari, self.nmi, self.n_clusters, self.n_noise):
                w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                            int(row[3]), int(row[4])])

    @classmethod
    def read_csv(cls, path) -> "SweepResult":
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        col = lambda k, t: np.array([t(r[k]) for r in rows])
        return cls(col("eps", float), col("ari", float), col("nmi", float),
                   col("n_clusters", int), col("n_noise", int))


def _score(truth, labels, policy):
    table = contingency(truth, labels, policy)
    if table.n < 2:
        return math.nan, math.nan
    return ari(table), nmi_max(table)


def _sweep_input(data):
    if isinstance(data, Embedding):
        return data.coords
    if isinstance(data, LabeledDataset):
        return data.points
    return data


def eps_sweep(data, spec: SweepSpec, true_labels) -> SweepResult:
    """DBSCAN at every grid eps, scored by ARI and NMI against ``true_labels``.

    ``data`` may be points, a LabeledDataset, an Embedding or a
    DissimilarityMatrix. Once eps reaches the largest pairwise distance the
    partition cannot change, so that row is reused for the rest of the grid.
    """
    truth = np.asarray(true_labels)
    index = NeighborhoodIndex(_sweep_input(data))
    if truth.shape != (index.n_obs,):
        raise ValueError(f"expected {index.n_obs} labels, got {truth.size}")
    grid = spec.grid()
    out_ari = np.empty(grid.size)
    out_nmi = np.empty(grid.size)
    out_nc = np.empty(grid.size, dtype=np.int64)
    out_nn = np.empty(grid.size, dtype=np.int64)
    d_max = float(index._dist.max()) if index._dist is not None else math.inf
    saturated = None
    for g, eps in enumerate(grid):
        if saturated is not None:
            out_ari[g], out_nmi[g], out_nc[g], out_nn[g] = saturated
            continue
        lab = dbscan(index, float(eps), spec.min_pts, spec.self_in_neighborhood)
        a, m = _score(truth, lab.assignments, spec.noise_policy)
        row = (a, m, lab.n_clusters, lab.n_noise)
        out_ari[g], out_nmi[g], out_nc[g], out_nn[g] = row
        if eps >= d_max:
            saturated = row
    return SweepResult(grid, out_ari, out_nmi, out_nc, out_nn, spec=spec)


def _labels_of(dataset: LabeledDataset, labels):
    if labels is not None:
        return np.asarray(labels)
    if dataset.labels is None:
        raise ValueError(f"dataset {dataset.name!r} has no labels to score against")
    return dataset.labels


def _manifest(dataset, k, config: Optional[LayoutConfig], spec: SweepSpec, **extra) -> dict:
    m = {"dataset": getattr(dataset, "name", "matrix"), "n_obs": _n_obs(dataset), "k": k}
    if config is not None:
        for key, val in asdict(config).items():
            m[f"layout.{key}"] = val
    for key, val in asdict(spec).items():
        m[f"sweep.{key}"] = val
    m.update(extra)
    return m


def _n_obs(data) -> int:
    if isinstance(data, LabeledDataset):
        return data.n_obs
    if isinstance(data, DissimilarityMatrix):
        return data.n_obs
    return int(np.asarray(data).shape[0])


def _points(dataset):
    return dataset.points if isinstance(dataset, LabeledDataset) else dataset


def _all_coincident(data) -> bool:
    if isinstance(data, DissimilarityMatrix):
        return bool(np.all(data.values == 0))
    pts = np.asarray(data, dtype=np.float64)
    return bool(np.all(pts == pts[0]))


def run_pipeline(dataset, k: int, config: Optional[LayoutConfig] = None,
                 spec: Optional[SweepSpec] = None, labels=None,
                 k_includes_self: bool = True, graph=None) -> SweepResult:
    """Fuzzy graph at ``k`` -> cross-entropy layout -> DBSCAN eps sweep.

    The embedding is attached to the result as ``result.embedding``.
    ``dataset`` may also be a DissimilarityMatrix, in which case ``labels``
    must be given.
    """
    config = config or LayoutConfig()
    spec = spec or SweepSpec(input_kind="embedding")
    truth = _labels_of(dataset, labels) if isinstance(dataset, LabeledDataset) else np.asarray(labels)
    if graph is None and _all_coincident(_points(dataset)):
        # no structure to learn: coincident inputs stay coincident
        emb = Embedding(np.zeros((_n_obs(dataset), config.d)), config, meta={"coincident": True})
    else:
        if graph is None:
            graph = fuzzy_graph(_points(dataset), k, k_includes_self=k_includes_self)
        emb = optimize_layout(graph, config)
    res = eps_sweep(emb, spec, truth)
    res.embedding = emb
    res.manifest = _manifest(dataset, k, config, spec, seed=config.seed,
                             k_includes_self=k_includes_self, init_failed=emb.init_failed)
    return res


@dataclass
class ReplicationSummary:
    eps: np.ndarray
    ari_min: np.ndarray
    ari_mean: np.ndarray
    ari_max: np.ndarray
    nmi_min: np.ndarray
    nmi_mean: np.ndarray
    nmi_max: np.ndarray
    seeds: list
    runs: list = field(default_factory=list, repr=False)
    manifest: dict = field(default_factory=dict)

    @property
    def n_runs(self) -> int:
        return len(self.seeds)

    COLUMNS = ("eps", "ari_min", "ari_mean", "ari_max", "nmi_min", "nmi_mean", "nmi_max")

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            cols = [getattr(self, c) for c in self.COLUMNS]
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])


def _summarise(values: np.ndarray):
    with warnings.catch_warnings():
        # an all-NaN column (undefined NMI in every run) stays NaN
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmin(values, axis=0), np.nanmean(values, axis=0), np.nanmax(values, axis=0)


def replicate(dataset, k: int, config: Optional[LayoutConfig] = None,
              spec: Optional[SweepSpec] = None, runs: int = 25, base_seed: int = 0,
              labels=None, k_includes_self: bool = True) -> ReplicationSummary:
    """Repeat the pipeline with layout seeds ``base_seed .. base_seed + runs - 1``.

    The fuzzy graph does not depend on the seed and is built once.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    config = config or LayoutConfig()
    spec = spec or SweepSpec(input_kind="embedding")
    graph = None
    if not _all_coincident(_points(dataset)):
        graph = fuzzy_graph(_points(dataset), k, k_includes_self=k_includes_self)
    seeds = [base_seed + r for r in range(runs)]
    results = [
        run_pipeline(dataset, k, config.with_seed(s), spec, labels=labels,
                     k_includes_self=k_includes_self, graph=graph)
        for s in seeds
    ]
    ari_all = np.vstack([r.ari for r in results])
    nmi_all = np.vstack([r.nmi for r in results])
    a_lo, a_mu, a_hi = _summarise(ari_all)
    n_lo, n_mu, n_hi = _summarise(nmi_all)
    manifest = _manifest(dataset, k, config, spec, runs=runs, base_seed=base_seed,
                         k_includes_self=k_includes_self)
    return ReplicationSummary(results[0].eps, a_lo, a_mu, a_hi, n_lo, n_mu, n_hi,
                              seeds, results, manifest)


def fuzzy_only_sweep(dataset, k: int, spec: Optional[SweepSpec] = None, labels=None,
                     k_includes_self: bool = True) -> SweepResult:
    """Sweep DBSCAN over ``1 - v_ij`` dissimilarities, skipping the layout.

    All dissimilarities are at most 1, so rows for eps >= 1 are identical.
    """
    spec = spec or SweepSpec(eps_min=0.01, eps_max=1.0, eps_step=0.01,
                             input_kind="fuzzy_dissimilarity")
    truth = _labels_of(dataset, labels) if isinstance(dataset, LabeledDataset) else np.asarray(labels)
    graph = fuzzy_graph(_points(dataset), k, k_includes_self=k_includes_self)
    res = eps_sweep(graph_to_dissimilarity(graph), spec, truth)
    res.manifest = _manifest(dataset, k, None, spec, k_includes_self=k_includes_self)
    return res


def write_manifest(manifest: dict, path) -> None:
    """``key=value`` lines in insertion order."""
    with Path(path).open("w") as fh:
        for key, val in manifest.items():
            fh.write(f"{key}={val}\n")


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line and "=" in line:
            key, val = line.split("=", 1)
            out[key] = val
    return out
