"""DBSCAN over point sets, embeddings or precomputed dissimilarities."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .graph import DissimilarityMatrix, _as_points, n_obs_of, pairwise_distances
from .layout import Embedding

__all__ = [
    "NOISE",
    "DbscanParams",
    "ClusterLabeling",
    "NeighborhoodIndex",
    "dbscan",
    "eps_neighborhood",
    "write_labeling_csv",
    "read_labeling_csv",
]

NOISE = -1

# above this many points distances are recomputed per query instead of cached
DENSE_CACHE_LIMIT = 6000
_CHUNK = 2048


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int = 5
    self_in_neighborhood: bool = False

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"eps must be non-negative, got {self.eps}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass
class ClusterLabeling:
    """Cluster id per point (``NOISE`` = -1 for noise) and core-point flags."""

    assignments: np.ndarray
    core_flags: np.ndarray

    @property
    def n_clusters(self) -> int:
        a = self.assignments
        return int(a.max()) + 1 if a.size and a.max() >= 0 else 0

    @property
    def n_noise(self) -> int:
        return int(np.count_nonzero(self.assignments == NOISE))

    def clusters(self):
        return [np.flatnonzero(self.assignments == c) for c in range(self.n_clusters)]


class NeighborhoodIndex:
    """Brute-force radius queries over a fixed dataset.

    Pairwise distances are cached for up to ``DENSE_CACHE_LIMIT`` points so
    repeated queries at different ``eps`` (sweeps) only pay the distance
    computation once.
    """

    def __init__(self, data, cache: Optional[bool] = None):
        if isinstance(data, NeighborhoodIndex):
            data = data.data
        if isinstance(data, Embedding):
            data = data.coords
        if not isinstance(data, DissimilarityMatrix):
            data = _as_points(data)
        self.data = data
        self.n_obs = n_obs_of(data)
        if cache is None:
            cache = self.n_obs <= DENSE_CACHE_LIMIT
        self._dist = pairwise_distances(data) if cache else None

    def _blocks(self):
        if self._dist is not None:
            yield 0, self._dist
            return
        for start in range(0, self.n_obs, _CHUNK):
            stop = min(self.n_obs, start + _CHUNK)
            yield start, pairwise_distances(self.data, slice(start, stop))

    def adjacency(self, eps: float) -> sp.csr_matrix:
        """Boolean CSR matrix of pairs ``i != j`` with ``d(i, j) <= eps``."""
        parts = []
        for start, block in self._blocks():
            hit = block <= eps
            rows = np.arange(block.shape[0])
            hit[rows, start + rows] = False
            parts.append(sp.csr_matrix(hit))
        adj = parts[0] if len(parts) == 1 else sp.vstack(parts, format="csr")
        adj.sort_indices()
        return adj

    def query(self, i: int, eps: float) -> np.ndarray:
        row = pairwise_distances(self.data, [i])[0] if self._dist is None else self._dist[i]
        hits = np.flatnonzero(row <= eps)
        return hits[hits != i]


def eps_neighborhood(i: int, eps: float, data, self_in_neighborhood: bool = False) -> np.ndarray:
    """Indices ``j`` with ``d(x_i, x_j) <= eps``, sorted ascending.

    The query point is left out unless ``self_in_neighborhood`` is set.
    """
    index = data if isinstance(data, NeighborhoodIndex) else NeighborhoodIndex(data, cache=False)
    if not 0 <= i < index.n_obs:
        raise IndexError(f"point index {i} out of range for {index.n_obs} points")
    hits = index.query(i, eps)
    if self_in_neighborhood:
        hits = np.sort(np.append(hits, i))
    return hits


def dbscan(data, eps: Union[float, DbscanParams], min_pts: int = 5,
           self_in_neighborhood: bool = False) -> ClusterLabeling:
    """Density-based clustering.

    A point is core when its eps-neighbourhood holds at least ``min_pts``
    points (the point itself counts only with ``self_in_neighborhood``).
    Clusters are grown from unvisited core points in ascending index order;
    a border point reachable from several clusters joins the one grown
    first. Cluster ids are finally renumbered by smallest member index.

    Parameters
    ----------
    data : array (n_obs, p), LabeledDataset, Embedding, DissimilarityMatrix or NeighborhoodIndex
    eps : float or DbscanParams
    min_pts : int
    self_in_neighborhood : bool

    Returns
    -------
    ClusterLabeling
    """
    if isinstance(eps, DbscanParams):
        params = eps
    else:
        params = DbscanParams(float(eps), int(min_pts), bool(self_in_neighborhood))
    index = data if isinstance(data, NeighborhoodIndex) else NeighborhoodIndex(data)
    adj = index.adjacency(params.eps)
    return _expand(adj, params)


def _expand(adj: sp.csr_matrix, params: DbscanParams) -> ClusterLabeling:
    n = adj.shape[0]
    counts = np.diff(adj.indptr) + (1 if params.self_in_neighborhood else 0)
    core = counts >= params.min_pts
    labels = np.full(n, NOISE, dtype=np.int64)
    indptr, indices = adj.indptr, adj.indices

    cluster = 0
    for seed in np.flatnonzero(core):
        if labels[seed] != NOISE:
            continue
        labels[seed] = cluster
        frontier = np.array([seed])
        while frontier.size:
            nbrs = np.concatenate([indices[indptr[p]:indptr[p + 1]] for p in frontier])
            nbrs = np.unique(nbrs)
            new = nbrs[labels[nbrs] == NOISE]
            labels[new] = cluster
            # only core points propagate (direct density-reachability)
            frontier = new[core[new]]
        cluster += 1

    # renumber by smallest member index
    if cluster:
        first = np.full(cluster, n, dtype=np.int64)
        members = labels >= 0
        np.minimum.at(first, labels[members], np.flatnonzero(members))
        remap = np.empty(cluster, dtype=np.int64)
        remap[np.argsort(first, kind="stable")] = np.arange(cluster)
        labels[members] = remap[labels[members]]
    return ClusterLabeling(labels, core)


def write_labeling_csv(labeling: ClusterLabeling, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "cluster", "is_core"])
        for i, (c, k) in enumerate(zip(labeling.assignments, labeling.core_flags)):
            w.writerow([i, int(c), int(bool(k))])


def read_labeling_csv(path) -> ClusterLabeling:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assign = np.array([int(r["cluster"]) for r in rows], dtype=np.int64)
    core = np.array([r.get("is_core", "0") not in ("0", "", "False") for r in rows])
    return ClusterLabeling(assign, core)
