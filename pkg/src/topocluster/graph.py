"""Smooth k-NN graph construction and fuzzy union symmetrisation.

The pipeline is::

    knn_exact -> smooth_knn_calibrate (rho_i, sigma_i) -> directed_weights
              -> fuzzy_union -> FuzzyGraph

Neighbourhood size convention
-----------------------------
``k`` counts the query point itself, as UMAP's ``n_neighbors`` does: a point
gets ``k - 1`` true neighbours and the calibration target is ``log2(k)``.
Pass ``k_includes_self=False`` to use ``k`` true neighbours with the same
target instead.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .data import LabeledDataset

__all__ = [
    "DissimilarityMatrix",
    "NeighborLists",
    "DirectedKnnGraph",
    "FuzzyGraph",
    "pairwise_distances",
    "knn_exact",
    "smooth_knn_calibrate",
    "calibrate_all",
    "directed_weights",
    "fuzzy_union",
    "fuzzy_graph",
    "graph_to_dissimilarity",
    "write_edge_list",
    "n_true_neighbors",
]

SMOOTH_K_TOLERANCE = 1e-6
MIN_SIGMA_SCALE = 1e-3
MAX_SIGMA_SCALE = 1e3
SIGMA_FLOOR = 1e-12
EDGE_DROP = 1e-12

# rows per block when computing brute-force distances
_CHUNK = 2048


class DissimilarityMatrix:
    """Dense symmetric dissimilarity matrix with a zero diagonal."""

    def __init__(self, values, atol: float = 1e-9):
        d = np.array(values, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"dissimilarity matrix must be square, got shape {d.shape}")
        if d.shape[0] < 1:
            raise ValueError("dissimilarity matrix must be non-empty")
        if not np.all(np.isfinite(d)):
            raise ValueError("dissimilarity matrix contains non-finite values")
        if np.max(np.abs(d - d.T), initial=0.0) > atol:
            raise ValueError("dissimilarity matrix is not symmetric")
        if np.any(d < 0):
            raise ValueError("dissimilarities must be non-negative")
        if np.any(np.diag(d) != 0):
            raise ValueError("dissimilarity matrix must have a zero diagonal")
        d = 0.5 * (d + d.T)
        d.flags.writeable = False
        self.values = d

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    def __repr__(self):
        return f"DissimilarityMatrix(n_obs={self.n_obs})"


DataLike = Union[LabeledDataset, DissimilarityMatrix, np.ndarray]


def _as_points(data) -> np.ndarray:
    if isinstance(data, LabeledDataset):
        return data.points
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def n_obs_of(data: DataLike) -> int:
    if isinstance(data, DissimilarityMatrix):
        return data.n_obs
    return _as_points(data).shape[0]


def pairwise_distances(data: DataLike, rows=None) -> np.ndarray:
    """Euclidean distances between ``rows`` (default: all) and all points."""
    if isinstance(data, DissimilarityMatrix):
        return data.values if rows is None else data.values[rows]
    pts = _as_points(data)
    sub = pts if rows is None else pts[rows]
    return cdist(sub, pts)


def _distance_blocks(data: DataLike):
    n = n_obs_of(data)
    for start in range(0, n, _CHUNK):
        stop = min(n, start + _CHUNK)
        yield start, pairwise_distances(data, slice(start, stop))


class NeighborLists(NamedTuple):
    indices: np.ndarray
    distances: np.ndarray


def knn_exact(data: DataLike, n_neighbors: int) -> NeighborLists:
    """Brute-force nearest neighbours, excluding the query point itself.

    Rows are sorted by ascending distance; equal distances are ordered by
    ascending index.

    Parameters
    ----------
    data : LabeledDataset, array of shape (n_obs, p) or DissimilarityMatrix
    n_neighbors : int
        Number of other points to return per row, ``1 <= n_neighbors <= n_obs - 1``.

    Returns
    -------
    NeighborLists
        ``indices`` (int64) and ``distances`` (float64), both of shape
        (n_obs, n_neighbors).
    """
    n = n_obs_of(data)
    if not 1 <= n_neighbors <= n - 1:
        raise ValueError(f"n_neighbors must be in [1, {n - 1}], got {n_neighbors}")
    m = int(n_neighbors)
    indices = np.empty((n, m), dtype=np.int64)
    distances = np.empty((n, m), dtype=np.float64)
    for start, block in _distance_blocks(data):
        block = np.array(block, dtype=np.float64)
        rows = np.arange(block.shape[0])
        block[rows, start + rows] = np.inf
        # m-th smallest value per row; everything at or below it is a candidate
        kth = np.partition(block, m - 1, axis=1)[:, m - 1]
        for r in range(block.shape[0]):
            cand = np.flatnonzero(block[r] <= kth[r])
            order = np.argsort(block[r, cand], kind="stable")[:m]
            indices[start + r] = cand[order]
            distances[start + r] = block[r, cand[order]]
    return NeighborLists(indices, distances)


def _bracket(distances: np.ndarray):
    sigma_min = np.maximum(MIN_SIGMA_SCALE * distances.mean(axis=1), SIGMA_FLOOR)
    sigma_max = np.maximum(MAX_SIGMA_SCALE * distances.max(axis=1), sigma_min)
    return sigma_min, sigma_max


def _kernel_sum(excess: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return np.exp(-excess / sigma[:, None]).sum(axis=1)


def calibrate_all(distances: np.ndarray, k: float, n_iter: int = 64):
    """Vectorised rho/sigma calibration for every row of ``distances``.

    Returns ``(rho, sigma, clamped)``; ``clamped`` marks rows whose target
    ``log2(k)`` is unreachable inside the sigma bracket.
    """
    distances = np.atleast_2d(np.asarray(distances, dtype=np.float64))
    if distances.shape[1] < 1:
        raise ValueError("each point needs at least one neighbour distance")
    target = np.log2(k)
    masked = np.where(distances > 0, distances, np.inf)
    rho = masked.min(axis=1)
    rho[~np.isfinite(rho)] = 0.0
    excess = np.maximum(0.0, distances - rho[:, None])

    lo, hi = _bracket(distances)
    sigma = np.empty_like(rho)
    f_lo = _kernel_sum(excess, lo) - target
    f_hi = _kernel_sum(excess, hi) - target
    low_clamp = f_lo >= 0
    high_clamp = f_hi <= 0
    sigma[low_clamp] = lo[low_clamp]
    sigma[high_clamp & ~low_clamp] = hi[high_clamp & ~low_clamp]
    clamped = low_clamp | high_clamp

    active = np.flatnonzero(~clamped)
    a, b = lo[active], hi[active]
    ex = excess[active]
    mid = 0.5 * (a + b)
    done = np.zeros(active.size, dtype=bool)
    for _ in range(n_iter):
        if done.all():
            break
        resid = _kernel_sum(ex, mid) - target
        done |= np.abs(resid) < SMOOTH_K_TOLERANCE
        upd = ~done
        # kernel sum is non-decreasing in sigma
        too_big = upd & (resid > 0)
        too_small = upd & (resid < 0)
        b = np.where(too_big, mid, b)
        a = np.where(too_small, mid, a)
        mid = np.where(upd, 0.5 * (a + b), mid)
    sigma[active] = mid
    return rho, sigma, clamped


def smooth_knn_calibrate(distances, k: float, n_iter: int = 64):
    """Local scale ``(rho, sigma)`` for one point.

    ``rho`` is the smallest strictly positive neighbour distance (0 if there
    is none). ``sigma`` solves

        sum_j exp(-max(0, d_j - rho) / sigma) = log2(k)

    by bisection inside ``[1e-3 * mean(d), 1e3 * max(d)]`` and is clamped to
    the nearer bracket end when the target cannot be reached.
    """
    d = np.asarray(distances, dtype=np.float64).reshape(1, -1)
    rho, sigma, _ = calibrate_all(d, k, n_iter)
    return float(rho[0]), float(sigma[0])


@dataclass(frozen=True)
class DirectedKnnGraph:
    k: int
    indices: np.ndarray
    distances: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray
    clamped: np.ndarray

    @property
    def n_obs(self) -> int:
        return self.indices.shape[0]

    def adjacency(self) -> sp.csr_matrix:
        """Directed weighted adjacency ``A`` with ``A[i, j] = w(i -> j)``."""
        n, m = self.indices.shape
        rows = np.repeat(np.arange(n), m)
        return sp.csr_matrix(
            (self.weights.ravel(), (rows, self.indices.ravel())), shape=(n, n)
        )


def directed_weights(neighbors: NeighborLists, rho, sigma, k: int = 0, clamped=None) -> DirectedKnnGraph:
    """Edge weights ``exp(-max(0, d - rho_i) / sigma_i)`` for every neighbour list."""
    idx, dist = neighbors
    rho = np.asarray(rho, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    w = np.exp(-np.maximum(0.0, dist - rho[:, None]) / sigma[:, None])
    if clamped is None:
        clamped = np.zeros(len(rho), dtype=bool)
    return DirectedKnnGraph(k, idx, dist, rho, sigma, w, np.asarray(clamped, dtype=bool))


class FuzzyGraph:
    """Symmetric sparse affinity graph with entries in (0, 1].

    ``matrix`` stores both (i, j) and (j, i); there are no diagonal entries.
    """

    def __init__(self, matrix, drop_below: float = EDGE_DROP):
        m = sp.csr_matrix(matrix, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise ValueError("fuzzy graph matrix must be square")
        m = m.tolil()
        m.setdiag(0.0)
        m = m.tocsr()
        m.data[m.data < drop_below] = 0.0
        m.eliminate_zeros()
        if m.nnz and (m.data.max() > 1.0 + 1e-12 or m.data.min() <= 0):
            raise ValueError("fuzzy graph weights must lie in (0, 1]")
        asym = abs(m - m.T).max() if m.nnz else 0.0
        if asym > 1e-12:
            raise ValueError("fuzzy graph matrix must be symmetric")
        m.sort_indices()
        m.data.flags.writeable = False
        self.matrix = m

    @property
    def n_obs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_edges(self) -> int:
        return self.matrix.nnz // 2

    def weight(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])

    def edges(self):
        """Canonical ``(i, j, v)`` arrays with ``i < j``."""
        coo = sp.triu(self.matrix, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64), coo.data[order]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __repr__(self):
        return f"FuzzyGraph(n_obs={self.n_obs}, n_edges={self.n_edges})"


def fuzzy_union(directed: DirectedKnnGraph) -> FuzzyGraph:
    """Probabilistic-sum symmetrisation ``B = A + A^T - A * A^T``."""
    a = directed.adjacency()
    at = a.T.tocsr()
    b = a + at - a.multiply(at)
    # a + b - ab can round to just below 1 when either side is exactly 1
    one = (a.maximum(at) == 1.0).astype(np.float64)
    b = b - b.multiply(one) + one
    return FuzzyGraph(b)


def n_true_neighbors(k: int, k_includes_self: bool = True) -> int:
    return k - 1 if k_includes_self else k


def fuzzy_graph(data: DataLike, k: int, k_includes_self: bool = True, return_directed: bool = False):
    """Build the fuzzy k-NN graph of a dataset or a precomputed dissimilarity matrix.

    >>> from topocluster.toy import toy_distance_matrix
    >>> g = fuzzy_graph(toy_distance_matrix(), k=2)
    >>> g.n_edges
    4
    """
    n = n_obs_of(data)
    m = n_true_neighbors(k, k_includes_self)
    if m < 1:
        raise ValueError(f"k={k} leaves no neighbours (k_includes_self={k_includes_self})")
    if m > n - 1:
        raise ValueError(f"k={k} too large for {n} observations")
    nb = knn_exact(data, m)
    rho, sigma, clamped = calibrate_all(nb.distances, k)
    directed = directed_weights(nb, rho, sigma, k=k, clamped=clamped)
    g = fuzzy_union(directed)
    return (g, directed) if return_directed else g


def graph_to_dissimilarity(graph: FuzzyGraph) -> DissimilarityMatrix:
    """``d_ij = 1 - v_ij`` on edges, 1 for absent pairs, 0 on the diagonal."""
    d = 1.0 - graph.to_dense()
    np.fill_diagonal(d, 0.0)
    return DissimilarityMatrix(d)


def write_edge_list(graph: FuzzyGraph, path) -> None:
    i, j, v = graph.edges()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "v"])
        for a, b, c in zip(i, j, v):
            w.writerow([int(a), int(b), repr(float(c))])
