"""Cross-entropy graph layout: embed a fuzzy graph in d dimensions.

Embedding-space affinity is ``w = 1 / (1 + a * ||y_i - y_j||^(2b))`` and the
layout minimises the fuzzy-set cross entropy between the graph weights ``v``
and ``w`` with edge-sampled SGD plus negative sampling.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh
from scipy.special import xlogy

from .graph import FuzzyGraph

__all__ = [
    "DEFAULT_A",
    "DEFAULT_B",
    "LayoutConfig",
    "Embedding",
    "low_dim_similarity",
    "cross_entropy",
    "ce_edge_gradient",
    "spectral_init",
    "random_init",
    "optimize_layout",
    "default_n_epochs",
    "make_epochs_per_sample",
    "write_embedding_csv",
]

DEFAULT_A = 1.929
DEFAULT_B = 0.7915

W_CLIP = 1e-12
REPULSION_FLOOR = 1e-3
MAX_COORD = 10.0
INIT_JITTER = 1e-4
_DENSE_EIG_LIMIT = 1500


INIT_MODES = ("spectral", "random")


@dataclass(frozen=True)
class LayoutConfig:
    """Layout hyper-parameters.

    ``min_dist`` is recorded for bookkeeping only; ``a`` and ``b`` are used
    as given. ``n_epochs=None`` picks 200 for up to 10 000 points and 500
    above that.
    """

    d: int = 2
    a: float = DEFAULT_A
    b: float = DEFAULT_B
    n_epochs: Optional[int] = None
    negative_samples: int = 5
    initial_lr: float = 1.0
    grad_clip: float = 4.0
    min_dist: float = 0.1
    init: str = "spectral"
    seed: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")
        if self.n_epochs is not None and self.n_epochs < 1:
            raise ValueError("n_epochs must be >= 1")
        if self.negative_samples < 0:
            raise ValueError("negative_samples must be >= 0")
        if self.initial_lr <= 0 or self.grad_clip <= 0:
            raise ValueError("initial_lr and grad_clip must be positive")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init {self.init!r}")

    def with_seed(self, seed: int) -> "LayoutConfig":
        return replace(self, seed=seed)


@dataclass
class Embedding:
    coords: np.ndarray
    config: LayoutConfig
    loss: Optional[float] = None
    initial_loss: Optional[float] = None
    init_failed: bool = False
    n_epochs: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_obs(self) -> int:
        return self.coords.shape[0]


def default_n_epochs(n_obs: int) -> int:
    return 200 if n_obs <= 10_000 else 500


def low_dim_similarity(y_i, y_j, a: float = DEFAULT_A, b: float = DEFAULT_B) -> float:
    """``(1 + a * ||y_i - y_j||^(2b))^-1``."""
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    sq = float(diff @ diff)
    return 1.0 / (1.0 + a * sq**b)


def _pair_terms(v, w):
    w = np.clip(w, W_CLIP, 1.0 - W_CLIP)
    return xlogy(v, v) - xlogy(v, w) + xlogy(1.0 - v, 1.0 - v) - xlogy(1.0 - v, 1.0 - w)


def cross_entropy(graph: FuzzyGraph, coords, a: float = DEFAULT_A, b: float = DEFAULT_B,
                  chunk: int = 1024) -> float:
    """Fuzzy-set cross entropy summed over all ordered pairs ``i != j``.

    Pairs without a graph edge have ``v = 0``. ``w`` is clipped to
    ``[1e-12, 1 - 1e-12]``; terms with ``v = 0`` or ``v = 1`` use
    ``0 * log 0 = 0``. Cost is O(n_obs^2), evaluated in row blocks.
    """
    y = coords.coords if isinstance(coords, Embedding) else np.asarray(coords, dtype=np.float64)
    if y.shape[0] != graph.n_obs:
        raise ValueError(f"embedding has {y.shape[0]} rows, graph has {graph.n_obs} vertices")
    n = y.shape[0]
    sqn = np.einsum("ij,ij->i", y, y)
    total = 0.0
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        sq = sqn[start:stop, None] + sqn[None, :] - 2.0 * y[start:stop] @ y.T
        np.maximum(sq, 0.0, out=sq)
        w = 1.0 / (1.0 + a * sq**b)
        v = graph.matrix[start:stop].toarray()
        t = _pair_terms(v, w)
        rows = np.arange(stop - start)
        t[rows, start + rows] = 0.0
        total += float(t.sum())
    return total


def ce_edge_gradient(y_i, y_j, v: float, a: float = DEFAULT_A, b: float = DEFAULT_B):
    """Gradient of one pairwise cross-entropy term w.r.t. ``y_i`` and ``y_j``.

    With ``s = ||y_i - y_j||^2`` the term's derivative is

        dC/ds = v*a*b*s^(b-1) / (1 + a*s^b)  -  (1-v)*b / (s * (1 + a*s^b))

    (attraction, then repulsion) and ``dC/dy_i = 2 (y_i - y_j) dC/ds``. The
    gradient is taken as zero at coincident points.
    """
    yi = np.asarray(y_i, dtype=np.float64)
    yj = np.asarray(y_j, dtype=np.float64)
    diff = yi - yj
    s = float(diff @ diff)
    if s == 0.0:
        z = np.zeros_like(diff)
        return z, z.copy()
    denom = 1.0 + a * s**b
    dcds = v * a * b * s ** (b - 1.0) / denom - (1.0 - v) * b / (s * denom)
    g = 2.0 * dcds * diff
    return g, -g


def random_init(n_obs: int, d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-MAX_COORD, MAX_COORD, (n_obs, d))


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _component_spectral(w: sp.csr_matrix, d: int, rng) -> np.ndarray:
    """Eigenvectors of the normalised Laplacian with the d smallest nonzero eigenvalues."""
    m = w.shape[0]
    if m == 1:
        return rng.uniform(-1.0, 1.0, (1, d))
    deg = np.asarray(w.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    dm = sp.diags(inv_sqrt)
    lap = sp.identity(m, format="csr") - dm @ w @ dm
    n_vec = min(d, m - 1)
    if m <= _DENSE_EIG_LIMIT:
        vals, vecs = np.linalg.eigh(lap.toarray())
        vecs = vecs[:, 1 : n_vec + 1]
    else:
        k = n_vec + 1
        vals, vecs = eigsh(
            lap, k=k, which="SM", ncv=max(2 * k + 1, int(np.sqrt(m))),
            tol=1e-4, v0=np.ones(m), maxiter=m * 5,
        )
        order = np.argsort(vals)
        vecs = vecs[:, order[1:k]]
    vecs = _fix_signs(vecs)
    if n_vec < d:
        vecs = np.hstack([vecs, rng.uniform(-1.0, 1.0, (m, d - n_vec))])
    return vecs


def spectral_init(graph: FuzzyGraph, d: int, seed: int = 0):
    """Spectral layout, one connected component at a time.

    Each component's block is scaled to max-abs 1 and shifted along the
    first axis by ``4 * component_index`` (twice its coordinate range), so
    components occupy disjoint intervals there. The whole layout is then
    scaled to max-abs 10 and jittered with N(0, 1e-4^2) noise.

    Returns ``(coords, failed)``; ``failed`` is True when an eigen-solve did
    not converge and a uniform random layout was substituted.
    """
    n = graph.n_obs
    rng = np.random.default_rng(seed)
    n_comp, comp = connected_components(graph.matrix, directed=False)
    coords = np.zeros((n, d))
    try:
        for c in range(n_comp):
            idx = np.flatnonzero(comp == c)
            block = _component_spectral(graph.matrix[idx][:, idx].tocsr(), d, rng)
            scale = np.abs(block).max()
            if scale > 0:
                block = block / scale
            block[:, 0] += 4.0 * c
            coords[idx] = block
    except (ArpackNoConvergence, ArpackError, np.linalg.LinAlgError) as exc:
        warnings.warn(f"spectral initialisation failed ({exc}); using random init")
        return random_init(n, d, seed), True
    if n_comp > 1:
        # recentre so the max-abs rescale keeps all components in view
        coords[:, 0] -= 0.5 * (coords[:, 0].max() + coords[:, 0].min())
    top = np.abs(coords).max()
    if top > 0:
        coords *= MAX_COORD / top
    coords += rng.normal(scale=INIT_JITTER, size=coords.shape)
    return coords, False


def make_epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    """Epochs between updates of each edge: ``max(w) / w``; -1 never samples."""
    result = -np.ones(weights.shape[0], dtype=np.float64)
    n_samples = n_epochs * (weights / weights.max())
    pos = n_samples > 0
    result[pos] = float(n_epochs) / n_samples[pos]
    return result


@numba.njit(cache=True)
def _clip(val, lim):
    if val > lim:
        return lim
    if val < -lim:
        return -lim
    return val


@numba.njit(cache=True)
def _sgd_sequential(head, tail, epochs_per_sample, y, n_epochs, a, b, n_neg, lr0, lim, seed):
    np.random.seed(seed)
    n = y.shape[0]
    dim = y.shape[1]
    n_edges = head.shape[0]
    next_sample = epochs_per_sample.copy()
    for epoch in range(n_epochs):
        alpha = lr0 * (1.0 - epoch / n_epochs)
        for e in range(n_edges):
            if next_sample[e] > epoch + 1:
                continue
            j = head[e]
            k = tail[e]
            sq = 0.0
            for c in range(dim):
                diff = y[j, c] - y[k, c]
                sq += diff * diff
            if sq > 0.0:
                coeff = -2.0 * a * b * sq ** (b - 1.0) / (a * sq**b + 1.0)
            else:
                coeff = 0.0
            for c in range(dim):
                g = _clip(coeff * (y[j, c] - y[k, c]), lim)
                y[j, c] += g * alpha
                y[k, c] -= g * alpha
            next_sample[e] += epochs_per_sample[e]

            for _ in range(n_neg):
                k = np.random.randint(n)
                if k == j:
                    continue
                sq = 0.0
                for c in range(dim):
                    diff = y[j, c] - y[k, c]
                    sq += diff * diff
                coeff = 2.0 * b / ((REPULSION_FLOOR + sq) * (a * sq**b + 1.0))
                for c in range(dim):
                    g = _clip(coeff * (y[j, c] - y[k, c]), lim)
                    y[j, c] += g * alpha
    return y


@numba.njit(parallel=True, cache=True)
def _sgd_concurrent(head, tail, epochs_per_sample, y, n_epochs, a, b, n_neg, lr0, lim, seed):
    # lock-free: threads race on coordinates (last write wins)
    np.random.seed(seed)
    n = y.shape[0]
    dim = y.shape[1]
    n_edges = head.shape[0]
    next_sample = epochs_per_sample.copy()
    for epoch in range(n_epochs):
        alpha = lr0 * (1.0 - epoch / n_epochs)
        for e in numba.prange(n_edges):
            if next_sample[e] > epoch + 1:
                continue
            j = head[e]
            k = tail[e]
            sq = 0.0
            for c in range(dim):
                diff = y[j, c] - y[k, c]
                sq += diff * diff
            coeff = 0.0
            if sq > 0.0:
                coeff = -2.0 * a * b * sq ** (b - 1.0) / (a * sq**b + 1.0)
            for c in range(dim):
                g = _clip(coeff * (y[j, c] - y[k, c]), lim)
                y[j, c] += g * alpha
                y[k, c] -= g * alpha
            next_sample[e] += epochs_per_sample[e]
            for _ in range(n_neg):
                k2 = np.random.randint(n)
                if k2 == j:
                    continue
                sq2 = 0.0
                for c in range(dim):
                    diff = y[j, c] - y[k2, c]
                    sq2 += diff * diff
                coeff2 = 2.0 * b / ((REPULSION_FLOOR + sq2) * (a * sq2**b + 1.0))
                for c in range(dim):
                    y[j, c] += _clip(coeff2 * (y[j, c] - y[k2, c]), lim) * alpha
    return y


def optimize_layout(graph: FuzzyGraph, config: Optional[LayoutConfig] = None,
                    init_coords=None, compute_loss: Optional[bool] = None) -> Embedding:
    """Embed ``graph`` by edge-sampled SGD on the cross entropy.

    Every stored direction (i, j) of an edge with weight ``v`` is updated
    once every ``max(v) / v`` epochs: both endpoints move together, then
    ``negative_samples`` uniformly drawn points push the head away. Gradient
    components are clipped to ``+-grad_clip`` and the learning rate decays
    linearly from ``initial_lr`` towards 0.

    In deterministic mode (the default) updates run in one sequential
    stream seeded from ``config.seed``, so equal seeds give bit-identical
    coordinates. ``compute_loss`` defaults to True for up to 5000 points.
    """
    config = config or LayoutConfig()
    if graph.n_edges == 0:
        raise ValueError("cannot lay out a graph without edges")
    n = graph.n_obs
    n_epochs = config.n_epochs or default_n_epochs(n)
    if compute_loss is None:
        compute_loss = n <= 5000

    failed = False
    if init_coords is not None:
        y = np.array(init_coords, dtype=np.float64)
        if y.shape != (n, config.d):
            raise ValueError(f"init_coords must have shape {(n, config.d)}")
    elif config.init == "spectral":
        y, failed = spectral_init(graph, config.d, config.seed)
    else:
        y = random_init(n, config.d, config.seed)
    y = np.ascontiguousarray(y, dtype=np.float64)

    initial_loss = cross_entropy(graph, y, config.a, config.b) if compute_loss else None

    coo = graph.matrix.tocoo()
    weights = coo.data
    eps = make_epochs_per_sample(weights, n_epochs)
    keep = (eps > 0) & (eps <= n_epochs)
    head = coo.row[keep].astype(np.int64)
    tail = coo.col[keep].astype(np.int64)
    eps = eps[keep]

    kernel = _sgd_sequential if config.deterministic else _sgd_concurrent
    # numba's generator takes a 32-bit seed
    seed = int(config.seed) % (2**32)
    y = kernel(head, tail, eps, y, n_epochs, float(config.a), float(config.b),
               int(config.negative_samples), float(config.initial_lr),
               float(config.grad_clip), seed)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("layout produced non-finite coordinates")
    loss = cross_entropy(graph, y, config.a, config.b) if compute_loss else None
    return Embedding(y, config, loss=loss, initial_loss=initial_loss,
                     init_failed=failed, n_epochs=n_epochs)


def write_embedding_csv(embedding: Embedding, path, labels=None) -> None:
    y = embedding.coords if isinstance(embedding, Embedding) else np.asarray(embedding)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = [f"y{c}" for c in range(y.shape[1])]
        w.writerow(head + (["label"] if labels is not None else []))
        for i in range(y.shape[0]):
            row = [repr(float(v)) for v in y[i]]
            if labels is not None:
                row.append(str(int(labels[i])))
            w.writerow(row)
