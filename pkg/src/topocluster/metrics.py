"""Partition agreement: Adjusted Rand Index and max-normalised NMI."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import NOISE, ClusterLabeling

__all__ = [
    "NOISE_POLICIES",
    "ContingencyTable",
    "contingency",
    "ari",
    "nmi_max",
    "ari_score",
    "nmi_score",
]

NOISE_POLICIES = ("noise_as_cluster", "exclude")


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def _as_labels(x) -> np.ndarray:
    if isinstance(x, ClusterLabeling):
        x = x.assignments
    return np.asarray(x).ravel()


def contingency(labels_a, labels_b, noise_policy: str = "noise_as_cluster") -> ContingencyTable:
    """Cross-tabulate two labelings.

    ``noise_as_cluster`` treats every ``NOISE`` (-1) point as one extra
    cluster; ``exclude`` drops points that are noise in either labeling.
    Rows follow the sorted distinct values of ``labels_a``, columns those of
    ``labels_b``.
    """
    a = _as_labels(labels_a)
    b = _as_labels(labels_b)
    if a.shape != b.shape:
        raise ValueError(f"labelings differ in length: {a.size} vs {b.size}")
    if noise_policy == "exclude":
        keep = (a != NOISE) & (b != NOISE)
        a, b = a[keep], b[keep]
    elif noise_policy != "noise_as_cluster":
        raise ValueError(f"unknown noise policy {noise_policy!r}")
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    counts = np.zeros((ua.size, ub.size), dtype=np.int64)
    np.add.at(counts, (ia, ib), 1)
    return ContingencyTable(counts)


def _pairs(x) -> int:
    x = int(x)
    return x * (x - 1) // 2


def ari(table: ContingencyTable) -> float:
    """Hubert-Arabie Adjusted Rand Index.

    Pair counts are accumulated as Python integers, so the result is exact
    up to the final division. When the expected and maximum index coincide
    the index is 1 for identical partitions and 0 otherwise.
    """
    n = table.n
    if n < 2:
        raise ValueError("ARI needs at least two points")
    index = sum(_pairs(c) for c in table.counts.ravel() if c > 1)
    sum_a = sum(_pairs(c) for c in table.row_sums)
    sum_b = sum(_pairs(c) for c in table.col_sums)
    total = _pairs(n)
    num = 2 * (index * total - sum_a * sum_b)
    den = (sum_a + sum_b) * total - 2 * sum_a * sum_b
    if den == 0:
        return 1.0 if _identical(table) else 0.0
    return num / den


def _identical(table: ContingencyTable) -> bool:
    nz = table.counts > 0
    return bool(np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1))


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi_max(table: ContingencyTable) -> float:
    """``I(U; V) / max(H(U), H(V))`` with natural logs; NaN if both entropies are 0."""
    n = table.n
    if n < 1:
        raise ValueError("NMI needs at least one point")
    hu = _entropy(table.row_sums, n)
    hv = _entropy(table.col_sums, n)
    denom = max(hu, hv)
    if denom == 0.0:
        return math.nan
    c = table.counts
    nz = c > 0
    outer = np.outer(table.row_sums, table.col_sums)[nz]
    pij = c[nz] / n
    mi = float((pij * (np.log(c[nz]) + math.log(n) - np.log(outer))).sum())
    return min(max(mi / denom, 0.0), 1.0)


def ari_score(labels_a, labels_b, noise_policy: str = "noise_as_cluster") -> float:
    return ari(contingency(labels_a, labels_b, noise_policy))


def nmi_score(labels_a, labels_b, noise_policy: str = "noise_as_cluster") -> float:
    return nmi_max(contingency(labels_a, labels_b, noise_policy))
