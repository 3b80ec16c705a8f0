"""Synthetic dataset generators and CSV ingestion.

All generators are pure functions of their arguments and a seed. Random
streams come from :func:`numpy.random.default_rng` (PCG64), so a given seed
maps to the same data for a fixed numpy release.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "LabeledDataset",
    "GaussianCluster",
    "GaussianMixtureSpec",
    "DataFormatError",
    "generate_gaussian_mixture",
    "generate_nested_spheres",
    "generate_planar_toy",
    "load_csv",
    "save_csv",
    "standardize",
    "setting_spec",
    "SETTINGS",
    "OUTLIER_LABEL",
    "BRIDGE_LABEL",
    "NOISE_POINT_LABEL",
]

# labels used by the planar toy datasets for the non-cluster point groups
BRIDGE_LABEL = 2
OUTLIER_LABEL = 2
NOISE_POINT_LABEL = 3


class DataFormatError(ValueError):
    """Raised when an input file cannot be parsed into a dataset."""


@dataclass
class LabeledDataset:
    """Observation matrix (n_obs x p) with optional integer class labels."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "dataset"
    label_names: Optional[list] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a non-empty 2-d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite values")
        self.points = pts
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (pts.shape[0],):
                raise ValueError(
                    f"labels must have length {pts.shape[0]}, got shape {lab.shape}"
                )
            self.labels = lab

    @property
    def n_obs(self) -> int:
        return self.points.shape[0]

    @property
    def n_features(self) -> int:
        return self.points.shape[1]


@dataclass
class GaussianCluster:
    mean: Union[float, Sequence[float]]
    sd: float
    count: int


@dataclass
class GaussianMixtureSpec:
    """Spherical Gaussian clusters plus optional uniform irrelevant features.

    A scalar ``mean`` is broadcast to every coordinate.
    """

    dim: int
    clusters: list
    noise_features: int = 0
    seed: int = 0
    name: str = "gaussian_mixture"

    def __post_init__(self):
        self.clusters = [
            c if isinstance(c, GaussianCluster) else GaussianCluster(*c) for c in self.clusters
        ]


def generate_gaussian_mixture(spec: GaussianMixtureSpec) -> LabeledDataset:
    """Sample each cluster with independent per-coordinate normal draws.

    Cluster ``i`` contributes ``count`` rows labelled ``i``. When
    ``noise_features > 0`` that many extra columns drawn from U[0, 1] are
    appended; they carry no cluster information.
    """
    if spec.dim < 1:
        raise ValueError("dim must be >= 1")
    if not spec.clusters:
        raise ValueError("at least one cluster is required")
    if spec.noise_features < 0:
        raise ValueError("noise_features must be non-negative")
    total = 0
    for c in spec.clusters:
        if c.sd < 0:
            raise ValueError(f"cluster standard deviation must be >= 0, got {c.sd}")
        if c.count < 0:
            raise ValueError(f"cluster count must be >= 0, got {c.count}")
        total += c.count
    if total < 1:
        raise ValueError("total point count must be >= 1")

    rng = np.random.default_rng(spec.seed)
    blocks, labels = [], []
    for i, c in enumerate(spec.clusters):
        mean = np.broadcast_to(np.asarray(c.mean, dtype=np.float64), (spec.dim,))
        blocks.append(mean + c.sd * rng.standard_normal((c.count, spec.dim)))
        labels.append(np.full(c.count, i, dtype=np.int64))
    points = np.vstack(blocks)
    if spec.noise_features:
        points = np.hstack([points, rng.uniform(0.0, 1.0, (total, spec.noise_features))])
    return LabeledDataset(points, np.concatenate(labels), name=spec.name)


# Table-1 style settings: (relevant dim, means, sds, irrelevant uniform features)
SETTINGS = {
    "E100": (100, (0.0, 0.5, 1.0), (1.0, 1.0, 1.0), 0),
    "E1000": (1000, (0.0, 0.5, 1.0), (1.0, 1.0, 1.0), 0),
    "U3": (3, (0.0, 3.0, 7.0), (0.1, 1.0, 3.0), 0),
    "U1003": (3, (0.0, 3.0, 7.0), (0.1, 1.0, 3.0), 1000),
}


def setting_spec(name: str, per_cluster: int = 500, seed: int = 0) -> GaussianMixtureSpec:
    """Return the mixture spec of a named benchmark setting (E100, E1000, U3, U1003)."""
    try:
        dim, means, sds, noise = SETTINGS[name]
    except KeyError:
        raise ValueError(f"unknown setting {name!r}; choose from {sorted(SETTINGS)}") from None
    clusters = [GaussianCluster(m, s, per_cluster) for m, s in zip(means, sds)]
    return GaussianMixtureSpec(dim, clusters, noise_features=noise, seed=seed, name=name)


def generate_nested_spheres(
    radii: Sequence[float],
    counts: Sequence[int],
    jitter_sd: float = 0.0,
    seed: int = 0,
) -> LabeledDataset:
    """Points uniform on concentric 2-spheres in R^3, one label per sphere.

    Directions are normalised standard-normal vectors; isotropic Gaussian
    jitter with standard deviation ``jitter_sd`` is added afterwards.
    """
    radii = [float(r) for r in radii]
    counts = [int(c) for c in counts]
    if len(radii) != len(counts):
        raise ValueError("radii and counts must have the same length")
    if not radii:
        raise ValueError("at least one sphere is required")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    if jitter_sd < 0:
        raise ValueError("jitter_sd must be non-negative")

    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for i, (r, n) in enumerate(zip(radii, counts)):
        g = rng.standard_normal((n, 3))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        # a zero draw has probability zero, but guard anyway
        norms[norms == 0] = 1.0
        pts = r * g / norms
        if jitter_sd > 0:
            pts = pts + jitter_sd * rng.standard_normal((n, 3))
        blocks.append(pts)
        labels.append(np.full(n, i, dtype=np.int64))
    return LabeledDataset(np.vstack(blocks), np.concatenate(labels), name="nested_spheres")


_PLANAR_DEFAULTS = {
    "overlapping": dict(means=((0.0, 2.0), (2.0, 2.0)), sd=1.0, count=500),
    "bridged": dict(
        means=((0.0, 0.0), (6.0, 0.0)), sd=1.0, count=500, bridge_points=20, bridge_sd=0.15
    ),
    "outliers": dict(
        means=((0.0, 0.0), (6.0, 0.0)),
        sd=1.0,
        count=250,
        outliers=((-6.0, 5.0), (-7.0, -4.0)),
    ),
    "outliers_with_noise": dict(
        means=((0.0, 0.0), (6.0, 0.0)),
        sd=1.0,
        count=250,
        outliers=((-6.0, 5.0), (-7.0, -4.0)),
        noise_points=100,
        noise_box=((-8.0, -6.0), (12.0, 6.0)),
    ),
}


def generate_planar_toy(kind: str, params: Optional[dict] = None, seed: int = 0) -> LabeledDataset:
    """Two-dimensional toy datasets with two Gaussian blobs and extras.

    kind
        ``overlapping``: two unit-covariance blobs, means (0, 2) and (2, 2).
        ``bridged``: two blobs joined by a straight line of ``bridge_points``
        points running between the means (label ``BRIDGE_LABEL``).
        ``outliers``: two blobs plus the fixed ``outliers`` coordinates
        (label ``OUTLIER_LABEL``).
        ``outliers_with_noise``: as ``outliers`` plus ``noise_points``
        uniform in ``noise_box`` (label ``NOISE_POINT_LABEL``).

    ``params`` overrides the defaults of the chosen kind.
    """
    if kind not in _PLANAR_DEFAULTS:
        raise ValueError(f"unknown planar toy kind {kind!r}; choose from {sorted(_PLANAR_DEFAULTS)}")
    p = dict(_PLANAR_DEFAULTS[kind])
    if params:
        unknown = set(params) - set(p)
        if unknown:
            raise ValueError(f"unknown parameters for {kind!r}: {sorted(unknown)}")
        p.update(params)

    rng = np.random.default_rng(seed)
    means = np.asarray(p["means"], dtype=np.float64)
    blocks, labels = [], []
    for i, m in enumerate(means):
        blocks.append(m + p["sd"] * rng.standard_normal((p["count"], 2)))
        labels.append(np.full(p["count"], i, dtype=np.int64))

    if kind == "bridged" and p["bridge_points"] > 0:
        nb = p["bridge_points"]
        t = (np.arange(nb) + 0.5) / nb
        line = means[0] + t[:, None] * (means[1] - means[0])
        blocks.append(line + p["bridge_sd"] * rng.standard_normal((nb, 2)))
        labels.append(np.full(nb, BRIDGE_LABEL, dtype=np.int64))

    if kind in ("outliers", "outliers_with_noise"):
        out = np.asarray(p["outliers"], dtype=np.float64).reshape(-1, 2)
        blocks.append(out)
        labels.append(np.full(len(out), OUTLIER_LABEL, dtype=np.int64))

    if kind == "outliers_with_noise" and p["noise_points"] > 0:
        lo, hi = np.asarray(p["noise_box"], dtype=np.float64)
        blocks.append(rng.uniform(lo, hi, (p["noise_points"], 2)))
        labels.append(np.full(p["noise_points"], NOISE_POINT_LABEL, dtype=np.int64))

    return LabeledDataset(np.vstack(blocks), np.concatenate(labels), name=kind)


def _parse_float(cell: str, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataFormatError(
            f"non-numeric value {cell!r} at row {row}, column {col}"
        ) from None


def load_csv(
    path: Union[str, Path],
    has_header: Optional[bool] = None,
    label_column: Optional[Union[int, str]] = None,
    name: Optional[str] = None,
) -> LabeledDataset:
    """Read a comma-separated numeric table.

    Parameters
    ----------
    path : str or Path
    has_header : bool, optional
        ``None`` sniffs: the first row is a header if any of its feature
        cells fails to parse as a number.
    label_column : int or str, optional
        Column index (negative allowed) or header name holding class labels.
        Label strings map to dense integer ids in order of first appearance;
        the original strings are kept in ``label_names``.

    Raises
    ------
    DataFormatError
        On ragged rows or non-numeric feature cells (the message names the
        1-based row and 0-based column).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")

    width = len(rows[0])
    for lineno, r in enumerate(rows, start=1):
        if len(r) != width:
            raise DataFormatError(
                f"{path}: row {lineno} has {len(r)} fields, expected {width}"
            )

    header = None
    if has_header is None:
        lab_idx = label_column if isinstance(label_column, int) else None
        if isinstance(label_column, str):
            has_header = True
        else:
            first = [c for j, c in enumerate(rows[0]) if lab_idx is None or j != lab_idx % width]
            has_header = not all(_is_number(c) for c in first)
    if has_header:
        header = [c.strip() for c in rows[0]]
        body = rows[1:]
        start_row = 2
    else:
        body = rows
        start_row = 1
    if not body:
        raise DataFormatError(f"{path}: no data rows after header")

    if isinstance(label_column, str):
        if header is None or label_column not in header:
            raise DataFormatError(f"{path}: label column {label_column!r} not in header")
        lab_idx = header.index(label_column)
    elif label_column is not None:
        if not -width <= label_column < width:
            raise DataFormatError(f"{path}: label column {label_column} out of range")
        lab_idx = label_column % width
    else:
        lab_idx = None

    feat_cols = [j for j in range(width) if j != lab_idx]
    if not feat_cols:
        raise DataFormatError(f"{path}: no feature columns")
    points = np.empty((len(body), len(feat_cols)))
    raw_labels = []
    for i, r in enumerate(body):
        for k, j in enumerate(feat_cols):
            points[i, k] = _parse_float(r[j].strip(), i + start_row, j)
        if lab_idx is not None:
            raw_labels.append(r[lab_idx].strip())

    labels = label_names = None
    if lab_idx is not None:
        ids = {}
        labels = np.array([ids.setdefault(s, len(ids)) for s in raw_labels], dtype=np.int64)
        label_names = list(ids)
    return LabeledDataset(points, labels, name=name or path.stem, label_names=label_names)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def save_csv(dataset: LabeledDataset, path: Union[str, Path], header: bool = True) -> None:
    """Write points (and labels as the last column) with round-trip precision."""
    path = Path(path)
    p = dataset.n_features
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{j}" for j in range(p)] + (["label"] if dataset.labels is not None else []))
        for i in range(dataset.n_obs):
            row = [repr(float(v)) for v in dataset.points[i]]
            if dataset.labels is not None:
                lab = int(dataset.labels[i])
                if dataset.label_names is not None:
                    row.append(dataset.label_names[lab])
                else:
                    row.append(str(lab))
            w.writerow(row)


def standardize(dataset: LabeledDataset, mode: str = "zscore") -> LabeledDataset:
    """Per-feature scaling: ``zscore``, ``minmax`` or ``none``.

    Constant features map to 0 under both scalings. The z-score uses the
    population standard deviation.
    """
    x = dataset.points
    if mode == "none":
        out = x.copy()
    elif mode == "zscore":
        mu = x.mean(axis=0)
        sd = x.std(axis=0)
        centered = x - mu
        out = np.zeros_like(x)
        ok = sd > 0
        out[:, ok] = centered[:, ok] / sd[ok]
    elif mode == "minmax":
        lo = x.min(axis=0)
        span = x.max(axis=0) - lo
        out = np.zeros_like(x)
        ok = span > 0
        out[:, ok] = (x[:, ok] - lo[ok]) / span[ok]
    else:
        raise ValueError(f"unknown standardization mode {mode!r}")
    return LabeledDataset(
        out,
        None if dataset.labels is None else dataset.labels.copy(),
        name=dataset.name,
        label_names=dataset.label_names,
    )
