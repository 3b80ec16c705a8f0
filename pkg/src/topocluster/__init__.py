"""Topological pre-processing for density-based clustering.

Build a fuzzy k-NN graph, lay it out by cross-entropy SGD, cluster the
layout with DBSCAN and score eps sweeps with ARI / NMI.
"""

from .data import (
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
from .density import NOISE, ClusterLabeling, DbscanParams, dbscan, eps_neighborhood
from .graph import (
    DissimilarityMatrix,
    FuzzyGraph,
    fuzzy_graph,
    graph_to_dissimilarity,
    knn_exact,
    smooth_knn_calibrate,
)
from .harness import (
    ReplicationSummary,
    SweepResult,
    SweepSpec,
    eps_sweep,
    fuzzy_only_sweep,
    replicate,
    run_pipeline,
)
from .layout import Embedding, LayoutConfig, cross_entropy, optimize_layout, spectral_init
from .metrics import ari, ari_score, contingency, nmi_max, nmi_score
from .toy import toy_distance_matrix, toy_labels

__version__ = "0.1.0"

__all__ = [
    "GaussianCluster",
    "GaussianMixtureSpec",
    "LabeledDataset",
    "generate_gaussian_mixture",
    "generate_nested_spheres",
    "generate_planar_toy",
    "load_csv",
    "save_csv",
    "setting_spec",
    "standardize",
    "NOISE",
    "ClusterLabeling",
    "DbscanParams",
    "dbscan",
    "eps_neighborhood",
    "DissimilarityMatrix",
    "FuzzyGraph",
    "fuzzy_graph",
    "graph_to_dissimilarity",
    "knn_exact",
    "smooth_knn_calibrate",
    "ReplicationSummary",
    "SweepResult",
    "SweepSpec",
    "eps_sweep",
    "fuzzy_only_sweep",
    "replicate",
    "run_pipeline",
    "Embedding",
    "LayoutConfig",
    "cross_entropy",
    "optimize_layout",
    "spectral_init",
    "ari",
    "ari_score",
    "contingency",
    "nmi_max",
    "nmi_score",
    "toy_distance_matrix",
    "toy_labels",
]

