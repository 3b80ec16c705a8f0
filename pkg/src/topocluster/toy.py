"""The six-object toy example: a distance matrix with two groups of three."""

import numpy as np

from .graph import DissimilarityMatrix

# rows/columns are objects 1..6 (0-based here); 2 and 4 sit at the 0.75 bridge
_TOY = np.array(
    [
        [0.0, 0.6, 0.7, 1.3, 1.2, 1.5],
        [0.6, 0.0, 0.5, 0.75, 1.6, 1.3],
        [0.7, 0.5, 0.0, 1.4, 1.3, 1.1],
        [1.3, 0.75, 1.4, 0.0, 0.7, 0.75],
        [1.2, 1.6, 1.3, 0.7, 0.0, 0.75],
        [1.5, 1.3, 1.1, 0.75, 0.75, 0.0],
    ]
)

TOY_LABELS = np.array([0, 0, 0, 1, 1, 1])


def toy_distance_matrix() -> DissimilarityMatrix:
    return DissimilarityMatrix(_TOY)


def toy_labels() -> np.ndarray:
    return TOY_LABELS.copy()
