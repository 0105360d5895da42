"""Centroid baseline: one mean profile vector per speaker, nearest by cosine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .segments import SegmentSet


@dataclass(frozen=True, eq=False)
class CentroidModel:
    """One centroid per class, rows indexed by class."""

    centroids: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError(f"centroids must be 2-D, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("centroids contain NaN or Inf")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def num_classes(self) -> int:
        return self.centroids.shape[0]


def fit_centroids(segment_set: SegmentSet) -> CentroidModel:
    """Mean of each speaker's profile vectors."""
    labels = segment_set.profile_labels
    profiles = segment_set.matrix[: segment_set.num_profiles]
    centroids = np.zeros((segment_set.num_classes, segment_set.emb_dim))
    for c in range(segment_set.num_classes):
        centroids[c] = profiles[labels == c].mean(axis=0)
    return CentroidModel(centroids=centroids)


def classify_cosine(model: CentroidModel, vector) -> int:
    """Class whose centroid has the highest cosine similarity; ties go low."""
    vector = np.asarray(vector, dtype=np.float64)
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        raise ValueError("cannot classify a zero-norm vector")
    return int(np.argmax(_centroid_scores(model, vector[None, :] / norm)[0]))


def classify_test_segments(model: CentroidModel, segment_set: SegmentSet) -> np.ndarray:
    """Predicted class per test segment, in set order."""
    x = segment_set.matrix[segment_set.num_profiles :]
    xn = x / np.linalg.norm(x, axis=1, keepdims=True)
    return np.argmax(_centroid_scores(model, xn), axis=1)


def _centroid_scores(model: CentroidModel, unit_rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(model.centroids, axis=1)
    # a degenerate all-zero centroid scores -inf and can never win the argmax
    safe = np.where(norms > 0.0, norms, 1.0)
    cn = model.centroids / safe[:, None]
    scores = unit_rows @ cn.T
    scores[:, norms == 0.0] = -np.inf
    return scores
