"""Label propagation over the normalized session graph.

One-hot profile labels diffuse through the degree-normalized affinity for a
fixed number of iterations; labeled rows are pinned back to their one-hot
values after every step (configurable). Nodes whose score row stays all-zero
(isolated, or unreachable from any label) are classified by the centroid
baseline instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baseline import classify_test_segments, fit_centroids
from .graph import AffinityGraph, NormalizedOperator, OperatorFlavor, sym_normalize
from .segments import SegmentSet


@dataclass(frozen=True)
class LpConfig:
    """Diffusion strength, iteration budget, and label freezing.

    The defaults (alpha 0.95, 20 iterations, freezing on) were chosen on
    synthetic dev sessions; treat them as starting points, not constants
    carved in stone.
    """

    alpha: float = 0.95
    iterations: int = 20
    freeze_labeled: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be nonnegative, got {self.iterations}")


@dataclass(frozen=True, eq=False)
class SoftLabelMatrix:
    """Per-node class scores; the first ``labeled_count`` rows are labeled."""

    scores: np.ndarray
    labeled_count: int

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 2:
            raise ValueError(f"scores must be 2-D, got shape {s.shape}")
        if not 0 <= self.labeled_count <= s.shape[0]:
            raise ValueError(f"labeled_count {self.labeled_count} out of range for {s.shape[0]} rows")
        if np.any(np.isnan(s)):
            raise ValueError("scores contain NaN")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    @property
    def isolated(self) -> np.ndarray:
        """Rows with no mass at all: argmax is meaningless there."""
        return np.all(self.scores == 0.0, axis=1)


def init_labels(segment_set: SegmentSet) -> SoftLabelMatrix:
    """One-hot rows for profile segments, all-zero rows for test segments."""
    f0 = np.zeros((segment_set.num_segments, segment_set.num_classes))
    labels = segment_set.profile_labels
    f0[np.arange(labels.shape[0]), labels] = 1.0
    return SoftLabelMatrix(scores=f0, labeled_count=labels.shape[0])


def lp_step(
    f: SoftLabelMatrix,
    operator: NormalizedOperator,
    f0: SoftLabelMatrix,
    config: LpConfig,
) -> SoftLabelMatrix:
    """One diffusion update: alpha * S @ F + (1 - alpha) * F0.

    With ``freeze_labeled`` the labeled rows are then overwritten with their
    initial one-hot values.
    """
    if operator.flavor is not OperatorFlavor.LABEL_PROP:
        raise ValueError(f"label propagation needs a LABEL_PROP operator, got {operator.flavor}")
    if f.scores.shape != f0.scores.shape:
        raise ValueError(f"shape mismatch: F {f.scores.shape} vs F0 {f0.scores.shape}")
    if operator.matrix.shape[0] != f.scores.shape[0]:
        raise ValueError(
            f"shape mismatch: operator {operator.matrix.shape} vs F {f.scores.shape}"
        )
    if f.labeled_count != f0.labeled_count:
        raise ValueError("F and F0 disagree on the labeled row count")

    out = config.alpha * (operator.matrix @ f.scores) + (1.0 - config.alpha) * f0.scores
    if config.freeze_labeled:
        out[: f0.labeled_count] = f0.scores[: f0.labeled_count]
    return SoftLabelMatrix(scores=out, labeled_count=f0.labeled_count)


def run_lp(segment_set: SegmentSet, graph: AffinityGraph, config: LpConfig) -> SoftLabelMatrix:
    """Apply exactly ``config.iterations`` diffusion steps from the one-hot start."""
    operator = sym_normalize(graph)
    f0 = init_labels(segment_set)
    f = f0
    for _ in range(config.iterations):
        f = lp_step(f, operator, f0, config)
    return f


def lp_closed_form(segment_set: SegmentSet, graph: AffinityGraph, alpha: float) -> SoftLabelMatrix:
    """Exact fixed point of the unfrozen diffusion: (1-alpha)(I - alpha S)^-1 F0.

    Intended as a test oracle for the iterative path; the solve is dense.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    operator = sym_normalize(graph)
    f0 = init_labels(segment_set)
    n = segment_set.num_segments
    system = np.eye(n) - alpha * operator.matrix
    scores = np.linalg.solve(system, (1.0 - alpha) * f0.scores)
    return SoftLabelMatrix(scores=scores, labeled_count=f0.labeled_count)


def predict_argmax(f: SoftLabelMatrix, fallback=None) -> np.ndarray:
    """Row-wise argmax with ties to the lowest class index.

    ``fallback`` (per-row predictions, same length) replaces the argmax on
    rows flagged as isolated; without it those rows resolve to class 0.
    """
    preds = np.argmax(f.scores, axis=1)
    if fallback is not None:
        fallback = np.asarray(fallback, dtype=np.int64)
        if fallback.shape != preds.shape:
            raise ValueError(f"fallback shape {fallback.shape} != predictions {preds.shape}")
        preds = np.where(f.isolated, fallback, preds)
    return preds


def classify_lp(segment_set: SegmentSet, graph: AffinityGraph, config: LpConfig) -> np.ndarray:
    """Predicted class per test segment; isolated rows fall back to centroids."""
    f = run_lp(segment_set, graph, config)
    m = segment_set.num_profiles
    test_scores = SoftLabelMatrix(scores=f.scores[m:], labeled_count=0)
    fallback = classify_test_segments(fit_centroids(segment_set), segment_set)
    return predict_argmax(test_scores, fallback=fallback)
