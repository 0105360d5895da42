"""Session similarity graphs and their normalized propagation operators.

Edge weights are cosine similarities mapped linearly to [0, 1]; the pruning
strategies (keep everything, mutual-or-one-sided nearest neighbors, or a raw
cosine threshold) only decide which pairs keep a nonzero weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .segments import SegmentSet

STRATEGY_FULLY_CONNECTED = "fully_connected"
STRATEGY_KNN = "knn"
STRATEGY_THRESHOLD = "threshold"
_STRATEGIES = (STRATEGY_FULLY_CONNECTED, STRATEGY_KNN, STRATEGY_THRESHOLD)

DEFAULT_THRESHOLD = 0.6


class OperatorFlavor(Enum):
    # degree-normalized affinity, zero diagonal
    LABEL_PROP = "label_prop"
    # degree-normalized affinity with self-loops added first
    GCN = "gcn"


@dataclass(frozen=True)
class GraphConstructionConfig:
    """Which node pairs keep an edge. Exactly one strategy is active."""

    strategy: str
    tau: float | None = None
    k: int | None = None

    def __post_init__(self):
        if self.strategy not in _STRATEGIES:
            raise ValueError(f"unknown graph strategy {self.strategy!r}")
        if self.strategy == STRATEGY_THRESHOLD:
            if self.tau is None:
                raise ValueError("threshold strategy requires tau")
            if not -1.0 < self.tau < 1.0:
                raise ValueError(f"tau must lie in (-1, 1), got {self.tau}")
            if self.k is not None:
                raise ValueError("k is only valid for the knn strategy")
        elif self.strategy == STRATEGY_KNN:
            if self.k is None or self.k < 1:
                raise ValueError(f"knn strategy requires a positive k, got {self.k}")
            if self.tau is not None:
                raise ValueError("tau is only valid for the threshold strategy")
        else:
            if self.tau is not None or self.k is not None:
                raise ValueError("fully_connected strategy takes no tau or k")

    @classmethod
    def threshold(cls, tau: float = DEFAULT_THRESHOLD) -> "GraphConstructionConfig":
        return cls(STRATEGY_THRESHOLD, tau=tau)

    @classmethod
    def knn(cls, k: int) -> "GraphConstructionConfig":
        return cls(STRATEGY_KNN, k=k)

    @classmethod
    def fully_connected(cls) -> "GraphConstructionConfig":
        return cls(STRATEGY_FULLY_CONNECTED)


@dataclass(frozen=True, eq=False)
class AffinityGraph:
    """Symmetric nonnegative edge-weight matrix with a zero diagonal."""

    affinity: np.ndarray
    node_count: int
    kept_edges: int

    def __post_init__(self):
        a = np.asarray(self.affinity, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"affinity must be square, got shape {a.shape}")
        if a.shape[0] != self.node_count:
            raise ValueError("node_count does not match the affinity matrix")
        if not np.array_equal(a, a.T):
            raise ValueError("affinity matrix is not symmetric")
        if np.any(np.diagonal(a) != 0.0):
            raise ValueError("affinity diagonal must be zero")
        if np.any(a < 0.0) or np.any(a > 1.0):
            raise ValueError("affinity entries must lie in [0, 1]")
        a.setflags(write=False)
        object.__setattr__(self, "affinity", a)

    @property
    def degrees(self) -> np.ndarray:
        return self.affinity.sum(axis=1)


@dataclass(frozen=True, eq=False)
class NormalizedOperator:
    """Symmetric degree-normalized matrix used by propagation and convolution."""

    matrix: np.ndarray
    flavor: OperatorFlavor

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def cosine(a, b) -> float:
    """Cosine similarity of two equal-length vectors; raises on zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def build_affinity(segment_set: SegmentSet, config: GraphConstructionConfig) -> AffinityGraph:
    """Pairwise similarity graph over all segments of a session.

    Retained pairs get weight (1 + cos)/2; pruned pairs and the diagonal are
    zero. The threshold strategy compares the raw cosine (not the mapped
    weight) against tau; the knn strategy keeps a pair when either endpoint
    ranks the other among its k most similar nodes.
    """
    n = segment_set.num_segments
    if n < 2:
        raise ValueError(f"need at least 2 segments to build a graph, got {n}")

    x = segment_set.matrix
    xn = x / np.linalg.norm(x, axis=1, keepdims=True)
    raw = np.clip(xn @ xn.T, -1.0, 1.0)

    if config.strategy == STRATEGY_FULLY_CONNECTED:
        keep = np.ones((n, n), dtype=bool)
    elif config.strategy == STRATEGY_THRESHOLD:
        keep = raw > config.tau
    else:
        k = min(config.k, n - 1)
        scores = raw.copy()
        np.fill_diagonal(scores, -np.inf)
        # stable sort: ties resolved toward the lower node index
        order = np.argsort(-scores, axis=1, kind="stable")[:, :k]
        one_sided = np.zeros((n, n), dtype=bool)
        np.put_along_axis(one_sided, order, True, axis=1)
        keep = one_sided | one_sided.T
    np.fill_diagonal(keep, False)

    weights = (1.0 + raw) / 2.0
    upper = np.triu(np.where(keep, weights, 0.0), k=1)
    affinity = upper + upper.T
    kept_edges = int(np.count_nonzero(np.triu(keep, k=1)))
    return AffinityGraph(affinity=affinity, node_count=n, kept_edges=kept_edges)


def sym_normalize(graph: AffinityGraph) -> NormalizedOperator:
    """Degree-normalized affinity A_ij / sqrt(d_i d_j).

    Nodes with zero degree keep an all-zero row and column; their soft labels
    never receive mass and downstream classification falls back to the
    centroid baseline for such nodes.
    """
    d = graph.degrees
    inv_sqrt = np.where(d > 0.0, 1.0 / np.sqrt(np.where(d > 0.0, d, 1.0)), 0.0)
    s = inv_sqrt[:, None] * graph.affinity * inv_sqrt[None, :]
    return NormalizedOperator(matrix=_mirror_upper(s), flavor=OperatorFlavor.LABEL_PROP)


def gcn_normalize(graph: AffinityGraph) -> NormalizedOperator:
    """Self-loop-augmented normalization: add the identity, then degree-normalize.

    Self-loops guarantee positive degrees, so no isolated-node handling is
    needed and every diagonal entry is positive.
    """
    a_hat = graph.affinity + np.eye(graph.node_count)
    inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    m = inv_sqrt[:, None] * a_hat * inv_sqrt[None, :]
    return NormalizedOperator(matrix=_mirror_upper(m), flavor=OperatorFlavor.GCN)


def dump_edges(graph: AffinityGraph, path) -> None:
    """Write the edge list as ``i j weight`` lines (0-based, i < j, full precision)."""
    rows, cols = np.nonzero(np.triu(graph.affinity, k=1))
    lines = [
        f"{i} {j} {float(graph.affinity[i, j])!r}" for i, j in zip(rows.tolist(), cols.tolist())
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def _mirror_upper(m: np.ndarray) -> np.ndarray:
    # enforce bitwise symmetry against multiplication-order rounding
    upper = np.triu(m)
    return upper + np.triu(m, k=1).T
