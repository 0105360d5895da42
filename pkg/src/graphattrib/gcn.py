"""Per-session graph convolutional classifier, trained from scratch.

Two propagation layers (hidden width H, ELU between them, dropout on the
hidden features), row-wise softmax on the output, cross-entropy summed over
labeled rows, Adam updates with L2 weight decay, and early stopping on a
held-out half of the labels. The labeled nodes are split per speaker into
two halves; one model trains on each half and validates on the other, and
the two models' pre-softmax outputs are summed for inference.

Everything runs in float64 and is fully determined by the config seed. The
backward pass is handwritten and checked against finite differences in the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
import json

import numpy as np

from .graph import AffinityGraph, NormalizedOperator, OperatorFlavor, gcn_normalize
from .labelprop import SoftLabelMatrix, init_labels
from .seeding import derive_seed
from .segments import SegmentSet

# seed-derivation role tags (arbitrary but frozen)
_ROLE_FOLD = 11


@dataclass(frozen=True)
class GcnConfig:
    hidden: int = 64
    dropout_rate: float = 0.5
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    patience: int = 20
    max_epochs: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError(f"hidden must be positive, got {self.hidden}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0.0:
            raise ValueError(f"weight_decay must be nonnegative, got {self.weight_decay}")
        if self.patience < 1:
            raise ValueError(f"patience must be positive, got {self.patience}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be positive, got {self.max_epochs}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")


@dataclass(frozen=True, eq=False)
class GcnParams:
    """Layer weights: w1 maps emb_dim -> hidden, w2 maps hidden -> classes."""

    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        w1 = np.asarray(self.w1, dtype=np.float64)
        w2 = np.asarray(self.w2, dtype=np.float64)
        if w1.ndim != 2 or w2.ndim != 2 or w1.shape[1] != w2.shape[0]:
            raise ValueError(f"inconsistent weight shapes {w1.shape} and {w2.shape}")
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))):
            raise ValueError("weights contain NaN or Inf")
        w1.setflags(write=False)
        w2.setflags(write=False)
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)


@dataclass(frozen=True, eq=False)
class GcnGrads:
    w1: np.ndarray
    w2: np.ndarray


@dataclass(frozen=True, eq=False)
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m_w1: np.ndarray
    v_w1: np.ndarray
    m_w2: np.ndarray
    v_w2: np.ndarray
    step: int

    @classmethod
    def zeros(cls, params: GcnParams) -> "AdamState":
        return cls(
            m_w1=np.zeros_like(params.w1),
            v_w1=np.zeros_like(params.w1),
            m_w2=np.zeros_like(params.w2),
            v_w2=np.zeros_like(params.w2),
            step=0,
        )


@dataclass(frozen=True, eq=False)
class TrainOutcome:
    params: GcnParams
    best_val_loss: float
    epochs_run: int


@dataclass(frozen=True, eq=False)
class ProbabilityMatrix:
    """Row-stochastic class probabilities plus the pre-softmax scores."""

    probs: np.ndarray
    logits: np.ndarray

    def __post_init__(self):
        for name in ("probs", "logits"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.probs.shape != self.logits.shape:
            raise ValueError(f"probs {self.probs.shape} and logits {self.logits.shape} disagree")


@dataclass(frozen=True, eq=False)
class ForwardState:
    """Everything the backward pass needs from one forward evaluation."""

    x: np.ndarray
    operator: np.ndarray
    params: GcnParams
    pre_hidden: np.ndarray       # L X W1
    hidden: np.ndarray           # ELU of pre_hidden
    dropout_mask: np.ndarray | None
    dropped: np.ndarray          # hidden after the dropout mask
    logits: np.ndarray
    probs: np.ndarray

    def output(self) -> ProbabilityMatrix:
        return ProbabilityMatrix(probs=self.probs, logits=self.logits)


def elu(x):
    """Exponential linear unit: x for x > 0, exp(x) - 1 otherwise."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.where(arr > 0.0, arr, np.expm1(np.minimum(arr, 0.0)))
    return float(out) if np.isscalar(x) else out


def _elu_grad(pre):
    return np.where(pre > 0.0, 1.0, np.exp(np.minimum(pre, 0.0)))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Numerically stable row-wise softmax (max-subtracted)."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def make_dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """0/1 keep mask scaled by 1/(1-rate) so expectations are unchanged."""
    if rate == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(rng: np.random.Generator, emb_dim: int, hidden: int, num_classes: int) -> GcnParams:
    return GcnParams(
        w1=glorot_uniform(rng, emb_dim, hidden),
        w2=glorot_uniform(rng, hidden, num_classes),
    )


def gcn_forward_state(
    x: np.ndarray,
    operator: NormalizedOperator,
    params: GcnParams,
    dropout_mask: np.ndarray | None = None,
) -> ForwardState:
    """Full forward pass keeping intermediates for the backward pass."""
    if operator.flavor is not OperatorFlavor.GCN:
        raise ValueError(f"forward pass needs a GCN operator, got {operator.flavor}")
    x = np.asarray(x, dtype=np.float64)
    op = operator.matrix
    if op.shape[0] != x.shape[0]:
        raise ValueError(f"operator {op.shape} does not match features {x.shape}")
    if x.shape[1] != params.w1.shape[0]:
        raise ValueError(f"features {x.shape} do not match w1 {params.w1.shape}")

    pre_hidden = (op @ x) @ params.w1
    hidden = elu(pre_hidden)
    if dropout_mask is not None:
        dropout_mask = np.asarray(dropout_mask, dtype=np.float64)
        if dropout_mask.shape != hidden.shape:
            raise ValueError(f"dropout mask {dropout_mask.shape} does not match hidden {hidden.shape}")
        dropped = hidden * dropout_mask
    else:
        dropped = hidden
    logits = (op @ dropped) @ params.w2
    probs = softmax_rows(logits)
    return ForwardState(
        x=x,
        operator=op,
        params=params,
        pre_hidden=pre_hidden,
        hidden=hidden,
        dropout_mask=dropout_mask,
        dropped=dropped,
        logits=logits,
        probs=probs,
    )


def gcn_forward(
    x: np.ndarray,
    operator: NormalizedOperator,
    params: GcnParams,
    dropout_mask: np.ndarray | None = None,
) -> ProbabilityMatrix:
    """Two-layer forward pass producing row-stochastic probabilities."""
    return gcn_forward_state(x, operator, params, dropout_mask).output()


def masked_cross_entropy(z: ProbabilityMatrix, f0: SoftLabelMatrix, mask) -> float:
    """Cross-entropy summed over the masked labeled rows.

    Computed from the logits through log-softmax, so extreme scores cannot
    produce log(0). The trainer adds its L2 penalty on top of this value.
    """
    mask = _as_mask(mask, f0)
    logp = log_softmax_rows(z.logits)
    return float(-(f0.scores[mask] * logp[mask]).sum())


def gcn_backward(state: ForwardState, f0: SoftLabelMatrix, mask, weight_decay: float = 0.0) -> GcnGrads:
    """Analytic gradients of the masked cross-entropy (plus L2 term) in W1, W2."""
    mask = _as_mask(mask, f0)
    op = state.operator

    d_logits = np.zeros_like(state.logits)
    # rows of f0 are one-hot, so d(loss)/d(logits) = probs - targets on masked rows
    np.add.at(d_logits, mask, state.probs[mask] - f0.scores[mask])

    g_w2 = (op @ state.dropped).T @ d_logits
    d_dropped = (op.T @ d_logits) @ state.params.w2.T
    d_hidden = d_dropped if state.dropout_mask is None else d_dropped * state.dropout_mask
    d_pre = d_hidden * _elu_grad(state.pre_hidden)
    g_w1 = (op @ state.x).T @ d_pre

    if weight_decay != 0.0:
        g_w1 = g_w1 + weight_decay * state.params.w1
        g_w2 = g_w2 + weight_decay * state.params.w2
    return GcnGrads(w1=g_w1, w2=g_w2)


def adam_step(
    params: GcnParams,
    grads: GcnGrads,
    state: AdamState,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[GcnParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    t = state.step + 1
    new_m, new_v, new_w = {}, {}, {}
    for name, w, g, m, v in (
        ("w1", params.w1, grads.w1, state.m_w1, state.v_w1),
        ("w2", params.w2, grads.w2, state.m_w2, state.v_w2),
    ):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_m[name], new_v[name] = m, v
        new_w[name] = w - learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return (
        GcnParams(w1=new_w["w1"], w2=new_w["w2"]),
        AdamState(m_w1=new_m["w1"], v_w1=new_v["w1"], m_w2=new_m["w2"], v_w2=new_v["w2"], step=t),
    )


def split_labeled_nodes(segment_set: SegmentSet) -> tuple[np.ndarray, np.ndarray]:
    """Two disjoint halves of the labeled node indices, interleaved per speaker.

    Within each speaker's profile block the even positions go to the first
    half and the odd positions to the second, so both halves cover every
    speaker whenever each speaker has at least two profile segments.
    """
    labels = segment_set.profile_labels
    half_a: list[int] = []
    half_b: list[int] = []
    for c in range(segment_set.num_classes):
        idx = np.flatnonzero(labels == c)
        half_a.extend(idx[0::2].tolist())
        half_b.extend(idx[1::2].tolist())
    return np.array(sorted(half_a), dtype=np.int64), np.array(sorted(half_b), dtype=np.int64)


def train_fold(
    segment_set: SegmentSet,
    operator: NormalizedOperator,
    train_mask,
    val_mask,
    config: GcnConfig,
) -> TrainOutcome:
    """Train one model on ``train_mask`` with early stopping on ``val_mask``.

    Each epoch draws a fresh dropout mask, takes one Adam step on the
    cross-entropy over the training rows (plus L2 decay), then scores the
    validation rows with dropout disabled. The parameters with the lowest
    validation loss seen so far are kept; training stops after ``patience``
    epochs without strict improvement, or at ``max_epochs``.
    """
    f0 = init_labels(segment_set)
    train_idx = _as_mask(train_mask, f0)
    val_idx = _as_mask(val_mask, f0)
    if np.intersect1d(train_idx, val_idx).size:
        raise ValueError("train and validation masks overlap")

    x = segment_set.matrix
    op = operator.matrix
    n = x.shape[0]
    rng = np.random.default_rng(config.seed)
    params = init_params(rng, segment_set.emb_dim, config.hidden, segment_set.num_classes)
    adam = AdamState.zeros(params)

    # propagated features are constant across epochs; row slices of the
    # operator restrict each pass to the rows whose loss is actually used
    op_x = op @ x
    op_train = op[train_idx, :]
    op_val = op[val_idx, :]
    y_train = f0.scores[train_idx]
    y_val = f0.scores[val_idx]
    decay = config.weight_decay

    best_val = np.inf
    best_params = params
    epochs_without_improvement = 0
    epochs_run = 0

    for epoch in range(1, config.max_epochs + 1):
        epochs_run = epoch
        mask_mat = make_dropout_mask(rng, (n, config.hidden), config.dropout_rate)

        pre = op_x @ params.w1
        hidden = elu(pre)
        dropped = hidden * mask_mat
        u_train = op_train @ dropped
        logits_train = u_train @ params.w2
        data_loss = float(-(y_train * log_softmax_rows(logits_train)).sum())
        loss = data_loss + 0.5 * decay * (
            float(np.sum(params.w1 * params.w1)) + float(np.sum(params.w2 * params.w2))
        )
        if not np.isfinite(loss):
            raise FloatingPointError(f"training loss is not finite at epoch {epoch}")

        d_logits = softmax_rows(logits_train) - y_train
        g_w2 = u_train.T @ d_logits + decay * params.w2
        d_dropped = (op_train.T @ d_logits) @ params.w2.T
        d_pre = d_dropped * mask_mat * _elu_grad(pre)
        g_w1 = op_x.T @ d_pre + decay * params.w1
        params, adam = adam_step(params, GcnGrads(w1=g_w1, w2=g_w2), adam, config.learning_rate)

        hidden_val = elu(op_x @ params.w1)
        logits_val = (op_val @ hidden_val) @ params.w2
        val_loss = float(-(y_val * log_softmax_rows(logits_val)).sum())

        if val_loss < best_val:
            best_val = val_loss
            best_params = params
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= config.patience:
                break

    return TrainOutcome(params=best_params, best_val_loss=float(best_val), epochs_run=epochs_run)


def train_session(segment_set: SegmentSet, graph: AffinityGraph, config: GcnConfig) -> ProbabilityMatrix:
    """Two-fold training over the labeled nodes; sums the folds' pre-softmax outputs.

    The final probabilities are the row softmax of the summed logits, so the
    ensemble argmax is invariant to any common positive scaling of both
    models' scores.
    """
    if segment_set.num_profiles < 2:
        raise ValueError(f"need at least 2 labeled segments, got {segment_set.num_profiles}")
    half_a, half_b = split_labeled_nodes(segment_set)
    if half_a.size == 0 or half_b.size == 0:
        raise ValueError(
            "label split produced an empty half; at least one speaker needs two or more profiles"
        )

    operator = gcn_normalize(graph)
    fold_a = train_fold(
        segment_set, operator, half_a, half_b, replace(config, seed=derive_seed(config.seed, _ROLE_FOLD, 0))
    )
    fold_b = train_fold(
        segment_set, operator, half_b, half_a, replace(config, seed=derive_seed(config.seed, _ROLE_FOLD, 1))
    )
    x = segment_set.matrix
    logits = (
        gcn_forward(x, operator, fold_a.params).logits
        + gcn_forward(x, operator, fold_b.params).logits
    )
    return ProbabilityMatrix(probs=softmax_rows(logits), logits=logits)


def predict_gcn(z: ProbabilityMatrix) -> np.ndarray:
    """Row-wise argmax of the probabilities, ties to the lowest class index."""
    return np.argmax(z.probs, axis=1)


def classify_gcn(segment_set: SegmentSet, graph: AffinityGraph, config: GcnConfig) -> np.ndarray:
    """Predicted class per test segment from a freshly trained session model."""
    z = train_session(segment_set, graph, config)
    return predict_gcn(z)[segment_set.num_profiles :]


def save_gcn_params(params: GcnParams, hidden: int, path) -> None:
    """Model dump: dimensions plus row-major weights at full precision."""
    doc = {
        "hidden": hidden,
        "dim": params.w1.shape[0],
        "classes": params.w2.shape[1],
        "w1": [float(v) for v in params.w1.ravel()],
        "w2": [float(v) for v in params.w2.ravel()],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_gcn_params(path) -> GcnParams:
    doc = json.loads(Path(path).read_text())
    for key in ("hidden", "dim", "classes", "w1", "w2"):
        if key not in doc:
            raise ValueError(f"{path}: missing key {key!r}")
    w1 = np.asarray(doc["w1"], dtype=np.float64).reshape(doc["dim"], doc["hidden"])
    w2 = np.asarray(doc["w2"], dtype=np.float64).reshape(doc["hidden"], doc["classes"])
    return GcnParams(w1=w1, w2=w2)


def _as_mask(mask, f0: SoftLabelMatrix) -> np.ndarray:
    idx = np.asarray(list(mask) if isinstance(mask, (set, frozenset)) else mask, dtype=np.int64)
    if isinstance(mask, (set, frozenset)):
        idx = np.sort(idx)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("mask must be a nonempty 1-D collection of node indices")
    if idx.min() < 0 or idx.max() >= f0.labeled_count:
        raise ValueError(
            f"mask indices must address labeled rows [0, {f0.labeled_count}), got "
            f"[{idx.min()}, {idx.max()}]"
        )
    return idx
