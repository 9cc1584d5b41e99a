"""From-scratch dense feed-forward network for multi-label prediction.

Implements exactly what the surrogate attack needs and nothing more: a
fixed three-hidden-layer MLP with ReLU activations, a sigmoid output head,
binary cross-entropy loss, inverted dropout, and Adam. Written directly
against numpy so every gradient is checkable by finite differences.
All arithmetic is float64; gradient-check tolerances assume that.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

BCE_CLAMP = 1e-12
_HIDDEN_LAYERS = 3


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 50
    epochs: int = 100
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("adam_beta1", "adam_beta2"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {b}")
        if self.adam_epsilon <= 0:
            raise ValueError(f"adam_epsilon must be > 0, got {self.adam_epsilon}")


@dataclass
class MlpModel:
    """Parameters of the network. weights[i] has shape (fan_in, fan_out)."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout_rate: float
    seed: int

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) != _HIDDEN_LAYERS + 2:
            raise ValueError(
                f"expected input + {_HIDDEN_LAYERS} hidden + output = "
                f"{_HIDDEN_LAYERS + 2} layer sizes, got {len(sizes)}"
            )
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        if not 0.0 <= self.dropout_rate <= 0.5:
            raise ValueError(f"dropout_rate must be in [0, 0.5], got {self.dropout_rate}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("need one weight matrix and bias vector per layer gap")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i], sizes[i + 1]):
                raise ValueError(f"weights[{i}] shape {w.shape} != {(sizes[i], sizes[i + 1])}")
            if b.shape != (sizes[i + 1],):
                raise ValueError(f"biases[{i}] shape {b.shape} != {(sizes[i + 1],)}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"non-finite parameters in layer {i}")

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            dropout_rate=self.dropout_rate,
            seed=self.seed,
        )


def init_model(
    input_dim: int,
    output_dim: int,
    hidden: Sequence[int] = (128, 64, 32),
    dropout_rate: float = 0.1,
    seed: int = 0,
) -> MlpModel:
    """He-initialized hidden layers, Xavier-initialized output, zero biases."""
    if len(hidden) != _HIDDEN_LAYERS:
        raise ValueError(f"exactly {_HIDDEN_LAYERS} hidden widths required, got {len(hidden)}")
    sizes = (input_dim, *hidden, output_dim)
    rng = np.random.default_rng(seed)
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        if i < len(sizes) - 2:
            std = np.sqrt(2.0 / fan_in)
        else:
            std = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.standard_normal((fan_in, fan_out)) * std)
        biases.append(np.zeros(fan_out))
    return MlpModel(
        layer_sizes=sizes, weights=weights, biases=biases,
        dropout_rate=dropout_rate, seed=seed,
    )


# --------------------------------------------------------------------------
# Forward / loss / backward

@dataclass
class ForwardCache:
    """Everything backward() needs; masks already carry the 1/(1-rate) scale."""

    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    masks: list[np.ndarray | None]
    output: np.ndarray
    training: bool


def _as_batch(x: np.ndarray, dim: int, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    was_vector = arr.ndim == 1
    if was_vector:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"{name} must have {dim} columns, got shape {np.asarray(x).shape}")
    return arr, was_vector


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to avoid overflow in exp for large |z|.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(
    model: MlpModel,
    x: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network; returns (output, cache). Accepts a vector or a batch."""
    a, was_vector = _as_batch(x, model.input_dim, "x")
    dropping = training and model.dropout_rate > 0.0
    if dropping and rng is None:
        raise ValueError("training with dropout_rate > 0 requires an rng")
    inputs: list[np.ndarray] = []
    pre: list[np.ndarray] = []
    masks: list[np.ndarray | None] = []
    n_layers = len(model.weights)
    for i in range(n_layers):
        inputs.append(a)
        z = a @ model.weights[i] + model.biases[i]
        pre.append(z)
        if i < n_layers - 1:
            h = np.maximum(z, 0.0)
            if dropping:
                keep = 1.0 - model.dropout_rate
                mask = (rng.random(h.shape) >= model.dropout_rate) / keep
                masks.append(mask)
                a = h * mask
            else:
                masks.append(None)
                a = h
        else:
            a = _sigmoid(z)
    cache = ForwardCache(inputs=inputs, pre_activations=pre, masks=masks,
                         output=a, training=training)
    y = a[0] if was_vector else a
    return y, cache


def bce_loss(y_pred: np.ndarray, y_true: np.ndarray) -> float:
    """Binary cross-entropy, mean over all coordinates, clamp at 1e-12."""
    p = np.asarray(y_pred, dtype=float)
    t = np.asarray(y_true, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    p = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log1p(-p))))


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def backward(model: MlpModel, cache: ForwardCache, y_true: np.ndarray) -> Gradients:
    """Exact gradients of bce_loss(forward(x)) with cached masks held fixed."""
    t, _ = _as_batch(y_true, model.output_dim, "y_true")
    y = cache.output
    if y.shape != t.shape:
        raise ValueError(f"cache output shape {y.shape} does not match targets {t.shape}")
    if cache.inputs[0].shape[1] != model.input_dim or len(cache.inputs) != len(model.weights):
        raise ValueError("cache does not belong to this model")
    n, k = y.shape
    # d(mean BCE)/dz for a sigmoid head collapses to (p - t) / count.
    dz = (y - t) / (n * k)
    g_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    g_b: list[np.ndarray] = [np.empty(0)] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        g_w[i] = cache.inputs[i].T @ dz
        g_b[i] = dz.sum(axis=0)
        if i == 0:
            break
        da = dz @ model.weights[i].T
        mask = cache.masks[i - 1]
        if mask is not None:
            da = da * mask
        dz = da * (cache.pre_activations[i - 1] > 0.0)
    return Gradients(weights=g_w, biases=g_b)


# --------------------------------------------------------------------------
# Adam

@dataclass
class AdamState:
    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]
    timestep: int = 0


def init_adam_state(model: MlpModel) -> AdamState:
    return AdamState(
        m_weights=[np.zeros_like(w) for w in model.weights],
        v_weights=[np.zeros_like(w) for w in model.weights],
        m_biases=[np.zeros_like(b) for b in model.biases],
        v_biases=[np.zeros_like(b) for b in model.biases],
    )


def adam_step(
    model: MlpModel, grads: Gradients, state: AdamState, config: TrainConfig
) -> tuple[MlpModel, AdamState]:
    """One bias-corrected Adam update; the timestep advances once per call."""
    b1, b2, eps, lr = (
        config.adam_beta1, config.adam_beta2, config.adam_epsilon, config.learning_rate,
    )
    t = state.timestep + 1
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t

    def update(theta: np.ndarray, g: np.ndarray, m: np.ndarray, v: np.ndarray):
        if g.shape != theta.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {theta.shape}")
        m_new = b1 * m + (1.0 - b1) * g
        v_new = b2 * v + (1.0 - b2) * g * g
        m_hat = m_new / c1
        v_hat = v_new / c2
        return theta - lr * m_hat / (np.sqrt(v_hat) + eps), m_new, v_new

    new_w, new_mw, new_vw = [], [], []
    for w, g, m, v in zip(model.weights, grads.weights, state.m_weights, state.v_weights):
        w2, m2, v2 = update(w, g, m, v)
        new_w.append(w2)
        new_mw.append(m2)
        new_vw.append(v2)
    new_b, new_mb, new_vb = [], [], []
    for b, g, m, v in zip(model.biases, grads.biases, state.m_biases, state.v_biases):
        b2_, m2, v2 = update(b, g, m, v)
        new_b.append(b2_)
        new_mb.append(m2)
        new_vb.append(v2)
    new_model = MlpModel(
        layer_sizes=model.layer_sizes, weights=new_w, biases=new_b,
        dropout_rate=model.dropout_rate, seed=model.seed,
    )
    new_state = AdamState(
        m_weights=new_mw, v_weights=new_vw, m_biases=new_mb, v_biases=new_vb, timestep=t,
    )
    return new_model, new_state


# --------------------------------------------------------------------------
# Training loop

@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    split: str
    loss: float
    precision: float
    recall: float
    f1: float


def micro_metrics(
    y_prob: np.ndarray, y_true: np.ndarray, threshold: float = 0.5
) -> tuple[float, float, float]:
    """Micro-averaged precision/recall/F1 over every (sample, label) pair."""
    pred = y_prob >= threshold
    true = np.asarray(y_true) > 0.5
    tp = float(np.sum(pred & true))
    fp = float(np.sum(pred & ~true))
    fn = float(np.sum(~pred & true))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def _split_metrics(model: MlpModel, x: np.ndarray, y: np.ndarray,
                   epoch: int, split: str) -> EpochMetrics:
    prob, _ = forward(model, x, training=False)
    loss = bce_loss(prob, y)
    precision, recall, f1 = micro_metrics(prob, y)
    return EpochMetrics(epoch=epoch, split=split, loss=loss,
                        precision=precision, recall=recall, f1=f1)


def train(
    model: MlpModel,
    x: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
) -> tuple[MlpModel, list[EpochMetrics]]:
    """Mini-batch Adam training with a seeded 70/30 train/validation split.

    Shuffles per epoch, records train and validation metrics per epoch, and
    returns the final-epoch model. Raises TrainingDivergedError if either
    split's loss leaves the finite range.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"x and y must be 2-D with equal row counts, got {x.shape}, {y.shape}")
    if x.shape[1] != model.input_dim or y.shape[1] != model.output_dim:
        raise ValueError(
            f"data dims ({x.shape[1]}, {y.shape[1]}) do not match model "
            f"({model.input_dim}, {model.output_dim})"
        )
    n = x.shape[0]
    if n < 2 * config.batch_size:
        raise ValueError(f"need at least 2*batch_size={2 * config.batch_size} rows, got {n}")
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    n_val = int(round(0.3 * n))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if len(val_idx) == 0 or len(train_idx) == 0:
        raise ValueError(f"degenerate 70/30 split for {n} rows")
    x_tr, y_tr = x[train_idx], y[train_idx]
    x_val, y_val = x[val_idx], y[val_idx]

    current = model.copy()
    state = init_adam_state(current)
    history: list[EpochMetrics] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(x_tr))
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            out, cache = forward(current, x_tr[batch], training=True, rng=rng)
            if not np.isfinite(out).all():
                raise TrainingDivergedError(
                    f"non-finite network output at epoch {epoch}"
                )
            grads = backward(current, cache, y_tr[batch])
            try:
                current, state = adam_step(current, grads, state, config)
            except ValueError as exc:
                # Shapes are fixed by construction, so a refused model here
                # means the update overflowed the parameters.
                raise TrainingDivergedError(
                    f"parameter overflow at epoch {epoch}: {exc}"
                ) from exc
        for split, xs, ys in (("train", x_tr, y_tr), ("validation", x_val, y_val)):
            rec = _split_metrics(current, xs, ys, epoch, split)
            if not np.isfinite(rec.loss):
                raise TrainingDivergedError(
                    f"non-finite {split} loss at epoch {epoch}: {rec.loss}"
                )
            history.append(rec)
    return current, history


# --------------------------------------------------------------------------
# Prediction

def predict_topk(model: MlpModel, x: np.ndarray, k: int) -> list[int]:
    """Indices of the k largest outputs, ties broken by lower index."""
    if not 0 <= k <= model.output_dim:
        raise ValueError(f"k must be in [0, {model.output_dim}], got {k}")
    prob, _ = forward(model, x, training=False)
    if prob.ndim != 1:
        raise ValueError("predict_topk takes a single input vector")
    order = np.argsort(-prob, kind="stable")
    return [int(i) for i in order[:k]]


def predict_threshold(model: MlpModel, x: np.ndarray, tau: float = 0.5) -> set[int]:
    """Indices whose output meets or exceeds tau."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    prob, _ = forward(model, x, training=False)
    if prob.ndim != 1:
        raise ValueError("predict_threshold takes a single input vector")
    return {int(i) for i in np.flatnonzero(prob >= tau)}


# --------------------------------------------------------------------------
# Persistence

def save_model(model: MlpModel, path: str | Path) -> None:
    payload = {
        "layer_sizes": list(model.layer_sizes),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "dropout_rate": model.dropout_rate,
        "seed": model.seed,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> MlpModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return MlpModel(
        layer_sizes=tuple(payload["layer_sizes"]),
        weights=[np.asarray(w, dtype=float) for w in payload["weights"]],
        biases=[np.asarray(b, dtype=float) for b in payload["biases"]],
        dropout_rate=float(payload["dropout_rate"]),
        seed=int(payload["seed"]),
    )


def write_metrics_csv(records: Sequence[EpochMetrics], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "split", "loss", "precision", "recall", "f1"])
        for r in records:
            writer.writerow([r.epoch, r.split, repr(r.loss),
                             repr(r.precision), repr(r.recall), repr(r.f1)])
