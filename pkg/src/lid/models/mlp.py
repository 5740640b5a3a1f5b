"""Feed-forward network over sparse n-gram counts.

Two stock layouts, picked by feature space: two hidden layers of 500
for selected vocabularies, one hidden layer of 200 for hashed spaces.
Training runs in float64 so gradients can be checked against finite
differences; the finished model is cast to float32.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..features import HashedSpace, SelectedVocab, vectorize
from .base import TrainConfig, TrainingDivergedError, apply_subset_cap, softmax

HIDDEN_SELECTION = (500, 500)
HIDDEN_HASHING = (200,)


@dataclass
class MLPModel:
    labels: list[str]
    weights: list[np.ndarray]  # (fan_in, fan_out) float32 per layer
    biases: list[np.ndarray]
    feature_space: SelectedVocab | HashedSpace
    config_digest: str = field(default="", compare=False)

    arch = "mlp"

    @property
    def layer_sizes(self) -> list[int]:
        return [w.shape[0] for w in self.weights] + [self.weights[-1].shape[1]]

    def predict_proba(self, text: str) -> np.ndarray:
        vec = vectorize(text, self.feature_space)
        x = np.zeros(self.weights[0].shape[0], dtype=np.float64)
        for idx, count in vec.counts.items():
            x[idx] = count
        x /= max(1.0, float(vec.total))
        weights = [w.astype(np.float64) for w in self.weights]
        biases = [b.astype(np.float64) for b in self.biases]
        logits = _forward(weights, biases, x[None, :])[-1]
        return softmax(logits[0])


def _forward(weights, biases, x: np.ndarray) -> list[np.ndarray]:
    """Returns [input, hidden activations..., logits]."""
    acts = [x]
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w + b
        if i < len(weights) - 1:
            z = np.maximum(z, 0.0)
        acts.append(z)
    return acts


def mlp_loss_and_grads(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean cross-entropy over a batch plus L2 penalty, with exact grads.

    Kept free of training-loop state so the same code path serves both
    the optimizer and finite-difference verification.
    """
    acts = _forward(weights, biases, x)
    logits = acts[-1]
    probs = softmax(logits)
    n = x.shape[0]
    loss = -float(np.mean(np.log(probs[np.arange(n), y] + 1e-300)))
    loss += 0.5 * l2 * sum(float(np.sum(w * w)) for w in weights)

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n

    grads_w = [np.zeros_like(w) for w in weights]
    grads_b = [np.zeros_like(b) for b in biases]
    for i in range(len(weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta + l2 * weights[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (acts[i] > 0)
    return loss, grads_w, grads_b


def _init_params(sizes: Sequence[int], rng: np.random.Generator):
    """He-scaled normal weights, zero biases, float64."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _batch_matrix(batch, dim: int) -> np.ndarray:
    x = np.zeros((len(batch), dim), dtype=np.float64)
    for row, (idx, cnt, _) in enumerate(batch):
        if idx.size:
            x[row, idx] = cnt / max(1.0, float(cnt.sum()))
    return x


def train_mlp(
    pairs: Sequence[tuple[str, str]],
    feature_space: SelectedVocab | HashedSpace,
    cfg: TrainConfig | None = None,
    hidden: Sequence[int] | None = None,
    eval_pairs: Sequence[tuple[str, str]] | None = None,
    labels: Sequence[str] | None = None,
) -> MLPModel:
    """Adam over minibatches, early stopping on held-out loss.

    When eval_pairs is given, training keeps the parameters from the best
    eval epoch and stops after `cfg.patience` epochs without improvement.
    """
    cfg = cfg or TrainConfig(lr=1e-3)
    pairs = apply_subset_cap(list(pairs), cfg.subset_cap, cfg.seed)
    if not pairs:
        raise ValueError("training set is empty")

    seen = sorted({label for _, label in pairs})
    label_list = list(labels) if labels is not None else seen
    missing = set(seen) - set(label_list)
    if missing:
        raise ValueError(f"training labels not in label list: {sorted(missing)}")
    if len(label_list) < 2:
        raise ValueError("need at least two labels")
    index = {lab: i for i, lab in enumerate(label_list)}

    if isinstance(feature_space, SelectedVocab):
        dim = feature_space.dim
        default_hidden = HIDDEN_SELECTION
    else:
        dim = feature_space.bins
        default_hidden = HIDDEN_HASHING
    sizes = [dim, *(hidden if hidden is not None else default_hidden), len(label_list)]

    def featurize(subset):
        out = []
        for text, label in subset:
            vec = vectorize(text, feature_space)
            idx = np.fromiter(vec.counts.keys(), dtype=np.int64, count=len(vec.counts))
            cnt = np.fromiter(vec.counts.values(), dtype=np.float64, count=len(vec.counts))
            out.append((idx, cnt, index[label]))
        return out

    data = featurize(pairs)
    held_out = featurize(eval_pairs) if eval_pairs else None

    rng = np.random.default_rng(cfg.seed)
    weights, biases = _init_params(sizes, rng)

    moments = [(np.zeros_like(p), np.zeros_like(p)) for p in weights + biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    adam_t = 0

    def adam_step(params, grads):
        nonlocal adam_t
        adam_t += 1
        for slot, (param, grad) in enumerate(zip(params, grads)):
            m, v = moments[slot]
            m += (1 - beta1) * (grad - m)
            v += (1 - beta2) * (grad * grad - v)
            m_hat = m / (1 - beta1**adam_t)
            v_hat = v / (1 - beta2**adam_t)
            param -= cfg.lr * m_hat / (np.sqrt(v_hat) + eps)

    def eval_loss() -> float:
        total = 0.0
        for start in range(0, len(held_out), 256):
            batch = held_out[start : start + 256]
            x = _batch_matrix(batch, dim)
            y = np.array([row for _, _, row in batch])
            loss, _, _ = mlp_loss_and_grads(weights, biases, x, y)
            total += loss * len(batch)
        return total / len(held_out)

    best = None
    best_loss = np.inf
    stale = 0

    for _ in range(cfg.epochs):
        order = rng.permutation(len(data))
        for start in range(0, len(data), cfg.batch_size):
            batch = [data[i] for i in order[start : start + cfg.batch_size]]
            x = _batch_matrix(batch, dim)
            y = np.array([row for _, _, row in batch])
            loss, gw, gb = mlp_loss_and_grads(weights, biases, x, y, l2=cfg.l2)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"cross-entropy became non-finite (lr={cfg.lr})")
            adam_step(weights + biases, gw + gb)
        if held_out:
            current = eval_loss()
            if current < best_loss - 1e-6:
                best_loss = current
                best = ([w.copy() for w in weights], [b.copy() for b in biases])
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    if best is not None:
        weights, biases = best

    return MLPModel(
        labels=label_list,
        weights=[w.astype(np.float32) for w in weights],
        biases=[b.astype(np.float32) for b in biases],
        feature_space=feature_space,
    )
