"""Skip-gram style classifier: averaged n-gram embeddings, trained with
negative sampling.

Each text is the mean of the embeddings of its hashed character n-grams
(1 through 4 by default). The label embeddings live in the same space;
training pushes the text vector toward its label and away from a few
sampled wrong labels instead of normalizing over the whole inventory.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..features import fnv1a32, iter_ngrams
from ..quant import QuantizedTensor, dequantize
from .base import TrainConfig, TrainingDivergedError, apply_subset_cap, softmax

DEFAULT_DIM = 300
DEFAULT_BUCKETS = 2_000_000
DEFAULT_NEG_SAMPLES = 100
DEFAULT_N_RANGE = (1, 4)


@dataclass
class EmbeddingClassifier:
    labels: list[str]
    dim: int
    n_range: tuple[int, int]
    buckets: int
    min_count: int
    neg_samples: int
    vocab: dict[str, int]  # n-gram -> corpus frequency, already pruned
    input_embeddings: np.ndarray | QuantizedTensor   # (buckets, dim)
    label_embeddings: np.ndarray | QuantizedTensor   # (L, dim)
    config_digest: str = field(default="", compare=False)

    arch = "embed"

    @property
    def quantized(self) -> bool:
        return isinstance(self.input_embeddings, QuantizedTensor)

    def featurize(self, text: str) -> np.ndarray:
        """Bucket ids for the in-vocabulary n-grams, with multiplicity.

        Unknown n-grams are dropped rather than hashed blindly, so texts
        made of never-seen material fall back to the uniform answer.
        """
        ids = [
            fnv1a32(gram.encode("utf-8")) % self.buckets
            for gram in iter_ngrams(text, *self.n_range)
            if gram in self.vocab
        ]
        return np.asarray(ids, dtype=np.int64)

    def _mean_vector(self, ids: np.ndarray) -> np.ndarray:
        if ids.size == 0:
            return np.zeros(self.dim, dtype=np.float64)
        if self.quantized:
            rows = dequantize(self.input_embeddings, ids)
        else:
            rows = self.input_embeddings[ids].astype(np.float64)
        return rows.mean(axis=0)

    def _label_matrix(self) -> np.ndarray:
        if isinstance(self.label_embeddings, QuantizedTensor):
            return dequantize(self.label_embeddings)
        return self.label_embeddings.astype(np.float64)

    def predict_proba(self, text: str) -> np.ndarray:
        h = self._mean_vector(self.featurize(text))
        return softmax(self._label_matrix() @ h)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def embed_loss_and_grads(
    input_emb: np.ndarray,
    label_emb: np.ndarray,
    ids: np.ndarray,
    true_idx: int,
    neg_idx: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative-sampling loss for one text with the negatives pinned.

    Returns full-shape gradients for both embedding matrices. Meant for
    small verification problems; the training loop applies the same
    arithmetic through sparse updates.
    """
    h = input_emb[ids].mean(axis=0)
    s_true = float(h @ label_emb[true_idx])
    s_neg = label_emb[neg_idx] @ h
    loss = -float(_log_sigmoid(s_true)) - float(np.sum(_log_sigmoid(-s_neg)))

    d_true = _sigmoid(s_true) - 1.0
    d_neg = _sigmoid(s_neg)

    grad_label = np.zeros_like(label_emb)
    grad_label[true_idx] = d_true * h
    np.add.at(grad_label, neg_idx, d_neg[:, None] * h[None, :])

    grad_h = d_true * label_emb[true_idx] + d_neg @ label_emb[neg_idx]
    grad_input = np.zeros_like(input_emb)
    np.add.at(grad_input, ids, grad_h[None, :] / ids.size)
    return loss, grad_input, grad_label


def train_embed(
    pairs: Sequence[tuple[str, str]],
    cfg: TrainConfig | None = None,
    dim: int = DEFAULT_DIM,
    n_range: tuple[int, int] = DEFAULT_N_RANGE,
    buckets: int = DEFAULT_BUCKETS,
    neg_samples: int = DEFAULT_NEG_SAMPLES,
    min_count: int = 1,
    labels: Sequence[str] | None = None,
) -> EmbeddingClassifier:
    """SGD with per-sample negative sampling and a linear LR decay to zero.

    Negatives are `neg_samples` distinct labels other than the true one,
    drawn without replacement from label frequencies raised to 0.75.
    When the inventory is too small for that many, the count is clamped
    to L - 1 with a warning.
    """
    cfg = cfg or TrainConfig(lr=0.05)
    if dim < 1 or buckets < 1:
        raise ValueError("dim and buckets must be >= 1")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if neg_samples < 1:
        raise ValueError("neg_samples must be >= 1")
    pairs = apply_subset_cap(list(pairs), cfg.subset_cap, cfg.seed)
    if not pairs:
        raise ValueError("training set is empty")

    seen = sorted({label for _, label in pairs})
    label_list = list(labels) if labels is not None else seen
    missing = set(seen) - set(label_list)
    if missing:
        raise ValueError(f"training labels not in label list: {sorted(missing)}")
    n_labels = len(label_list)
    if n_labels < 2:
        raise ValueError("need at least two labels")
    index = {lab: i for i, lab in enumerate(label_list)}

    k = neg_samples
    if k >= n_labels:
        k = n_labels - 1
        warnings.warn(
            f"neg_samples={neg_samples} needs at least {neg_samples + 1} labels; "
            f"clamping to {k}",
            stacklevel=2,
        )

    gram_counts: Counter[str] = Counter()
    for text, _ in pairs:
        gram_counts.update(iter_ngrams(text, *n_range))
    vocab = {g: c for g, c in gram_counts.items() if c >= min_count}

    label_counts = np.zeros(n_labels, dtype=np.float64)
    featurized: list[tuple[np.ndarray, int]] = []
    for text, label in pairs:
        ids = [
            fnv1a32(gram.encode("utf-8")) % buckets
            for gram in iter_ngrams(text, *n_range)
            if gram in vocab
        ]
        row = index[label]
        label_counts[row] += 1
        featurized.append((np.asarray(ids, dtype=np.int64), row))

    noise = label_counts**0.75
    if noise.sum() == 0:
        raise ValueError("no training labels observed")
    noise /= noise.sum()

    rng = np.random.default_rng(cfg.seed)
    bound = 1.0 / dim
    input_emb = rng.uniform(-bound, bound, (buckets, dim))
    label_emb = rng.uniform(-bound, bound, (n_labels, dim))

    total_steps = cfg.epochs * len(featurized)
    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(len(featurized))
        epoch_loss = 0.0
        for pos in order:
            lr = cfg.lr * (1.0 - step / total_steps)
            step += 1
            ids, true_idx = featurized[pos]
            if ids.size == 0:
                continue

            masked = noise.copy()
            masked[true_idx] = 0.0
            masked /= masked.sum()
            neg_idx = rng.choice(n_labels, size=k, replace=False, p=masked)

            h = input_emb[ids].mean(axis=0)
            s_true = float(h @ label_emb[true_idx])
            s_neg = label_emb[neg_idx] @ h
            epoch_loss += -float(_log_sigmoid(s_true)) - float(
                np.sum(_log_sigmoid(-s_neg))
            )

            d_true = _sigmoid(s_true) - 1.0
            d_neg = _sigmoid(s_neg)
            grad_h = d_true * label_emb[true_idx] + d_neg @ label_emb[neg_idx]

            label_emb[true_idx] -= lr * d_true * h
            label_emb[neg_idx] -= lr * d_neg[:, None] * h[None, :]
            np.add.at(input_emb, ids, (-lr / ids.size) * grad_h[None, :])
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(f"sampling loss became non-finite (lr={cfg.lr})")

    return EmbeddingClassifier(
        labels=label_list,
        dim=dim,
        n_range=n_range,
        buckets=buckets,
        min_count=min_count,
        neg_samples=neg_samples,
        vocab=vocab,
        input_embeddings=input_emb.astype(np.float32),
        label_embeddings=label_emb.astype(np.float32),
    )
