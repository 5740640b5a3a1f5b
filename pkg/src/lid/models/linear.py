"""One-vs-rest linear classifier trained with hinge loss SGD."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..features import HashedSpace, SelectedVocab, vectorize
from .base import TrainConfig, TrainingDivergedError, apply_subset_cap, softmax


@dataclass
class LinearModel:
    labels: list[str]
    weights: np.ndarray  # (L, D) float32
    bias: np.ndarray     # (L,) float32
    feature_space: SelectedVocab | HashedSpace
    config_digest: str = field(default="", compare=False)

    arch = "linear"

    def predict_proba(self, text: str) -> np.ndarray:
        vec = vectorize(text, self.feature_space)
        scores = self.bias.astype(np.float64).copy()
        for idx, count in vec.counts.items():
            scores += count * self.weights[:, idx].astype(np.float64)
        return softmax(scores)


def train_linear(
    pairs: Sequence[tuple[str, str]],
    feature_space: SelectedVocab | HashedSpace,
    cfg: TrainConfig | None = None,
    labels: Sequence[str] | None = None,
) -> LinearModel:
    """SGD on per-label hinge loss with L2 weight decay.

    Decay is applied through a running scale factor on the weight matrix,
    so each step touches only the active feature columns. The learning
    rate falls linearly to zero over the run.
    """
    cfg = cfg or TrainConfig()
    if cfg.lr * cfg.l2 >= 1.0:
        raise ValueError("lr * l2 must be < 1 for weight decay to stay positive")
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

    dim = feature_space.dim if isinstance(feature_space, SelectedVocab) else feature_space.bins
    n_labels = len(label_list)

    featurized = []
    for text, label in pairs:
        vec = vectorize(text, feature_space)
        idx = np.fromiter(vec.counts.keys(), dtype=np.int64, count=len(vec.counts))
        cnt = np.fromiter(vec.counts.values(), dtype=np.float64, count=len(vec.counts))
        featurized.append((idx, cnt, index[label]))

    weights = np.zeros((n_labels, dim), dtype=np.float64)
    bias = np.zeros(n_labels, dtype=np.float64)
    scale = 1.0
    rng = random.Random(cfg.seed)
    total_steps = cfg.epochs * len(featurized)
    step = 0

    for _ in range(cfg.epochs):
        order = list(range(len(featurized)))
        rng.shuffle(order)
        epoch_loss = 0.0
        for pos in order:
            idx, cnt, row = featurized[pos]
            lr = cfg.lr * (1.0 - step / total_steps)
            step += 1

            scores = scale * (weights[:, idx] @ cnt) + bias
            targets = np.full(n_labels, -1.0)
            targets[row] = 1.0
            margins = targets * scores
            violating = margins < 1.0
            epoch_loss += float(np.sum(1.0 - margins[violating]))

            scale *= 1.0 - lr * cfg.l2
            if violating.any() and idx.size:
                weights[np.ix_(violating, idx)] += np.outer(
                    targets[violating], (lr / scale) * cnt
                )
            if violating.any():
                bias[violating] += lr * targets[violating]
            if scale < 1e-6:
                weights *= scale
                scale = 1.0
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"hinge loss became non-finite (lr={cfg.lr}, l2={cfg.l2})"
            )

    return LinearModel(
        labels=label_list,
        weights=(scale * weights).astype(np.float32),
        bias=bias.astype(np.float32),
        feature_space=feature_space,
    )
