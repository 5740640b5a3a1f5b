"""Multinomial Naive Bayes over character n-gram counts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..features import HashedSpace, SelectedVocab, vectorize
from .base import softmax


@dataclass
class NaiveBayesModel:
    """Count-based baseline; parameters are stored as float64 logs.

    Rows of log_likelihoods follow the order of `labels`, columns the
    feature index space.
    """

    labels: list[str]
    log_priors: np.ndarray        # (L,)
    log_likelihoods: np.ndarray   # (L, V)
    alpha: float
    feature_space: SelectedVocab | HashedSpace
    config_digest: str = field(default="", compare=False)

    arch = "nb"

    def predict_proba(self, text: str) -> np.ndarray:
        vec = vectorize(text, self.feature_space)
        scores = self.log_priors.copy()
        for idx, count in vec.counts.items():
            scores += count * self.log_likelihoods[:, idx]
        return softmax(scores)


def train_nb(
    pairs: Sequence[tuple[str, str]],
    feature_space: SelectedVocab | HashedSpace,
    alpha: float = 1.0,
    labels: Sequence[str] | None = None,
) -> NaiveBayesModel:
    """Fit priors and smoothed likelihoods by counting.

    likelihood(label, feature) = (count + alpha) / (total + alpha * V),
    prior(label) = samples(label) / samples. Passing `labels` fixes the
    row order; every training label must appear in it.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if not pairs:
        raise ValueError("training set is empty")

    seen = sorted({label for _, label in pairs})
    if labels is None:
        label_list = seen
    else:
        label_list = list(labels)
        missing = set(seen) - set(label_list)
        if missing:
            raise ValueError(f"training labels not in label list: {sorted(missing)}")
    if len(label_list) < 2:
        raise ValueError("need at least two labels")

    index = {lab: i for i, lab in enumerate(label_list)}
    dim = feature_space.dim if isinstance(feature_space, SelectedVocab) else feature_space.bins
    counts = np.zeros((len(label_list), dim), dtype=np.float64)
    docs = np.zeros(len(label_list), dtype=np.float64)

    for text, label in pairs:
        row = index[label]
        docs[row] += 1
        for idx, count in vectorize(text, feature_space).counts.items():
            counts[row, idx] += count

    totals = counts.sum(axis=1)
    log_lik = np.log(counts + alpha) - np.log(totals + alpha * dim)[:, None]
    # Labels absent from the training set keep a zero prior, which is the
    # honest answer: they can never win.
    with np.errstate(divide="ignore"):
        log_priors = np.log(docs) - np.log(docs.sum())

    return NaiveBayesModel(
        labels=label_list,
        log_priors=log_priors,
        log_likelihoods=log_lik,
        alpha=alpha,
        feature_space=feature_space,
    )
