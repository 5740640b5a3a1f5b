"""Shared training/prediction plumbing for all classifier architectures."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from ..corpus import clean_text


class NoSignalError(ValueError):
    """Raised when there is nothing left to classify after cleaning."""


class TrainingDivergedError(RuntimeError):
    """Raised when a training run produces a non-finite loss."""


@dataclass
class TrainConfig:
    """Knobs shared by the gradient-trained models.

    `lr` is the starting value of a linear decay-to-zero schedule.
    `subset_cap`, when set, limits training to that many samples chosen
    by a seeded shuffle.
    """

    epochs: int = 5
    lr: float = 0.1
    batch_size: int = 32
    seed: int = 0
    subset_cap: int | None = None
    patience: int = 3
    l2: float = 1e-4

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("learning rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


def apply_subset_cap(items: list, cap: int | None, seed: int) -> list:
    """Seeded shuffle, then keep the first `cap` items."""
    if cap is None or cap >= len(items):
        return list(items)
    shuffled = list(items)
    random.Random(f"cap:{seed}").shuffle(shuffled)
    return shuffled[:cap]


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict(model, text: str, auto_clean: bool = True) -> list[tuple[str, float]]:
    """Full label distribution for one text, sorted by descending probability.

    Cleans the input first unless auto_clean is False; raises
    NoSignalError when nothing remains to classify.
    """
    if auto_clean:
        text = clean_text(text)
    if not text:
        raise NoSignalError("no signal: text is empty after cleaning")
    probs = model.predict_proba(text)
    pairs = sorted(zip(model.labels, probs.tolist()), key=lambda kv: (-kv[1], kv[0]))
    return pairs


def predict_topk(model, text: str, k: int, auto_clean: bool = True) -> list[tuple[str, float]]:
    return predict(model, text, auto_clean=auto_clean)[:k]
