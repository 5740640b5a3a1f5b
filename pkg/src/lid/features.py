"""Character n-gram feature spaces.

Two alternatives are supported: a vocabulary of the top-k n-grams ranked
by information gain, and a fixed-size hashing space. Word boundaries are
rendered as "_" so that n-grams can express word-edge patterns.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

BOUNDARY = "_"


@dataclass(frozen=True)
class SparseVector:
    """Feature index -> positive count, over a space of size `dim`."""

    counts: dict[int, int]
    dim: int

    def __post_init__(self):
        for idx, c in self.counts.items():
            if not (0 <= idx < self.dim):
                raise ValueError(f"index {idx} out of range for dimension {self.dim}")
            if c <= 0:
                raise ValueError(f"count for index {idx} must be positive, got {c}")

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass
class SelectedVocab:
    """Top-k n-grams of one order, ranked by information gain."""

    n: int
    entries: dict[str, int]
    ig_scores: list[float]
    k: int

    @property
    def dim(self) -> int:
        return len(self.entries)

    def to_lines(self) -> str:
        ordered = sorted(self.entries.items(), key=lambda kv: kv[1])
        return "".join(f"{g}\t{i}\t{self.ig_scores[i]:.17g}\n" for g, i in ordered)

    @classmethod
    def from_lines(cls, text: str, n: int, k: int) -> "SelectedVocab":
        entries: dict[str, int] = {}
        scores: list[float] = []
        for line in text.splitlines():
            if not line:
                continue
            gram, idx, score = line.split("\t")
            entries[gram] = int(idx)
            scores.append(float(score))
        return cls(n=n, entries=entries, ig_scores=scores, k=k)


@dataclass
class HashedSpace:
    """Fixed-bin feature space; n-grams land in bins via FNV-1a 32."""

    bins: int = 150_000
    n_range: tuple[int, int] = (1, 3)
    hash_id: str = "fnv1a32"

    @property
    def dim(self) -> int:
        return self.bins


def fnv1a32(data: bytes) -> int:
    h = 0x811C9DC5
    for b in data:
        h = (h ^ b) * 0x01000193 & 0xFFFFFFFF
    return h


def extract_ngrams(text: str, n_min: int, n_max: int) -> Counter:
    """Multiset of all contiguous n-grams, n_min <= n <= n_max.

    Spaces are first normalized to the boundary symbol. Text shorter
    than n_min yields an empty multiset.
    """
    if not (1 <= n_min <= n_max <= 4):
        raise ValueError(f"n-gram range must satisfy 1 <= n_min <= n_max <= 4, got ({n_min}, {n_max})")
    s = text.replace(" ", BOUNDARY)
    counts: Counter = Counter()
    for n in range(n_min, n_max + 1):
        for i in range(len(s) - n + 1):
            counts[s[i : i + n]] += 1
    return counts


def iter_ngrams(text: str, n_min: int, n_max: int) -> list[str]:
    """Like extract_ngrams but keeps extraction order and multiplicity."""
    if not (1 <= n_min <= n_max <= 4):
        raise ValueError(f"n-gram range must satisfy 1 <= n_min <= n_max <= 4, got ({n_min}, {n_max})")
    s = text.replace(" ", BOUNDARY)
    grams = []
    for n in range(n_min, n_max + 1):
        for i in range(len(s) - n + 1):
            grams.append(s[i : i + n])
    return grams


def _entropy_bits(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _presence_table(pairs, n: int):
    """Per-label presence counts for every distinct n-gram of order n."""
    labels = sorted({lab for _, lab in pairs})
    label_idx = {lab: i for i, lab in enumerate(labels)}
    label_totals = np.zeros(len(labels), dtype=np.int64)
    presence: dict[str, np.ndarray] = {}
    for text, lab in pairs:
        li = label_idx[lab]
        label_totals[li] += 1
        for gram in set(iter_ngrams(text, n, n)):
            row = presence.get(gram)
            if row is None:
                row = np.zeros(len(labels), dtype=np.int64)
                presence[gram] = row
            row[li] += 1
    return labels, label_totals, presence


def _ig_from_presence(present: np.ndarray, label_totals: np.ndarray) -> float:
    total = label_totals.sum()
    absent = label_totals - present
    n_pres = present.sum()
    n_abs = total - n_pres
    h_prior = _entropy_bits(label_totals)
    h_cond = 0.0
    if n_pres:
        h_cond += (n_pres / total) * _entropy_bits(present)
    if n_abs:
        h_cond += (n_abs / total) * _entropy_bits(absent)
    return h_prior - h_cond


def information_gain(feature: str, pairs) -> float:
    """Reduction in label entropy (bits) from observing presence of `feature`.

    pairs: sequence of (text, label). Presence is binary: the sample
    contains the n-gram at least once.
    """
    labels = {lab for _, lab in pairs}
    if len(labels) < 2:
        raise ValueError("information gain needs at least 2 labels")
    n = len(feature)
    ordered = sorted(labels)
    label_idx = {lab: i for i, lab in enumerate(ordered)}
    present = np.zeros(len(ordered), dtype=np.int64)
    totals = np.zeros(len(ordered), dtype=np.int64)
    for text, lab in pairs:
        totals[label_idx[lab]] += 1
        if feature in extract_ngrams(text, n, n):
            present[label_idx[lab]] += 1
    return _ig_from_presence(present, totals)


def select_top_k(pairs, n: int = 3, k: int = 75_000) -> SelectedVocab:
    """Pick the k n-grams with highest information gain.

    Ties break lexicographically; indices are assigned in rank order.
    Returns fewer than k entries when fewer distinct n-grams exist.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    labels = {lab for _, lab in pairs}
    if len(labels) < 2:
        raise ValueError("feature selection needs at least 2 labels")
    _, label_totals, presence = _presence_table(pairs, n)
    scored = [(gram, _ig_from_presence(row, label_totals)) for gram, row in presence.items()]
    scored.sort(key=lambda item: (-item[1], item[0]))
    top = scored[:k]
    return SelectedVocab(
        n=n,
        entries={gram: i for i, (gram, _) in enumerate(top)},
        ig_scores=[score for _, score in top],
        k=k,
    )


def vectorize_selected(text: str, vocab: SelectedVocab) -> SparseVector:
    """Counts of in-vocabulary n-grams; out-of-vocabulary ones are dropped."""
    counts: dict[int, int] = {}
    for gram, c in extract_ngrams(text, vocab.n, vocab.n).items():
        idx = vocab.entries.get(gram)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + c
    return SparseVector(counts, vocab.dim)


def vectorize_hashed(text: str, space: HashedSpace) -> SparseVector:
    """Counts accumulated per hash bin; collisions add together."""
    counts: dict[int, int] = {}
    n_min, n_max = space.n_range
    for gram, c in extract_ngrams(text, n_min, n_max).items():
        idx = fnv1a32(gram.encode("utf-8")) % space.bins
        counts[idx] = counts.get(idx, 0) + c
    return SparseVector(counts, space.bins)


def vectorize(text: str, space) -> SparseVector:
    if isinstance(space, SelectedVocab):
        return vectorize_selected(text, space)
    if isinstance(space, HashedSpace):
        return vectorize_hashed(text, space)
    raise TypeError(f"unsupported feature space {type(space).__name__}")
