"""Synthetic corpora for benchmarks that cannot depend on real data.

Every language draws words over the same lowercase alphabet; what
differs is the character distribution. Each language mixes one shared
distribution with a private, permuted one. The overlap knob slides the
task from trivially separable (0.0, fully private) to impossible (1.0,
all languages identical).
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .corpus import Sample, validate_label

ALPHABET = string.ascii_lowercase
_DECAY = 0.85


@dataclass
class SyntheticLangSpec:
    label: str
    char_probs: np.ndarray
    alphabet: str = ALPHABET
    word_len_range: tuple[int, int] = (2, 8)

    def __post_init__(self):
        validate_label(self.label)
        if len(self.char_probs) != len(self.alphabet):
            raise ValueError("one probability per alphabet character required")
        if abs(float(self.char_probs.sum()) - 1.0) > 1e-9:
            raise ValueError("character probabilities must sum to 1")


def synth_label(i: int) -> str:
    """Stable label sequence saa, sab, ..., saz, sba, ..."""
    if not 0 <= i < 26 * 26:
        raise ValueError("synthetic label index out of range")
    return "s" + chr(ord("a") + i // 26) + chr(ord("a") + i % 26)


def make_language_specs(
    n_langs: int,
    overlap: float,
    seed: int = 0,
    labels: list[str] | None = None,
) -> list[SyntheticLangSpec]:
    """Build n language specs whose similarity is set by `overlap`.

    Every language's distribution is overlap * shared + (1 - overlap) *
    private, where the private part is a per-language permutation of a
    geometric profile. overlap=1.0 therefore produces identical specs.
    """
    if n_langs < 1:
        raise ValueError("need at least one language")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must be within [0, 1]")
    if labels is not None and len(labels) != n_langs:
        raise ValueError("one label per language required")

    profile = _DECAY ** np.arange(len(ALPHABET))
    profile /= profile.sum()
    shared = profile.copy()

    specs = []
    for i in range(n_langs):
        rng = np.random.default_rng([seed, i])
        private = rng.permutation(profile)
        probs = overlap * shared + (1.0 - overlap) * private
        probs /= probs.sum()
        label = labels[i] if labels is not None else synth_label(i)
        specs.append(SyntheticLangSpec(label=label, char_probs=probs))
    return specs


def _sample_text(spec: SyntheticLangSpec, rng: np.random.Generator, n_words: int) -> str:
    lo, hi = spec.word_len_range
    lengths = rng.integers(lo, hi + 1, size=n_words)
    chars = rng.choice(list(spec.alphabet), size=int(lengths.sum()), p=spec.char_probs)
    words, start = [], 0
    for length in lengths:
        words.append("".join(chars[start : start + length]))
        start += length
    return " ".join(words)


def generate_corpus(
    specs: list[SyntheticLangSpec],
    samples_per_lang: int,
    seed: int = 0,
    words_range: tuple[int, int] = (5, 15),
) -> list[Sample]:
    """Draw `samples_per_lang` texts per language, deterministically.

    Each language streams from its own generator keyed on (seed, label
    index), so adding languages never reshuffles existing ones.
    """
    if samples_per_lang < 1:
        raise ValueError("samples_per_lang must be >= 1")
    lo, hi = words_range
    samples = []
    for i, spec in enumerate(specs):
        rng = np.random.default_rng([seed, i, 1])
        for seq in range(samples_per_lang):
            n_words = int(rng.integers(lo, hi + 1))
            samples.append(
                Sample(
                    text=_sample_text(spec, rng, n_words),
                    label=spec.label,
                    domain="synth",
                    source=f"synth:{spec.label}",
                    seq=seq,
                )
            )
    return samples


@dataclass(frozen=True)
class MixedDoc:
    """A document with word-level gold labels (two languages interleaved)."""

    words: tuple[str, ...]
    word_labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.words) != len(self.word_labels):
            raise ValueError("one label per word required")

    @property
    def text(self) -> str:
        return " ".join(self.words)


def generate_mixed_docs(
    target: SyntheticLangSpec,
    other: SyntheticLangSpec,
    n_docs: int,
    seed: int = 0,
    inject_rate: float = 0.3,
    run_range: tuple[int, int] = (3, 6),
    words_range: tuple[int, int] = (20, 40),
) -> list[MixedDoc]:
    """Interleave runs of `other` words into `target` documents.

    A quota of round(inject_rate * total_words) foreign words is split
    into runs of run_range length (the last run may be shorter to land
    the quota exactly) and spliced at random word gaps.
    """
    if not 0.0 < inject_rate < 1.0:
        raise ValueError("inject_rate must be strictly between 0 and 1")
    run_lo, run_hi = run_range
    if run_lo < 1 or run_hi < run_lo:
        raise ValueError("bad run length range")

    docs = []
    rng = np.random.default_rng([seed, 2])
    for _ in range(n_docs):
        total = int(rng.integers(words_range[0], words_range[1] + 1))
        quota = int(round(inject_rate * total))
        runs = []
        while quota > 0:
            length = min(int(rng.integers(run_lo, run_hi + 1)), quota)
            runs.append(length)
            quota -= length

        n_target = total - sum(runs)
        target_words = _sample_text(target, rng, n_target).split(" ")
        gaps = rng.choice(n_target + 1, size=len(runs), replace=False)

        words: list[str] = []
        labels: list[str] = []
        by_gap = dict(zip(sorted(int(g) for g in gaps), runs))
        for pos in range(n_target + 1):
            run = by_gap.get(pos)
            if run:
                foreign = _sample_text(other, rng, run).split(" ")
                words.extend(foreign)
                labels.extend([other.label] * run)
            if pos < n_target:
                words.append(target_words[pos])
                labels.append(target.label)
        docs.append(MixedDoc(words=tuple(words), word_labels=tuple(labels)))
    return docs
