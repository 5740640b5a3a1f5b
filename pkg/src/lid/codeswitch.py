"""Word-level English detection inside bilingual text.

A binary classifier (English vs. one target language) scores character
windows, words, and short contexts; three tagging strategies turn those
scores into per-word labels. Runs of English-tagged words become
candidate phrases that can be verified with a second prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .models import TrainConfig, train_embed

ENGLISH_LABEL = "eng"
DEFAULT_SPAN_WIDTH = 15


def _word_offsets(words: Sequence[str]) -> list[tuple[int, int]]:
    """Inclusive character ranges of each word in the underscored text."""
    offsets = []
    pos = 0
    for word in words:
        offsets.append((pos, pos + len(word) - 1))
        pos += len(word) + 1
    return offsets


@dataclass
class SpanPredictor:
    """Binary English-vs-target scorer over pieces of a document.

    The wrapped model must know exactly two labels, one of them "eng".
    Spans are fixed-width character windows centered on a word, shifted
    back inside the text at the edges rather than padded.
    """

    model: object
    width: int = DEFAULT_SPAN_WIDTH

    def __post_init__(self):
        labels = list(self.model.labels)
        if len(labels) != 2 or ENGLISH_LABEL not in labels:
            raise ValueError(
                f"span prediction needs a binary eng-vs-target model, got {labels}"
            )
        if self.width < 1:
            raise ValueError("span width must be >= 1")
        self._eng_index = labels.index(ENGLISH_LABEL)

    @property
    def target_label(self) -> str:
        labels = list(self.model.labels)
        return labels[1 - self._eng_index]

    def p_english(self, text: str) -> float:
        return float(self.model.predict_proba(text)[self._eng_index])

    def span_at(self, text: str, word_index: int) -> str:
        words = _split_words(text)
        joined = "_".join(words)
        if len(joined) <= self.width:
            return joined
        start, _ = _word_offsets(words)[word_index]
        center = start + len(words[word_index]) // 2
        lo = max(0, min(center - self.width // 2, len(joined) - self.width))
        return joined[lo : lo + self.width]


def _split_words(text: str) -> list[str]:
    words = [w for w in text.split(" ") if w]
    if not words:
        raise ValueError("no words to tag")
    return words


@dataclass(frozen=True)
class WordTagging:
    """Per-word English probabilities and the resulting labels.

    A word is tagged English when its probability exceeds `threshold`.
    """

    algorithm_id: str
    words: tuple[str, ...]
    probabilities: tuple[float, ...]
    target_label: str
    threshold: float = 0.5
    labels: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        if len(self.words) != len(self.probabilities):
            raise ValueError("one probability per word required")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be within [0, 1]")
        tags = tuple(
            ENGLISH_LABEL if p > self.threshold else self.target_label
            for p in self.probabilities
        )
        object.__setattr__(self, "labels", tags)


def tag_by_word(predictor: SpanPredictor, text: str, threshold: float = 0.5) -> WordTagging:
    """Baseline: score every word in isolation."""
    words = _split_words(text)
    probs = tuple(predictor.p_english(w) for w in words)
    return WordTagging("baseline", tuple(words), probs, predictor.target_label, threshold)


def tag_by_span_average(
    predictor: SpanPredictor, text: str, threshold: float = 0.5
) -> WordTagging:
    """Each word gets the mean score of all spans overlapping it."""
    words = _split_words(text)
    offsets = _word_offsets(words)
    spans = [predictor.span_at(text, i) for i in range(len(words))]
    joined = "_".join(words)

    starts = []
    for i, (wstart, _) in enumerate(offsets):
        if len(joined) <= predictor.width:
            starts.append(0)
            continue
        center = wstart + len(words[i]) // 2
        starts.append(max(0, min(center - predictor.width // 2, len(joined) - predictor.width)))

    scores = [predictor.p_english(span) for span in spans]
    probs = []
    for wstart, wend in offsets:
        covering = [
            scores[j]
            for j, start in enumerate(starts)
            if start <= wend and wstart <= start + len(spans[j]) - 1
        ]
        probs.append(sum(covering) / len(covering))
    return WordTagging("alg1", tuple(words), tuple(probs), predictor.target_label, threshold)


def tag_by_word_context(
    predictor: SpanPredictor, text: str, threshold: float = 0.5
) -> WordTagging:
    """Reconcile the isolated-word score with a three-word context score.

    When the document as a whole reads as English the more confident of
    the two is kept, otherwise the more conservative one. The document
    branch always splits at 0.5; `threshold` only affects the final tags.
    """
    words = _split_words(text)
    p_sample = predictor.p_english(" ".join(words))
    pick = max if p_sample > 0.5 else min
    probs = []
    for i, word in enumerate(words):
        p_word = predictor.p_english(word)
        context = " ".join(words[max(0, i - 1) : i + 2])
        p_context = predictor.p_english(context)
        probs.append(pick(p_word, p_context))
    return WordTagging("alg2", tuple(words), tuple(probs), predictor.target_label, threshold)


TAGGERS = {
    "alg1": tag_by_span_average,
    "alg2": tag_by_word_context,
    "baseline": tag_by_word,
}


def tag_words(
    predictor: SpanPredictor, text: str, algorithm: str = "alg2", threshold: float = 0.5
) -> WordTagging:
    try:
        tagger = TAGGERS[algorithm]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {algorithm!r}; choose from {sorted(TAGGERS)}"
        ) from None
    return tagger(predictor, text, threshold)


@dataclass(frozen=True)
class EnglishPhrase:
    """A maximal run of English-tagged words."""

    words: tuple[str, ...]
    start: int  # word index, inclusive
    end: int    # word index, exclusive
    mean_prob: float

    @property
    def text(self) -> str:
        return " ".join(self.words)


def extract_phrases(tagging: WordTagging, min_len: int = 3) -> list[EnglishPhrase]:
    """Maximal English runs of at least min_len words."""
    if min_len < 1:
        raise ValueError("min_len must be >= 1")
    phrases = []
    run_start = None
    for i in range(len(tagging.labels) + 1):
        if i < len(tagging.labels) and tagging.labels[i] == ENGLISH_LABEL:
            if run_start is None:
                run_start = i
            continue
        if run_start is not None and i - run_start >= min_len:
            probs = tagging.probabilities[run_start:i]
            phrases.append(
                EnglishPhrase(
                    words=tagging.words[run_start:i],
                    start=run_start,
                    end=i,
                    mean_prob=sum(probs) / len(probs),
                )
            )
        run_start = None
    return phrases


def verify_phrase(
    predictor: SpanPredictor, phrase: EnglishPhrase, threshold: float = 0.5
) -> bool:
    """Second-pass check: does the phrase alone still read as English?"""
    return predictor.p_english(phrase.text) > threshold


def train_pair_model(
    pairs: Sequence[tuple[str, str]],
    target_label: str,
    width: int = DEFAULT_SPAN_WIDTH,
    cfg: TrainConfig | None = None,
    **embed_kwargs,
) -> SpanPredictor:
    """Train the binary eng-vs-target scorer from a labeled mixture.

    Anything outside the two labels is discarded. Keyword arguments are
    forwarded to the embedding trainer (dim, buckets, n_range, ...).
    """
    if target_label == ENGLISH_LABEL:
        raise ValueError("target label must differ from 'eng'")
    keep = [(t, lab) for t, lab in pairs if lab in (ENGLISH_LABEL, target_label)]
    present = {lab for _, lab in keep}
    if present != {ENGLISH_LABEL, target_label}:
        raise ValueError(
            f"need samples for both 'eng' and {target_label!r}, got {sorted(present)}"
        )
    embed_kwargs.setdefault("neg_samples", 1)
    model = train_embed(keep, cfg or TrainConfig(lr=0.1), **embed_kwargs)
    return SpanPredictor(model=model, width=width)
