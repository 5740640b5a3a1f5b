"""Word tagging over mixed-language text, checked against a scripted
binary scorer so every rule is verifiable by hand."""

import numpy as np
import pytest

from lid.codeswitch import (
    SpanPredictor,
    WordTagging,
    extract_phrases,
    tag_by_span_average,
    tag_by_word,
    tag_by_word_context,
    tag_words,
    train_pair_model,
    verify_phrase,
)
from lid.models import TrainConfig
from lid.synth import generate_corpus, make_language_specs


class ScriptedModel:
    """predict_proba driven by a text -> P(english) lookup table."""

    def __init__(self, script, default=0.5, labels=("eng", "mri")):
        self.script = dict(script)
        self.default = default
        self.labels = list(labels)

    def predict_proba(self, text):
        p = self.script.get(text, self.default)
        out = np.empty(2)
        out[self.labels.index("eng")] = p
        out[1 - self.labels.index("eng")] = 1.0 - p
        return out


def scripted(script=(), width=5, default=0.5, labels=("eng", "mri")):
    return SpanPredictor(ScriptedModel(script, default, labels), width=width)


# --- spans -------------------------------------------------------------------


def test_span_windows_are_centered_and_shifted_at_the_edges():
    text = "awesome video diaries ka mau te wehi e te whanau"
    predictor = scripted(width=20)
    assert predictor.span_at(text, 0) == "awesome_video_diarie"
    assert predictor.span_at(text, 3) == "_diaries_ka_mau_te_w"
    assert predictor.span_at(text, 4) == "aries_ka_mau_te_wehi"
    assert all(len(predictor.span_at(text, i)) == 20 for i in range(10))


def test_short_text_yields_the_whole_text_as_span():
    predictor = scripted(width=50)
    assert predictor.span_at("ka mau", 0) == "ka_mau"
    assert predictor.span_at("ka mau", 1) == "ka_mau"


def test_span_predictor_requires_a_binary_english_model():
    three = ScriptedModel({}, labels=("eng", "mri", "spa"))
    three.labels = ["eng", "mri", "spa"]
    with pytest.raises(ValueError, match="binary"):
        SpanPredictor(three)
    with pytest.raises(ValueError, match="binary"):
        SpanPredictor(ScriptedModel({}, labels=("mri", "spa")))
    with pytest.raises(ValueError, match="width"):
        scripted(width=0)


def test_p_english_is_label_order_independent():
    a = scripted({"hello": 0.8}, labels=("eng", "mri"))
    b = scripted({"hello": 0.8}, labels=("mri", "eng"))
    assert a.p_english("hello") == b.p_english("hello") == 0.8
    assert a.target_label == b.target_label == "mri"


# --- taggers -----------------------------------------------------------------


def test_baseline_scores_each_word_in_isolation():
    predictor = scripted({"aa": 0.9, "bb": 0.2, "cc": 0.7})
    tagging = tag_by_word(predictor, "aa bb cc")
    assert tagging.algorithm_id == "baseline"
    assert tagging.probabilities == (0.9, 0.2, 0.7)
    assert tagging.labels == ("eng", "mri", "eng")


def test_span_average_means_over_covering_windows():
    # "aa bb cc" -> joined "aa_bb_cc"; width 5 gives spans
    # "aa_bb" (start 0), "_bb_c" (start 2), "bb_cc" (start 3)
    predictor = scripted({"aa_bb": 0.9, "_bb_c": 0.3, "bb_cc": 0.6})
    tagging = tag_by_span_average(predictor, "aa bb cc")
    assert tagging.algorithm_id == "alg1"
    want = (0.9, (0.9 + 0.3 + 0.6) / 3, (0.3 + 0.6) / 2)
    assert all(abs(g - w) < 1e-12 for g, w in zip(tagging.probabilities, want))
    assert tagging.labels == ("eng", "eng", "mri")


def test_span_average_on_short_text_scores_every_word_alike():
    predictor = scripted({"aa_bb": 0.7}, width=50)
    tagging = tag_by_span_average(predictor, "aa bb")
    assert tagging.probabilities == (0.7, 0.7)


def test_context_tagger_takes_max_when_the_document_reads_english():
    script = {
        "aa bb cc": 0.8,  # document score: english side
        "aa": 0.2, "bb": 0.7, "cc": 0.1,
        "aa bb": 0.6, "bb cc": 0.05,
    }
    tagging = tag_by_word_context(scripted(script), "aa bb cc")
    assert tagging.algorithm_id == "alg2"
    assert tagging.probabilities == (max(0.2, 0.6), max(0.7, 0.8), max(0.1, 0.05))


def test_context_tagger_takes_min_when_the_document_does_not():
    script = {
        "aa bb cc": 0.4,
        "aa": 0.2, "bb": 0.7, "cc": 0.1,
        "aa bb": 0.6, "bb cc": 0.05,
    }
    tagging = tag_by_word_context(scripted(script), "aa bb cc")
    assert tagging.probabilities == (min(0.2, 0.6), min(0.7, 0.4), min(0.1, 0.05))


def test_tag_words_dispatches_by_algorithm_id():
    predictor = scripted({"aa": 0.9})
    assert tag_words(predictor, "aa", "baseline").algorithm_id == "baseline"
    assert tag_words(predictor, "aa", "alg1").algorithm_id == "alg1"
    assert tag_words(predictor, "aa", "alg2").algorithm_id == "alg2"
    with pytest.raises(ValueError, match="unknown algorithm"):
        tag_words(predictor, "aa", "alg3")


def test_taggers_reject_empty_text():
    with pytest.raises(ValueError, match="no words"):
        tag_by_word(scripted(), "   ")


def test_word_tagging_validates_lengths():
    with pytest.raises(ValueError, match="one probability per word"):
        WordTagging("baseline", ("a", "b"), (0.5,), "mri")


# --- phrases -----------------------------------------------------------------


def make_tagging(probs):
    words = tuple(f"w{i}" for i in range(len(probs)))
    return WordTagging("baseline", words, tuple(probs), "mri")


def test_extract_phrases_finds_maximal_english_runs():
    tagging = make_tagging([0.9, 0.8, 0.7, 0.2, 0.6, 0.9, 0.95, 0.1])
    phrases = extract_phrases(tagging, min_len=3)
    assert [(p.start, p.end) for p in phrases] == [(0, 3), (4, 7)]
    assert phrases[0].words == ("w0", "w1", "w2")
    assert phrases[0].text == "w0 w1 w2"
    assert abs(phrases[1].mean_prob - (0.6 + 0.9 + 0.95) / 3) < 1e-12


def test_extract_phrases_handles_a_run_reaching_the_end():
    tagging = make_tagging([0.1, 0.9, 0.9, 0.9])
    phrases = extract_phrases(tagging, min_len=3)
    assert [(p.start, p.end) for p in phrases] == [(1, 4)]


def test_extract_phrases_drops_short_runs():
    tagging = make_tagging([0.9, 0.9, 0.1, 0.9])
    assert extract_phrases(tagging, min_len=3) == []
    assert len(extract_phrases(tagging, min_len=1)) == 2
    with pytest.raises(ValueError):
        extract_phrases(tagging, min_len=0)


def test_verify_phrase_rechecks_the_phrase_text():
    tagging = make_tagging([0.9, 0.9, 0.9])
    (phrase,) = extract_phrases(tagging)
    good = scripted({"w0 w1 w2": 0.8})
    bad = scripted({"w0 w1 w2": 0.3})
    assert verify_phrase(good, phrase) is True
    assert verify_phrase(bad, phrase) is False


# --- training the pair model -------------------------------------------------


def test_train_pair_model_learns_a_usable_binary_scorer():
    specs = make_language_specs(2, overlap=0.1, seed=5, labels=["eng", "mri"])
    corpus = generate_corpus(specs, samples_per_lang=120, seed=5)
    pairs = [(s.text, s.label) for s in corpus]
    predictor = train_pair_model(
        pairs, "mri", cfg=TrainConfig(epochs=6, lr=0.3, seed=0), dim=16, buckets=4096
    )
    assert predictor.target_label == "mri"
    eng_text = next(t for t, lab in pairs if lab == "eng")
    mri_text = next(t for t, lab in pairs if lab == "mri")
    assert predictor.p_english(eng_text) > 0.5
    assert predictor.p_english(mri_text) < 0.5


def test_train_pair_model_validation():
    pairs = [("aaa bbb", "eng"), ("ccc ddd", "mri")]
    with pytest.raises(ValueError, match="differ from 'eng'"):
        train_pair_model(pairs, "eng")
    with pytest.raises(ValueError, match="both"):
        train_pair_model([("aaa", "eng")], "mri")
    # off-pair labels are discarded, not an error
    extra = pairs * 30 + [("zzz", "spa")]
    predictor = train_pair_model(
        extra, "mri", cfg=TrainConfig(epochs=1, lr=0.1), dim=4, buckets=256
    )
    assert sorted(predictor.model.labels) == ["eng", "mri"]
