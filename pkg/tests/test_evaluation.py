"""Metric arithmetic against hand-worked examples, plus sweep/stability
protocol behavior."""

import json
import math

import numpy as np
import pytest

from lid.evaluation import (
    StabilityError,
    evaluate,
    inventory_sweep,
    score_predictions,
    stability_run,
)
from lid.features import HashedSpace
from lid.models import train_nb

GOLD = ["aaa", "aaa", "aaa", "bbb", "bbb", "ccc"]
PRED = ["aaa", "bbb", "aaa", "bbb", "bbb", "aaa"]


def test_confusion_matrix_is_gold_rows_predicted_columns():
    report = score_predictions(GOLD, PRED)
    assert report.labels == ["aaa", "bbb", "ccc"]
    assert report.confusion.tolist() == [[2, 1, 0], [0, 2, 0], [1, 0, 0]]


def test_per_label_metrics_match_hand_computation():
    report = score_predictions(GOLD, PRED)
    a = report.per_label["aaa"]
    assert math.isclose(a.precision, 2 / 3) and math.isclose(a.recall, 2 / 3)
    assert math.isclose(a.f1, 2 / 3) and a.support == 3 and not a.degenerate

    b = report.per_label["bbb"]
    assert math.isclose(b.precision, 2 / 3) and b.recall == 1.0
    assert math.isclose(b.f1, 0.8)

    c = report.per_label["ccc"]
    assert c.precision == 0.0 and c.recall == 0.0 and c.f1 == 0.0
    assert c.degenerate and c.support == 1


def test_weighted_averages_use_gold_support():
    report = score_predictions(GOLD, PRED)
    assert math.isclose(report.accuracy, 2 / 3)
    assert math.isclose(report.weighted_precision, 5 / 9)
    assert math.isclose(report.weighted_recall, 2 / 3)
    assert math.isclose(report.weighted_f1, 0.6)


def test_group_view_restricts_the_weighting():
    report = score_predictions(GOLD, PRED)
    p, r, f = report.group(["aaa", "bbb"])
    assert math.isclose(p, 2 / 3) and math.isclose(r, 0.8) and math.isclose(f, 0.72)
    with pytest.raises(KeyError, match="zzz"):
        report.group(["zzz"])


def test_label_absent_from_gold_does_not_dilute_averages():
    report = score_predictions(["aaa", "bbb"], ["aaa", "bbb"], labels=["aaa", "bbb", "ccc"])
    assert report.per_label["ccc"].support == 0
    assert report.per_label["ccc"].degenerate
    assert report.weighted_f1 == 1.0


def test_score_predictions_validation():
    with pytest.raises(ValueError, match="length"):
        score_predictions(["aaa"], [])
    with pytest.raises(ValueError, match="nothing"):
        score_predictions([], [])


def test_report_serializes_to_json_and_table():
    report = score_predictions(GOLD, PRED)
    doc = json.loads(report.to_json())
    assert doc["weighted"]["f1"] == pytest.approx(0.6)
    assert doc["confusion"][0] == [2, 1, 0]

    table = report.to_table()
    lines = table.splitlines()
    assert lines[0].startswith("label")
    assert lines[-1].startswith("all")
    assert any("ccc" in line and "*" in line for line in lines)


def toy_pairs():
    pairs = []
    for i in range(20):
        pairs.append((f"arena alpha ar{'a' * (i % 3)}", "aaa"))
        pairs.append((f"bulb borb bo{'b' * (i % 3)}", "bbb"))
        pairs.append((f"cicada cac{'c' * (i % 3)}", "ccc"))
    return pairs


def test_evaluate_runs_a_model_over_labeled_pairs():
    model = train_nb(toy_pairs(), HashedSpace(bins=509))
    report = evaluate(model, toy_pairs())
    assert report.accuracy == 1.0
    assert report.weighted_f1 == 1.0


def test_inventory_sweep_builds_nested_subsets_by_train_count():
    train = toy_pairs() + [("arena extra", "aaa"), ("alpha more", "aaa"), ("bulb extra", "bbb")]
    test = toy_pairs()
    seen = []

    def train_fn(pairs, labels):
        seen.append(list(labels))
        assert {lab for _, lab in pairs} == set(labels)
        return train_nb(pairs, HashedSpace(bins=509), labels=labels)

    points = inventory_sweep(train, test, sizes=[3, 2], train_fn=train_fn)
    assert [p.size for p in points] == [2, 3]
    # aaa has the most training samples, then bbb, then ccc
    assert points[0].labels == ["aaa", "bbb"]
    assert points[1].labels == ["aaa", "bbb", "ccc"]
    assert set(points[0].labels) <= set(points[1].labels)
    assert all(p.report.weighted_f1 == 1.0 for p in points)
    assert seen == [["aaa", "bbb"], ["aaa", "bbb", "ccc"]]


def test_inventory_sweep_rejects_bad_sizes():
    pairs = toy_pairs()
    fn = lambda p, labels: train_nb(p, HashedSpace(bins=127), labels=labels)
    with pytest.raises(ValueError, match="exceeds"):
        inventory_sweep(pairs, pairs, sizes=[4], train_fn=fn)
    with pytest.raises(ValueError, match=">= 2"):
        inventory_sweep(pairs, pairs, sizes=[1], train_fn=fn)


def test_stability_run_reports_the_score_spread():
    result = stability_run(lambda seed: 0.9 + seed / 100, seeds=(0, 1, 2))
    assert result.low == 0.9
    assert result.high == 0.92
    assert result.as_range() == "[0.9000, 0.9200] over seeds [0, 1, 2]"


def test_stability_run_is_tight_for_a_deterministic_experiment():
    result = stability_run(lambda seed: 0.875, seeds=(0, 1, 2, 3, 4))
    assert result.low == result.high == 0.875


def test_stability_run_allows_repeated_seeds():
    result = stability_run(lambda seed: 0.5, seeds=(7, 7, 7))
    assert result.runs == ((7, 0.5), (7, 0.5), (7, 0.5))
    assert result.low == result.high


def test_stability_run_failure_preserves_completed_scores():
    def flaky(seed):
        if seed == 2:
            raise RuntimeError("boom")
        return float(seed)

    with pytest.raises(StabilityError, match="seed 2 failed after 2 of 4") as info:
        stability_run(flaky, seeds=(0, 1, 2, 3))
    assert info.value.completed == [(0, 0.0), (1, 1.0)]


def test_stability_run_needs_seeds():
    with pytest.raises(ValueError):
        stability_run(lambda s: 1.0, seeds=())
