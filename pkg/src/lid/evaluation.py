"""Scoring: confusion matrices, per-label metrics, sweeps, stability runs."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .models import predict


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: bool = False  # a zero denominator was replaced by 0.0


@dataclass
class EvalReport:
    """Everything derived from a (gold, predicted) label stream.

    The confusion matrix is indexed [gold, predicted]. Weighted averages
    use gold supports as weights, so labels absent from the gold stream
    do not dilute them.
    """

    labels: list[str]
    confusion: np.ndarray
    per_label: dict[str, LabelMetrics] = field(init=False)
    accuracy: float = field(init=False)

    def __post_init__(self):
        self.per_label = {
            lab: self._metrics_for(i) for i, lab in enumerate(self.labels)
        }
        total = int(self.confusion.sum())
        self.accuracy = float(np.trace(self.confusion) / total) if total else 0.0

    def _metrics_for(self, i: int) -> LabelMetrics:
        tp = int(self.confusion[i, i])
        gold = int(self.confusion[i, :].sum())
        pred = int(self.confusion[:, i].sum())
        degenerate = gold == 0 or pred == 0
        precision = tp / pred if pred else 0.0
        recall = tp / gold if gold else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return LabelMetrics(precision, recall, f1, gold, degenerate)

    def _weighted(self, labels: Sequence[str]) -> tuple[float, float, float]:
        total = sum(self.per_label[lab].support for lab in labels)
        if total == 0:
            return 0.0, 0.0, 0.0
        p = sum(self.per_label[lab].precision * self.per_label[lab].support for lab in labels)
        r = sum(self.per_label[lab].recall * self.per_label[lab].support for lab in labels)
        f = sum(self.per_label[lab].f1 * self.per_label[lab].support for lab in labels)
        return p / total, r / total, f / total

    @property
    def weighted_precision(self) -> float:
        return self._weighted(self.labels)[0]

    @property
    def weighted_recall(self) -> float:
        return self._weighted(self.labels)[1]

    @property
    def weighted_f1(self) -> float:
        return self._weighted(self.labels)[2]

    def group(self, labels: Sequence[str]) -> tuple[float, float, float]:
        """Support-weighted (precision, recall, f1) over a label subset."""
        unknown = set(labels) - set(self.labels)
        if unknown:
            raise KeyError(f"labels not in report: {sorted(unknown)}")
        return self._weighted(list(labels))

    def to_json(self) -> str:
        doc = {
            "labels": self.labels,
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "per_label": {
                lab: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                    "degenerate": m.degenerate,
                }
                for lab, m in self.per_label.items()
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_table(self) -> str:
        width = max([5] + [len(lab) for lab in self.labels])
        lines = [f"{'label':<{width}}  precision  recall    f1        support"]
        for lab in self.labels:
            m = self.per_label[lab]
            mark = " *" if m.degenerate else ""
            lines.append(
                f"{lab:<{width}}  {m.precision:9.4f}  {m.recall:8.4f}  "
                f"{m.f1:8.4f}  {m.support:7d}{mark}"
            )
        lines.append(
            f"{'all':<{width}}  {self.weighted_precision:9.4f}  "
            f"{self.weighted_recall:8.4f}  {self.weighted_f1:8.4f}  "
            f"{int(self.confusion.sum()):7d}"
        )
        return "\n".join(lines)


def score_predictions(
    gold: Sequence[str], predicted: Sequence[str], labels: Sequence[str] | None = None
) -> EvalReport:
    """Build a report from parallel gold/predicted label streams."""
    if len(gold) != len(predicted):
        raise ValueError("gold and predicted streams differ in length")
    if not gold:
        raise ValueError("nothing to score")
    label_list = sorted(set(gold) | set(predicted)) if labels is None else list(labels)
    index = {lab: i for i, lab in enumerate(label_list)}
    confusion = np.zeros((len(label_list), len(label_list)), dtype=np.int64)
    for g, p in zip(gold, predicted):
        confusion[index[g], index[p]] += 1
    return EvalReport(labels=label_list, confusion=confusion)


def evaluate(model, pairs: Sequence[tuple[str, str]], auto_clean: bool = False) -> EvalReport:
    """Classify (text, gold) pairs and score against the model's inventory."""
    gold = [lab for _, lab in pairs]
    predicted = [predict(model, text, auto_clean=auto_clean)[0][0] for text, _ in pairs]
    labels = sorted(set(model.labels) | set(gold))
    return score_predictions(gold, predicted, labels)


@dataclass(frozen=True)
class SweepPoint:
    size: int
    labels: list[str]
    report: EvalReport


def inventory_sweep(
    train_pairs: Sequence[tuple[str, str]],
    test_pairs: Sequence[tuple[str, str]],
    sizes: Sequence[int],
    train_fn: Callable[[list[tuple[str, str]], list[str]], object],
) -> list[SweepPoint]:
    """Retrain on nested label subsets of growing size.

    Subsets are nested by construction: labels are ranked by training
    sample count (ties alphabetical) and each size takes a prefix of
    that ranking. train_fn receives the filtered pairs and the subset.
    """
    counts = Counter(lab for _, lab in train_pairs)
    ranking = sorted(counts, key=lambda lab: (-counts[lab], lab))
    points = []
    for size in sorted(set(sizes)):
        if size < 2:
            raise ValueError("sweep sizes must be >= 2")
        if size > len(ranking):
            raise ValueError(f"sweep size {size} exceeds the {len(ranking)} trained labels")
        subset = ranking[:size]
        keep = set(subset)
        sub_train = [(t, lab) for t, lab in train_pairs if lab in keep]
        sub_test = [(t, lab) for t, lab in test_pairs if lab in keep]
        if not sub_test:
            raise ValueError(f"no test data for sweep size {size}")
        model = train_fn(sub_train, subset)
        points.append(SweepPoint(size=size, labels=subset, report=evaluate(model, sub_test)))
    return points


class StabilityError(RuntimeError):
    """A seed run failed; carries the (seed, score) runs that did complete."""

    def __init__(self, message: str, completed: list[tuple[int, float]]):
        super().__init__(message)
        self.completed = list(completed)


@dataclass(frozen=True)
class StabilityResult:
    runs: tuple[tuple[int, float], ...]  # (seed, score), in run order

    @property
    def low(self) -> float:
        return min(score for _, score in self.runs)

    @property
    def high(self) -> float:
        return max(score for _, score in self.runs)

    def as_range(self) -> str:
        seeds = [seed for seed, _ in self.runs]
        return f"[{self.low:.4f}, {self.high:.4f}] over seeds {seeds}"


def stability_run(
    run_fn: Callable[[int], float], seeds: Sequence[int] = (0, 1, 2, 3, 4)
) -> StabilityResult:
    """Repeat a scored experiment across seeds; report the score spread.

    Seeds may repeat (that is how a determinism check is phrased). Any
    failure aborts the protocol but preserves the finished runs on the
    raised error, so a long experiment is not silently half-reported.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    runs: list[tuple[int, float]] = []
    for seed in seeds:
        try:
            runs.append((seed, float(run_fn(seed))))
        except Exception as exc:
            raise StabilityError(
                f"seed {seed} failed after {len(runs)} of {len(seeds)} runs "
                f"completed: {exc}",
                completed=runs,
            ) from exc
    return StabilityResult(runs=tuple(runs))
