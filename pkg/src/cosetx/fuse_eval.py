"""Fusing classifier scores with exemplar-set similarity, plus evaluation.

Fusion adds ``lambda_weight`` times the pair-class similarity to the
classifier's per-class score, on whatever scale the classifier exports
(logits or probabilities); the weight absorbs scale. The negative label is an
ordinary class for fusion and only becomes special in micro-averaged scoring,
where it is excluded from both predicted-positive and gold-positive tallies.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Embedding, ExemplarSet, ExpansionConfig
from .errors import ValidationError
from .scoring import pair_class_score


def _argmax_class(scores: Mapping[str, float]) -> str:
    # Ties go to the lexicographically smallest name, for platform-independent
    # determinism.
    return min(scores, key=lambda name: (-scores[name], name))


@dataclass(frozen=True)
class ClassifierScores:
    """One pair's external classifier scores, one real value per class."""

    pair_id: str
    scores: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.pair_id:
            raise ValidationError("classifier scores require a pair id")
        if not self.scores:
            raise ValidationError(f"pair {self.pair_id!r}: empty score map")
        frozen = {}
        for name, value in self.scores.items():
            value = float(value)
            if not math.isfinite(value):
                raise ValidationError(
                    f"pair {self.pair_id!r}: non-finite score for class {name!r}"
                )
            frozen[name] = value
        object.__setattr__(self, "scores", frozen)


@dataclass(frozen=True)
class Prediction:
    pair_id: str
    predicted_class: str
    fused_scores: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "fused_scores", dict(self.fused_scores))
        if self.predicted_class != _argmax_class(self.fused_scores):
            raise ValidationError(
                f"pair {self.pair_id!r}: predicted class is not the fused argmax"
            )


def fuse_predict(
    cls: ClassifierScores,
    x_p: Embedding,
    sets: Mapping[str, ExemplarSet],
    config: ExpansionConfig,
) -> Prediction:
    """Fused per-class scores and the resulting decision for one pair.

    Every class scored by the classifier must have an exemplar set and vice
    versa; a mismatch means the caller wired together artifacts from
    different schemas.
    """
    if set(cls.scores) != set(sets):
        missing = sorted(set(cls.scores) - set(sets))
        extra = sorted(set(sets) - set(cls.scores))
        raise ValidationError(
            f"pair {cls.pair_id!r}: classifier classes and exemplar sets disagree "
            f"(unscored sets missing for {missing}, sets without scores {extra})"
        )
    fused = {}
    for name, s_cls in cls.scores.items():
        similarity = pair_class_score(x_p, sets[name], config.k).value
        fused[name] = s_cls + config.lambda_weight * similarity
    return Prediction(
        pair_id=cls.pair_id,
        predicted_class=_argmax_class(fused),
        fused_scores=fused,
    )


def fuse_predict_all(
    scores: Sequence[ClassifierScores],
    vectors: Mapping[str, Embedding],
    sets: Mapping[str, ExemplarSet],
    config: ExpansionConfig,
    *,
    jobs: int = 1,
) -> list[Prediction]:
    """Fuse a batch of pairs; output order follows input order regardless of jobs."""
    for cls in scores:
        if cls.pair_id not in vectors:
            raise ValidationError(f"no embedding supplied for pair {cls.pair_id!r}")

    def one(cls: ClassifierScores) -> Prediction:
        return fuse_predict(cls, vectors[cls.pair_id], sets, config)

    if jobs > 1 and len(scores) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, scores))
    return [one(cls) for cls in scores]


def confusion_matrix(
    preds: Iterable[Prediction],
    gold: Mapping[str, str],
    classes: Sequence[str],
) -> np.ndarray:
    """Counts with gold classes as rows and predicted classes as columns."""
    if len(set(classes)) != len(classes):
        raise ValidationError("schema class list has duplicates")
    index = {name: i for i, name in enumerate(classes)}
    matrix = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for pred in preds:
        if pred.pair_id not in gold:
            raise ValidationError(f"no gold label for pair {pred.pair_id!r}")
        gold_class = gold[pred.pair_id]
        if gold_class not in index:
            raise ValidationError(f"gold class {gold_class!r} is not in the schema")
        if pred.predicted_class not in index:
            raise ValidationError(
                f"predicted class {pred.predicted_class!r} is not in the schema"
            )
        matrix[index[gold_class], index[pred.predicted_class]] += 1
    return matrix


def confusion_csv(classes: Sequence[str], matrix: np.ndarray) -> str:
    """CSV with a class-name header row and a class-name leading column."""
    if matrix.shape != (len(classes), len(classes)):
        raise ValidationError(
            f"matrix shape {matrix.shape} does not match {len(classes)} classes"
        )
    lines = ["," + ",".join(classes)]
    for name, row in zip(classes, matrix):
        lines.append(name + "," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def metrics(
    preds: Iterable[Prediction],
    gold: Mapping[str, str],
    negative_label: str | None = None,
) -> dict:
    """Accuracy plus micro precision/recall/F1.

    When ``negative_label`` is given, micro tallies exclude it on both sides:
    precision counts only non-negative predictions, recall only non-negative
    gold labels. With nothing predicted positive precision is 1.0; with no
    positive gold labels recall is 0.0; F1 is 0.0 when both rates are.
    """
    total = 0
    correct = 0
    guessed_positive = 0
    gold_positive = 0
    correct_positive = 0
    for pred in preds:
        if pred.pair_id not in gold:
            raise ValidationError(f"no gold label for pair {pred.pair_id!r}")
        gold_class = gold[pred.pair_id]
        total += 1
        hit = pred.predicted_class == gold_class
        if hit:
            correct += 1
        if pred.predicted_class != negative_label:
            guessed_positive += 1
            if hit:
                correct_positive += 1
        if gold_class != negative_label:
            gold_positive += 1
    if total == 0:
        raise ValidationError("cannot compute metrics over zero predictions")
    precision = correct_positive / guessed_positive if guessed_positive else 1.0
    recall = correct_positive / gold_positive if gold_positive else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": correct / total,
        "micro_precision": precision,
        "micro_recall": recall,
        "micro_f1": f1,
    }


def lambda_sweep(
    scores: Sequence[ClassifierScores],
    vectors: Mapping[str, Embedding],
    sets: Mapping[str, ExemplarSet],
    config: ExpansionConfig,
    lambdas: Sequence[float],
    gold: Mapping[str, str],
    negative_label: str | None = None,
    *,
    jobs: int = 1,
) -> list[dict]:
    """One metrics record per fusion weight, for weight selection plots."""
    records = []
    for value in lambdas:
        swept = config.replace(lambda_weight=float(value))
        preds = fuse_predict_all(scores, vectors, sets, swept, jobs=jobs)
        record = {"lambda_weight": float(value)}
        record.update(metrics(preds, gold, negative_label))
        records.append(record)
    return records
