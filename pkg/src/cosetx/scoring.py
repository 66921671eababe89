"""Pair-class similarity scoring.

Three operations: plain cosine similarity, the top-k averaged class score of
a pair against an exemplar set, and the weighted fusion of a classifier score
with that class score. All arithmetic runs in float64 regardless of storage
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Embedding, ExemplarSet
from .errors import DimensionMismatchError, ValidationError

COSINE = "cosine"
PAIR_CLASS = "pair_class"
FUSED = "fused"

_COSINE_SLACK = 1e-12


@dataclass(frozen=True)
class ScoreValue:
    """A scored quantity tagged with what produced it."""

    value: float
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in (COSINE, PAIR_CLASS, FUSED):
            raise ValidationError(f"unknown score kind {self.kind!r}")
        if not math.isfinite(self.value):
            raise ValidationError(f"{self.kind} score is not finite: {self.value!r}")
        if self.kind == COSINE and abs(self.value) > 1.0 + _COSINE_SLACK:
            raise ValidationError(f"cosine score {self.value!r} outside [-1, 1]")

    def __float__(self) -> float:
        return self.value


def _as_f64(embedding: Embedding) -> np.ndarray:
    return np.asarray(embedding.vector, dtype=np.float64)


def _cosine_f64(a: np.ndarray, b: np.ndarray, *, context: str) -> float:
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"{context}: dimensions differ ({a.shape[0]} vs {b.shape[0]})"
        )
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValidationError(f"{context}: cosine is undefined for a zero-norm vector")
    return float(np.dot(a, b) / (norm_a * norm_b))


def cosine(a: Embedding, b: Embedding) -> ScoreValue:
    """Cosine similarity of two embeddings, as a float64 value in [-1, 1]."""
    return ScoreValue(_cosine_f64(_as_f64(a), _as_f64(b), context="cosine"), COSINE)


def pair_class_score(
    pair_vector: Embedding, exemplars: ExemplarSet, k: int
) -> ScoreValue:
    """Mean of the k largest cosines between the pair and the class exemplars.

    When the set holds fewer than k members, all of them are averaged. Ties
    at the k-th position resolve by (cosine descending, insertion index
    ascending), so results are identical across runs and platforms.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if len(exemplars) == 0:
        raise ValidationError(
            f"class {exemplars.class_name!r}: cannot score against an empty exemplar set"
        )
    x = _as_f64(pair_vector)
    cosines = np.array(
        [
            _cosine_f64(x, _as_f64(member.embedding), context=f"class {exemplars.class_name!r}")
            for member in exemplars
        ],
        dtype=np.float64,
    )
    take = min(k, cosines.shape[0])
    # stable argsort on the negated values = cosine desc, insertion index asc
    order = np.argsort(-cosines, kind="stable")
    top = cosines[order[:take]]
    return ScoreValue(float(np.sum(top) / take), PAIR_CLASS)


def fuse_score(s_cls: float, pair_score: float, lambda_weight: float) -> ScoreValue:
    """Classifier score plus lambda-weighted pair-class score."""
    if lambda_weight < 0:
        raise ValidationError(f"lambda_weight must be >= 0, got {lambda_weight!r}")
    for name, value in (("s_cls", s_cls), ("pair_score", pair_score)):
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite, got {value!r}")
    return ScoreValue(float(s_cls) + float(lambda_weight) * float(pair_score), FUSED)
