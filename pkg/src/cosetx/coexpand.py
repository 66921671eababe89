"""Sampled ensemble co-expansion of exemplar sets.

For a candidate pair and a class, each of T rounds draws a small exemplar
sample from the class and from every class in its contrastive set, combines
the positive sampled score with the contrastive sampled score into a rank,
and credits the candidate only in rounds where its rank for the class beats
its rank for every contrastive class. Summing the credited rounds gives the
ensemble score used to pick additions; repeated sampling is what keeps a few
bad members from steering the whole set off course.

Determinism contract
--------------------
Everything downstream of the master seed is pinned so that a run can be
replayed bit-for-bit, in parallel or not:

* The RNG stream for a draw is seeded with the first 8 bytes (little-endian)
  of ``SHA-256("{master_seed}|{round_index}|{class_name}")``, fed to
  ``random.Random``.
* A draw of size s from n members takes the first s entries of a partial
  Fisher-Yates pass: for i in 0..s-1, swap index i with ``rng.randrange(i, n)``.
  When s >= n the draw is the whole member list in insertion order.
* All scoring arithmetic is float64: vectors are unit-normalized by dividing
  each component by ``sqrt(dot(v, v))``, dot products and means accumulate
  sequentially (left to right, ``sum/count``), and ranks are
  ``sqrt(max(pos, 0) * max(neg, 0))``.

The sequential accumulation is deliberate: it makes every score reproducible
by straightforward independent code, with no dependence on BLAS summation
order.
"""

from __future__ import annotations

import hashlib
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    ANALOGOUS_PATTERN,
    CONTRASTIVE_PATTERN,
    EXPANDED_ORIGIN,
    MENTION_CONTEXT,
    ContrastiveSet,
    Embedding,
    EmbeddingStore,
    ExemplarSet,
    ExpansionConfig,
)
from .classrank import build_contrastive_map
from .errors import MissingEmbeddingError, ValidationError

GEOMETRIC = "geometric"
ARITHMETIC = "arithmetic"


@dataclass(frozen=True)
class SampleDraw:
    """One without-replacement draw from a class's exemplar members."""

    round_index: int
    class_name: str
    member_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "member_ids", tuple(self.member_ids))
        if self.round_index < 1:
            raise ValidationError(
                f"round_index must be >= 1, got {self.round_index}"
            )
        if len(set(self.member_ids)) != len(self.member_ids):
            raise ValidationError(
                f"draw for {self.class_name!r} round {self.round_index} has duplicates"
            )


@dataclass(frozen=True)
class RoundOutcome:
    positive_rank: float
    max_negative_rank: float
    dominated: bool

    def to_json(self) -> dict:
        return {
            "r_pos": self.positive_rank,
            "max_r_neg": self.max_negative_rank,
            "dominated": self.dominated,
        }


@dataclass(frozen=True)
class EnsembleResult:
    """Per-candidate outcome of the T-round ensemble for one class."""

    pair_id: str
    class_name: str
    total_score: float
    membership_bonus: float
    per_round: tuple[RoundOutcome, ...]

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "class": self.class_name,
            "S": self.total_score,
            "per_round": [r.to_json() for r in self.per_round],
        }


def _stream_seed(master_seed: int, class_name: str, round_index: int) -> int:
    material = f"{master_seed}|{round_index}|{class_name}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "little")


def sample_exemplars(
    exemplars: ExemplarSet,
    sample_size: int,
    master_seed: int,
    round_index: int,
) -> SampleDraw:
    """Uniform draw without replacement, pinned to (seed, class, round)."""
    if len(exemplars) == 0:
        raise ValidationError(f"class {exemplars.class_name!r}: cannot sample an empty set")
    if sample_size < 1:
        raise ValidationError(f"sample_size must be >= 1, got {sample_size}")
    ids = list(exemplars.member_ids)
    n = len(ids)
    if sample_size >= n:
        chosen = ids
    else:
        rng = random.Random(_stream_seed(master_seed, exemplars.class_name, round_index))
        indices = list(range(n))
        for i in range(sample_size):
            j = rng.randrange(i, n)
            indices[i], indices[j] = indices[j], indices[i]
        chosen = [ids[i] for i in indices[:sample_size]]
    return SampleDraw(
        round_index=round_index,
        class_name=exemplars.class_name,
        member_ids=tuple(chosen),
    )


class _UnitCache:
    """Float64 unit vectors for store entries, as tuples for pinned math."""

    def __init__(self, store: EmbeddingStore) -> None:
        self._store = store
        self._units: dict[tuple[str, str], tuple[float, ...]] = {}

    def get(self, key: str, provenance: str) -> tuple[float, ...]:
        entry = (key, provenance)
        cached = self._units.get(entry)
        if cached is None:
            cached = unit_vector(self._store.get(key, provenance).vector)
            self._units[entry] = cached
        return cached


def unit_vector(vector: np.ndarray | Sequence[float]) -> tuple[float, ...]:
    """Unit-normalize into a tuple of floats, per the determinism contract."""
    values = [float(x) for x in np.asarray(vector, dtype=np.float64).reshape(-1)]
    norm = math.sqrt(_dot(values, values))
    if norm == 0.0:
        raise ValidationError("cannot unit-normalize a zero vector")
    return tuple(x / norm for x in values)


def _dot(a: Sequence[float], b: Sequence[float]) -> float:
    total = 0.0
    for x, y in zip(a, b):
        total += x * y
    return total


def _mean(values: Sequence[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def sampled_positive_score(
    pair_vector: Embedding,
    draw: SampleDraw,
    store: EmbeddingStore,
    *,
    _units: _UnitCache | None = None,
    _pair_unit: tuple[float, ...] | None = None,
) -> float:
    """Mean cosine between the pair and the drawn members' analogous vectors."""
    units = _units or _UnitCache(store)
    pair_unit = _pair_unit if _pair_unit is not None else unit_vector(pair_vector.vector)
    cosines = [
        _dot(pair_unit, units.get(member_id, ANALOGOUS_PATTERN))
        for member_id in draw.member_ids
    ]
    return _mean(cosines)


def sampled_contrastive_score(
    pair_vector: Embedding,
    contrastive: ContrastiveSet,
    draws: Mapping[str, SampleDraw],
    store: EmbeddingStore,
    *,
    _units: _UnitCache | None = None,
    _pair_unit: tuple[float, ...] | None = None,
) -> float:
    """Mean over contrastive classes of the mean cosine against their
    contrastive-pattern vectors, computed on one draw per class.

    With an empty contrastive set the score is defined as 0.0.
    """
    if not contrastive.negatives:
        return 0.0
    units = _units or _UnitCache(store)
    pair_unit = _pair_unit if _pair_unit is not None else unit_vector(pair_vector.vector)
    per_class = []
    for negative in contrastive.negatives:
        if negative not in draws:
            raise ValidationError(
                f"no draw supplied for contrastive class {negative!r}"
            )
        cosines = [
            _dot(pair_unit, units.get(member_id, CONTRASTIVE_PATTERN))
            for member_id in draws[negative].member_ids
        ]
        per_class.append(_mean(cosines))
    return _mean(per_class)


def pair_rank(r_pos: float, r_neg: float, mode: str = GEOMETRIC) -> float:
    """Combine positive and contrastive sampled scores into one rank.

    Geometric mode takes the square root of the product with both factors
    clamped at zero (keeping the root real); arithmetic mode averages the
    clamped factors and exists for ablation.
    """
    pos = max(float(r_pos), 0.0)
    neg = max(float(r_neg), 0.0)
    if mode == GEOMETRIC:
        return math.sqrt(pos * neg)
    if mode == ARITHMETIC:
        return (pos + neg) / 2.0
    raise ValidationError(f"unknown rank mode {mode!r}")


class _DrawCache:
    """Draws keyed by (class, round); one draw per key for a whole iteration."""

    def __init__(
        self,
        state: Mapping[str, ExemplarSet],
        config: ExpansionConfig,
    ) -> None:
        self._state = state
        self._config = config
        self._draws: dict[tuple[str, int], SampleDraw] = {}

    def get(self, class_name: str, round_index: int) -> SampleDraw:
        entry = (class_name, round_index)
        draw = self._draws.get(entry)
        if draw is None:
            if class_name not in self._state:
                raise ValidationError(f"no exemplar set for class {class_name!r}")
            draw = sample_exemplars(
                self._state[class_name],
                self._config.sample_size,
                self._config.master_seed,
                round_index,
            )
            self._draws[entry] = draw
        return draw

    def prefill(self, rounds: int) -> None:
        for class_name in self._state:
            for round_index in range(1, rounds + 1):
                self.get(class_name, round_index)


def _rank_for_class(
    pair_unit: tuple[float, ...],
    class_name: str,
    contrastive_map: Mapping[str, ContrastiveSet],
    draws: _DrawCache,
    round_index: int,
    units: _UnitCache,
    mode: str,
) -> float:
    # Role symmetry: whichever class is being ranked, it is scored with its
    # own exemplar draw and penalized with its own contrastive classes.
    if class_name not in contrastive_map:
        raise ValidationError(f"no contrastive set for class {class_name!r}")
    contrastive = contrastive_map[class_name]
    draw = draws.get(class_name, round_index)
    positive = _mean(
        [_dot(pair_unit, units.get(mid, ANALOGOUS_PATTERN)) for mid in draw.member_ids]
    )
    if contrastive.negatives:
        per_class = []
        for negative in contrastive.negatives:
            neg_draw = draws.get(negative, round_index)
            per_class.append(
                _mean(
                    [
                        _dot(pair_unit, units.get(mid, CONTRASTIVE_PATTERN))
                        for mid in neg_draw.member_ids
                    ]
                )
            )
        negative_score = _mean(per_class)
    else:
        negative_score = 0.0
    return pair_rank(positive, negative_score, mode)


def ensemble_score(
    pair_vector: Embedding,
    pair_id: str,
    class_name: str,
    state: Mapping[str, ExemplarSet],
    contrastive_map: Mapping[str, ContrastiveSet],
    config: ExpansionConfig,
    store: EmbeddingStore,
    *,
    _draws: _DrawCache | None = None,
    _units: _UnitCache | None = None,
) -> EnsembleResult:
    """Run the T-round ensemble for one candidate against one class.

    Per round, the candidate's rank for the class must strictly exceed its
    rank for every class in the contrastive set (role-swapped: each
    contrastive class is ranked with its own exemplars and its own
    contrastive set). Rounds that pass contribute the rank plus a bonus of 1
    when the candidate is already a member; the total is the ensemble score.
    An empty contrastive set makes the round's bar ``rank > 0``.
    """
    if class_name not in state:
        raise ValidationError(f"no exemplar set for class {class_name!r}")
    if class_name not in contrastive_map:
        raise ValidationError(f"no contrastive set for class {class_name!r}")
    draws = _draws if _draws is not None else _DrawCache(state, config)
    units = _units if _units is not None else _UnitCache(store)
    try:
        pair_unit = unit_vector(pair_vector.vector)
        negatives = contrastive_map[class_name].negatives
        bonus = 1.0 if pair_id in state[class_name] else 0.0
        outcomes = []
        total = 0.0
        for round_index in range(1, config.ensemble_rounds + 1):
            r_pos = _rank_for_class(
                pair_unit, class_name, contrastive_map, draws, round_index, units, config.rank_mode
            )
            max_r_neg = 0.0
            for negative in negatives:
                r_neg = _rank_for_class(
                    pair_unit, negative, contrastive_map, draws, round_index, units, config.rank_mode
                )
                if r_neg > max_r_neg:
                    max_r_neg = r_neg
            dominated = r_pos > max_r_neg
            if dominated:
                total += r_pos + bonus
            outcomes.append(
                RoundOutcome(positive_rank=r_pos, max_negative_rank=max_r_neg, dominated=dominated)
            )
    except MissingEmbeddingError as exc:
        raise MissingEmbeddingError(
            f"candidate {pair_id!r} vs class {class_name!r}: {exc}"
        ) from None
    return EnsembleResult(
        pair_id=pair_id,
        class_name=class_name,
        total_score=total,
        membership_bonus=bonus,
        per_round=tuple(outcomes),
    )


def expand_iteration(
    state: Mapping[str, ExemplarSet],
    candidates: Sequence[str],
    contrastive_map: Mapping[str, ContrastiveSet],
    config: ExpansionConfig,
    store: EmbeddingStore,
    *,
    jobs: int = 1,
) -> list[EnsembleResult]:
    """Score the candidate pool against every class and commit additions.

    All scoring observes the membership frozen at iteration entry; additions
    are appended only afterwards, per class: candidates ranked by (score
    desc, pair id asc), the top ``additions_per_iteration`` with a positive
    score join with expanded origin. Returns the results for the committed
    additions, in commit order.
    """
    draws = _DrawCache(state, config)
    draws.prefill(config.ensemble_rounds)
    units = _UnitCache(store)

    def score_one(pair_id: str, class_name: str) -> EnsembleResult:
        pair_vector = store.get(pair_id, MENTION_CONTEXT)
        return ensemble_score(
            pair_vector,
            pair_id,
            class_name,
            state,
            contrastive_map,
            config,
            store,
            _draws=draws,
            _units=units,
        )

    work: list[tuple[str, str]] = []
    for class_name, exemplars in state.items():
        for pair_id in candidates:
            if pair_id not in exemplars:
                work.append((pair_id, class_name))

    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda pc: score_one(*pc), work))
    else:
        results = [score_one(*pc) for pc in work]

    by_class: dict[str, list[EnsembleResult]] = {name: [] for name in state}
    for result in results:
        by_class[result.class_name].append(result)

    committed: list[EnsembleResult] = []
    for class_name, exemplars in state.items():
        qualifying = [r for r in by_class[class_name] if r.total_score > 0.0]
        qualifying.sort(key=lambda r: (-r.total_score, r.pair_id))
        for result in qualifying[: config.additions_per_iteration]:
            embedding = store.get(result.pair_id, ANALOGOUS_PATTERN)
            exemplars.add(result.pair_id, embedding, EXPANDED_ORIGIN)
            committed.append(result)
    return committed


def expand(
    seed_state: Mapping[str, ExemplarSet],
    candidate_pool: Sequence[str],
    config: ExpansionConfig,
    store: EmbeddingStore,
    *,
    jobs: int = 1,
) -> tuple[Mapping[str, ExemplarSet], list[dict]]:
    """Iteratively co-expand all classes from a shared candidate pool.

    Each iteration first recomputes every class's contrastive set from the
    current members, then runs one scoring-and-commit pass. The audit log has
    one JSON-ready record per addition. Fully determined by the config's
    master seed; seed members are never removed.
    """
    for name, exemplars in seed_state.items():
        if len(exemplars) == 0:
            raise ValidationError(f"class {name!r} has no seed exemplars")
    audit: list[dict] = []
    for iteration in range(1, config.iterations + 1):
        contrastive_map = build_contrastive_map(seed_state, config.k, config.num_contrastive)
        added = expand_iteration(
            seed_state, candidate_pool, contrastive_map, config, store, jobs=jobs
        )
        for result in added:
            record = {"iteration": iteration}
            record.update(result.to_json())
            audit.append(record)
    return seed_state, audit
