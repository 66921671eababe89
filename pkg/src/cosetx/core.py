"""Domain types shared across the engine, plus the in-memory embedding store.

Vectors are held in 32-bit floats; every similarity computation downstream
promotes to 64-bit and reports 64-bit results. Pair ids are caller-supplied
strings and are never invented here, so joins against external classifier
outputs stay reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateEntryError,
    MissingEmbeddingError,
    ValidationError,
)

ANALOGOUS_PATTERN = "analogous_pattern"
CONTRASTIVE_PATTERN = "contrastive_pattern"
MENTION_CONTEXT = "mention_context"
PROVENANCES = (ANALOGOUS_PATTERN, CONTRASTIVE_PATTERN, MENTION_CONTEXT)

SEED_ORIGIN = "seed"
EXPANDED_ORIGIN = "expanded"


@dataclass(frozen=True)
class PairMention:
    """An entity-pair occurrence (head/tail token spans) inside a sentence.

    Spans are half-open ``(start, end)`` token index ranges. Both spans must
    be non-empty, in bounds, and non-overlapping.
    """

    id: str
    tokens: tuple[str, ...]
    head_span: tuple[int, int]
    tail_span: tuple[int, int]
    gold_relation: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "head_span", tuple(self.head_span))
        object.__setattr__(self, "tail_span", tuple(self.tail_span))
        if not self.id:
            raise ValidationError("pair mention requires a non-empty id")
        if not self.tokens:
            raise ValidationError(f"pair {self.id!r}: token sequence is empty")
        for name, (start, end) in (("head", self.head_span), ("tail", self.tail_span)):
            if start < 0 or end > len(self.tokens) or start >= end:
                raise ValidationError(
                    f"pair {self.id!r}: {name} span ({start}, {end}) is empty or out of "
                    f"bounds for {len(self.tokens)} tokens"
                )
        h0, h1 = self.head_span
        t0, t1 = self.tail_span
        if not (h1 <= t0 or t1 <= h0):
            raise ValidationError(
                f"pair {self.id!r}: head span {self.head_span} overlaps tail span {self.tail_span}"
            )

    def head_text(self) -> str:
        return " ".join(self.tokens[self.head_span[0] : self.head_span[1]])

    def tail_text(self) -> str:
        return " ".join(self.tokens[self.tail_span[0] : self.tail_span[1]])


@dataclass(frozen=True, eq=False)
class Embedding:
    """A fixed-dimension float32 vector with provenance.

    ``provenance`` records which probe family produced the vector; it is one
    of :data:`PROVENANCES`. ``source_query_id`` optionally names the query the
    vector came from.
    """

    vector: np.ndarray
    provenance: str
    source_query_id: str | None = None

    def __post_init__(self) -> None:
        vec = np.array(self.vector, dtype=np.float32, copy=True).reshape(-1)
        if vec.size == 0:
            raise ValidationError("embedding vector is empty")
        if not np.all(np.isfinite(vec)):
            raise ValidationError("embedding vector contains NaN or Inf")
        if self.provenance not in PROVENANCES:
            raise ValidationError(
                f"unknown provenance {self.provenance!r}; expected one of {PROVENANCES}"
            )
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return (
            self.provenance == other.provenance
            and self.source_query_id == other.source_query_id
            and self.vector.shape == other.vector.shape
            and bool(np.all(self.vector == other.vector))
        )

    def __hash__(self) -> int:
        return hash((self.provenance, self.source_query_id, self.vector.tobytes()))


@dataclass(frozen=True)
class ExemplarMember:
    pair_id: str
    embedding: Embedding
    origin: str  # SEED_ORIGIN or EXPANDED_ORIGIN

    def __post_init__(self) -> None:
        if self.origin not in (SEED_ORIGIN, EXPANDED_ORIGIN):
            raise ValidationError(f"unknown member origin {self.origin!r}")


class ExemplarSet:
    """A relation class's current exemplar members, in insertion order.

    Membership only grows: seed members are appended at construction time and
    expansion appends after them. There is deliberately no removal operation,
    which keeps the "seeds are never dropped" guarantee structural. Insertion
    order is the iteration order, which downstream sampling relies on.
    """

    def __init__(self, class_name: str) -> None:
        if not class_name:
            raise ValidationError("exemplar set requires a class name")
        self.class_name = class_name
        self._members: list[ExemplarMember] = []
        self._index: dict[str, int] = {}

    def add(self, pair_id: str, embedding: Embedding, origin: str) -> None:
        if pair_id in self._index:
            raise DuplicateEntryError(
                f"class {self.class_name!r}: member {pair_id!r} is already present"
            )
        member = ExemplarMember(pair_id, embedding, origin)
        self._index[pair_id] = len(self._members)
        self._members.append(member)

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self) -> Iterator[ExemplarMember]:
        return iter(self._members)

    def __contains__(self, pair_id: str) -> bool:
        return pair_id in self._index

    @property
    def members(self) -> tuple[ExemplarMember, ...]:
        return tuple(self._members)

    @property
    def member_ids(self) -> tuple[str, ...]:
        return tuple(m.pair_id for m in self._members)

    def seed_ids(self) -> tuple[str, ...]:
        return tuple(m.pair_id for m in self._members if m.origin == SEED_ORIGIN)

    def __repr__(self) -> str:  # pragma: no cover
        return f"ExemplarSet({self.class_name!r}, {len(self)} members)"


@dataclass(frozen=True)
class ContrastiveSet:
    """Ordered confusable classes selected for one positive class."""

    positive_class: str
    negatives: tuple[str, ...]
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "negatives", tuple(self.negatives))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if self.positive_class in self.negatives:
            raise ValidationError(
                f"contrastive set for {self.positive_class!r} contains the positive class"
            )
        if len(set(self.negatives)) != len(self.negatives):
            raise ValidationError(
                f"contrastive set for {self.positive_class!r} has duplicate negatives"
            )
        if len(self.scores) != len(self.negatives):
            raise ValidationError("negatives and scores must be parallel sequences")

    def to_json(self) -> dict:
        return {
            "positive_class": self.positive_class,
            "negatives": list(self.negatives),
            "scores": list(self.scores),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ContrastiveSet":
        return cls(
            positive_class=doc["positive_class"],
            negatives=tuple(doc["negatives"]),
            scores=tuple(doc["scores"]),
        )


@dataclass(frozen=True)
class ExpansionConfig:
    """All expansion tunables plus the single master RNG seed.

    ``rank_mode`` switches how the positive and contrastive sampled scores
    combine into one rank: ``"geometric"`` (the default) or ``"arithmetic"``
    as an ablation toggle.
    """

    k: int = 3
    lambda_weight: float = 0.5
    ensemble_rounds: int = 10
    sample_size: int = 3
    num_contrastive: int = 6
    iterations: int = 4
    additions_per_iteration: int = 5
    master_seed: int = 0
    rank_mode: str = "geometric"

    def __post_init__(self) -> None:
        for name in (
            "k",
            "ensemble_rounds",
            "sample_size",
            "num_contrastive",
            "additions_per_iteration",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValidationError(f"config field {name} must be an integer >= 1, got {value!r}")
        if not isinstance(self.iterations, int) or self.iterations < 0:
            raise ValidationError(f"config field iterations must be an integer >= 0, got {self.iterations!r}")
        if not math.isfinite(self.lambda_weight) or self.lambda_weight < 0:
            raise ValidationError(f"lambda_weight must be a finite value >= 0, got {self.lambda_weight!r}")
        if not isinstance(self.master_seed, int) or not (0 <= self.master_seed < 2**64):
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        if self.rank_mode not in ("geometric", "arithmetic"):
            raise ValidationError(f"rank_mode must be 'geometric' or 'arithmetic', got {self.rank_mode!r}")

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "lambda_weight": self.lambda_weight,
            "ensemble_rounds": self.ensemble_rounds,
            "sample_size": self.sample_size,
            "num_contrastive": self.num_contrastive,
            "iterations": self.iterations,
            "additions_per_iteration": self.additions_per_iteration,
            "master_seed": self.master_seed,
            "rank_mode": self.rank_mode,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ExpansionConfig":
        known = {f: doc[f] for f in cls.__dataclass_fields__ if f in doc}
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**known)

    def replace(self, **overrides) -> "ExpansionConfig":
        merged = self.to_json()
        merged.update(overrides)
        return ExpansionConfig.from_json(merged)


class EmbeddingStore:
    """In-memory embedding store keyed by (id, provenance).

    The first insert fixes the store dimension; later inserts must match it.
    Lookups return the stored :class:`Embedding` object unchanged, so
    round-trips are bit-exact. Reads are safe from many threads once the
    build/load phase is over; writes belong to a single-writer phase.
    """

    def __init__(self) -> None:
        self._entries: dict[tuple[str, str], Embedding] = {}
        self._dim: int | None = None

    @property
    def dim(self) -> int | None:
        return self._dim

    def __len__(self) -> int:
        return len(self._entries)

    def put(self, key: str, embedding: Embedding) -> None:
        if not key:
            raise ValidationError("store keys must be non-empty strings")
        if self._dim is None:
            self._dim = embedding.dim
        elif embedding.dim != self._dim:
            raise DimensionMismatchError(
                f"cannot insert dim-{embedding.dim} vector into dim-{self._dim} store "
                f"(key {key!r}, provenance {embedding.provenance!r})"
            )
        entry = (key, embedding.provenance)
        if entry in self._entries:
            raise DuplicateEntryError(
                f"store already holds key {key!r} with provenance {embedding.provenance!r}"
            )
        self._entries[entry] = embedding

    def get(self, key: str, provenance: str) -> Embedding:
        try:
            return self._entries[(key, provenance)]
        except KeyError:
            raise MissingEmbeddingError(
                f"no embedding for key {key!r} with provenance {provenance!r}"
            ) from None

    def has(self, key: str, provenance: str) -> bool:
        return (key, provenance) in self._entries

    def entries(self) -> Iterator[tuple[str, str, Embedding]]:
        """Yield (key, provenance, embedding) in insertion order."""
        for (key, provenance), emb in self._entries.items():
            yield key, provenance, emb
