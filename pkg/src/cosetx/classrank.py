"""Contrastive class ranking.

Each exemplar of a class induces a ranked list of every class in the corpus
by pair-class similarity. The per-exemplar lists are combined with a Borda
count (rank-based, so incomparable score scales across exemplars don't
matter), and the top-ranked classes minus the positive class itself become
the contrastive set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import ContrastiveSet, Embedding, ExemplarSet
from .errors import ValidationError
from .scoring import pair_class_score

AGGREGATE_ID = "<aggregate>"


@dataclass(frozen=True)
class RankedClassList:
    """Class names with scores, strictly ordered by (score desc, name asc)."""

    seed_pair_id: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "entries", tuple((str(c), float(s)) for c, s in self.entries)
        )
        names = [c for c, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValidationError("ranked list contains duplicate class names")
        for (c1, s1), (c2, s2) in zip(self.entries, self.entries[1:]):
            if s1 < s2 or (s1 == s2 and c1 > c2):
                raise ValidationError(
                    f"ranked list is not sorted by (score desc, name asc) at {c1!r}/{c2!r}"
                )

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.entries)

    def position_of(self, class_name: str) -> int:
        for index, (name, _) in enumerate(self.entries):
            if name == class_name:
                return index
        raise ValidationError(f"class {class_name!r} is not in the ranked list")


def _sorted_entries(scores: Mapping[str, float]) -> tuple[tuple[str, float], ...]:
    return tuple(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))


def seed_class_ranking(
    seed_repr: Embedding,
    class_index: Mapping[str, ExemplarSet],
    k: int,
    *,
    seed_pair_id: str = "",
) -> RankedClassList:
    """Rank every class by pair-class similarity against one exemplar."""
    if not class_index:
        raise ValidationError("class index is empty")
    scores = {
        name: pair_class_score(seed_repr, exemplars, k).value
        for name, exemplars in class_index.items()
    }
    return RankedClassList(seed_pair_id=seed_pair_id, entries=_sorted_entries(scores))


def aggregate_rankings(lists: Sequence[RankedClassList]) -> RankedClassList:
    """Borda-count aggregation of per-exemplar ranked lists.

    A class at 0-based position p in a list of N classes contributes N - p
    points; totals sort descending with ties broken by class name.
    """
    if not lists:
        raise ValidationError("cannot aggregate zero ranked lists")
    universe = set(lists[0].class_names)
    totals: dict[str, float] = {name: 0.0 for name in universe}
    for ranked in lists:
        if set(ranked.class_names) != universe:
            raise ValidationError(
                f"ranked list {ranked.seed_pair_id!r} covers a different class universe"
            )
        size = len(ranked.entries)
        for position, (name, _) in enumerate(ranked.entries):
            totals[name] += float(size - position)
    return RankedClassList(seed_pair_id=AGGREGATE_ID, entries=_sorted_entries(totals))


def select_contrastive(
    positive_class: str, aggregated: RankedClassList, m: int
) -> ContrastiveSet:
    """Top m classes of the aggregate ranking, positive class excluded.

    When fewer than m other classes exist, all of them are returned.
    """
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    aggregated.position_of(positive_class)  # must cover the positive class
    kept = [(c, s) for c, s in aggregated.entries if c != positive_class][:m]
    return ContrastiveSet(
        positive_class=positive_class,
        negatives=tuple(c for c, _ in kept),
        scores=tuple(s for _, s in kept),
    )


def build_contrastive_map(
    state: Mapping[str, ExemplarSet], k: int, m: int
) -> dict[str, ContrastiveSet]:
    """Recompute the contrastive set of every class from current exemplars.

    One ranked list per current member, aggregated per class. Intended to run
    at the start of each expansion iteration so the selection tracks the
    evolving sets.
    """
    for name, exemplars in state.items():
        if len(exemplars) == 0:
            raise ValidationError(f"class {name!r} has no exemplars to rank with")
    out: dict[str, ContrastiveSet] = {}
    for name, exemplars in state.items():
        lists = [
            seed_class_ranking(member.embedding, state, k, seed_pair_id=member.pair_id)
            for member in exemplars
        ]
        aggregated = aggregate_rankings(lists)
        out[name] = select_contrastive(name, aggregated, m)
    return out
