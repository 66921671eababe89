"""Probe-query rendering and masked pair representations.

A probe template is a fixed lexical frame with two mask slots standing in for
an entity pair, plus named seed slots. Rendering substitutes slot bindings
verbatim; an embedding provider then returns the hidden vectors at the two
mask positions, and the pair representation is their element-wise mean.

Templates use the literal ``[MASK]`` as the canonical mask placeholder.
Providers that use a different mask token rewrite it at call time; the engine
treats the token itself as opaque.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .core import (
    ANALOGOUS_PATTERN,
    CONTRASTIVE_PATTERN,
    MENTION_CONTEXT,
    Embedding,
    PairMention,
)
from .errors import DimensionMismatchError, ValidationError

MASK_LITERAL = "[MASK]"

ANALOGOUS_KIND = "analogous"
CONTRASTIVE_KIND = "contrastive"
PATTERN_KINDS = (ANALOGOUS_KIND, CONTRASTIVE_KIND)

KIND_TO_PROVENANCE = {
    ANALOGOUS_KIND: ANALOGOUS_PATTERN,
    CONTRASTIVE_KIND: CONTRASTIVE_PATTERN,
}

_SLOT_RE = re.compile(r"\{(head_seed|tail_seed|class_name)\}")


@dataclass(frozen=True)
class HearstPattern:
    """A probe template with exactly two mask placeholders.

    Recognized named slots: ``{head_seed}``, ``{tail_seed}`` and the optional
    ``{class_name}``. ``kind`` distinguishes analogous framings from
    contrastive ones and fixes the provenance of derived embeddings.
    """

    pattern_id: str
    kind: str
    template: str

    def __post_init__(self) -> None:
        if not self.pattern_id:
            raise ValidationError("pattern requires a non-empty pattern_id")
        if self.kind not in PATTERN_KINDS:
            raise ValidationError(
                f"pattern {self.pattern_id!r}: kind must be one of {PATTERN_KINDS}, got {self.kind!r}"
            )
        masks = self.template.count(MASK_LITERAL)
        if masks != 2:
            raise ValidationError(
                f"pattern {self.pattern_id!r}: template must contain exactly two "
                f"{MASK_LITERAL} placeholders, found {masks}"
            )

    def slots(self) -> tuple[str, ...]:
        """Named slots referenced by the template, in order of appearance."""
        seen: list[str] = []
        for match in _SLOT_RE.finditer(self.template):
            if match.group(1) not in seen:
                seen.append(match.group(1))
        return tuple(seen)


DEFAULT_PATTERNS = (
    HearstPattern(
        pattern_id="analogous-default",
        kind=ANALOGOUS_KIND,
        template="{head_seed} is to {tail_seed} what [MASK] is to [MASK] .",
    ),
    HearstPattern(
        pattern_id="contrastive-default",
        kind=CONTRASTIVE_KIND,
        template="unlike {head_seed} and {tail_seed} , [MASK] has a different relation to [MASK] .",
    ),
)


@dataclass(frozen=True)
class ProbeQuery:
    """A rendered probe text with the two mask placeholder offsets."""

    text: str
    mask_positions: tuple[int, int]
    pattern_id: str
    kind: str
    bound_class: str
    bound_pair_id: str | None = None

    def __post_init__(self) -> None:
        first, second = self.mask_positions
        if first == second:
            raise ValidationError("mask positions must be distinct")
        for pos in self.mask_positions:
            if not self.text.startswith(MASK_LITERAL, pos):
                raise ValidationError(
                    f"mask position {pos} does not point at {MASK_LITERAL} in {self.text!r}"
                )
        if self.kind not in PATTERN_KINDS:
            raise ValidationError(f"unknown query kind {self.kind!r}")

    @property
    def query_id(self) -> str:
        parts = [self.kind, self.pattern_id, self.bound_class or "-", self.bound_pair_id or "-"]
        return "|".join(parts)


@runtime_checkable
class EmbeddingProvider(Protocol):
    """Contract for anything that can embed a two-mask probe text.

    ``embed_masked`` receives text containing exactly two :data:`MASK_LITERAL`
    placeholders and returns the vectors at the two mask positions, in text
    order. Implementations must be deterministic for identical input when run
    in evaluation mode, and must return finite vectors of ``dim`` entries.
    """

    @property
    def dim(self) -> int: ...

    def embed_masked(self, text: str) -> tuple[np.ndarray, np.ndarray]: ...


def render_query(
    pattern: HearstPattern,
    seed: tuple[str, str] | None = None,
    class_name: str = "",
    *,
    pair_id: str | None = None,
) -> ProbeQuery:
    """Render a probe query by substituting slot bindings verbatim.

    Every slot the template references must have a binding. The rendered text
    must still contain exactly two mask placeholders, which guards against
    bindings that smuggle mask literals in.
    """
    bindings: dict[str, str] = {}
    if seed is not None:
        head, tail = seed
        bindings["head_seed"] = head
        bindings["tail_seed"] = tail
    if class_name:
        bindings["class_name"] = class_name

    text = pattern.template
    for slot in pattern.slots():
        if slot not in bindings:
            raise ValidationError(
                f"pattern {pattern.pattern_id!r}: no binding for slot {{{slot}}}"
            )
        text = text.replace("{" + slot + "}", bindings[slot])

    positions = _mask_positions(text, context=f"pattern {pattern.pattern_id!r}")
    return ProbeQuery(
        text=text,
        mask_positions=positions,
        pattern_id=pattern.pattern_id,
        kind=pattern.kind,
        bound_class=class_name,
        bound_pair_id=pair_id,
    )


def _mask_positions(text: str, *, context: str) -> tuple[int, int]:
    positions = []
    start = 0
    while True:
        pos = text.find(MASK_LITERAL, start)
        if pos < 0:
            break
        positions.append(pos)
        start = pos + len(MASK_LITERAL)
    if len(positions) != 2:
        raise ValidationError(
            f"{context}: rendered text must contain exactly two {MASK_LITERAL} "
            f"placeholders, found {len(positions)}: {text!r}"
        )
    return (positions[0], positions[1])


def _mask_mean(
    provider: EmbeddingProvider,
    text: str,
    *,
    provenance: str,
    source_query_id: str | None,
) -> Embedding:
    first, second = provider.embed_masked(text)
    first = np.asarray(first, dtype=np.float64).reshape(-1)
    second = np.asarray(second, dtype=np.float64).reshape(-1)
    expected = provider.dim
    for vec in (first, second):
        if vec.shape[0] != expected:
            raise DimensionMismatchError(
                f"provider advertised dim {expected} but returned a dim-{vec.shape[0]} vector"
            )
    return Embedding(
        vector=(first + second) / 2.0,
        provenance=provenance,
        source_query_id=source_query_id,
    )


def pair_representation(query: ProbeQuery, provider: EmbeddingProvider) -> Embedding:
    """Embed a rendered probe query: the mean of its two mask vectors.

    Provenance follows the pattern kind the query was rendered from.
    """
    return _mask_mean(
        provider,
        query.text,
        provenance=KIND_TO_PROVENANCE[query.kind],
        source_query_id=query.query_id,
    )


def mention_representation(mention: PairMention, provider: EmbeddingProvider) -> Embedding:
    """Embed a corpus mention with both entity spans masked out.

    Each span is replaced by a single mask placeholder regardless of its
    token length, so the provider always sees exactly two masks.
    """
    tokens = list(mention.tokens)
    spans = sorted([mention.head_span, mention.tail_span], key=lambda s: s[0], reverse=True)
    for start, end in spans:
        tokens[start:end] = [MASK_LITERAL]
    text = " ".join(tokens)
    _mask_positions(text, context=f"mention {mention.id!r}")
    return _mask_mean(
        provider,
        text,
        provenance=MENTION_CONTEXT,
        source_query_id=None,
    )


def class_representations(
    class_name: str,
    seeds: Sequence[tuple[str, str]],
    patterns: Sequence[HearstPattern],
    provider: EmbeddingProvider,
    kind: str = ANALOGOUS_KIND,
) -> list[Embedding]:
    """Probe every seed through every pattern of the requested kind.

    Returns ``len(seeds) * len(matching patterns)`` embeddings ordered
    seed-major then pattern, each built via :func:`render_query` +
    :func:`pair_representation`.
    """
    if not seeds:
        raise ValidationError(f"class {class_name!r}: seed list is empty")
    selected = [p for p in patterns if p.kind == kind]
    if not selected:
        raise ValidationError(f"class {class_name!r}: no patterns of kind {kind!r} supplied")
    out: list[Embedding] = []
    for index, seed in enumerate(seeds):
        for pattern in selected:
            query = render_query(
                pattern,
                seed=seed,
                class_name=class_name if "class_name" in pattern.slots() else "",
                pair_id=f"{class_name}#seed{index}",
            )
            out.append(pair_representation(query, provider))
    return out
