"""Batch export: query file in, engine-loadable embedding store out.

The query file is a JSON array of objects with ``key`` and ``text`` fields,
plus optional ``provenance`` (default ``mention_context``) and
``source_query_id``. Every query must embed cleanly; the first failure aborts
the export naming the offending key, and the output path is either written
complete or not touched at all.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from cosetx import MENTION_CONTEXT, PROVENANCES, Embedding, EmbeddingStore, save_store

from .backend import MaskCountError, MaskedEncoder


class ExportError(ValueError):
    """A query entry could not be parsed or embedded."""


@dataclass(frozen=True)
class Query:
    key: str
    text: str
    provenance: str = MENTION_CONTEXT
    source_query_id: str | None = None


_FIELDS = {"key", "text", "provenance", "source_query_id"}


def load_queries(path: str) -> list[Query]:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ExportError(f"{path}: {exc}")
    if not isinstance(payload, list):
        raise ExportError(f"{path}: expected a JSON array of queries")
    queries = []
    seen = set()
    for i, item in enumerate(payload):
        if not isinstance(item, dict):
            raise ExportError(f"{path}: query {i}: not an object")
        unknown = sorted(set(item) - _FIELDS)
        if unknown:
            raise ExportError(f"{path}: query {i}: unknown field {unknown[0]!r}")
        try:
            key = item["key"]
            text = item["text"]
        except KeyError as exc:
            raise ExportError(f"{path}: query {i}: missing field {exc.args[0]!r}")
        if not isinstance(key, str) or not key:
            raise ExportError(f"{path}: query {i}: key must be a non-empty string")
        if not isinstance(text, str):
            raise ExportError(f"{path}: query {i}: text must be a string")
        provenance = item.get("provenance", MENTION_CONTEXT)
        if provenance not in PROVENANCES:
            raise ExportError(
                f"{path}: query {i}: unknown provenance {provenance!r}"
            )
        source_query_id = item.get("source_query_id")
        if source_query_id is not None and not isinstance(source_query_id, str):
            raise ExportError(
                f"{path}: query {i}: source_query_id must be a string or null"
            )
        if (key, provenance) in seen:
            raise ExportError(
                f"{path}: query {i}: duplicate key {key!r} under {provenance!r}"
            )
        seen.add((key, provenance))
        queries.append(Query(key, text, provenance, source_query_id))
    return queries


def export_store(
    encoder: MaskedEncoder,
    queries: Sequence[Query],
    out_path: str,
    *,
    batch_size: int = 16,
    deterministic: bool = True,
) -> int:
    """Embed every query's pair vector and write the binary store format."""
    if batch_size < 1:
        raise ExportError(f"batch_size must be >= 1, got {batch_size}")
    store = EmbeddingStore()
    queries = list(queries)
    for start in range(0, len(queries), batch_size):
        batch = queries[start : start + batch_size]
        try:
            vectors = encoder.encode(
                [query.text for query in batch], deterministic=deterministic
            )
        except MaskCountError as exc:
            failing = batch[exc.index]
            raise ExportError(f"query {failing.key!r}: {exc}") from exc
        for query, tv in zip(batch, vectors):
            store.put(
                query.key,
                Embedding(tv.pair_vector, query.provenance, query.source_query_id),
            )
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".embedsvc-")
    os.close(fd)
    try:
        save_store(store, tmp_path)
        os.replace(tmp_path, out_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return len(queries)
