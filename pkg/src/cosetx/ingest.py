"""File ingestion: datasets, seeds, patterns, classifier scores, store files.

Loaders are pure functions of file bytes. Dataset records use the community
TACRED JSON shape (token list, inclusive subject/object span indices,
relation label); SemEval's native text format is adapted to the same shape by
a converter so one loader serves all three schemas.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .core import PROVENANCES, Embedding, EmbeddingStore, PairMention
from .errors import StoreIOError, ValidationError
from .fuse_eval import ClassifierScores
from .probing import HearstPattern


@dataclass(frozen=True)
class DatasetSchema:
    """A dataset's relation inventory plus its designated negative label."""

    name: str
    relation_inventory: tuple[str, ...]
    negative_label: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "relation_inventory", tuple(self.relation_inventory))
        if len(set(self.relation_inventory)) != len(self.relation_inventory):
            raise ValidationError(f"schema {self.name!r}: duplicate relation labels")
        if self.negative_label not in self.relation_inventory:
            raise ValidationError(
                f"schema {self.name!r}: negative label {self.negative_label!r} "
                "is not in the inventory"
            )


_TACRED_PER = (
    "per:age",
    "per:cause_of_death",
    "per:charges",
    "per:children",
    "per:cities_of_residence",
    "per:city_of_birth",
    "per:city_of_death",
    "per:countries_of_residence",
    "per:country_of_birth",
    "per:country_of_death",
    "per:date_of_birth",
    "per:date_of_death",
    "per:employee_of",
    "per:origin",
    "per:other_family",
    "per:parents",
    "per:religion",
    "per:schools_attended",
    "per:siblings",
    "per:spouse",
    "per:stateorprovince_of_birth",
    "per:stateorprovince_of_death",
    "per:stateorprovinces_of_residence",
    "per:title",
)

_TACREV_INVENTORY = (
    "no_relation",
    "org:alternate_names",
    "org:city_of_headquarters",
    "org:country_of_headquarters",
    "org:dissolved",
    "org:founded",
    "org:founded_by",
    "org:member_of",
    "org:members",
    "org:number_of_employees/members",
    "org:parents",
    "org:political/religious_affiliation",
    "org:shareholders",
    "org:stateorprovince_of_headquarters",
    "org:subsidiaries",
    "org:top_members/employees",
    "org:website",
    "per:alternate_names",
) + _TACRED_PER

_RETACRED_INVENTORY = (
    "no_relation",
    "org:alternate_names",
    "org:city_of_branch",
    "org:country_of_branch",
    "org:dissolved",
    "org:founded",
    "org:founded_by",
    "org:member_of",
    "org:members",
    "org:number_of_employees/members",
    "org:political/religious_affiliation",
    "org:shareholders",
    "org:stateorprovince_of_branch",
    "org:top_members/employees",
    "org:website",
    "per:identity",
) + _TACRED_PER

_SEMEVAL_DIRECTED = (
    "Cause-Effect",
    "Component-Whole",
    "Content-Container",
    "Entity-Destination",
    "Entity-Origin",
    "Instrument-Agency",
    "Member-Collection",
    "Message-Topic",
    "Product-Producer",
)

_SEMEVAL_INVENTORY = ("Other",) + tuple(
    f"{rel}({direction})"
    for rel in _SEMEVAL_DIRECTED
    for direction in ("e1,e2", "e2,e1")
)

SCHEMAS: dict[str, DatasetSchema] = {
    "tacrev": DatasetSchema("tacrev", _TACREV_INVENTORY, "no_relation"),
    "retacred": DatasetSchema("retacred", _RETACRED_INVENTORY, "no_relation"),
    "semeval": DatasetSchema("semeval", _SEMEVAL_INVENTORY, "Other"),
}

# Inventory sizes each schema must carry; enforced on every lookup so a
# registry edit cannot silently change a schema's arity.
EXPECTED_INVENTORY_SIZES = {"tacrev": 42, "retacred": 40, "semeval": 19}


def get_schema(name: str) -> DatasetSchema:
    if name not in SCHEMAS:
        raise ValidationError(
            f"unknown schema {name!r}; available: {sorted(SCHEMAS)}"
        )
    schema = SCHEMAS[name]
    expected = EXPECTED_INVENTORY_SIZES[name]
    if len(schema.relation_inventory) != expected:
        raise ValidationError(
            f"schema {name!r} has {len(schema.relation_inventory)} relations, "
            f"expected {expected}"
        )
    return schema


def load_relation_instances(path: str, schema: DatasetSchema) -> list[PairMention]:
    """Parse a community-format TACRED JSON file into validated mentions.

    Subject/object span indices in the file are inclusive; mentions use
    half-open spans, hence the +1 on the end indices. Parse failures carry
    the line number from the JSON decoder; a record that parses but fails
    validation is reported by its array index.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            records = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}")
    if not isinstance(records, list):
        raise ValidationError(f"{path}: expected a JSON array of records")
    mentions = []
    for i, record in enumerate(records):
        try:
            if not isinstance(record, dict):
                raise ValidationError("record is not an object")
            relation = record["relation"]
            if relation not in schema.relation_inventory:
                raise ValidationError(
                    f"relation {relation!r} not in schema {schema.name!r}"
                )
            mention = PairMention(
                id=str(record["id"]),
                tokens=tuple(record["token"]),
                head_span=(int(record["subj_start"]), int(record["subj_end"]) + 1),
                tail_span=(int(record["obj_start"]), int(record["obj_end"]) + 1),
                gold_relation=relation,
            )
        except KeyError as exc:
            raise ValidationError(f"{path}: record {i}: missing field {exc.args[0]!r}")
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: record {i}: {exc}")
        except ValidationError as exc:
            raise ValidationError(f"{path}: record {i}: {exc}")
        mentions.append(mention)
    return mentions


_SEMEVAL_SENTENCE = re.compile(r'^(\d+)\t"(.*)"$')
_SEMEVAL_TAG = re.compile(r"(</?e[12]>)")


def _semeval_spans(text: str) -> tuple[list[str], tuple[int, int], tuple[int, int]]:
    tokens: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    open_entity = None
    start = 0
    for part in _SEMEVAL_TAG.split(text):
        if part in ("<e1>", "<e2>"):
            open_entity = part[1:3]
            start = len(tokens)
        elif part in ("</e1>", "</e2>"):
            if open_entity != part[2:4]:
                raise ValidationError(f"mismatched entity tags in: {text!r}")
            spans[open_entity] = (start, len(tokens))
            open_entity = None
        else:
            tokens.extend(part.split())
    if set(spans) != {"e1", "e2"}:
        raise ValidationError(f"sentence does not mark both entities: {text!r}")
    return tokens, spans["e1"], spans["e2"]


def convert_semeval(src_path: str, dest_path: str | None = None) -> list[dict]:
    """Rewrite SemEval's native text format as community-style JSON records.

    The source alternates a tab-separated ``id<TAB>"sentence"`` line with the
    relation label on the next line; Comment lines and blanks are skipped.
    Inclusive span indices in the output keep the records loadable by
    :func:`load_relation_instances`.
    """
    with open(src_path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    records = []
    pending: tuple[str, str] | None = None
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("Comment"):
            continue
        match = _SEMEVAL_SENTENCE.match(line)
        if match:
            if pending is not None:
                raise ValidationError(
                    f"{src_path}: line {lineno}: sentence {pending[0]} has no relation label"
                )
            pending = (match.group(1), match.group(2))
            continue
        if pending is None:
            raise ValidationError(
                f"{src_path}: line {lineno}: relation label without a sentence"
            )
        sentence_id, sentence = pending
        pending = None
        tokens, head, tail = _semeval_spans(sentence)
        records.append(
            {
                "id": sentence_id,
                "token": tokens,
                "subj_start": head[0],
                "subj_end": head[1] - 1,
                "obj_start": tail[0],
                "obj_end": tail[1] - 1,
                "relation": line,
            }
        )
    if pending is not None:
        raise ValidationError(
            f"{src_path}: sentence {pending[0]} has no relation label"
        )
    if dest_path is not None:
        with open(dest_path, "w", encoding="utf-8") as handle:
            json.dump(records, handle, ensure_ascii=False, indent=1)
    return records


@dataclass(frozen=True)
class SeedFile:
    """Per-class seed pairs, order preserved as written."""

    seeds: Mapping[str, tuple[tuple[str, str], ...]]

    def __post_init__(self) -> None:
        frozen = {}
        for class_name, pairs in self.seeds.items():
            if not pairs:
                raise ValidationError(f"class {class_name!r} has an empty seed list")
            checked = []
            for pair in pairs:
                head, tail = pair
                if not head or not tail:
                    raise ValidationError(
                        f"class {class_name!r}: seed {pair!r} has an empty side"
                    )
                checked.append((str(head), str(tail)))
            frozen[class_name] = tuple(checked)
        object.__setattr__(self, "seeds", frozen)

    def to_json(self) -> dict:
        return {name: [list(pair) for pair in pairs] for name, pairs in self.seeds.items()}


def load_seed_sets(path: str, schema: DatasetSchema) -> SeedFile:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected a JSON object of class → seed pairs")
    for class_name in doc:
        if class_name not in schema.relation_inventory:
            raise ValidationError(
                f"{path}: class {class_name!r} is not in schema {schema.name!r}"
            )
    return SeedFile(doc)


def save_seed_sets(seeds: SeedFile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(seeds.to_json(), handle, ensure_ascii=False, indent=1)


DEFAULT_PRONOUNS = frozenset(
    {
        "he", "him", "his", "she", "her", "hers", "they", "them", "their",
        "theirs", "it", "its", "i", "me", "my", "mine", "we", "us", "our",
        "ours", "you", "your", "yours",
    }
)


def filter_seeds(
    seeds: SeedFile,
    stopwords: Iterable[str] | None = None,
) -> tuple[SeedFile, list[dict]]:
    """Drop seeds whose head or tail is a stopword (default: English pronouns).

    Matching is case-insensitive on the whole string. Returns the surviving
    seeds plus one report entry per rejection; a class losing all of its
    seeds is an error, not a silent empty class.
    """
    words = DEFAULT_PRONOUNS if stopwords is None else {w.lower() for w in stopwords}
    kept: dict[str, list[tuple[str, str]]] = {}
    rejected: list[dict] = []
    for class_name, pairs in seeds.seeds.items():
        kept[class_name] = []
        for head, tail in pairs:
            matched = next(
                (side for side in (head, tail) if side.lower() in words), None
            )
            if matched is None:
                kept[class_name].append((head, tail))
            else:
                rejected.append(
                    {"class": class_name, "head": head, "tail": tail, "stopword": matched}
                )
        if not kept[class_name]:
            raise ValidationError(
                f"class {class_name!r} has no seeds left after stopword filtering"
            )
    return SeedFile(kept), rejected


def load_patterns(path: str) -> tuple[HearstPattern, ...]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, list):
        raise ValidationError(f"{path}: expected a JSON array of patterns")
    patterns = []
    seen = set()
    for i, entry in enumerate(doc):
        try:
            pattern = HearstPattern(
                pattern_id=entry["pattern_id"],
                kind=entry["kind"],
                template=entry["template"],
            )
        except KeyError as exc:
            raise ValidationError(f"{path}: pattern {i}: missing field {exc.args[0]!r}")
        except ValidationError as exc:
            raise ValidationError(f"{path}: pattern {i}: {exc}")
        if pattern.pattern_id in seen:
            raise ValidationError(
                f"{path}: duplicate pattern id {pattern.pattern_id!r}"
            )
        seen.add(pattern.pattern_id)
        patterns.append(pattern)
    return tuple(patterns)


def load_classifier_scores(path: str) -> list[ClassifierScores]:
    """Read JSON-lines classifier scores; every line is one pair's score map."""
    out = []
    seen = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                scores = ClassifierScores(pair_id=doc["pair_id"], scores=doc["scores"])
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc.msg}")
            except KeyError as exc:
                raise ValidationError(
                    f"{path}: line {lineno}: missing field {exc.args[0]!r}"
                )
            except ValidationError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc}")
            if scores.pair_id in seen:
                raise ValidationError(
                    f"{path}: line {lineno}: duplicate pair id {scores.pair_id!r}"
                )
            seen.add(scores.pair_id)
            out.append(scores)
    return out


# Store file layout. One JSON header line {dim, count, provenance_schema},
# then per record:
#   u32 key length | key UTF-8 bytes | u8 provenance index |
#   u32 source_query_id length (0 = none) | its UTF-8 bytes |
#   u32 vector byte length (must equal dim × 4) | dim little-endian f32
_U32 = struct.Struct("<I")
_U8 = struct.Struct("<B")


def save_store(store: EmbeddingStore, path: str) -> None:
    header = {
        "dim": store.dim if store.dim is not None else 0,
        "count": len(store),
        "provenance_schema": list(PROVENANCES),
    }
    with open(path, "wb") as handle:
        handle.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        handle.write(b"\n")
        for key, provenance, embedding in store.entries():
            _write_record(handle, key, provenance, embedding)


def _write_record(handle: IO[bytes], key: str, provenance: str, embedding: Embedding) -> None:
    key_bytes = key.encode("utf-8")
    handle.write(_U32.pack(len(key_bytes)))
    handle.write(key_bytes)
    handle.write(_U8.pack(PROVENANCES.index(provenance)))
    sqid = embedding.source_query_id
    sqid_bytes = sqid.encode("utf-8") if sqid is not None else b""
    handle.write(_U32.pack(len(sqid_bytes)))
    handle.write(sqid_bytes)
    payload = np.ascontiguousarray(embedding.vector, dtype="<f4").tobytes()
    handle.write(_U32.pack(len(payload)))
    handle.write(payload)


def _read_exact(handle: IO[bytes], n: int, index: int, what: str) -> bytes:
    data = handle.read(n)
    if len(data) != n:
        raise StoreIOError(f"record {index}: truncated while reading {what}")
    return data


def load_store(path: str) -> EmbeddingStore:
    with open(path, "rb") as handle:
        header_line = handle.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
            dim = int(header["dim"])
            count = int(header["count"])
            provenance_schema = list(header["provenance_schema"])
        except (ValueError, KeyError, UnicodeDecodeError):
            raise StoreIOError(f"{path}: malformed store header")
        store = EmbeddingStore()
        for index in range(count):
            key_len = _U32.unpack(_read_exact(handle, 4, index, "key length"))[0]
            key = _read_exact(handle, key_len, index, "key").decode("utf-8")
            prov_index = _U8.unpack(_read_exact(handle, 1, index, "provenance"))[0]
            if prov_index >= len(provenance_schema):
                raise StoreIOError(f"record {index}: provenance index {prov_index} out of range")
            provenance = provenance_schema[prov_index]
            sqid_len = _U32.unpack(_read_exact(handle, 4, index, "query id length"))[0]
            sqid = (
                _read_exact(handle, sqid_len, index, "query id").decode("utf-8")
                if sqid_len
                else None
            )
            vec_bytes = _U32.unpack(_read_exact(handle, 4, index, "vector length"))[0]
            if vec_bytes != dim * 4:
                raise StoreIOError(
                    f"record {index}: vector is {vec_bytes} bytes, expected {dim * 4} "
                    f"for a dim-{dim} store"
                )
            payload = _read_exact(handle, vec_bytes, index, "vector")
            vector = np.frombuffer(payload, dtype="<f4")
            try:
                store.put(key, Embedding(vector, provenance, sqid))
            except ValidationError as exc:
                raise StoreIOError(f"record {index}: {exc}")
        if handle.read(1):
            raise StoreIOError(f"{path}: trailing bytes after {count} records")
    return store
