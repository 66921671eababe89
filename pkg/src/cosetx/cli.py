"""Command-line pipeline: probe, rank-classes, expand, fuse-eval, filter-seeds.

Every run writes a manifest next to its primary output recording the resolved
config, the master seed, and SHA-256 digests of all input files, so a run can
be replayed byte-for-byte. Outputs are written to a temp file and renamed
into place; a failed run never leaves a truncated primary output behind.

Exit codes: 0 success, 1 validation/usage error, 2 provider or file-IO error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from typing import Callable, Mapping, NoReturn, Sequence

import numpy as np

from .coexpand import expand
from .classrank import build_contrastive_map
from .core import (
    ANALOGOUS_PATTERN,
    MENTION_CONTEXT,
    SEED_ORIGIN,
    Embedding,
    EmbeddingStore,
    ExemplarSet,
    ExpansionConfig,
)
from .errors import ProviderError, StoreIOError, ValidationError
from .fuse_eval import (
    confusion_csv,
    confusion_matrix,
    fuse_predict_all,
    lambda_sweep,
    metrics,
)
from .ingest import (
    DatasetSchema,
    SeedFile,
    filter_seeds,
    get_schema,
    load_classifier_scores,
    load_patterns,
    load_relation_instances,
    load_seed_sets,
    load_store,
    save_store,
)
from .probing import (
    ANALOGOUS_KIND,
    CONTRASTIVE_KIND,
    DEFAULT_PATTERNS,
    HearstPattern,
    mention_representation,
    pair_representation,
    render_query,
)
from .providers import provider_from_spec
from .report import render_confusion_heatmap, render_lambda_sweep


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the engine reserves 2 for
    # provider/IO failures, so usage errors are remapped to 1.
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: str, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _atomic_file_output(path: str, write: Callable[[str], None]) -> None:
    """Run a path-taking writer against a temp file, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(args: argparse.Namespace) -> ExpansionConfig:
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as handle:
            try:
                doc = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ValidationError(
                    f"{args.config}: JSON parse error at line {exc.lineno}: {exc.msg}"
                )
        config = ExpansionConfig.from_json(doc)
    else:
        config = ExpansionConfig()
    if getattr(args, "seed", None) is not None:
        config = config.replace(master_seed=args.seed)
    return config


def _write_manifest(
    path: str,
    subcommand: str,
    config: ExpansionConfig,
    inputs: Mapping[str, str | None],
    **extras,
) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config.to_json(),
        "master_seed": config.master_seed,
        "inputs": {
            name: {"path": value, "sha256": _sha256(value)}
            for name, value in inputs.items()
            if value is not None
        },
    }
    manifest.update(extras)
    _atomic_write_text(path, json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _seed_member_id(class_name: str, index: int) -> str:
    return f"seed:{class_name}:{index}"


def seed_state_from_store(
    seeds: SeedFile, store: EmbeddingStore
) -> dict[str, ExemplarSet]:
    """Materialize per-class exemplar sets from probed seed representations."""
    state: dict[str, ExemplarSet] = {}
    for class_name, pairs in seeds.seeds.items():
        exemplars = ExemplarSet(class_name)
        for index in range(len(pairs)):
            member_id = _seed_member_id(class_name, index)
            exemplars.add(member_id, store.get(member_id, ANALOGOUS_PATTERN), SEED_ORIGIN)
        state[class_name] = exemplars
    return state


def _mean_embedding(members: Sequence[Embedding], provenance: str) -> Embedding:
    if len(members) == 1:
        return members[0]
    stacked = np.stack([m.vector.astype(np.float64) for m in members])
    return Embedding(stacked.mean(axis=0), provenance, None)


def _pattern_pair_embeddings(
    head: str,
    tail: str,
    pair_id: str,
    class_name: str,
    patterns: Sequence[HearstPattern],
    provider,
) -> dict[str, Embedding]:
    """One embedding per pattern kind for an entity pair, averaged over the
    kind's patterns when there are several."""
    out: dict[str, Embedding] = {}
    for kind in (ANALOGOUS_KIND, CONTRASTIVE_KIND):
        selected = [p for p in patterns if p.kind == kind]
        embeddings = []
        for pattern in selected:
            query = render_query(
                pattern,
                seed=(head, tail),
                class_name=class_name if "class_name" in pattern.slots() else "",
                pair_id=pair_id,
            )
            embeddings.append(pair_representation(query, provider))
        if embeddings:
            out[kind] = _mean_embedding(embeddings, embeddings[0].provenance)
    return out


def _require_both_kinds(patterns: Sequence[HearstPattern]) -> None:
    kinds = {p.kind for p in patterns}
    for kind in (ANALOGOUS_KIND, CONTRASTIVE_KIND):
        if kind not in kinds:
            raise ValidationError(f"pattern file supplies no {kind} patterns")


def cmd_probe(args: argparse.Namespace) -> None:
    schema = get_schema(args.schema)
    seeds = load_seed_sets(args.seeds, schema)
    patterns = load_patterns(args.patterns) if args.patterns else DEFAULT_PATTERNS
    _require_both_kinds(patterns)
    config = _load_config(args)
    provider = provider_from_spec(args.provider)

    store = EmbeddingStore()
    for class_name, pairs in seeds.seeds.items():
        for index, (head, tail) in enumerate(pairs):
            member_id = _seed_member_id(class_name, index)
            for embedding in _pattern_pair_embeddings(
                head, tail, member_id, class_name, patterns, provider
            ).values():
                store.put(member_id, embedding)
    if args.corpus:
        for mention in load_relation_instances(args.corpus, schema):
            store.put(mention.id, mention_representation(mention, provider))
            for embedding in _pattern_pair_embeddings(
                mention.head_text(), mention.tail_text(), mention.id, "", patterns, provider
            ).values():
                store.put(mention.id, embedding)

    _atomic_file_output(args.out, lambda tmp: save_store(store, tmp))
    _write_manifest(
        args.out + ".manifest.json",
        "probe",
        config,
        {"seeds": args.seeds, "patterns": args.patterns, "corpus": args.corpus},
        schema=schema.name,
        provider=args.provider,
    )


def cmd_rank_classes(args: argparse.Namespace) -> None:
    schema = get_schema(args.schema)
    seeds = load_seed_sets(args.seeds, schema)
    store = load_store(args.store)
    config = _load_config(args)
    state = seed_state_from_store(seeds, store)
    contrastive = build_contrastive_map(state, config.k, config.num_contrastive)
    doc = {name: contrastive[name].to_json() for name in sorted(contrastive)}
    _atomic_write_text(args.out, json.dumps(doc, indent=1) + "\n")
    _write_manifest(
        args.out + ".manifest.json",
        "rank-classes",
        config,
        {"seeds": args.seeds, "store": args.store, "config": args.config},
        schema=schema.name,
    )


def _load_candidates(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, list) or not all(isinstance(x, str) for x in doc):
        raise ValidationError(f"{path}: expected a JSON array of pair-id strings")
    if len(set(doc)) != len(doc):
        raise ValidationError(f"{path}: candidate pool contains duplicate pair ids")
    return doc


def cmd_expand(args: argparse.Namespace) -> None:
    schema = get_schema(args.schema)
    seeds = load_seed_sets(args.seeds, schema)
    store = load_store(args.store)
    config = _load_config(args)
    candidates = _load_candidates(args.candidates)
    state = seed_state_from_store(seeds, store)

    final_state, audit = expand(state, candidates, config, store, jobs=args.jobs)

    sets_doc = {
        name: [
            {"pair_id": member.pair_id, "origin": member.origin}
            for member in exemplars
        ]
        for name, exemplars in final_state.items()
    }
    audit_path = args.audit or args.out + ".audit.jsonl"
    _atomic_write_text(
        audit_path, "".join(json.dumps(record) + "\n" for record in audit)
    )
    _atomic_write_text(args.out, json.dumps(sets_doc, indent=1) + "\n")
    _write_manifest(
        args.out + ".manifest.json",
        "expand",
        config,
        {
            "seeds": args.seeds,
            "store": args.store,
            "candidates": args.candidates,
            "config": args.config,
        },
        schema=schema.name,
    )


def _state_from_sets_file(path: str, store: EmbeddingStore) -> dict[str, ExemplarSet]:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected a JSON object of class → members")
    state: dict[str, ExemplarSet] = {}
    for class_name, members in doc.items():
        exemplars = ExemplarSet(class_name)
        for member in members:
            exemplars.add(
                member["pair_id"],
                store.get(member["pair_id"], ANALOGOUS_PATTERN),
                member["origin"],
            )
        state[class_name] = exemplars
    return state


def cmd_fuse_eval(args: argparse.Namespace) -> None:
    schema = get_schema(args.schema)
    store = load_store(args.store)
    config = _load_config(args)
    if args.sets:
        state = _state_from_sets_file(args.sets, store)
    else:
        state = seed_state_from_store(load_seed_sets(args.seeds, schema), store)
    scores = load_classifier_scores(args.scores)
    gold = {
        mention.id: mention.gold_relation
        for mention in load_relation_instances(args.corpus, schema)
        if mention.gold_relation is not None
    }
    vectors = {
        cls.pair_id: store.get(cls.pair_id, MENTION_CONTEXT) for cls in scores
    }

    predictions = fuse_predict_all(scores, vectors, state, config, jobs=args.jobs)
    matrix = confusion_matrix(predictions, gold, schema.relation_inventory)
    results = metrics(predictions, gold, schema.negative_label)

    os.makedirs(args.out, exist_ok=True)
    _atomic_write_text(
        os.path.join(args.out, "metrics.json"),
        json.dumps(results, indent=1, sort_keys=True) + "\n",
    )
    _atomic_write_text(
        os.path.join(args.out, "confusion.csv"),
        confusion_csv(schema.relation_inventory, matrix),
    )
    _atomic_file_output(
        os.path.join(args.out, "confusion.png"),
        lambda tmp: render_confusion_heatmap(
            schema.relation_inventory, matrix, tmp, title=f"{schema.name} confusion"
        ),
    )
    if args.sweep:
        lambdas = [float(x) for x in args.sweep.split(",") if x.strip()]
        if not lambdas:
            raise ValidationError("--sweep needs at least one value")
        records = lambda_sweep(
            scores, vectors, state, config, lambdas, gold, schema.negative_label,
            jobs=args.jobs,
        )
        _atomic_write_text(
            os.path.join(args.out, "sweep.jsonl"),
            "".join(json.dumps(r, sort_keys=True) + "\n" for r in records),
        )
        _atomic_file_output(
            os.path.join(args.out, "sweep.png"),
            lambda tmp: render_lambda_sweep(records, tmp),
        )
    _write_manifest(
        os.path.join(args.out, "manifest.json"),
        "fuse-eval",
        config,
        {
            "scores": args.scores,
            "corpus": args.corpus,
            "store": args.store,
            "sets": args.sets,
            "seeds": args.seeds,
            "config": args.config,
        },
        schema=schema.name,
        sweep=args.sweep,
    )


def cmd_filter_seeds(args: argparse.Namespace) -> None:
    schema = get_schema(args.schema)
    seeds = load_seed_sets(args.seeds, schema)
    if args.stopwords:
        with open(args.stopwords, "r", encoding="utf-8") as handle:
            stopwords = [line.strip() for line in handle if line.strip()]
        kept, rejected = filter_seeds(seeds, stopwords)
    else:
        kept, rejected = filter_seeds(seeds)
    _atomic_write_text(args.out, json.dumps(kept.to_json(), indent=1) + "\n")
    _atomic_write_text(
        args.out + ".report.json", json.dumps(rejected, indent=1) + "\n"
    )
    config = _load_config(args)
    _write_manifest(
        args.out + ".manifest.json",
        "filter-seeds",
        config,
        {"seeds": args.seeds, "stopwords": args.stopwords},
        schema=schema.name,
    )


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cosetx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p: _Parser, *, store: bool = False, seeds: bool = False) -> None:
        p.add_argument("--schema", required=True, help="dataset schema name")
        if store:
            p.add_argument("--store", required=True, help="embedding store file")
        if seeds:
            p.add_argument("--seeds", required=True, help="seed file (JSON)")
        p.add_argument("--config", help="expansion config file (JSON)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--jobs", type=_positive_int, default=1, help="worker threads")
        p.add_argument("--out", required=True, help="output path")

    p = sub.add_parser("probe", help="embed seeds and corpus mentions into a store file")
    common(p, seeds=True)
    p.add_argument("--patterns", help="probe pattern file (JSON; built-ins when omitted)")
    p.add_argument("--corpus", help="dataset file whose mentions to embed")
    p.add_argument(
        "--provider",
        default="stub",
        help="embedding provider: 'stub', 'stub:dim=N,salt=S', or a service URL",
    )
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("rank-classes", help="write each class's contrastive set")
    common(p, store=True, seeds=True)
    p.set_defaults(func=cmd_rank_classes)

    p = sub.add_parser("expand", help="co-expand exemplar sets from a candidate pool")
    common(p, store=True, seeds=True)
    p.add_argument("--candidates", required=True, help="candidate pair-id file (JSON array)")
    p.add_argument("--audit", help="audit log path (default: <out>.audit.jsonl)")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("fuse-eval", help="fuse classifier scores and evaluate")
    common(p, store=True)
    p.add_argument("--seeds", help="seed file, for seed-only exemplar sets")
    p.add_argument("--sets", help="expanded sets file from the expand subcommand")
    p.add_argument("--scores", required=True, help="classifier scores (JSON-lines)")
    p.add_argument("--corpus", required=True, help="dataset file carrying gold labels")
    p.add_argument("--sweep", help="comma-separated fusion weights to sweep")
    p.set_defaults(func=cmd_fuse_eval)

    p = sub.add_parser("filter-seeds", help="drop pronoun-like seeds, with a report")
    common(p, seeds=True)
    p.add_argument("--stopwords", help="stopword file, one word per line")
    p.set_defaults(func=cmd_filter_seeds)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "fuse-eval" and not (args.sets or args.seeds):
            parser.error("fuse-eval requires --sets or --seeds")
        args.func(args)
        return 0
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    except ValidationError as exc:
        print(f"cosetx: error: {exc}", file=sys.stderr)
        return 1
    except (ProviderError, StoreIOError) as exc:
        print(f"cosetx: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cosetx: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
