import numpy as np
import pytest

from cosetx import (
    ANALOGOUS_PATTERN,
    CONTRASTIVE_PATTERN,
    MENTION_CONTEXT,
    SEED_ORIGIN,
    EXPANDED_ORIGIN,
    ContrastiveSet,
    DimensionMismatchError,
    DuplicateEntryError,
    Embedding,
    EmbeddingStore,
    ExemplarSet,
    ExpansionConfig,
    MissingEmbeddingError,
    PairMention,
    ValidationError,
)


def emb(values, provenance=ANALOGOUS_PATTERN, sqid=None):
    return Embedding(np.asarray(values, dtype=np.float64), provenance, sqid)


class TestPairMention:
    def test_valid_mention_and_span_text(self):
        m = PairMention(
            id="p1",
            tokens=("Bill", "Gates", "founded", "Microsoft", "."),
            head_span=(0, 2),
            tail_span=(3, 4),
            gold_relation="org:founded_by",
        )
        assert m.head_text() == "Bill Gates"
        assert m.tail_text() == "Microsoft"
        assert m.gold_relation == "org:founded_by"

    def test_gold_relation_defaults_to_none(self):
        m = PairMention("p", ("a", "b"), (0, 1), (1, 2))
        assert m.gold_relation is None

    @pytest.mark.parametrize(
        "head,tail",
        [
            ((0, 0), (1, 2)),   # empty head
            ((0, 1), (1, 3)),   # tail end out of bounds
            ((-1, 1), (1, 2)),  # negative start
            ((0, 2), (1, 2)),   # overlap
        ],
    )
    def test_bad_spans_rejected(self, head, tail):
        with pytest.raises(ValidationError):
            PairMention("p", ("a", "b"), head, tail)

    def test_empty_tokens_rejected(self):
        with pytest.raises(ValidationError):
            PairMention("p", (), (0, 1), (1, 2))

    def test_empty_id_rejected(self):
        with pytest.raises(ValidationError):
            PairMention("", ("a", "b"), (0, 1), (1, 2))


class TestEmbedding:
    def test_vector_stored_as_float32(self):
        e = emb([0.1, 0.2, 0.3])
        assert e.vector.dtype == np.float32
        assert e.dim == 3

    def test_vector_is_immutable(self):
        e = emb([1.0, 2.0])
        with pytest.raises(ValueError):
            e.vector[0] = 5.0

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            emb([1.0, float("nan")])

    def test_empty_vector_rejected(self):
        with pytest.raises(ValidationError):
            emb([])

    def test_unknown_provenance_rejected(self):
        with pytest.raises(ValidationError):
            Embedding(np.ones(2), "typo_pattern")

    def test_equality_is_bit_exact(self):
        a = emb([0.1, 0.2])
        b = emb([0.1, 0.2])
        c = emb([0.1, 0.2 + 1e-7])
        assert a == b and hash(a) == hash(b)
        assert a != c

    def test_equality_covers_provenance(self):
        a = emb([0.5], ANALOGOUS_PATTERN)
        b = emb([0.5], CONTRASTIVE_PATTERN)
        assert a != b


class TestExemplarSet:
    def test_insertion_order_preserved(self):
        s = ExemplarSet("relA")
        for i in range(5):
            s.add(f"p{i}", emb([float(i), 1.0]), SEED_ORIGIN)
        assert s.member_ids == ("p0", "p1", "p2", "p3", "p4")
        assert [m.pair_id for m in s] == list(s.member_ids)

    def test_duplicate_member_rejected(self):
        s = ExemplarSet("relA")
        s.add("p0", emb([1.0]), SEED_ORIGIN)
        with pytest.raises(DuplicateEntryError):
            s.add("p0", emb([2.0]), EXPANDED_ORIGIN)

    def test_membership_and_seed_ids(self):
        s = ExemplarSet("relA")
        s.add("p0", emb([1.0]), SEED_ORIGIN)
        s.add("p1", emb([2.0]), EXPANDED_ORIGIN)
        assert "p0" in s and "p2" not in s
        assert s.seed_ids() == ("p0",)
        assert len(s) == 2

    def test_no_removal_operation_exists(self):
        s = ExemplarSet("relA")
        for name in ("remove", "discard", "pop", "clear", "__delitem__"):
            assert not hasattr(s, name)

    def test_unknown_origin_rejected(self):
        s = ExemplarSet("relA")
        with pytest.raises(ValidationError):
            s.add("p0", emb([1.0]), "imported")


class TestContrastiveSet:
    def test_positive_inside_negatives_rejected(self):
        with pytest.raises(ValidationError):
            ContrastiveSet("relA", ("relA", "relB"), (1.0, 0.5))

    def test_duplicate_negatives_rejected(self):
        with pytest.raises(ValidationError):
            ContrastiveSet("relA", ("relB", "relB"), (1.0, 0.5))

    def test_scores_must_be_parallel(self):
        with pytest.raises(ValidationError):
            ContrastiveSet("relA", ("relB",), (1.0, 0.5))

    def test_json_round_trip(self):
        cs = ContrastiveSet("relA", ("relB", "relC"), (2.0, 1.0))
        assert ContrastiveSet.from_json(cs.to_json()) == cs


class TestExpansionConfig:
    def test_defaults(self):
        c = ExpansionConfig()
        assert c.k == 3
        assert c.lambda_weight == 0.5
        assert c.num_contrastive == 6
        assert c.rank_mode == "geometric"

    @pytest.mark.parametrize(
        "overrides",
        [
            {"k": 0},
            {"sample_size": -1},
            {"iterations": -1},
            {"lambda_weight": -0.1},
            {"lambda_weight": float("inf")},
            {"master_seed": -1},
            {"master_seed": 2**64},
            {"rank_mode": "harmonic"},
        ],
    )
    def test_invalid_fields_rejected(self, overrides):
        with pytest.raises(ValidationError):
            ExpansionConfig(**overrides)

    def test_zero_iterations_allowed(self):
        assert ExpansionConfig(iterations=0).iterations == 0

    def test_json_round_trip_and_unknown_field(self):
        c = ExpansionConfig(k=4, master_seed=99)
        assert ExpansionConfig.from_json(c.to_json()) == c
        with pytest.raises(ValidationError):
            ExpansionConfig.from_json({"k": 4, "temperature": 1.0})

    def test_replace(self):
        c = ExpansionConfig().replace(lambda_weight=0.0)
        assert c.lambda_weight == 0.0
        assert c.k == 3


class TestEmbeddingStore:
    def test_first_insert_fixes_dimension(self):
        store = EmbeddingStore()
        assert store.dim is None
        store.put("a", emb([1.0, 2.0, 3.0, 4.0]))
        assert store.dim == 4

    def test_dimension_mismatch_rejected(self):
        store = EmbeddingStore()
        store.put("a", emb([1.0, 2.0, 3.0, 4.0]))
        with pytest.raises(DimensionMismatchError):
            store.put("b", emb([1.0, 2.0, 3.0]))

    def test_round_trip_is_bit_exact(self):
        store = EmbeddingStore()
        e = emb([0.1, -0.7, 3.14159])
        store.put("a", e)
        got = store.get("a", ANALOGOUS_PATTERN)
        assert got is e
        assert np.array_equal(got.vector, e.vector)

    def test_same_key_different_provenance_coexists(self):
        store = EmbeddingStore()
        store.put("a", emb([1.0], ANALOGOUS_PATTERN))
        store.put("a", emb([2.0], CONTRASTIVE_PATTERN))
        store.put("a", emb([3.0], MENTION_CONTEXT))
        assert len(store) == 3

    def test_duplicate_entry_rejected(self):
        store = EmbeddingStore()
        store.put("a", emb([1.0]))
        with pytest.raises(DuplicateEntryError):
            store.put("a", emb([2.0]))

    def test_missing_entry_raises(self):
        store = EmbeddingStore()
        store.put("a", emb([1.0], ANALOGOUS_PATTERN))
        with pytest.raises(MissingEmbeddingError):
            store.get("a", MENTION_CONTEXT)

    def test_entries_iterate_in_insertion_order(self):
        store = EmbeddingStore()
        store.put("b", emb([1.0]))
        store.put("a", emb([2.0]))
        assert [key for key, _, _ in store.entries()] == ["b", "a"]
