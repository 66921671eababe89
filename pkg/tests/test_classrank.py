import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosetx import (
    AGGREGATE_ID,
    ANALOGOUS_PATTERN,
    Embedding,
    ExemplarSet,
    RankedClassList,
    SEED_ORIGIN,
    ValidationError,
    aggregate_rankings,
    build_contrastive_map,
    seed_class_ranking,
    select_contrastive,
)

import reference


def ranked(names, start=100.0, step=-1.0, seed_pair_id="s"):
    return RankedClassList(
        seed_pair_id=seed_pair_id,
        entries=tuple((n, start + i * step) for i, n in enumerate(names)),
    )


class TestRankedClassList:
    def test_accepts_descending_scores(self):
        r = ranked(["a", "b", "c"])
        assert r.class_names == ("a", "b", "c")
        assert r.position_of("b") == 1

    def test_rejects_out_of_order_scores(self):
        with pytest.raises(ValidationError):
            RankedClassList("s", (("a", 1.0), ("b", 2.0)))

    def test_rejects_tie_ordered_against_name(self):
        with pytest.raises(ValidationError):
            RankedClassList("s", (("b", 1.0), ("a", 1.0)))

    def test_accepts_tie_in_name_order(self):
        r = RankedClassList("s", (("a", 1.0), ("b", 1.0)))
        assert r.class_names == ("a", "b")

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValidationError):
            RankedClassList("s", (("a", 2.0), ("a", 1.0)))

    def test_position_of_missing_class_raises(self):
        with pytest.raises(ValidationError):
            ranked(["a"]).position_of("zz")


class TestSeedClassRanking:
    def make_state(self):
        state = {}
        for name, direction in [("relA", [1.0, 0.0]), ("relB", [0.0, 1.0])]:
            s = ExemplarSet(name)
            s.add(
                f"{name}:0",
                Embedding(np.asarray(direction), ANALOGOUS_PATTERN),
                SEED_ORIGIN,
            )
            state[name] = s
        return state

    def test_most_similar_class_ranks_first(self):
        state = self.make_state()
        probe = Embedding(np.asarray([1.0, 0.1]), ANALOGOUS_PATTERN)
        r = seed_class_ranking(probe, state, k=1, seed_pair_id="probe")
        assert r.class_names[0] == "relA"
        assert r.seed_pair_id == "probe"

    def test_empty_class_index_rejected(self):
        probe = Embedding(np.asarray([1.0, 0.0]), ANALOGOUS_PATTERN)
        with pytest.raises(ValidationError):
            seed_class_ranking(probe, {}, k=1)


class TestAggregateRankings:
    # Frozen instance: three hand-written rankings over five classes.
    # Totals were tallied by hand: alpha 13, bravo 5, charlie 12, delta 5,
    # echo 10; bravo precedes delta only by name.
    LISTS = [
        ["charlie", "alpha", "echo", "bravo", "delta"],
        ["alpha", "charlie", "delta", "echo", "bravo"],
        ["echo", "alpha", "charlie", "bravo", "delta"],
    ]

    def test_frozen_borda_totals_and_order(self):
        agg = aggregate_rankings([ranked(names) for names in self.LISTS])
        assert agg.seed_pair_id == AGGREGATE_ID
        assert agg.class_names == ("alpha", "charlie", "echo", "bravo", "delta")
        assert dict(agg.entries) == {
            "alpha": 13.0,
            "bravo": 5.0,
            "charlie": 12.0,
            "delta": 5.0,
            "echo": 10.0,
        }

    def test_matches_independent_tally(self):
        agg = aggregate_rankings([ranked(names) for names in self.LISTS])
        assert list(agg.entries) == reference.borda(self.LISTS)

    def test_single_list_preserves_its_order(self):
        agg = aggregate_rankings([ranked(["c", "a", "b"])])
        assert agg.class_names == ("c", "a", "b")

    def test_exactly_reversed_lists_tie_into_name_order(self):
        agg = aggregate_rankings([ranked(["c", "b", "a"]), ranked(["a", "b", "c"])])
        assert agg.class_names == ("a", "b", "c")
        assert all(s == 4.0 for _, s in agg.entries)

    def test_mismatched_universe_rejected(self):
        with pytest.raises(ValidationError):
            aggregate_rankings([ranked(["a", "b"]), ranked(["a", "c"])])

    def test_zero_lists_rejected(self):
        with pytest.raises(ValidationError):
            aggregate_rankings([])

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_input_order_does_not_matter(self, data):
        names = [f"c{i}" for i in range(data.draw(st.integers(2, 6)))]
        lists = []
        for i in range(data.draw(st.integers(1, 5))):
            order = data.draw(st.permutations(names))
            lists.append(ranked(order, seed_pair_id=f"s{i}"))
        shuffled = data.draw(st.permutations(lists))
        assert aggregate_rankings(lists).entries == aggregate_rankings(shuffled).entries


class TestSelectContrastive:
    AGG = ranked(["alpha", "charlie", "echo", "bravo", "delta"])

    def test_positive_class_is_excluded(self):
        cs = select_contrastive("charlie", self.AGG, m=3)
        assert cs.positive_class == "charlie"
        assert cs.negatives == ("alpha", "echo", "bravo")

    def test_truncates_to_m(self):
        cs = select_contrastive("alpha", self.AGG, m=2)
        assert cs.negatives == ("charlie", "echo")

    def test_m_beyond_available_returns_all_others(self):
        cs = select_contrastive("alpha", self.AGG, m=50)
        assert cs.negatives == ("charlie", "echo", "bravo", "delta")

    def test_scores_travel_with_names(self):
        cs = select_contrastive("alpha", self.AGG, m=2)
        assert cs.scores == (99.0, 98.0)

    def test_positive_missing_from_ranking_rejected(self):
        with pytest.raises(ValidationError):
            select_contrastive("zz", self.AGG, m=2)

    def test_nonpositive_m_rejected(self):
        with pytest.raises(ValidationError):
            select_contrastive("alpha", self.AGG, m=0)

    @given(st.data())
    @settings(max_examples=150, deadline=None)
    def test_exclusion_and_size_hold_generally(self, data):
        n = data.draw(st.integers(2, 10))
        names = data.draw(st.permutations([f"c{i}" for i in range(n)]))
        agg = ranked(list(names))
        positive = data.draw(st.sampled_from(list(names)))
        m = data.draw(st.integers(1, 15))
        cs = select_contrastive(positive, agg, m)
        assert positive not in cs.negatives
        assert len(cs.negatives) == min(m, n - 1)
        # relative order of the survivors matches the aggregate ranking
        pos = {c: i for i, c in enumerate(agg.class_names)}
        assert list(cs.negatives) == sorted(cs.negatives, key=pos.__getitem__)


class TestBuildContrastiveMap:
    def make_state(self, directions, per_class=2, jitter=0.05):
        rng = random.Random(42)
        state = {}
        for name, direction in directions.items():
            s = ExemplarSet(name)
            for i in range(per_class):
                vec = [d + rng.uniform(-jitter, jitter) for d in direction]
                s.add(
                    f"{name}:{i}",
                    Embedding(np.asarray(vec), ANALOGOUS_PATTERN),
                    SEED_ORIGIN,
                )
            state[name] = s
        return state

    def test_every_class_gets_a_set_of_the_requested_size(self):
        state = self.make_state(
            {
                "relA": [1.0, 0.0, 0.0],
                "relB": [0.0, 1.0, 0.0],
                "relC": [0.0, 0.0, 1.0],
                "relD": [0.7, 0.7, 0.0],
            }
        )
        cmap = build_contrastive_map(state, k=2, m=2)
        assert set(cmap) == set(state)
        for name, cs in cmap.items():
            assert cs.positive_class == name
            assert name not in cs.negatives
            assert len(cs.negatives) == 2

    def test_nearby_class_is_chosen_over_orthogonal_ones(self):
        state = self.make_state(
            {
                "relA": [1.0, 0.0, 0.0],
                "relB": [0.9, 0.1, 0.0],  # almost parallel to relA
                "relC": [0.0, 0.0, 1.0],
            },
            jitter=0.01,
        )
        cmap = build_contrastive_map(state, k=2, m=1)
        assert cmap["relA"].negatives == ("relB",)
        assert cmap["relB"].negatives == ("relA",)

    def test_empty_class_rejected(self):
        state = self.make_state({"relA": [1.0, 0.0]}, per_class=1)
        state["relB"] = ExemplarSet("relB")
        with pytest.raises(ValidationError):
            build_contrastive_map(state, k=1, m=1)

    @given(st.integers(0, 2**32))
    @settings(max_examples=50, deadline=None)
    def test_rescaling_a_probe_does_not_change_rankings(self, seed):
        rng = random.Random(seed)
        state = self.make_state(
            {
                "relA": [1.0, 0.0, 0.0],
                "relB": [0.0, 1.0, 0.0],
                "relC": [0.0, 0.0, 1.0],
            }
        )
        vec = np.asarray([rng.uniform(-1, 1) for _ in range(3)])
        if not np.any(np.abs(vec) > 1e-6):
            vec = np.asarray([1.0, 0.0, 0.0])
        probe = Embedding(vec, ANALOGOUS_PATTERN)
        scaled = Embedding(vec * 7.5, ANALOGOUS_PATTERN)
        a = seed_class_ranking(probe, state, k=2)
        b = seed_class_ranking(scaled, state, k=2)
        assert a.class_names == b.class_names
