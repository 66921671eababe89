import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosetx import (
    ANALOGOUS_PATTERN,
    MENTION_CONTEXT,
    Embedding,
    ExemplarSet,
    SEED_ORIGIN,
    ValidationError,
    cosine,
    fuse_score,
    pair_class_score,
)

import reference


def f32(x):
    return float(np.float32(x))


def emb(values, provenance=MENTION_CONTEXT):
    return Embedding(np.asarray(values, dtype=np.float64), provenance)


def make_set(name, vectors):
    s = ExemplarSet(name)
    for i, v in enumerate(vectors):
        s.add(f"p{i}", emb(v, ANALOGOUS_PATTERN), SEED_ORIGIN)
    return s


class TestCosine:
    def test_self_similarity_is_one(self):
        v = emb([0.3, -1.2, 4.5])
        assert cosine(v, v).value == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_is_zero(self):
        assert cosine(emb([1.0, 0.0]), emb([0.0, 1.0])).value == pytest.approx(0.0, abs=1e-12)

    def test_known_value(self):
        got = cosine(emb([1.0, 0.0]), emb([1.0, 1.0])).value
        assert got == pytest.approx(0.70710678, abs=1e-8)

    def test_opposite_is_minus_one(self):
        a = emb([2.0, -3.0])
        b = emb([-2.0, 3.0])
        assert cosine(a, b).value == pytest.approx(-1.0, abs=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            cosine(emb([1.0, 2.0, 3.0]), emb([1.0, 2.0]))


class TestPairClassScore:
    # Frozen instance: random.Random(20250817), dim 3, values rounded to
    # float32 before use. Expected means were hand-derived from the sorted
    # cosine list, independently of the implementation.
    X_P = [-0.08946163952350616, -0.7910056710243225, -0.8079054951667786]
    MEMBERS = [
        [-0.15633033215999603, 0.6603604555130005, 0.9731983542442322],
        [-0.8540685176849365, 0.8094183802604675, -0.002966561820358038],
        [0.3288581073284149, -0.42328083515167236, 0.5779222846031189],
        [0.4963717758655548, -0.05108553543686867, 0.3031713664531708],
        [-0.5034653544425964, -0.6297904849052429, -0.5333821773529053],
    ]

    def test_reconstructs_frozen_inputs(self):
        rng = random.Random(20250817)
        draw = lambda: [f32(rng.uniform(-1, 1)) for _ in range(3)]
        assert draw() == self.X_P
        for want in self.MEMBERS:
            assert draw() == want

    def test_frozen_top_k_mean(self):
        exemplars = make_set("relA", self.MEMBERS)
        got = pair_class_score(emb(self.X_P), exemplars, k=2)
        assert got.value == pytest.approx(0.3538764289755017, abs=1e-9)

    def test_frozen_k_larger_than_set_uses_all(self):
        exemplars = make_set("relA", self.MEMBERS)
        got = pair_class_score(emb(self.X_P), exemplars, k=10)
        assert got.value == pytest.approx(-0.2101816795447649, abs=1e-9)

    def test_negative_cosines_are_kept(self):
        # both members point away from the probe: mean must stay negative
        exemplars = make_set("relA", [[-1.0, 0.0], [-1.0, -0.1]])
        got = pair_class_score(emb([1.0, 0.0]), exemplars, k=2)
        assert got.value < -0.9

    def test_k_one_picks_maximum(self):
        exemplars = make_set("relA", [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
        got = pair_class_score(emb([1.0, 0.0]), exemplars, k=1)
        assert got.value == pytest.approx(1.0, abs=1e-12)

    def test_empty_set_rejected(self):
        with pytest.raises(ValidationError):
            pair_class_score(emb([1.0, 1.0]), ExemplarSet("relA"), k=3)

    def test_nonpositive_k_rejected(self):
        exemplars = make_set("relA", [[1.0, 0.0]])
        with pytest.raises(ValidationError):
            pair_class_score(emb([1.0, 1.0]), exemplars, k=0)

    def test_zero_norm_probe_rejected(self):
        exemplars = make_set("relA", [[1.0, 0.0]])
        with pytest.raises(ValidationError):
            pair_class_score(emb([0.0, 0.0]), exemplars, k=1)

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_matches_sort_oracle(self, data):
        dim = data.draw(st.integers(2, 8))
        n = data.draw(st.integers(1, 12))
        k = data.draw(st.integers(1, 15))
        coords = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
        nonzero = st.lists(coords, min_size=dim, max_size=dim).filter(
            lambda v: any(abs(x) > 1e-3 for x in v)
        )
        x_p = data.draw(nonzero)
        members = [data.draw(nonzero) for _ in range(n)]
        got = pair_class_score(emb(x_p), make_set("relA", members), k=k)
        # the oracle sees the same float32-quantized vectors the engine stores
        q = lambda v: [f32(x) for x in v]
        want = reference.pair_class_score(q(x_p), [q(m) for m in members], k)
        assert got.value == pytest.approx(want, abs=1e-9)

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_invariant_under_member_order(self, data):
        dim = data.draw(st.integers(2, 6))
        n = data.draw(st.integers(2, 8))
        coords = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
        nonzero = st.lists(coords, min_size=dim, max_size=dim).filter(
            lambda v: any(abs(x) > 1e-3 for x in v)
        )
        x_p = emb(data.draw(nonzero))
        members = [data.draw(nonzero) for _ in range(n)]
        k = data.draw(st.integers(1, n))
        perm = data.draw(st.permutations(range(n)))
        a = pair_class_score(x_p, make_set("relA", members), k).value
        b = pair_class_score(x_p, make_set("relA", [members[i] for i in perm]), k).value
        assert a == pytest.approx(b, abs=1e-9)

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_invariant_under_probe_rescaling(self, data):
        dim = data.draw(st.integers(2, 6))
        coords = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
        nonzero = st.lists(coords, min_size=dim, max_size=dim).filter(
            lambda v: any(abs(x) > 1e-3 for x in v)
        )
        x_p = data.draw(nonzero)
        members = [data.draw(nonzero) for _ in range(4)]
        scale = data.draw(st.floats(0.1, 50.0))
        a = pair_class_score(emb(x_p), make_set("relA", members), 2).value
        b = pair_class_score(emb([x * scale for x in x_p]), make_set("relA", members), 2).value
        assert a == pytest.approx(b, abs=1e-6)

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_adding_aligned_exemplar_never_decreases_score(self, data):
        dim = data.draw(st.integers(2, 5))
        coords = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
        nonzero = st.lists(coords, min_size=dim, max_size=dim).filter(
            lambda v: any(abs(x) > 1e-3 for x in v)
        )
        x_p = data.draw(nonzero)
        members = [data.draw(nonzero) for _ in range(3)]
        before = pair_class_score(emb(x_p), make_set("relA", members), 2).value
        # a copy of the probe itself has cosine 1.0, the best possible
        after = pair_class_score(emb(x_p), make_set("relA", members + [x_p]), 2).value
        assert after >= before - 1e-9


class TestFuseScore:
    def test_stated_combination(self):
        assert fuse_score(0.8, 0.4, 0.5).value == pytest.approx(1.0, abs=1e-12)

    def test_zero_weight_returns_classifier_score(self):
        assert fuse_score(0.37, 123.0, 0.0).value == 0.37

    def test_unit_weight_adds_verbatim(self):
        assert fuse_score(0.2, 0.3, 1.0).value == pytest.approx(0.5, abs=1e-12)

    def test_non_finite_inputs_rejected(self):
        with pytest.raises(ValidationError):
            fuse_score(float("nan"), 0.0, 0.5)
        with pytest.raises(ValidationError):
            fuse_score(0.0, float("inf"), 0.5)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            fuse_score(0.5, 0.5, -0.1)

    @given(
        st.floats(-10, 10),
        st.floats(-1, 1),
        st.floats(0, 5),
    )
    @settings(max_examples=200, deadline=None)
    def test_linear_in_similarity(self, s_cls, sim, lam):
        got = fuse_score(s_cls, sim, lam).value
        assert got == pytest.approx(s_cls + lam * sim, abs=1e-12)
