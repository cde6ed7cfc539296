import math
from collections import Counter

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from visrank import (
    CooccurrenceTable,
    DomainError,
    ValidationError,
    VisualContext,
    build_cooccurrence,
    cosine,
    swe_prob,
    tdp_prob,
    twe_prob,
)
from visrank.relatedness import swe_log_prob


class TestCosine:
    def test_identical(self):
        assert cosine([1, 2, 3], [1, 2, 3]) == 1.0

    def test_orthogonal(self):
        assert cosine([1, 0], [0, 1]) == 0.0

    def test_forty_five_degrees(self):
        # 1/sqrt(2) to 60 digits
        assert cosine([1, 1], [1, 0]) == pytest.approx(0.7071067811865475, rel=1e-15)

    def test_zero_vector(self):
        with pytest.raises(DomainError):
            cosine([0, 0], [1, 0])

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            cosine([1, 0], [1, 0, 0])

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_symmetry_and_scale_invariance(self, seed, lam):
        rng = np.random.default_rng(seed)
        u, v = rng.normal(size=(2, 7))
        assert cosine(u, v) == cosine(v, u)
        assert cosine(lam * u, v) == pytest.approx(cosine(u, v), abs=1e-12)
        assert -1.0 <= cosine(u, v) <= 1.0


class TestSwe:
    def test_perfect_similarity_gives_one(self):
        assert swe_prob(1.0, 0.01, 0.3) == 1.0
        assert swe_prob(1.0, 1e-9, 0.9) == 1.0

    @pytest.mark.parametrize("p_c", [0.05, 0.5, 0.95])
    def test_zero_similarity_returns_word_probability(self, p_c):
        assert swe_prob(0.0, 0.01, p_c) == 0.01

    def test_oracle_value(self):
        # 60-digit mpmath: alpha = (1/3)**0.5, 0.01**alpha
        assert swe_prob(0.5, 0.01, 0.5) == pytest.approx(0.07003247285691340, rel=1e-13)

    def test_minus_one_rejected(self):
        with pytest.raises(DomainError):
            swe_prob(-1.0, 0.1, 0.5)

    @pytest.mark.parametrize("p_w", [0.0, -0.1, 1.5])
    def test_bad_word_probability(self, p_w):
        with pytest.raises(DomainError):
            swe_prob(0.3, p_w, 0.5)

    @pytest.mark.parametrize("args", [(0.3, 0.1, 0.0), (1.2, 0.1, 0.5), (float("nan"), 0.1, 0.5)])
    def test_other_domain_errors(self, args):
        with pytest.raises(DomainError):
            swe_prob(*args)

    def test_log_form_survives_underflow(self):
        assert swe_prob(-0.999, 1e-9, 0.1) == 0.0
        assert math.isfinite(swe_log_prob(-0.999, 1e-9, 0.1))

    @settings(max_examples=300, deadline=None)
    @given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99),
           st.floats(1e-6, 0.999), st.floats(0.01, 0.99))
    def test_monotone_in_similarity(self, s1, s2, p_w, p_c):
        lo, hi = sorted((s1, s2))
        assert swe_prob(lo, p_w, p_c) <= swe_prob(hi, p_w, p_c)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(-0.99, 1.0), st.floats(1e-6, 1.0), st.floats(0.01, 1.0))
    def test_positive_similarity_raises_probability(self, sim, p_w, p_c):
        p = swe_prob(sim, p_w, p_c)
        if sim >= 0:
            assert p >= p_w * (1 - 1e-15)
        else:
            assert p <= p_w * (1 + 1e-15)
        assert 0.0 <= p <= 1.0

    def test_matches_high_precision_oracle(self):
        mpmath.mp.dps = 50
        rng = np.random.default_rng(11)
        for sim, p_w, p_c in zip(rng.uniform(-0.95, 1, 200), 10 ** rng.uniform(-8, 0, 200),
                                 rng.uniform(0.01, 1, 200)):
            s, w, c = (mpmath.mpf(float(x)) for x in (sim, p_w, p_c))
            expected = w ** (((1 - s) / (1 + s)) ** (1 - c))
            assert swe_prob(sim, p_w, p_c) == pytest.approx(float(expected), rel=1e-12)


class TestTwe:
    def test_zero_similarity(self):
        assert twe_prob(0.0, 0.5) == 1.0

    def test_exceeds_one(self):
        assert twe_prob(0.0, 0.25) == 2.0

    def test_oracle_value(self):
        # (tanh(0.5) + 1) / 1.6 at 60 digits
        assert twe_prob(0.5, 0.8) == pytest.approx(0.9138232232875061, rel=1e-14)

    def test_zero_object_probability(self):
        with pytest.raises(DomainError):
            twe_prob(0.3, 0.0)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
    def test_monotonicity(self, s1, s2, c1, c2):
        assume(abs(s1 - s2) > 1e-9 and abs(c1 - c2) > 1e-9)
        (slo, shi), (clo, chi) = sorted((s1, s2)), sorted((c1, c2))
        assert twe_prob(slo, c1) < twe_prob(shi, c1)
        assert twe_prob(s1, clo) > twe_prob(s1, chi)
        assert 0.0 <= twe_prob(s1, c1) <= 1.0 / c1


def ctx(label, conf=0.9, image="i"):
    return VisualContext(image, ((label, conf),))


class TestTdp:
    def test_rolex_racket(self):
        table = build_cooccurrence([("rolex", ctx("racket"))] * 3 + [("wilson", ctx("racket"))] * 7)
        assert table.pair_counts[("rolex", "racket")] == 3
        assert table.ctx_counts["racket"] == 10
        assert tdp_prob(table, "rolex", "racket") == 0.3

    def test_unseen_pair_takes_floor(self):
        table = CooccurrenceTable({("rolex", "racket"): 3}, {"racket": 10})
        assert tdp_prob(table, "nike", "racket") == 1e-6
        assert tdp_prob(table, "rolex", "ball") == 1e-6
        assert tdp_prob(table, "nike", "racket", epsilon=0.0) == 0.0

    def test_maximal_case(self):
        table = CooccurrenceTable({("a", "x"): 7}, {"x": 7})
        assert tdp_prob(table, "a", "x") == 1.0

    def test_empty_annotations(self):
        assert build_cooccurrence([]) == CooccurrenceTable()

    def test_empty_context_skipped_and_counted(self):
        table = build_cooccurrence([("a", VisualContext("i")), ("b", ctx("x")), (None, ctx("x"))])
        assert table.skipped == 2
        assert dict(table.pair_counts) == {("b", "x"): 1}

    def test_distinct_pairs_each_counted_once(self):
        records = [(f"w{i}", ctx(f"o{i % 2}")) for i in range(5)]
        table = build_cooccurrence(records)
        # independent recount
        expected = Counter((w, c.top.label) for w, c in records)
        assert dict(table.pair_counts) == dict(expected)
        assert set(table.pair_counts.values()) == {1}

    def test_only_top_object_counts(self):
        c = VisualContext("i", (("racket", 0.7), ("ball", 0.2)))
        table = build_cooccurrence([("rolex", c)])
        assert dict(table.ctx_counts) == {"racket": 1}

    def test_invariant_violations(self):
        with pytest.raises(ValidationError):
            CooccurrenceTable({("a", "x"): 3}, {"x": 2})
        with pytest.raises(ValidationError):
            CooccurrenceTable({("a", "x"): -1}, {"x": 2})
        with pytest.raises(ValidationError):
            CooccurrenceTable({}, {}, smoothing_epsilon=-1.0)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from("abcdef"), st.sampled_from("xyz")), max_size=60))
    def test_conditional_sums_at_most_one(self, pairs):
        table = build_cooccurrence([(w, ctx(c)) for w, c in pairs], smoothing_epsilon=0.0)
        for c in "xyz":
            total = sum(tdp_prob(table, w, c) for w in "abcdef")
            assert total <= 1.0 + 1e-12
            if table.ctx_counts.get(c):
                assert total == pytest.approx(1.0)
