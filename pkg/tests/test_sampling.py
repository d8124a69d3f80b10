"""Subsampling gate and negative-sampling table."""

import math

import numpy as np
import pytest

from sentvec.corpus import Vocabulary, build_vocab
from sentvec.sampling import (
    build_negative_table,
    discard_keep_prob,
    negative_prob,
    sample_negatives,
)


def make_vocab(counts: dict[str, int], min_target_count: int = 1) -> Vocabulary:
    items = sorted(counts.items(), key=lambda kv: -kv[1])
    return Vocabulary(
        words=items,
        word_index={w: i for i, (w, _) in enumerate(items)},
        total_tokens=sum(counts.values()),
        min_count=1,
        min_target_count=min_target_count,
    )


class TestDiscardKeepProb:
    def test_boundary_frequency_equals_t(self):
        assert discard_keep_prob(1e-4, 1e-4) == 1.0

    def test_derived_value(self):
        # sqrt(1e-3) + 1e-3, hand arithmetic
        assert discard_keep_prob(0.01, 1e-5) == pytest.approx(
            0.03262277660168379, rel=1e-12
        )

    def test_rare_words_always_kept(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            t = 10.0 ** rng.uniform(-7, -2)
            f = t * rng.uniform(0.01, 1.0)
            assert discard_keep_prob(f, t) == 1.0

    def test_result_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            f = 10.0 ** rng.uniform(-8, 0)
            t = 10.0 ** rng.uniform(-8, -1)
            assert 0.0 < discard_keep_prob(f, t) <= 1.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            discard_keep_prob(0.0, 1e-5)
        with pytest.raises(ValueError):
            discard_keep_prob(-0.1, 1e-5)
        with pytest.raises(ValueError):
            discard_keep_prob(1.5, 1e-5)
        with pytest.raises(ValueError):
            discard_keep_prob(0.5, 0.0)


class TestNegativeProb:
    def test_sqrt_ratio(self):
        np.testing.assert_allclose(negative_prob([1, 4]), [1 / 3, 2 / 3], rtol=1e-15)

    def test_single_word(self):
        np.testing.assert_array_equal(negative_prob([7]), [1.0])

    def test_equal_counts_symmetric(self):
        np.testing.assert_allclose(negative_prob([3] * 8), [1 / 8] * 8, rtol=1e-15)

    def test_sums_to_one(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            counts = rng.integers(1, 10_000, size=rng.integers(1, 400))
            assert abs(negative_prob(counts).sum() - 1.0) < 1e-12

    def test_monotone_in_counts(self):
        rng = np.random.default_rng(5)
        counts = rng.integers(1, 1000, size=100)
        probs = negative_prob(counts)
        for i in range(100):
            for j in range(100):
                if counts[i] > counts[j]:
                    assert probs[i] > probs[j]

    def test_errors(self):
        with pytest.raises(ValueError):
            negative_prob([])
        with pytest.raises(ValueError):
            negative_prob([1, 0])


class TestBuildNegativeTable:
    def test_slots_from_sqrt_counts(self):
        vocab = make_vocab({"b": 4, "a": 1})
        table = build_negative_table(vocab, table_size=9, seed=0)
        counts = np.bincount(table.entries, minlength=2)
        assert counts[vocab.word_index["b"]] == 6
        assert counts[vocab.word_index["a"]] == 3

    def test_single_eligible_word(self):
        vocab = make_vocab({"a": 10, "b": 1}, min_target_count=5)
        table = build_negative_table(vocab, table_size=20, seed=0)
        assert set(table.entries.tolist()) == {vocab.word_index["a"]}

    def test_eligibility_threshold_filters(self):
        vocab = make_vocab({"a": 10, "b": 3, "c": 8}, min_target_count=5)
        table = build_negative_table(vocab, table_size=100, seed=1)
        assert vocab.word_index["b"] not in set(table.entries.tolist())

    def test_deterministic_given_seed(self):
        vocab = make_vocab({"a": 5, "b": 9, "c": 2})
        t1 = build_negative_table(vocab, table_size=50, seed=7)
        t2 = build_negative_table(vocab, table_size=50, seed=7)
        np.testing.assert_array_equal(t1.entries, t2.entries)

    def test_composition_approximates_distribution(self):
        rng = np.random.default_rng(6)
        counts = {f"w{i}": int(c) for i, c in enumerate(rng.integers(1, 500, size=40))}
        vocab = make_vocab(counts)
        size = 100_000
        table = build_negative_table(vocab, table_size=size, seed=3)
        probs = negative_prob(vocab.counts())
        in_table = np.bincount(table.entries, minlength=len(vocab)) / table.size
        # per-entry rounding bounds the per-word error by ~1/size
        np.testing.assert_allclose(in_table, probs, atol=2.0 / size + 1e-9)

    def test_errors(self):
        vocab = make_vocab({"a": 1, "b": 1}, min_target_count=10)
        with pytest.raises(ValueError, match="no words"):
            build_negative_table(vocab, table_size=100)
        vocab2 = make_vocab({"a": 1, "b": 1, "c": 1})
        with pytest.raises(ValueError, match="smaller"):
            build_negative_table(vocab2, table_size=2)


class TestSampleNegatives:
    def test_single_candidate_table(self):
        table = build_negative_table(make_vocab({"b": 3}), table_size=3, seed=0)
        rng = np.random.default_rng(0)
        out = sample_negatives(table, target=1, count=2, rng=rng)
        assert out.tolist() == [0, 0]

    def test_target_never_sampled(self):
        vocab = make_vocab({"a": 100, "b": 1})
        table = build_negative_table(vocab, table_size=101, seed=0)
        target = vocab.word_index["a"]  # ~99% of table slots
        rng = np.random.default_rng(8)
        draws = np.concatenate(
            [sample_negatives(table, target, 1000, rng) for _ in range(50)]
        )
        assert not np.any(draws == target)

    def test_exact_count_and_duplicates_allowed(self):
        vocab = make_vocab({"a": 4, "b": 4, "c": 4})
        table = build_negative_table(vocab, table_size=30, seed=0)
        rng = np.random.default_rng(9)
        out = sample_negatives(table, target=0, count=50, rng=rng)
        assert len(out) == 50
        assert len(set(out.tolist())) <= 2  # only b and c remain

    def test_only_target_in_table_errors(self):
        table = build_negative_table(make_vocab({"a": 3}), table_size=5, seed=0)
        rng = np.random.default_rng(10)
        with pytest.raises(ValueError, match="only the target"):
            sample_negatives(table, target=0, count=1, rng=rng)

    def test_draw_frequencies_match_distribution(self):
        # Monte-Carlo against the analytic sqrt-frequency law, excluding the target
        rng = np.random.default_rng(11)
        counts = {f"w{i}": int(c) for i, c in enumerate(rng.integers(1, 400, size=30))}
        vocab = make_vocab(counts)
        table = build_negative_table(vocab, table_size=500_000, seed=12)
        target = 0
        n_draws = 200_000
        draws = sample_negatives(table, target, n_draws, rng)
        observed = np.bincount(draws, minlength=len(vocab)) / n_draws
        expected = negative_prob(vocab.counts())
        expected[target] = 0.0
        expected /= expected.sum()
        tv_distance = 0.5 * np.abs(observed - expected).sum()
        assert tv_distance < 0.01


class TestKeepRateMonteCarlo:
    def test_empirical_keep_rate_tracks_probability(self):
        rng = np.random.default_rng(13)
        for f, t in [(0.5, 1e-3), (0.02, 1e-4), (1e-4, 1e-5), (1e-6, 1e-5)]:
            p = discard_keep_prob(f, t)
            kept = (rng.random(200_000) < p).mean()
            assert abs(kept - p) < 0.01
