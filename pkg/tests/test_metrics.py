import itertools
import math

import numpy as np
import pytest

from insightrank.errors import DataError
from insightrank.metrics import (
    RankingPair,
    evaluate_corpus,
    format_report,
    map_at_k,
    ndcg_at_k,
    precision_at_k,
    save_report,
)


def pair_of(order, gold_scores):
    return RankingPair(table_id="t", predicted=tuple(order), gold_scores=gold_scores)


# --- independent oracles ----------------------------------------------------

def oracle_precision(pair, k, binary):
    rel = oracle_relevant(pair, k, binary)
    return len([p for p in pair.predicted[:k] if p in rel]) / k


def oracle_relevant(pair, k, binary):
    if binary:
        return {i for i, g in pair.gold_scores.items() if g > 0}
    order = sorted(pair.gold_scores, key=lambda i: (-pair.gold_scores[i], i))
    return set(order[:k])


def oracle_map(pair, k, binary):
    rel = oracle_relevant(pair, k, binary)
    if not rel:
        return 0.0
    precisions = []
    hits = 0
    for i, p in enumerate(pair.predicted[:k], 1):
        if p in rel:
            hits += 1
            precisions.append(hits / i)
    return sum(precisions) / min(k, len(rel))


def oracle_ndcg(pair, k):
    def dcg(ids):
        return sum(
            (2.0 ** pair.gold_scores[x] - 1.0) / math.log2(i + 2)
            for i, x in enumerate(ids)
        )

    order = sorted(pair.gold_scores, key=lambda i: (-pair.gold_scores[i], i))
    ideal = dcg(order[:k])
    return 1.0 if ideal == 0.0 else dcg(pair.predicted[:k]) / ideal


class TestRankingPair:
    def test_not_a_permutation_rejected(self):
        with pytest.raises(DataError, match="permutation"):
            RankingPair("t", ("a", "b"), {"a": 1.0, "c": 0.5})

    def test_gold_order_tie_break(self):
        pair = pair_of(["b", "a"], {"a": 0.5, "b": 0.5})
        assert pair.gold_order() == ["a", "b"]


class TestTrivialCases:
    def test_perfect_ranking(self):
        pair = pair_of(["a", "b", "c"], {"a": 1.0, "b": 0.5, "c": 0.0})
        for k in (1, 2, 3):
            assert precision_at_k(pair, k) == 1.0
            assert map_at_k(pair, k) == 1.0
            assert ndcg_at_k(pair, k) == pytest.approx(1.0)

    def test_worst_single(self):
        pair = pair_of(["c", "b", "a"], {"a": 1.0, "b": 0.0, "c": 0.0})
        assert precision_at_k(pair, 1) == 0.0
        assert map_at_k(pair, 1) == 0.0

    def test_all_zero_gold_ndcg_is_one(self):
        pair = pair_of(["a", "b"], {"a": 0.0, "b": 0.0})
        assert ndcg_at_k(pair, 2) == 1.0

    def test_k_out_of_range(self):
        pair = pair_of(["a"], {"a": 1.0})
        with pytest.raises(DataError):
            precision_at_k(pair, 2)
        with pytest.raises(DataError):
            ndcg_at_k(pair, 0)

    def test_binary_relevance_mode(self):
        pair = pair_of(["a", "b", "c"], {"a": 0.0, "b": 0.7, "c": 0.0})
        assert precision_at_k(pair, 1, binary_relevance=True) == 0.0
        assert precision_at_k(pair, 2, binary_relevance=True) == 0.5
        assert map_at_k(pair, 2, binary_relevance=True) == pytest.approx(0.5)

    def test_ndcg_hand_value(self):
        # DCG = (2^0-1)/log2(2) + (2^1-1)/log2(3); IDCG = (2^1-1)/log2(2)
        pair = pair_of(["b", "a"], {"a": 1.0, "b": 0.0})
        assert ndcg_at_k(pair, 2) == pytest.approx(1.0 / math.log2(3), abs=1e-15)


class TestOracleEquivalence:
    def test_random_instances(self):
        rng = np.random.default_rng(42)
        ids = [f"i{n}" for n in range(8)]
        for trial in range(200):
            n = int(rng.integers(1, 9))
            chosen = list(rng.permutation(ids[:n]))
            golds = {i: float(rng.choice([0.0, 0.25, 0.5, 0.5, 1.0])) for i in chosen}
            pair = pair_of(chosen, golds)
            k = int(rng.integers(1, min(n, 5) + 1))
            binary = bool(rng.integers(2))
            assert precision_at_k(pair, k, binary) == pytest.approx(
                oracle_precision(pair, k, binary), abs=1e-12
            )
            assert map_at_k(pair, k, binary) == pytest.approx(
                oracle_map(pair, k, binary), abs=1e-12
            )
            assert ndcg_at_k(pair, k) == pytest.approx(oracle_ndcg(pair, k), abs=1e-12)

    def test_bounds_over_all_permutations(self):
        golds = {"a": 1.0, "b": 0.6, "c": 0.0, "d": 0.3}
        for perm in itertools.permutations(golds):
            pair = pair_of(list(perm), golds)
            for k in (1, 2, 3, 4):
                assert 0.0 <= precision_at_k(pair, k) <= 1.0
                assert 0.0 <= map_at_k(pair, k) <= 1.0
                assert 0.0 <= ndcg_at_k(pair, k) <= 1.0 + 1e-12


class TestCorpus:
    def _pairs(self):
        return [
            pair_of(["a", "b", "c"], {"a": 1.0, "b": 0.5, "c": 0.0}),
            pair_of(["y", "x"], {"x": 1.0, "y": 0.0}),
        ]

    def test_small_tables_skipped(self):
        report = evaluate_corpus(self._pairs(), ks=(1, 3))
        assert report["skipped"] == {"1": 0, "3": 1}
        assert report["metrics"]["3"]["precision"] == 1.0

    def test_mean_over_tables(self):
        report = evaluate_corpus(self._pairs(), ks=(1,))
        # table 1 precision@1 = 1, table 2 = 0
        assert report["metrics"]["1"]["precision"] == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            evaluate_corpus([])

    def test_all_skipped_gives_nan(self):
        report = evaluate_corpus([pair_of(["a"], {"a": 1.0})], ks=(3,))
        assert math.isnan(report["metrics"]["3"]["precision"])

    def test_format_and_save(self, tmp_path):
        reports = {"tar": evaluate_corpus(self._pairs(), ks=(1, 3))}
        text = format_report(reports)
        assert "precision@1" in text and "tar" in text
        path = tmp_path / "report.json"
        save_report(reports, path)
        assert path.read_text().endswith("\n")
