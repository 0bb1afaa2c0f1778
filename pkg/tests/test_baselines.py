import math

import numpy as np
import pytest

from insightrank.baselines import (
    cluster_insights,
    kmeans,
    pooled_significance,
    rank_sig_cluster,
    rank_sig_dataset,
    rank_sig_table,
    tfidf_vectors,
)
from insightrank.errors import DataError
from insightrank.insights import extract_all
from insightrank.tables import Cell, Table


def make_table(table_id, rows):
    """rows: {name: [v0, v1, ...]}; years start at 2015."""
    cells = []
    for name, values in rows.items():
        for i, v in enumerate(values):
            cells.append(Cell((name, str(2015 + i)), float(v)))
    return Table(
        id=table_id,
        dim_names=("Item", "Year"),
        cells=tuple(cells),
        meta={"measure": "Sales"},
    )


class TestPooledSignificance:
    def test_small_pool_none(self):
        assert pooled_significance(1.0, []) is None
        assert pooled_significance(1.0, [2.0]) is None

    def test_zero_variance_pool(self):
        assert pooled_significance(3.0, [1.0, 1.0, 1.0]) == 1.0
        assert pooled_significance(1.0, [1.0, 1.0, 1.0]) == 0.0

    def test_erf_formula(self):
        pool = [0.0, 2.0, 4.0]
        mu = 2.0
        sigma = np.std(pool)
        expected = math.erf(abs(5.0 - mu) / (sigma * math.sqrt(2)))
        assert pooled_significance(5.0, pool) == pytest.approx(expected, abs=1e-15)

    def test_at_mean_zero(self):
        assert pooled_significance(2.0, [1.0, 2.0, 3.0]) == 0.0

    def test_bounds_fuzz(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            pool = list(rng.normal(0, 10, size=rng.integers(2, 12)))
            sig = pooled_significance(float(rng.normal(0, 10)), pool)
            assert 0.0 <= sig <= 1.0


class TestSigTable:
    def test_empty(self):
        assert rank_sig_table([]) == []

    def test_mixed_tables_rejected(self):
        a = extract_all(make_table("a", {"x": [1, 2, 3], "y": [1, 3, 9]}))
        b = extract_all(make_table("b", {"x": [1, 2, 3], "y": [1, 3, 9]}))
        with pytest.raises(DataError, match="single table"):
            rank_sig_table(a + b)

    def test_ranks_are_permutation(self, car_sales_table):
        insights = extract_all(car_sales_table)
        ranked = rank_sig_table(insights)
        assert sorted(r for _, _, r in ranked) == list(range(1, len(insights) + 1))
        scores = {i: s for i, s, _ in ranked}
        by_rank = [i for i, _, _ in sorted(ranked, key=lambda t: t[2])]
        assert by_rank == sorted(scores, key=lambda i: (-scores[i], i))

    def test_lone_type_falls_back_to_intrinsic(self):
        # one strongly-increasing row among flat rows: single shape insight
        table = make_table("t", {"x": [1, 2, 4], "y": [5, 5.1, 5], "z": [7, 7, 7.1]})
        insights = [
            i for i in extract_all(table) if i.subspace.fixed_dim_index == 0
        ]
        shape = [i for i in insights if "shape" in i.itype.value]
        if len(shape) == 1:
            ranked = dict((i, s) for i, s, _ in rank_sig_table(insights))
            assert ranked[shape[0].id] == shape[0].significance


class TestSigDataset:
    def test_pool_spans_corpus(self):
        # slope 3 is ordinary inside table a, extreme against the corpus
        tables = {
            "a": make_table("a", {"p": [0, 3, 6], "q": [0, 3.1, 6.2], "r": [0, 2.9, 5.8]}),
            "b": make_table("b", {"p": [0, 0.1, 0.2], "q": [0, 0.11, 0.21], "r": [0, 0.09, 0.19]}),
        }
        per_table = {tid: extract_all(t) for tid, t in tables.items()}
        dataset = rank_sig_dataset(per_table)
        assert set(dataset) == {"a", "b"}
        for tid, group in per_table.items():
            assert len(dataset[tid]) == len(group)

    def test_single_table_differs_from_table_scope(self, car_sales_table):
        other = make_table(
            "big", {"x": [0, 100, 200], "y": [0, 110, 215], "z": [0, 90, 185]}
        )
        per_table = {
            "car-sales": extract_all(car_sales_table),
            "big": extract_all(other),
        }
        dataset = rank_sig_dataset(per_table)
        table_scope = rank_sig_table(per_table["car-sales"])
        ds_scores = {i: s for i, s, _ in dataset["car-sales"]}
        t_scores = {i: s for i, s, _ in table_scope}
        assert any(
            abs(ds_scores[i] - t_scores[i]) > 1e-9 for i in ds_scores
        )


class TestTfidf:
    def test_rows_unit_norm(self):
        docs = [("a", "b"), ("b", "c", "c"), ("d",)]
        vecs = tfidf_vectors(docs)
        for row in vecs:
            assert np.linalg.norm(row) == pytest.approx(1.0, abs=1e-12)

    def test_rare_token_weighs_more(self):
        docs = [("a", "b"), ("a", "c"), ("a", "d")]
        vecs = tfidf_vectors(docs)
        vocab = sorted({t for d in docs for t in d})
        ia, ib = vocab.index("a"), vocab.index("b")
        assert vecs[0, ib] > vecs[0, ia]

    def test_identical_docs_identical_rows(self):
        vecs = tfidf_vectors([("x", "y"), ("x", "y")])
        assert np.allclose(vecs[0], vecs[1])


class TestKMeans:
    def _two_blobs(self, seed=1):
        rng = np.random.default_rng(seed)
        a = rng.normal(0.0, 0.1, size=(20, 2))
        b = rng.normal(5.0, 0.1, size=(20, 2)) + np.array([0.0, 5.0])
        return np.vstack([a, b])

    def test_recovers_two_groups(self):
        points = self._two_blobs()
        _, labels, _ = kmeans(points, 2, seed=3)
        assert len(set(labels[:20])) == 1
        assert len(set(labels[20:])) == 1
        assert labels[0] != labels[20]

    def test_inertia_non_increasing(self):
        points = self._two_blobs(seed=4)
        _, _, history = kmeans(points, 3, seed=5)
        for prev, cur in zip(history, history[1:]):
            assert cur <= prev + 1e-9

    def test_k_equals_n_zero_inertia(self):
        points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        _, labels, history = kmeans(points, 3, seed=0)
        assert history[-1] == pytest.approx(0.0, abs=1e-12)
        assert sorted(labels) == [0, 1, 2]

    def test_fixed_point(self):
        # rerunning Lloyd from the returned centroids must not move them
        points = self._two_blobs(seed=6)
        centroids, labels, _ = kmeans(points, 2, seed=7)
        dist = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        assert np.array_equal(new_labels, labels)
        for j in range(2):
            assert np.allclose(centroids[j], points[labels == j].mean(axis=0))

    def test_deterministic(self):
        points = self._two_blobs(seed=8)
        a = kmeans(points, 2, seed=9)
        b = kmeans(points, 2, seed=9)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])

    def test_bad_k(self):
        with pytest.raises(DataError):
            kmeans(np.zeros((3, 2)), 4)


class TestSigCluster:
    def _corpus(self):
        rng = np.random.default_rng(10)
        per_table = {}
        for t in range(6):
            rows = {}
            for item in ("alpha", "beta", "gamma"):
                base = rng.uniform(10, 100)
                growth = rng.uniform(0.05, 0.3)
                rows[f"{item} series"] = [
                    base * (1 + growth) ** i * (1 + rng.normal(0, 0.01))
                    for i in range(4)
                ]
            per_table[f"t{t}"] = extract_all(make_table(f"t{t}", rows))
        return per_table

    def test_k1_equals_dataset_scope(self):
        per_table = self._corpus()
        clustered = rank_sig_cluster(per_table, k=1, seed=0)
        dataset = rank_sig_dataset(per_table)
        assert clustered == dataset

    def test_rankings_complete(self):
        per_table = self._corpus()
        out = rank_sig_cluster(per_table, k=3, seed=0)
        for tid, group in per_table.items():
            assert sorted(r for _, _, r in out[tid]) == list(
                range(1, len(group) + 1)
            )

    def test_assignment_covers_all(self):
        per_table = self._corpus()
        model = cluster_insights(per_table, k=3, seed=0)
        ids = {ins.id for group in per_table.values() for ins in group}
        assert set(model.assignment) == ids
        assert set(model.assignment.values()) <= set(range(3))

    def test_too_few_insights(self):
        table = make_table("t", {"x": [1, 2, 4], "y": [9, 4, 1]})
        per_table = {"t": extract_all(table)}
        with pytest.raises(DataError, match="at least"):
            cluster_insights(per_table, k=50)
