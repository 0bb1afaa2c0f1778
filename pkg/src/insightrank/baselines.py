"""Rule-based significance ranking baselines.

All three baselines re-score each insight by how extreme its underlying
statistic is against a pooled reference population, then rank per table:

* table scope pools statistics of same-type insights within the table,
* dataset scope pools across the whole corpus,
* cluster scope pools within K-Means clusters of header TF-IDF vectors.

When the pool is too small to fit a reference distribution the insight's own
subspace-internal significance is used as a fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .insights import Insight
from .textsim import header_tokens

__all__ = [
    "ClusterModel",
    "pooled_significance",
    "rank_sig_table",
    "rank_sig_dataset",
    "rank_sig_cluster",
    "tfidf_vectors",
    "kmeans",
]


def pooled_significance(stat: float, pool: list[float]) -> float | None:
    """Two-sided normal extremity of ``stat`` against the pooled statistics.

    Returns None when the pool is too small to fit a distribution (< 2
    points); callers fall back to the intrinsic significance.
    """
    if len(pool) < 2:
        return None
    arr = np.asarray(pool, dtype=np.float64)
    mu = arr.mean()
    sigma = arr.std()
    if sigma == 0.0:
        return 1.0 if stat != mu else 0.0
    return min(1.0, max(0.0, math.erf(abs(stat - mu) / (sigma * math.sqrt(2.0)))))


def _rank_by_score(insights: list[Insight], scores: dict[str, float]):
    order = sorted(scores, key=lambda i: (-scores[i], i))
    rank_of = {ins_id: rank for rank, ins_id in enumerate(order, 1)}
    return [(ins.id, scores[ins.id], rank_of[ins.id]) for ins in insights]


def _score_against_pools(
    insights: list[Insight],
    pools: dict[str, list[tuple[str, float]]],
    pool_key,
) -> dict[str, float]:
    scores = {}
    for ins in insights:
        pool = [s for ins_id, s in pools[pool_key(ins)] if ins_id != ins.id]
        sig = pooled_significance(ins.statistic, pool)
        scores[ins.id] = ins.significance if sig is None else sig
    return scores


def _type_pools(insights, scope_key):
    pools: dict[str, list[tuple[str, float]]] = {}
    for ins in insights:
        pools.setdefault(scope_key(ins), []).append((ins.id, ins.statistic))
    return pools


def rank_sig_table(insights: list[Insight]) -> list[tuple[str, float, int]]:
    """Rank one table's insights, pooling statistics within the table."""
    if not insights:
        return []
    table_ids = {ins.table_id for ins in insights}
    if len(table_ids) > 1:
        raise DataError("rank_sig_table expects insights from a single table")
    pools = _type_pools(insights, lambda ins: ins.itype.value)
    scores = _score_against_pools(insights, pools, lambda ins: ins.itype.value)
    return _rank_by_score(insights, scores)


def rank_sig_dataset(
    per_table: dict[str, list[Insight]],
) -> dict[str, list[tuple[str, float, int]]]:
    """Per-table rankings with statistics pooled over the whole corpus."""
    all_insights = [ins for group in per_table.values() for ins in group]
    pools = _type_pools(all_insights, lambda ins: ins.itype.value)
    out = {}
    for table_id, group in per_table.items():
        scores = _score_against_pools(group, pools, lambda ins: ins.itype.value)
        out[table_id] = _rank_by_score(group, scores)
    return out


def tfidf_vectors(documents: list[tuple[str, ...]]) -> np.ndarray:
    """L2-normalized TF-IDF vectors with smoothed IDF over token documents."""
    vocab = sorted({tok for doc in documents for tok in doc})
    index = {tok: i for i, tok in enumerate(vocab)}
    n_docs = len(documents)
    df = np.zeros(len(vocab))
    for doc in documents:
        for tok in set(doc):
            df[index[tok]] += 1
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    out = np.zeros((n_docs, len(vocab)))
    for row, doc in enumerate(documents):
        for tok in doc:
            out[row, index[tok]] += 1.0
        out[row] *= idf
        norm = np.linalg.norm(out[row])
        if norm > 0:
            out[row] /= norm
    return out


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    n_restarts: int = 5,
    max_iter: int = 100,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd's algorithm with k-means++ seeding and seeded restarts.

    Returns (centroids, assignments, inertia history of the winning run).
    Convergence: assignments stable.
    """
    n = len(points)
    if k < 1 or k > n:
        raise DataError(f"kmeans: k={k} out of range for {n} points")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_restarts):
        centroids = _kmeans_pp_init(points, k, rng)
        labels = None
        history = []
        for _ in range(max_iter):
            dist = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            new_labels = dist.argmin(axis=1)
            history.append(float(dist[np.arange(n), new_labels].sum()))
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for j in range(k):
                mask = labels == j
                if mask.any():
                    centroids[j] = points[mask].mean(axis=0)
        inertia = history[-1]
        if best is None or inertia < best[3]:
            best = (centroids, labels, history, inertia)
    return best[0], best[1], best[2]


def _kmeans_pp_init(points: np.ndarray, k: int, rng) -> np.ndarray:
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total == 0:
            centroids[j] = points[rng.integers(n)]
        else:
            centroids[j] = points[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignment: dict[str, int]


def cluster_insights(
    per_table: dict[str, list[Insight]], k: int = 7, seed: int = 0
) -> ClusterModel:
    """K-Means over per-insight header TF-IDF vectors."""
    all_insights = [ins for group in per_table.values() for ins in group]
    if len(all_insights) < k:
        raise DataError(
            f"cluster baseline needs at least k={k} insights, got {len(all_insights)}"
        )
    docs = [header_tokens(ins) for ins in all_insights]
    vectors = tfidf_vectors(docs)
    centroids, labels, _ = kmeans(vectors, k, seed=seed)
    assignment = {ins.id: int(lab) for ins, lab in zip(all_insights, labels)}
    return ClusterModel(k=k, centroids=centroids, assignment=assignment)


def rank_sig_cluster(
    per_table: dict[str, list[Insight]],
    k: int = 7,
    seed: int = 0,
) -> dict[str, list[tuple[str, float, int]]]:
    """Per-table rankings with statistics pooled within header clusters."""
    model = cluster_insights(per_table, k=k, seed=seed)
    all_insights = [ins for group in per_table.values() for ins in group]

    def scope_key(ins: Insight) -> str:
        return f"{model.assignment[ins.id]}/{ins.itype.value}"

    pools = _type_pools(all_insights, scope_key)
    out = {}
    for table_id, group in per_table.items():
        scores = _score_against_pools(group, pools, scope_key)
        out[table_id] = _rank_by_score(group, scores)
    return out
